"""Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""

import re

LINES: list[str] = []


def record(n: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    LINES.append(line)
    print(line)


def order(line: str) -> int:
    m = re.search(r"criterion (\d+)", line)
    return int(m.group(1)) if m else 0
