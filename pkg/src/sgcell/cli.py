"""Command-line front end writing analytic and Monte-Carlo sweeps as CSV.

Configuration comes from an optional flat ``key = value`` file (``#`` starts
a comment) overridden by command-line flags.  Intensities are given in
BS/km^2 here and converted to per-m^2 once.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import math
import os
import sys
from dataclasses import dataclass, fields

import numpy as np
from scipy import stats

from .errors import AccuracyError, SgcellError, UnsupportedConfigurationError, ValidationError
from .geometry import NetworkConfig, Tier, TierSet
from .interference import (Constellation, SignalingMode, cumulant, ks_to_alpha_stable,
                           ks_to_gaussian, mean_power, cf_aggregate)
from .metrics import (ModulationScheme, asep_eid, asep_gaussian, ergodic_rate, sinr_cdf,
                      sinr_cdf_gamma)
from .numerics import gil_pelaez_density, integrate_semi_infinite, QuadratureSpec
from .simulator import (SCENARIOS, SimulationPlan, simulate_downlink_field, simulate_sinr,
                        simulate_symbol_errors)
from .transforms import LaplaceTransform, lt_baseline, lt_network_mimo

METRICS = ("outage", "rate", "asep", "interference-pdf", "ks")
HEADER = "x,analytic,monte_carlo,mc_ci_low,mc_ci_high,n_realizations,seed"

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


@dataclass(frozen=True)
class ExperimentConfig:
    metric: str = "outage"
    scenario: str = "random_r0"
    lambda_bs: float = 1.0          # BS per km^2
    power: float = 10.0
    eta: float = 4.0
    noise: float = 0.0
    r0: float = 250.0
    reuse: int = 1
    tiers: str = ""
    mod: str = "4-QAM"
    signaling: str = "gaussian"
    threshold_db: float = 0.0
    p: float = 1.0
    rho: float = 1.0
    m: int = 1
    n_r: int = 1
    n_coop: int = 1
    ks_reference: str = "gaussian"
    sweep: str = "threshold_db:-10:10:21"
    simulate: bool = False
    realizations: int = 100_000
    seed: int = 0
    out: str = "-"
    workers: int = 0

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValidationError(f"metric: must be one of {METRICS}")
        if self.scenario not in SCENARIOS:
            raise ValidationError(f"scenario: must be one of {SCENARIOS}")
        if self.signaling not in ("gaussian", "exact"):
            raise ValidationError("signaling: must be 'gaussian' or 'exact'")
        if self.ks_reference not in ("gaussian", "alpha-stable"):
            raise ValidationError("ks_reference: must be 'gaussian' or 'alpha-stable'")
        var, grid = self.sweep_grid()
        if var == "x":
            if self.metric != "interference-pdf":
                raise ValidationError("sweep: 'x' (amplitude / sd) applies to interference-pdf only")
        elif var not in _FIELDS or var in ("metric", "scenario", "sweep", "out", "tiers", "mod",
                                         "signaling", "ks_reference", "simulate"):
            raise ValidationError(f"sweep: {var!r} is not a numeric parameter")
        if not (self.lambda_bs > 0 and self.power > 0):
            raise ValidationError("lambda_bs and power must be positive")
        if not self.eta > 2:
            raise ValidationError(f"eta: path-loss exponent must satisfy eta > 2 (got {self.eta})")
        if self.realizations < 1:
            raise ValidationError("realizations must be >= 1")

    def sweep_grid(self):
        parts = self.sweep.split(":")
        if len(parts) != 4:
            raise ValidationError("sweep: expected var:lo:hi:steps")
        var, lo, hi, steps = parts[0], float(parts[1]), float(parts[2]), int(parts[3])
        if steps < 1:
            raise ValidationError("sweep: steps must be >= 1")
        grid = np.array([lo]) if steps == 1 else np.linspace(lo, hi, steps)
        if steps > 1 and not hi > lo:
            raise ValidationError("sweep: grid must be strictly increasing")
        return var, grid

    def at(self, var, x) -> "ExperimentConfig":
        if var == "x":
            return self
        t = _FIELDS[var]
        return dataclasses.replace(self, **{var: t(round(x)) if t is int else t(x)})

    def network(self) -> NetworkConfig:
        return NetworkConfig(self.lambda_bs * 1e-6, self.power, self.eta, self.noise, self.r0)

    def dump(self) -> str:
        lines = [f"{f.name} = {_fmt_value(getattr(self, f.name))}" for f in fields(self)]
        return "\n".join(lines) + "\n"


_FIELDS = {f.name: f.type for f in fields(ExperimentConfig)}
_TYPES = {"float": float, "int": int, "str": str, "bool": bool}
_FIELDS = {k: _TYPES.get(v, v) if isinstance(v, str) else v for k, v in _FIELDS.items()}


def _fmt_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_value(key, raw):
    t = _FIELDS.get(key)
    if t is None:
        raise ValidationError(f"unknown key {key!r}")
    raw = raw.strip()
    try:
        if t is bool:
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return t(raw)
    except ValueError:
        raise ValidationError(f"{key}: cannot parse {raw!r} as {t.__name__}") from None


def parse_config_text(text: str, source: str = "<config>") -> dict:
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{source}:{n}: expected key = value")
        k, v = line.split("=", 1)
        k = k.strip().replace("-", "_")
        try:
            out[k] = _parse_value(k, v)
        except ValidationError as e:
            raise ValidationError(f"{source}:{n}: {e}") from None
    return out


def load_tiers(path: str) -> TierSet:
    """Tier file: one ``lambda_per_km2 power [bias [eta]]`` line per tier."""
    rows = []
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].split()
            if not line:
                continue
            try:
                vals = [float(v) for v in line]
            except ValueError:
                raise ValidationError(f"{path}:{n}: non-numeric tier field") from None
            if not 2 <= len(vals) <= 4:
                raise ValidationError(f"{path}:{n}: expected 2 to 4 fields")
            vals[0] *= 1e-6
            rows.append(Tier(*vals))
    return TierSet(rows)


# ---------------------------------------------------------------------------
# evaluation


def _plan(c: ExperimentConfig, cfg: NetworkConfig, **kw) -> SimulationPlan:
    base = dict(scenario=c.scenario, cfg=cfg, realizations=c.realizations, seed=c.seed,
                r0=c.r0, p=c.p, delta=c.reuse, rho=c.rho, m=c.m, n_r=c.n_r, n=c.n_coop,
                workers=c.workers or None)
    if c.scenario == "multitier":
        base["tiers"] = load_tiers(c.tiers)
    base.update(kw)
    return SimulationPlan(**base)


def _outage_analytic(c: ExperimentConfig, T: float) -> float:
    cfg = c.network()
    sc = c.scenario
    if sc == "fixed_r0":
        lt = LaplaceTransform.baseline(cfg.lambda_bs, cfg.power, cfg.eta, c.r0)
        if c.n_r > 1:
            return sinr_cdf_gamma(T, c.n_r, lt, cfg, c.r0)
        return sinr_cdf(T, lt, cfg, c.r0)
    if cfg.eta != 4:
        raise UnsupportedConfigurationError(f"scenario {sc} is analysed at eta = 4 only")
    if sc == "comp":
        est, _ = lt_network_mimo(T, cfg.lambda_bs, c.n_coop, rng=c.seed)
        return 1.0 - est
    if sc == "nakagami":
        return sinr_cdf_gamma(T, c.m, LaplaceTransform.nakagami_random_distance(c.m),
                              gain_scale=1.0 / c.m)
    lt = {
        "random_r0": LaplaceTransform.random_distance,
        "mrc": LaplaceTransform.random_distance,
        "load_aware": lambda: LaplaceTransform.load_aware(c.p),
        "reuse": lambda: LaplaceTransform.frequency_reuse(c.reuse),
        "uplink": LaplaceTransform.uplink,
        "multitier": lambda: LaplaceTransform.multitier(load_tiers(c.tiers)),
    }[sc]()
    if sc in ("random_r0", "mrc") and c.reuse > 1:
        lt = LaplaceTransform.frequency_reuse(c.reuse)
    if c.n_r > 1:
        return sinr_cdf_gamma(T, c.n_r, lt)
    return sinr_cdf(T, lt)


def _mean_ci(samples):
    v = np.asarray(samples, dtype=float)
    m = float(v.mean())
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.inf
    return m, m - 1.96 * se, m + 1.96 * se


class _Runner:
    def __init__(self, c: ExperimentConfig):
        self.c = c
        self._cache = {}

    def _sinr(self, c: ExperimentConfig):
        cfg = c.network()
        plan = _plan(c, cfg)
        key = (plan.scenario, cfg, plan.realizations, plan.seed, plan.r0, plan.p, plan.delta,
               plan.rho, plan.m, plan.n_r, plan.n, c.tiers)
        if key not in self._cache:
            self._cache[key] = simulate_sinr(plan)
        return self._cache[key]

    def row(self, c: ExperimentConfig):
        """Return ``(analytic, mc, lo, hi)``; Monte-Carlo fields may be None."""
        fn = getattr(self, "_" + c.metric.replace("-", "_"))
        return fn(c)

    def _outage(self, c):
        T = 10 ** (c.threshold_db / 10)
        a = _outage_analytic(c, T)
        if not c.simulate:
            return a, None, None, None
        d = self._sinr(c)
        lo, hi = d.ci(T)
        return a, d.cdf(T), lo, hi

    def _rate(self, c):
        cfg = c.network()
        if c.scenario == "fixed_r0":
            a = ergodic_rate(LaplaceTransform.baseline(cfg.lambda_bs, cfg.power, cfg.eta, c.r0),
                             cfg, c.r0)
        elif c.scenario == "random_r0" and c.reuse == 1 and c.n_r == 1:
            a = ergodic_rate(LaplaceTransform.random_distance())
        else:
            # E ln(1 + SINR) = ∫ P{SINR >= e^v - 1} dv over the scenario's outage curve
            tail = lambda v: 1.0 - _outage_analytic(c, math.expm1(v))
            a = integrate_semi_infinite(tail, 0.0, QuadratureSpec(abs_tol=1e-9, rel_tol=1e-7), scale=2.0)
        if not c.simulate:
            return float(a), None, None, None
        d = self._sinr(c)
        return (float(a),) + _mean_ci(np.log1p(d.sorted_samples))

    def _asep(self, c):
        cfg = c.network()
        scheme = ModulationScheme.from_name(c.mod)
        if c.scenario == "fixed_r0":
            if c.signaling == "exact":
                a = asep_eid(c.r0, cfg, scheme.constellation(), scheme)
            else:
                lt = LaplaceTransform.baseline(cfg.lambda_bs, cfg.power, cfg.eta, c.r0)
                a = asep_gaussian(scheme, lt, cfg, c.r0)
        elif c.scenario in ("random_r0", "reuse", "load_aware", "uplink"):
            lt = {"random_r0": LaplaceTransform.random_distance,
                  "reuse": lambda: LaplaceTransform.frequency_reuse(c.reuse),
                  "load_aware": lambda: LaplaceTransform.load_aware(c.p),
                  "uplink": LaplaceTransform.uplink}[c.scenario]()
            a = asep_gaussian(scheme, lt)
        else:
            raise UnsupportedConfigurationError(f"asep is not available for scenario {c.scenario}")
        if not c.simulate:
            return a, None, None, None
        if c.scenario != "fixed_r0":
            raise UnsupportedConfigurationError("symbol simulation runs at a fixed r0")
        mode = (SignalingMode.exact(scheme.constellation()) if c.signaling == "exact"
                else SignalingMode.gaussian())
        plan = _plan(c, cfg, scenario="fixed_r0", nearest=64, block_size=65536)
        p, se = simulate_symbol_errors(cfg, scheme.constellation(), mode, plan)
        return a, p, p - 1.96 * se, p + 1.96 * se

    def _mode(self, c):
        if c.signaling == "exact":
            return SignalingMode.exact(Constellation.from_name(c.mod))
        return SignalingMode.gaussian()

    def _field(self, c):
        cfg = c.network()
        key = ("field", cfg, c.signaling, c.mod, c.r0, c.realizations, c.seed)
        if key not in self._cache:
            plan = _plan(c, cfg, scenario="fixed_r0")
            self._cache[key] = np.sort(simulate_downlink_field(cfg, self._mode(c), c.r0, plan).real)
        return self._cache[key]

    def _interference_pdf(self, c):
        # x is the per-dimension amplitude in units of its standard deviation
        cfg = c.network()
        mode = self._mode(c)
        sd = math.sqrt(mean_power(cfg, c.r0) / 2)
        x = self._x * sd
        spec = QuadratureSpec(abs_tol=1e-9, rel_tol=1e-7)
        a = sd * gil_pelaez_density(lambda w: cf_aggregate(w, cfg, mode, c.r0), x, spec)
        if not c.simulate:
            return a, None, None, None
        s = self._field(c) / sd
        h = self._bin
        k = np.searchsorted(s, self._x + h / 2) - np.searchsorted(s, self._x - h / 2)
        n = s.size
        p = k / n
        se = math.sqrt(p * (1 - p) / n)
        return a, p / h, (p - 1.96 * se) / h, (p + 1.96 * se) / h

    def _ks(self, c):
        cfg = c.network()
        mode = self._mode(c)
        if c.ks_reference == "gaussian":
            a = ks_to_gaussian(cfg, mode, c.r0)
        else:
            a = ks_to_alpha_stable(cfg, mode, c.r0)
        if not c.simulate:
            return a, None, None, None
        if c.ks_reference != "gaussian":
            raise UnsupportedConfigurationError("simulated KS is against the matched Gaussian")
        s = self._field(c)
        sd = math.sqrt(cumulant(2, cfg, mode, c.r0))
        d = float(stats.kstest(s, stats.norm(scale=sd).cdf).statistic)
        band = math.sqrt(math.log(2 / 0.05) / (2 * s.size))
        return a, d, max(d - band, 0.0), d + band

    def run(self, out):
        c = self.c
        var, grid = c.sweep_grid()
        if c.metric == "interference-pdf":
            self._bin = min(grid[1] - grid[0], 0.1) if grid.size > 1 else 0.1
        out.write(HEADER + "\n")
        for x in grid:
            cx = c.at(var, x)
            self._x = float(x)
            a, mc, lo, hi = self.row(cx)
            n = str(cx.realizations) if c.simulate else ""
            cells = [_num(x), _num(a), _num(mc), _num(lo), _num(hi), n, str(cx.seed)]
            out.write(",".join(cells) + "\n")


def _num(v) -> str:
    if v is None:
        return ""
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".9g")


def run_experiment(config: ExperimentConfig, out=None) -> int:
    """Evaluate ``config`` and write CSV to ``out`` (or ``config.out``)."""
    buf = io.StringIO()
    _Runner(config).run(buf)
    if out is not None:
        out.write(buf.getvalue())
    elif config.out == "-":
        sys.stdout.write(buf.getvalue())
    else:
        with open(config.out, "w", newline="\n") as fh:
            fh.write(buf.getvalue())
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate


def _validate(workers: int, out) -> int:
    """Quick oracle-equivalence checks; each prints PASS or FAIL."""
    checks = []
    cfg = NetworkConfig(1e-6, 10.0, 4.0)

    def add(name, ok, detail):
        checks.append(ok)
        out.write(f"{'PASS' if ok else 'FAIL'} {name}: {detail}\n")

    d = simulate_sinr(SimulationPlan("random_r0", cfg, realizations=20_000, seed=1, workers=workers))
    a = sinr_cdf(1.0, LaplaceTransform.random_distance())
    add("random-distance outage", abs(d.cdf(1.0) - a) < 4 * d.se(1.0) + 1e-3,
        f"analytic {a:.5f} simulated {d.cdf(1.0):.5f}")
    d = simulate_sinr(SimulationPlan("fixed_r0", cfg, r0=250.0, realizations=20_000, seed=2,
                                     workers=workers))
    a = sinr_cdf(1.0, LaplaceTransform.baseline(1e-6, 10.0, 4.0, 250.0), cfg, 250.0)
    add("fixed-distance outage", abs(d.cdf(1.0) - a) < 4 * d.se(1.0) + 1e-3,
        f"analytic {a:.5f} simulated {d.cdf(1.0):.5f}")
    x = simulate_downlink_field(cfg, SignalingMode.gaussian(), 250.0,
                                SimulationPlan("fixed_r0", cfg, r0=250.0, realizations=20_000,
                                               seed=3, workers=workers))
    pw, ref = float(np.mean(np.abs(x) ** 2)), mean_power(cfg, 250.0)
    add("interference power", abs(pw / ref - 1) < 0.05, f"relative error {pw / ref - 1:+.4f}")
    a = sinr_cdf(1.0, LaplaceTransform.frequency_reuse(3))
    d = simulate_sinr(SimulationPlan("reuse", cfg, delta=3, realizations=20_000, seed=4,
                                     workers=workers))
    add("reuse outage", abs(d.cdf(1.0) - a) < 4 * d.se(1.0) + 1e-3,
        f"analytic {a:.5f} simulated {d.cdf(1.0):.5f}")
    return EXIT_OK if all(checks) else EXIT_NUMERIC


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser():
    ap = argparse.ArgumentParser(prog="sgcell", description="Cellular interference analysis")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in METRICS + ("validate",):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value configuration file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any configuration key")
        sp.add_argument("--dump-config", action="store_true",
                        help="print the effective configuration and exit")
        flags = {
            "--scenario": "scenario", "--lambda-bs": "lambda_bs", "--power": "power",
            "--eta": "eta", "--noise": "noise", "--r0": "r0", "--reuse": "reuse",
            "--tiers": "tiers", "--mod": "mod", "--signaling": "signaling",
            "--threshold-db": "threshold_db", "--sweep": "sweep",
            "--realizations": "realizations", "--seed": "seed", "--out": "out",
            "--workers": "workers",
        }
        for flag, key in flags.items():
            sp.add_argument(flag, dest=key, default=None)
        sp.add_argument("--simulate", action="store_const", const="true", default=None)
    return ap


def build_config(args) -> ExperimentConfig:
    values = {}
    if args.command in METRICS:
        values["metric"] = args.command
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as e:
            raise ValidationError(f"cannot read config {args.config}: {e.strerror}") from None
        values.update(parse_config_text(text, args.config))
        if args.command in METRICS:
            values["metric"] = args.command
    for item in args.set:
        if "=" not in item:
            raise ValidationError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        k = k.strip().replace("-", "_")
        values[k] = _parse_value(k, v)
    for key in _FIELDS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = _parse_value(key, v)
    return ExperimentConfig(**values)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            workers = int(args.workers) if args.workers else (os.cpu_count() or 1)
            return _validate(workers, sys.stdout)
        config = build_config(args)
        if args.dump_config:
            sys.stdout.write(config.dump())
            return EXIT_OK
        return run_experiment(config)
    except AccuracyError as e:
        what = f" [{e.what}]" if e.what else ""
        sys.stderr.write(f"numerical failure{what}: {e}\n")
        return EXIT_NUMERIC
    except (SgcellError, ValueError, OSError) as e:
        sys.stderr.write(f"configuration error: {e}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
