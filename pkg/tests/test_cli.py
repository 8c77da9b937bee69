import csv
import io
import math
import subprocess
import sys

import pytest

from sgcell.cli import HEADER, ExperimentConfig, main, parse_config_text, run_experiment
from sgcell.errors import ValidationError


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    r = list(csv.reader(io.StringIO(text)))
    assert ",".join(r[0]) == HEADER
    return r[1:]


class TestOutage:
    def test_analytic_sweep(self, capsys):
        code, out, _ = run(capsys, "outage", "--scenario", "random_r0", "--sweep", "threshold_db:-10:10:21")
        assert code == 0
        r = rows(out)
        assert len(r) == 21
        zero = [x for x in r if float(x[0]) == 0.0][0]
        assert float(zero[1]) == pytest.approx(0.43990, abs=5e-6)
        assert zero[2] == "" and zero[5] == ""
        vals = [float(x[1]) for x in r]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_nine_significant_digits(self, capsys):
        _, out, _ = run(capsys, "outage", "--sweep", "threshold_db:0:0:1")
        cell = rows(out)[0][1]
        assert cell == format(1 - 1 / (1 + math.pi / 4), ".9g")
        digits = cell.replace("0.", "", 1).lstrip("0")
        assert len(digits) <= 9

    def test_simulated_columns(self, capsys):
        code, out, _ = run(capsys, "outage", "--sweep", "threshold_db:0:0:1", "--simulate",
                           "--realizations", "20000", "--seed", "4")
        assert code == 0
        x, a, mc, lo, hi, n, seed = rows(out)[0]
        assert float(lo) <= float(mc) <= float(hi)
        assert abs(float(mc) - float(a)) < 0.02
        assert (n, seed) == ("20000", "4")

    def test_workers_byte_identical(self, capsys):
        args = ["outage", "--scenario", "reuse", "--reuse", "2", "--sweep", "threshold_db:-5:5:3",
                "--simulate", "--realizations", "30000", "--seed", "9"]
        _, a, _ = run(capsys, *args, "--workers", "1")
        _, b, _ = run(capsys, *args, "--workers", "3")
        assert a == b


class TestOtherMetrics:
    def test_asep_monotone_in_r0(self, capsys):
        code, out, _ = run(capsys, "asep", "--scenario", "fixed_r0", "--mod", "4-QAM",
                           "--sweep", "r0:100:500:5")
        assert code == 0
        vals = [float(x[1]) for x in rows(out)]
        assert len(vals) == 5 and all(b > a for a, b in zip(vals, vals[1:]))

    def test_rate(self, capsys):
        code, out, _ = run(capsys, "rate", "--sweep", "p:1:1:1")
        assert code == 0
        assert float(rows(out)[0][1]) == pytest.approx(1.489, abs=2e-3)

    def test_rate_load_aware(self, capsys):
        code, out, _ = run(capsys, "rate", "--scenario", "load_aware", "--sweep", "p:0.25:1:4")
        assert code == 0
        vals = [float(x[1]) for x in rows(out)]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert vals[-1] == pytest.approx(1.48899, abs=1e-4)

    def test_interference_pdf(self, capsys):
        code, out, _ = run(capsys, "interference-pdf", "--r0", "250", "--sweep", "x:-3:3:7")
        assert code == 0
        r = rows(out)
        vals = [float(x[1]) for x in r]
        assert vals[3] == max(vals)
        assert vals[0] == pytest.approx(vals[-1], rel=1e-6)

    def test_ks(self, capsys):
        code, out, _ = run(capsys, "ks", "--sweep", "r0:150:500:3")
        assert code == 0
        vals = [float(x[1]) for x in rows(out)]
        assert vals[0] > vals[1] > vals[2]


class TestConfig:
    def test_eta_two(self, capsys):
        code, _, err = run(capsys, "outage", "--eta", "2")
        assert code == 2
        assert "eta > 2" in err

    def test_bad_value(self, capsys):
        code, _, err = run(capsys, "outage", "--realizations", "many")
        assert code == 2 and "realizations" in err

    def test_file_diagnostics(self, tmp_path, capsys):
        p = tmp_path / "bad.cfg"
        p.write_text("# comment\nscenario = random_r0\nbogus_key = 3\n")
        code, _, err = run(capsys, "outage", "--config", str(p))
        assert code == 2
        assert "bad.cfg:3:" in err and "bogus_key" in err

    def test_flag_beats_file(self, tmp_path, capsys):
        p = tmp_path / "a.cfg"
        p.write_text("r0 = 300\nseed = 5\n")
        code, out, _ = run(capsys, "outage", "--config", str(p), "--seed", "6", "--dump-config")
        assert code == 0
        assert "seed = 6" in out and "r0 = 300.0" in out

    def test_dump_round_trip(self, tmp_path, capsys):
        _, dumped, _ = run(capsys, "asep", "--scenario", "fixed_r0", "--r0", "333.5", "--mod", "16-QAM",
                           "--sweep", "r0:100:500:5", "--simulate", "--dump-config")
        p = tmp_path / "d.cfg"
        p.write_text(dumped)
        _, again, _ = run(capsys, "asep", "--config", str(p), "--dump-config")
        assert again == dumped
        assert ExperimentConfig(**parse_config_text(dumped)) == ExperimentConfig(**parse_config_text(again))

    def test_sweep_validation(self):
        with pytest.raises(ValidationError):
            ExperimentConfig(sweep="r0:500:100:5")
        with pytest.raises(ValidationError):
            ExperimentConfig(sweep="mod:1:2:2")
        with pytest.raises(ValidationError):
            ExperimentConfig(metric="outage", sweep="x:-1:1:3")

    def test_run_experiment_to_file(self, tmp_path):
        out = tmp_path / "o.csv"
        c = ExperimentConfig(sweep="threshold_db:0:0:1", out=str(out))
        assert run_experiment(c) == 0
        assert out.read_text().splitlines()[0] == HEADER


class TestEntryPoints:
    def test_module(self):
        r = subprocess.run([sys.executable, "-m", "sgcell", "outage", "--sweep", "threshold_db:0:0:1"],
                           capture_output=True, text=True, check=True)
        assert r.stdout.splitlines()[0] == HEADER

    def test_validate(self, capsys):
        code, out, _ = run(capsys, "validate", "--workers", "2")
        lines = out.strip().splitlines()
        assert lines and all(l.startswith(("PASS", "FAIL")) for l in lines)
        assert code == 0
