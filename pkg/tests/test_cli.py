import json
import subprocess
import sys
from pathlib import Path

import pytest

from cjacobi.cli import RunConfig, build_parser, main, make_config, parse_alpha, parse_complex_arg, parse_grid

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def model(name):
    return str(CONFIGS / f"{name}.json")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    cols = lines[0].split(",")
    return [dict(zip(cols, l.split(","))) for l in lines[1:]]


class TestParsing:
    def test_complex(self):
        assert parse_complex_arg("1.5,-2") == 1.5 - 2j
        assert parse_complex_arg("3") == 3

    def test_grid(self):
        assert parse_grid("-4:4:0.001") == (-4.0, 4.0, 0.001)

    def test_alpha(self):
        assert parse_alpha("0,0;1,0") == (0, 1)
        with pytest.raises(ValueError):
            parse_alpha("1,0")

    def test_validation(self):
        with pytest.raises(ValueError):
            RunConfig(nmax=0).validate()
        with pytest.raises(ValueError):
            RunConfig(tol=-1.0).validate()

    def test_flags_beat_config(self, tmp_path):
        cfg_file = tmp_path / "run.json"
        cfg_file.write_text(json.dumps({"model": "m.json", "nmax": 500, "tol": 1e-4}))
        args = build_parser().parse_args(["turan", "--config", str(cfg_file), "--nmax", "800"])
        cfg = make_config(args)
        assert cfg.nmax == 800 and cfg.tol == 1e-4 and cfg.base_dir == tmp_path


class TestLambda:
    def test_free(self, capsys):
        code, out, _ = run(capsys, "lambda", "--model", model("free"), "--grid", "-4:4:0.001", "--format", "json")
        assert code == 0
        (lo, hi), = json.loads(out)["intervals"]
        assert abs(lo + 2) <= 2e-3 and abs(hi - 2) <= 2e-3

    def test_period_two(self, capsys):
        code, out, _ = run(capsys, "lambda", "--model", model("period2"), "--grid", "-4:4:0.001", "--format", "json")
        ivs = json.loads(out)["intervals"]
        assert len(ivs) == 2
        for (lo, hi), (elo, ehi) in zip(ivs, [(-3, -1), (1, 3)]):
            assert abs(lo - elo) <= 2e-3 and abs(hi - ehi) <= 2e-3

    def test_blend(self, capsys):
        code, out, _ = run(capsys, "lambda", "--model", model("blend"), "--offset", "1", "--format", "json")
        (lo, hi), = json.loads(out)["intervals"]
        assert abs(lo + 1) <= 2e-3 and abs(hi - 1) <= 2e-3

    def test_no_limit_family(self, capsys, tmp_path):
        path = tmp_path / "table.json"
        path.write_text(json.dumps({"model": {"kind": "ExplicitTable", "a": [[1, 0], [1, 0]], "b": [[0, 0], [0, 0]]}}))
        code, _, err = run(capsys, "lambda", "--model", str(path))
        assert code == 2 and "limit family" in err

    def test_csv_deterministic(self, capsys):
        argv = ("lambda", "--model", model("period2"), "--grid", "-4:4:0.01", "--no-header")
        first = run(capsys, *argv)[1]
        second = run(capsys, *argv)[1]
        assert first == second and not first.startswith("#")
        assert run(capsys, *argv[:-1])[1].startswith("# cjacobi")

    def test_out_file(self, capsys, tmp_path):
        out = tmp_path / "scan.json"
        code, stdout, _ = run(capsys, "lambda", "--model", model("free"), "--format", "json", "--out", str(out))
        assert code == 0 and "Lambda" in stdout
        assert json.loads(out.read_text())["intervals"]


class TestTuran:
    def test_free_center(self, capsys):
        code, out, _ = run(capsys, "turan", "--model", model("free"), "--z", "0,0", "--format", "json")
        summary = json.loads(out)
        assert code == 0 and summary["g"] == pytest.approx(1.0)

    def test_band_edge(self, capsys):
        code, out, _ = run(capsys, "turan", "--model", model("free"), "--z", "2,0", "--format", "json")
        assert code == 0 and not json.loads(out)["converged"]

    def test_band_edge_strict(self, capsys):
        code, _, err = run(capsys, "turan", "--model", model("free"), "--z", "2,0", "--strict")
        assert code == 3 and "strict" in err

    def test_missing_model(self, capsys, tmp_path):
        code, _, _ = run(capsys, "turan", "--model", str(tmp_path / "nope.json"), "--z", "0,0")
        assert code == 1

    def test_from_scan_file(self, capsys, tmp_path):
        scan = tmp_path / "scan.json"
        run(capsys, "lambda", "--model", model("free"), "--format", "json", "--out", str(scan))
        code, out, _ = run(capsys, "turan", "--model", model("free"), "--scan", str(scan), "--format", "json")
        assert code == 0 and json.loads(out)["g"] > 0

    def test_csv_and_summary_files(self, capsys, tmp_path):
        out = tmp_path / "trace.csv"
        code, _, _ = run(capsys, "turan", "--model", model("decaying"), "--z", "0.5,0", "--nmax", "2000",
                         "--out", str(out))
        assert code == 0
        assert rows(out.read_text())[0].keys() == {"n", "S", "F", "imag_residue"}
        assert "g" in json.loads((tmp_path / "trace.summary.json").read_text())

    def test_needs_z(self, capsys):
        assert run(capsys, "turan", "--model", model("free"))[0] == 2


class TestBounds:
    def test_free_interior(self, capsys):
        code, out, _ = run(capsys, "bounds", "--model", model("free"), "--nmax", "5000")
        table = rows(out)
        assert code == 0 and len(table) == 9
        assert all(abs(float(r["slope"])) < 0.01 and r["growth_flag"] == "0" for r in table)

    def test_outside_flagged(self, capsys):
        code, out, _ = run(capsys, "bounds", "--model", model("free"), "--z", "3,0", "--nmax", "5000")
        r, = rows(out)
        assert r["in_lambda"] == "0" and r["growth_flag"] == "1" and float(r["slope"]) > 0.5

    def test_empty_lambda(self, capsys, tmp_path):
        path = tmp_path / "far.json"
        path.write_text(json.dumps({"model": {"kind": "AsymptoticallyPeriodic", "alpha": [1.0], "beta": [10.0]}}))
        code, _, _ = run(capsys, "bounds", "--model", str(path), "--grid", "-1:1:0.01")
        assert code == 2

    def test_threads_env(self, capsys, monkeypatch):
        argv = ("bounds", "--model", model("free"), "--nmax", "2000", "--no-header", "--points", "4")
        serial = run(capsys, *argv)[1]
        monkeypatch.setenv("JS_THREADS", "4")
        assert run(capsys, *argv)[1] == serial


class TestClassify:
    @pytest.mark.parametrize("name,verdict", [("powerlaw_07", "Proper"), ("powerlaw_15", "Improper")])
    def test_verdicts(self, capsys, name, verdict):
        code, out, _ = run(capsys, "classify", "--model", model(name))
        node = json.loads(out)
        assert code == 0 and node["verdict"] == verdict
        if verdict == "Improper":
            assert "σ(A) = ℂ" in [c["statement"] for c in node["claims"]]

    def test_boundary_flagged(self, capsys):
        node = json.loads(run(capsys, "classify", "--model", model("powerlaw_10"))[1])
        assert node["evidence"]["carleman_boundary"]


class TestFs:
    def test_free(self, capsys):
        code, out, _ = run(capsys, "fs", "--model", model("free"), "--dim", "100", "--box", "-2.5,2.5,-0.5,0.5")
        assert code == 0 and len(rows(out)) == 100

    def test_budget_exhaustion(self, capsys):
        argv = ("fs", "--model", model("free"), "--dim", "100", "--box", "-2.5,2.5,-0.5,0.5", "--budget", "20")
        assert run(capsys, *argv)[0] == 2
        code, out, _ = run(capsys, *argv, "--partial", "--format", "json")
        assert code == 0 and not json.loads(out)["complete"]

    def test_dim_limit(self, capsys):
        assert run(capsys, "fs", "--model", model("free"), "--dim", "2001")[0] == 2


class TestTv:
    def test_constant_selector_a(self, capsys):
        code, out, _ = run(capsys, "tv", "--model", model("free"), "--selector", "a")
        r, = rows(out)
        assert code == 0 and float(r["total"]) == 0

    @pytest.mark.parametrize("name,verdict", [("alternating_imag", "summable"), ("plain_real", "summable"),
                                              ("constant_imag", "diverging")])
    def test_perturbations(self, capsys, name, verdict):
        code, out, _ = run(capsys, "tv", "--model", model(name), "--selector", "b/a", "--nmax", "20000")
        assert code == 0 and all(r["verdict"] == verdict for r in rows(out))

    def test_inverse_on_power_law(self, capsys):
        out = run(capsys, "tv", "--model", model("powerlaw_07"), "--selector", "1/a", "--format", "json")[1]
        assert all(r["verdict"] == "summable" for r in json.loads(out))

    def test_unknown_selector(self, capsys):
        assert run(capsys, "tv", "--model", model("free"), "--selector", "zz")[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cjacobi", "lambda", "--model", model("free"), "--grid",
                           "-3:3:0.01", "--format", "json"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert len(json.loads(proc.stdout)["intervals"]) == 1
