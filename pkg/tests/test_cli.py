import csv
import io
import json
import math
import subprocess
import sys

import pytest

from airypersist import cli
from airypersist import persistence as ps


def run(argv, capsys, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(l for l in text.splitlines() if not l.startswith("#")))


def test_curve_csv(capsys):
    code, out, _ = run(["curve", "--process", "airy1", "--c", "0", "--L", "0.5:2.5:0.5"], capsys)
    assert code == 0
    r = rows(out)
    assert len(r) == 5 and list(r[0]) == ["process", "c", "L", "p", "err"]
    p = [float(x["p"]) for x in r]
    assert all(a > b for a, b in zip(p, p[1:]))


def test_curve_json_schema(capsys):
    code, out, _ = run(["curve", "--c", "-0.6033", "--L", "0.2:0.6:0.2", "--format", "json"], capsys)
    assert code == 0
    data = json.loads(out)
    assert set(data) == {"meta", "points"}
    assert data["meta"]["process"] == "airy1" and data["meta"]["c"] == -0.6033
    assert all(set(p) == {"L", "p", "err"} and all(isinstance(v, float) for v in p.values()) for p in data["points"])
    assert [p["L"] for p in data["points"]] == [0.2, 0.4, 0.6]


@pytest.mark.parametrize("argv", [
    ["curve", "--c", "0", "--L", "1:0.5:0.1"],
    ["curve", "--c", "0", "--L", "0.5:1:0"],
    ["curve", "--c", "0"],
    ["curve", "--L", "0.5:1:0.5"],
    ["curve", "--c", "0", "--L", "0.5:1:0.5", "--tol", "1e-14"],
    ["curve", "--c", "-0.5", "--L", "1:3:1"],
    ["curve", "--process", "airy9", "--c", "0", "--L", "1:2:1"],
    ["frobnicate"],
])
def test_invalid_configurations_exit_2(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2


def test_fit_piped_exact_exponential(capsys, monkeypatch):
    text = "L,p,err\n" + "".join(f"{L},{0.5 * math.exp(-2.5 * L)!r},0\n" for L in (1, 1.5, 2, 2.5))
    code, out, _ = run(["fit", "--input", "-"], capsys, stdin=text, monkeypatch=monkeypatch)
    assert code == 0
    (r,) = rows(out)
    assert float(r["kappa"]) == pytest.approx(2.5, abs=1e-12)
    assert float(r["C"]) == pytest.approx(0.5, abs=1e-12)
    assert list(r) == ["process", "c", "kappa", "C", "residual", "L_lo", "L_hi"]


def test_fit_insufficient_points_exit_4(capsys, monkeypatch):
    code, _, err = run(["fit", "--input", "-"], capsys, stdin="L,p,err\n1,0.2,0\n2,0.1,0\n", monkeypatch=monkeypatch)
    assert code == 4 and "fit failed" in err


def test_curve_csv_round_trips_through_fit(capsys, monkeypatch, tmp_path):
    out_file = tmp_path / "curve.csv"
    code, _, _ = run(["curve", "--c", "-0.3", "--L", "1:2:0.25", "--out", str(out_file)], capsys)
    assert code == 0
    code, out, _ = run(["fit", "--input", str(out_file)], capsys)
    (r,) = rows(out)
    direct = ps.fit_exponential(ps.curve("airy1", -0.3, ps.parse_grid(1, 2, 0.25)))
    assert abs(float(r["kappa"]) - direct.kappa) <= 1e-12
    assert abs(float(r["C"]) - direct.C) <= 1e-12
    assert r["process"] == "airy1" and float(r["c"]) == -0.3


def test_json_round_trips_through_fit(capsys, monkeypatch):
    _, out, _ = run(["curve", "--c", "0", "--L", "1:2:0.5", "--format", "json"], capsys)
    code, fit_out, _ = run(["fit", "--input", "-"], capsys, stdin=out, monkeypatch=monkeypatch)
    assert code == 0 and float(rows(fit_out)[0]["c"]) == 0.0


def test_identical_config_gives_identical_output(capsys):
    argv = ["curve", "--c", "-0.4", "--L", "0.5:1.5:0.5"]
    assert run(argv, capsys)[1] == run(argv, capsys)[1]


def test_slope_with_stub(capsys):
    code, out, _ = run(["slope", "--kappa-stub", "1.25,-4.07"], capsys)
    (r,) = rows(out)
    assert code == 0 and float(r["slope"]) == pytest.approx(-4.07, abs=1e-12) and float(r["c0"]) == -0.6033


def test_slope_out_of_range_exit_2(capsys):
    assert run(["slope", "--c", "0.5"], capsys)[0] == 2


def test_table1_subset(capsys):
    code, out, _ = run(["table1", "--c-range=-0.72:-0.70:0.02"], capsys)
    assert code == 0
    r = rows(out)
    assert [float(x["kappa_paper"]) for x in r] == [3.398, 3.307]
    assert all(float(x["abs_diff"]) <= 0.01 for x in r)
    assert out.rstrip().splitlines()[-1].startswith("# max_abs_diff=")


def test_table1_refuses_airy2(capsys):
    assert run(["table1", "--process", "airy2"], capsys)[0] == 2


def test_numerical_failure_exit_3(capsys, monkeypatch):
    def broken(*a, **k):
        raise ArithmeticError("synthetic")

    monkeypatch.setattr(ps, "evaluate", broken)
    code, _, err = run(["curve", "--c", "0", "--L", "0.5:1:0.5"], capsys)
    assert code == 3 and "numerical failure" in err


def test_partial_failure_flags_exit_3(capsys, monkeypatch):
    real = ps.evaluate

    def flaky(process, c, L, tol=1e-10, **kw):
        if L == 1.0:
            raise ArithmeticError("synthetic")
        return real(process, c, L, tol, **kw)

    monkeypatch.setattr(ps, "evaluate", flaky)
    code, out, err = run(["curve", "--c", "0", "--L", "0.5:1.5:0.5"], capsys)
    assert code == 3 and len(rows(out)) == 2 and "warning" in err


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "airypersist.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "curve" in res.stdout
