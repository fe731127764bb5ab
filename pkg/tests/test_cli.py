import csv
import io
import json
import math
import subprocess
import sys

import pytest

from mlp_curse import cli, harness

HEADER = "d,n,m,reps,estimate,std_error,lower_bound,upper_bound,feasible,nodes,gaussians,wall_ms"


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def parse(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_sweep_moment_check_passes(tmp_path, capsys):
    out = tmp_path / "moment.csv"
    argv = ["sweep", "--mode", "moment-fV", "--dims", "1224,2048,4096", "--n", "1", "--reps", "4000",
            "--out", str(out), "--check"]
    code, _, err = run(argv, capsys)
    assert code == 0, err
    text = out.read_text()
    assert text.splitlines()[0] == HEADER
    for row in parse(text):
        est, se = float(row["estimate"]), float(row["std_error"])
        assert row["feasible"] == "true"
        assert float(row["lower_bound"]) - 4 * se <= est <= float(row["upper_bound"])


def test_sweep_zero_depth(capsys):
    code, out, _ = run(["sweep", "--mode", "error", "--dims", "2", "--n", "0", "--reps", "10"], capsys)
    assert code == 0
    (row,) = parse(out)
    assert float(row["estimate"]) == math.sqrt(2 / math.pi)
    assert float(row["std_error"]) == 0.0
    assert row["lower_bound"] == "" and row["upper_bound"] == ""


def test_sweep_growth_ratio_increases(capsys):
    argv = ["sweep", "--mode", "growth", "--p", "0.25", "--dims", "256,1024,4096", "--n", "1", "--reps", "4000",
            "--check"]
    code, out, err = run(argv, capsys)
    assert code == 0, err
    rows = parse(out)
    ratios = [float(r["ratio"]) for r in rows]
    assert ratios[0] < ratios[1] < ratios[2]


def test_check_mode_fails_on_violation(capsys):
    config = harness.SweepConfig(dims=[2048], n=1, reps=10, mode="moment-fV")
    row = harness.SweepRow(2048, 1, 1, 10, 1.0, 0.01, 7.76, 59.6, True, 10, 20, None)
    assert harness.check_rows(config, [row])
    row.estimate = 100.0
    assert harness.check_rows(config, [row])
    row.estimate = 45.0
    assert not harness.check_rows(config, [row])


def test_invalid_config_rejected(capsys):
    code, _, err = run(["sweep", "--dims", "4,2", "--n", "1"], capsys)
    assert code == 2 and "increasing" in err
    code, _, err = run(["sweep", "--dims", "4", "--n", "1", "--reps", "1"], capsys)
    assert code == 2
    code, _, err = run(["sweep", "--dims", "4", "--n", "0", "--couple"], capsys)
    assert code == 2


def test_io_error_names_path(tmp_path, capsys):
    bad = tmp_path / "missing" / "out.csv"
    code, _, err = run(["sweep", "--dims", "2", "--n", "1", "--reps", "4", "--out", str(bad)], capsys)
    assert code == 2 and str(bad) in err


def test_point_parsing():
    assert harness.parse_point("origin") == (0.0, None)
    assert harness.parse_point("0.5@origin") == (0.5, None)
    assert harness.parse_point("0.25@1,-2") == (0.25, (1.0, -2.0))
    with pytest.raises(ValueError):
        harness.parse_point("1.0@origin")
    cfg = harness.SweepConfig(dims=[3], n=1, x=(1.0,))
    assert list(cfg.point(3)) == [1.0, 0.0, 0.0]


def test_couple_sets_m():
    assert harness.SweepConfig(dims=[3], n=2, couple=True).m == 2


def test_explicit_point_sweep(capsys):
    code, out, _ = run(["sweep", "--dims", "3", "--n", "2", "--m", "2", "--reps", "50", "--point", "0.5@0.3,1"],
                       capsys)
    assert code == 0 and len(parse(out)) == 1


@pytest.mark.parametrize("threads", [1, 4, 8])
def test_csv_byte_identical_across_threads(tmp_path, threads, capsys):
    paths = []
    for th in (1, threads):
        out = tmp_path / f"t{th}.csv"
        argv = ["sweep", "--dims", "2,16", "--n", "3", "--m", "2", "--reps", "40", "--seed", "5",
                "--threads", str(th), "--no-timing", "--out", str(out)]
        assert run(argv, capsys)[0] == 0
        paths.append(out.read_bytes())
    assert paths[0] == paths[1]


def test_verify_all(capsys):
    code, out, _ = run(["verify"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert all(line.startswith("PASS") for line in lines)
    assert {line.split()[1] for line in lines} == set(harness.SUITES)


@pytest.mark.parametrize("suite", ["pde", "mirror"])
def test_verify_single_suite(suite, capsys):
    code, out, _ = run(["verify", "--suite", suite, "--json"], capsys)
    assert code == 0
    report = json.loads(out.strip().splitlines()[-1])
    assert [r["name"] for r in report] == [suite] and report[0]["passed"]


def test_verify_unknown_suite(capsys):
    code, _, err = run(["verify", "--suite", "nope"], capsys)
    assert code == 2


def test_bounds_text_and_json(capsys):
    code, out, _ = run(["bounds", "--dims", "1224", "--n", "1", "--m", "1", "--json"], capsys)
    rep = json.loads(out)
    assert rep["lower_error"] == 5.0 and rep["feasible"] is True
    code, out, _ = run(["bounds", "--dims", "1223", "--n", "1", "--json"], capsys)
    rep = json.loads(out)
    assert rep["feasible"] is False and rep["lower_error"] is None and rep["lower_moment_fV"] is None
    code, out, _ = run(["bounds", "--dims", "100", "--n", "3"], capsys)
    fields = dict(line.split(None, 1) if len(line.split()) > 1 else (line.strip(), "") for line in out.splitlines())
    assert float(fields["upper_error"]) == 12_960_000
    assert fields["feasible"] == "False"


def test_module_entry_point_and_fallback_selection():
    code = "import mlp_curse; print(mlp_curse.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env={"MLP_CURSE_BACKEND": "python", "PATH": ""})
    assert out.stdout.strip() == "python"
    res = subprocess.run([sys.executable, "-m", "mlp_curse.cli", "bounds", "--dims", "1224", "--n", "1", "--json"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["lower_error"] == 5.0
