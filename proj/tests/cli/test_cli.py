import copy
import csv
import json
import os
import shutil
import subprocess
from pathlib import Path

import pytest

CLI = os.environ.get("EGPI_CLI") or shutil.which("egpi")

pytestmark = pytest.mark.skipif(CLI is None, reason="set EGPI_CLI to the egpi binary")

SWEEP = ["--signal", "sweep", "--v-lo", "0", "--v-hi", "10", "--samples", "2000"]


def linear(a, b):
    return {"family": "linear", "a": a, "b": b}


TRUTH = {
    "mode": "egpi_descend_flag",
    "density": {"lambda": 0.05, "sigma": 0.2, "r1": 0.2, "rn": 3.0, "n": 30},
    "submodels": [
        {"asc_env": linear(2.0, 0.0), "desc_env": linear(2.5, -3.0),
         "kappa_asc": 1.0, "kappa_desc": 1.0},
        {"asc_env": linear(2.0, 0.0), "desc_env": linear(1.25, 4.0),
         "kappa_asc": 1.0, "kappa_desc": 2.5},
    ],
    "flags": {"v_f_desc": 4.0},
    "units": {"input": "counts", "output": "deg"},
    "meta": {"created": "", "tool_version": "0.1.0", "source": ""},
}


def run(*args, cwd=None):
    return subprocess.run([CLI, *map(str, args)], capture_output=True, text=True, cwd=cwd)


def ok(*args, cwd=None):
    p = run(*args, cwd=cwd)
    assert p.returncode == 0, p.stderr
    return p


def read_csv(path):
    with open(path, newline="") as f:
        rows = [r for r in csv.reader(f) if r and not r[0].startswith("#")]
    header, body = rows[0], rows[1:]
    return {name: [float(r[i]) for r in body] for i, name in enumerate(header)}


def write_model(path, model):
    Path(path).write_text(json.dumps(model, indent=2))
    return path


@pytest.fixture
def dataset(tmp_path):
    model = write_model(tmp_path / "truth.json", TRUTH)
    data = tmp_path / "data.csv"
    ok("generate", "--model", model, "--noise", "0.1", "--seed", "3", "--out", data, *SWEEP)
    return data


def test_help_and_usage_errors():
    assert run("--help").returncode == 0
    assert run("fit", "--help").returncode == 0
    assert run().returncode == 1
    assert run("frobnicate").returncode == 1
    assert run("fit", "--data", "x.csv", "--mode", "nope").returncode == 1
    assert run("simulate", "--out").returncode == 1


def test_simulate_is_deterministic(tmp_path):
    ok("simulate", "--reference", "--out", tmp_path / "a.csv")
    ok("simulate", "--reference", "--out", tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    sim = read_csv(tmp_path / "a.csv")
    assert len(sim["t"]) == 10001
    assert set(sim["active"]) == {1.0, 2.0}


def test_simulate_converges_in_dt(tmp_path):
    ok("simulate", "--reference", "--dt", "0.001", "--out", tmp_path / "coarse.csv")
    ok("simulate", "--reference", "--dt", "0.0005", "--out", tmp_path / "fine.csv")
    coarse = read_csv(tmp_path / "coarse.csv")["z"]
    fine = read_csv(tmp_path / "fine.csv")["z"]
    assert len(fine) == 2 * len(coarse) - 1
    assert max(abs(fine[2 * i] - z) for i, z in enumerate(coarse)) < 1e-3


def test_simulate_needs_one_model_source(tmp_path):
    assert run("simulate", "--out", tmp_path / "x.csv").returncode == 2


def test_generate_seeds(tmp_path):
    model = write_model(tmp_path / "truth.json", TRUTH)
    for name, seed in (("a", 1), ("b", 1), ("c", 2)):
        ok("generate", "--model", model, "--noise", "0.1", "--seed", seed,
           "--out", tmp_path / f"{name}.csv", *SWEEP)
    a, b, c = (read_csv(tmp_path / f"{n}.csv") for n in "abc")
    assert a == b
    assert a["v"] == c["v"]
    assert a["theta"] != c["theta"]


def test_evaluate_noiseless_data_is_exact(tmp_path):
    model = write_model(tmp_path / "truth.json", TRUTH)
    ok("generate", "--model", model, "--out", tmp_path / "clean.csv", *SWEEP)
    ok("evaluate", "--data", tmp_path / "clean.csv", "--model", model,
       "--metrics-out", tmp_path / "m.json", "--out", tmp_path / "pred.csv")
    m = json.loads((tmp_path / "m.json").read_text())
    assert m["rmse"] == 0.0
    assert max(abs(e) for e in read_csv(tmp_path / "pred.csv")["error"]) == 0.0


def test_fit_recovers_and_beats_gpi(tmp_path, dataset):
    ok("fit", "--data", dataset, "--mode", "egpi", "--flag-point", "4",
       "--out-result", tmp_path / "egpi.json", "--out-model", tmp_path / "egpi.model.json")
    ok("fit", "--data", dataset, "--mode", "gpi",
       "--out-result", tmp_path / "gpi.json", "--out-model", tmp_path / "gpi.model.json")
    egpi = json.loads((tmp_path / "egpi.json").read_text())["metrics"]
    gpi = json.loads((tmp_path / "gpi.json").read_text())["metrics"]
    assert egpi["rmse"] < 0.15
    assert gpi["rmse"] > 2 * egpi["rmse"]

    ok("evaluate", "--data", dataset, "--model", tmp_path / "egpi.model.json",
       "--metrics-out", tmp_path / "m.json")
    again = json.loads((tmp_path / "m.json").read_text())
    assert again["rmse"] == pytest.approx(egpi["rmse"], rel=1e-12)
    assert again["mae"] == pytest.approx(egpi["mae"], rel=1e-12)

    leftovers = [p for p in tmp_path.iterdir() if p.suffix == ".tmp"]
    assert leftovers == []


def test_fit_is_deterministic(tmp_path, dataset):
    for name in ("a", "b"):
        ok("fit", "--data", dataset, "--flag-point", "4", "--created", "fixed",
           "--out-model", tmp_path / f"{name}.json", "--max-iterations", "30")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_doubling_kappa_hurts(tmp_path, dataset):
    base = write_model(tmp_path / "truth.json", TRUTH)
    worse = copy.deepcopy(TRUTH)
    worse["submodels"][1]["kappa_desc"] *= 2
    write_model(tmp_path / "worse.json", worse)
    ok("evaluate", "--data", dataset, "--model", base, "--metrics-out", tmp_path / "a.json")
    ok("evaluate", "--data", dataset, "--model", tmp_path / "worse.json",
       "--metrics-out", tmp_path / "b.json")
    a = json.loads((tmp_path / "a.json").read_text())
    b = json.loads((tmp_path / "b.json").read_text())
    assert b["rmse"] > a["rmse"]


def test_missing_theta_vs_parse_error(tmp_path):
    (tmp_path / "notheta.csv").write_text("t,v\n0,0\n1,1\n2,0\n")
    (tmp_path / "broken.csv").write_text("t,v,theta\n0,0,0\n1,abc,1\n")
    assert run("fit", "--data", tmp_path / "notheta.csv").returncode == 5
    assert run("evaluate", "--data", tmp_path / "notheta.csv",
               "--model", tmp_path / "none.json").returncode == 5
    p = run("fit", "--data", tmp_path / "broken.csv")
    assert p.returncode == 2
    assert "broken.csv:3:" in p.stderr
    assert run("fit", "--data", tmp_path / "absent.csv").returncode == 2


def test_monotone_ramp_needs_flag_point(tmp_path):
    with open(tmp_path / "ramp.csv", "w") as f:
        f.write("t,v,theta\n")
        for i in range(200):
            f.write(f"{i * 0.01},{i * 0.05},{i * 0.1}\n")
    p = run("fit", "--data", tmp_path / "ramp.csv")
    assert p.returncode == 4
    assert "--flag-point" in p.stderr


def test_fit_all_and_report(tmp_path, dataset):
    second = tmp_path / "second.csv"
    shutil.copy(dataset, second)
    out = tmp_path / "out"
    ok("fit-all", "--data", dataset, second, "--flag-point", "4", "--max-iterations", "40",
       "--out-dir", out, "--report", tmp_path / "report.csv")
    results = sorted(out.glob("*.result.json"))
    assert len(results) == 4
    assert len(list(out.glob("*.model.json"))) == 4
    with open(tmp_path / "report.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 4

    p = ok("report", "--result", *results, "--out", tmp_path / "report.json")
    assert "EGPI" in p.stdout and "GPI" in p.stdout
    report = json.loads((tmp_path / "report.json").read_text())
    assert len(report if isinstance(report, list) else report["rows"]) == 4
    assert not list(tmp_path.rglob("*.tmp"))
