import json
import math
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from pdlimits.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def schema(name):
    return json.loads(resources.files("pdlimits").joinpath(f"schemas/{name}").read_text())


def csv_rows(text):
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    return lines[0], [line.split(",") for line in lines[1:]]


@pytest.mark.parametrize("cmd", [[], ["sample"], ["density"], ["rates"], ["verify"]])
def test_help(capsys, cmd):
    code, out, _ = run(capsys, *cmd, "--help")
    assert code == 0 and "usage" in out


def test_unknown_flag_is_usage_error(capsys):
    assert run(capsys, "sample", "--alpha", "0.5", "--bogus")[0] == 2
    assert run(capsys, "density", "--alpha", "0.5", "--at", "1", "--which", "nope")[0] == 2


def test_sample_stick(capsys):
    code, out, _ = run(capsys, "sample", "--alpha", "0.5", "--theta", "0", "--n-draws", "10", "--seed", "3")
    assert code == 0
    assert out.startswith("# pdlimits") and "seed=3" in out.splitlines()[0]
    header, rows = csv_rows(out)
    assert header == "draw_id,rank,weight"
    sums = [math.fsum(float(r[2]) for r in rows if r[0] == str(i)) for i in range(10)]
    assert all(1 - 1e-3 <= s <= 1 + 1e-12 for s in sums)


def test_sample_other_representations(capsys):
    code, out, _ = run(capsys, "sample", "--alpha", "0.5", "--representation", "cells", "--grid", "0.5",
                       "--n-draws", "5")
    header, rows = csv_rows(out)
    assert code == 0 and len(rows) == 10
    for i in range(5):
        assert math.fsum(float(r[2]) for r in rows if r[0] == str(i)) == pytest.approx(1.0, abs=1e-14)
    code, out, _ = run(capsys, "sample", "--alpha", "0.3", "--theta", "1", "--representation", "measure")
    assert code == 0 and csv_rows(out)[0] == "draw_id,rank,weight,location"
    code, out, _ = run(capsys, "sample", "--alpha", "0.5", "--representation", "ladder", "--n-draws", "2")
    assert code == 0 and len(csv_rows(out)[1]) > 10
    assert run(capsys, "sample", "--alpha", "0.5", "--theta", "1", "--representation", "ladder")[0] == 2
    assert run(capsys, "sample", "--alpha", "1.5")[0] == 2


def test_sample_budget_exit(capsys):
    code, out, err = run(capsys, "sample", "--alpha", "0.9", "--truncation-eps", "1e-9", "--max-terms", "300")
    assert code == 3 and out == "" and "budget" in err


def test_sample_bytes_identical(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert run(capsys, "sample", "--alpha", "0.4", "--theta", "2", "--n-draws", "3", "--output", str(p))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_seed_precedence(capsys, monkeypatch):
    base = ["sample", "--alpha", "0.4", "--n-draws", "2"]
    _, default, _ = run(capsys, *base)
    assert "seed=42" in default.splitlines()[0]
    monkeypatch.setenv("PDLIMITS_SEED", "9")
    _, env, _ = run(capsys, *base)
    assert "seed=9" in env.splitlines()[0] and env != default
    _, flag, _ = run(capsys, *base, "--seed", "11")
    assert "seed=11" in flag.splitlines()[0]
    monkeypatch.setenv("PDLIMITS_SEED", "11")
    assert run(capsys, *base)[1] == flag
    monkeypatch.setenv("PDLIMITS_SEED", "x")
    assert run(capsys, *base)[0] == 2


def test_density_examples(capsys):
    _, out, _ = run(capsys, "density", "--which", "pdf", "--alpha", "0.5", "--at", "1")
    header, rows = csv_rows(out)
    assert header == "x,value"
    assert float(rows[0][1]) == pytest.approx(0.21970, abs=1e-5)
    _, out, _ = run(capsys, "density", "--which", "ml-moment", "--alpha", "0.5", "--at", "1")
    assert float(csv_rows(out)[1][0][1]) == pytest.approx(1.12838, abs=1e-5)
    _, out, _ = run(capsys, "density", "--which", "cdf", "--alpha", "0.9", "--at", "1e6,0.5")
    header, rows = csv_rows(out)
    assert header == "x,value,log_value"
    # P{rho > y} ~ y^(-a) / Gamma(1 - a) for large y
    assert 1.0 - float(rows[0][1]) == pytest.approx(1e6 ** -0.9 / math.gamma(0.1), rel=1e-3)


def test_density_json_schema(capsys):
    code, out, _ = run(capsys, "density", "--which", "tail-lower", "--alpha", "0.99", "--at", "0.5",
                       "--format", "json")
    d = json.loads(out)
    jsonschema.validate(d, schema("output.schema.json"))
    assert code == 0 and d["rows"][0]["value"] == 0.0 and d["rows"][0]["log_value"] < -1e20


def test_density_numerics_exit(capsys):
    code, _, err = run(capsys, "density", "--which", "pdf", "--alpha", "0.5", "--at", "1", "--abs-tol", "1e-300",
                       "--rel-tol", "1e-300", "--max-subdivisions", "1")
    assert code == 4 and "achieved error" in err
    assert run(capsys, "density", "--which", "ml-pdf", "--alpha", "0.9", "--at", "80")[0] == 4
    assert run(capsys, "density", "--which", "cdf", "--alpha", "0.9999", "--at", "1e-3")[0] == 4


def test_rates_examples(capsys):
    assert run(capsys, "rates", "--rate", "i2", "--prefix", "1,0.5,0.2", "--tail", "zeros")[1] == "2\n"
    assert run(capsys, "rates", "--rate", "measure", "--atoms", "0.2:0.3")[1] == "1\n"
    assert run(capsys, "rates", "--rate", "j", "--at", "1")[1] == "0\n"
    assert run(capsys, "rates", "--rate", "j", "--at", "0.5")[1] == "inf\n"
    assert run(capsys, "rates", "--rate", "jn", "--u", "0.5,2")[1] == "2\n"
    assert run(capsys, "rates", "--rate", "in", "--y", "0.3,0.7", "--grid", "0.5")[1] == "1\n"
    assert run(capsys, "rates", "--rate", "sup", "--atoms", "0.2:0.3,0.8:0.3")[1] == "2\n"
    assert run(capsys, "rates", "--rate", "psi", "--prefix", "0.5,0.5")[1] == "1.0,0.5,0.25;tail=0.0\n"
    assert run(capsys, "rates", "--rate", "i1", "--prefix", "1", "--tail", "const:1")[1] == "0\n"


def test_rates_json_and_errors(capsys):
    code, out, _ = run(capsys, "rates", "--rate", "j", "--at", "0.5", "--format", "json", "--seed", "5")
    d = json.loads(out)
    jsonschema.validate(d, schema("output.schema.json"))
    assert d["value"] == "inf" and d["seed"] == 5
    assert run(capsys, "rates", "--rate", "i2", "--prefix", "0.5,0.9")[0] == 2
    assert run(capsys, "rates", "--rate", "measure", "--atoms", "0.2-0.3")[0] == 2
    assert run(capsys, "rates", "--rate", "j")[0] == 2
    assert run(capsys, "rates", "--rate", "sup", "--atoms", "0.5:0.2,0.5001:0.2", "--depth", "12")[0] == 4


def test_verify_exit_codes(capsys, tmp_path):
    bad = tmp_path / "bad.plan"
    bad.write_text("this is not a plan\n")
    assert run(capsys, "verify", "--suite", "lln1", "--plan", str(bad))[0] == 2
    assert run(capsys, "verify", "--suite", "lln1", "--plan", str(tmp_path / "missing"))[0] == 2
    good = tmp_path / "good.plan"
    good.write_text("seed = 8\nsample_size = 300\n")
    code, out, _ = run(capsys, "verify", "--suite", "lln1", "--plan", str(good), "--format", "json",
                       "--output", str(tmp_path / "r.json"), "--raw-csv", str(tmp_path / "raw.csv"))
    d = json.loads(out)
    jsonschema.validate(d, schema("report.schema.json"))
    assert code == 0 and d["seed"] == 8
    assert (tmp_path / "r.json").read_text() == out
    assert (tmp_path / "raw.csv").read_text().startswith("series,replica,value\n")
    # a check that cannot pass exits 1 and still reports
    fail = tmp_path / "fail.plan"
    fail.write_text("alpha_grid = 0.6, 0.61\nsample_size = 300\n")
    code, out, _ = run(capsys, "verify", "--suite", "lln1", "--plan", str(fail))
    assert code == 1 and "# overall: FAIL" in out


def test_verify_coalesce_default_passes(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "coalesce")
    assert code == 0, out


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "pdlimits", "rates", "--rate", "j", "--at", "1.5"],
                       capture_output=True, text=True, check=False)
    assert r.returncode == 0 and r.stdout == "1\n"
