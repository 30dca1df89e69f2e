import json
import math
from importlib import resources

import jsonschema
import numpy as np
import pytest

from pdlimits.experiments import (
    SUITES,
    Check,
    ExperimentPlan,
    PlanError,
    RarityGuardError,
    TestReport,
    estimate_ldp_slope,
    run_suite,
    verify_coalescence,
    verify_fluctuation_ewens,
    verify_lln_alpha0,
    verify_lln_alpha1,
    verify_mgf,
    verify_representation_equivalence,
)

SMALL = ExperimentPlan(sample_size=2000, chunk_size=500)


def report_schema():
    return json.loads(resources.files("pdlimits").joinpath("schemas/report.schema.json").read_text())


def test_plan_parse():
    plan = ExperimentPlan.parse("""
        # comment line
        name = quick
        seed = 7          # trailing comment
        alpha_grid = 0.5, 0.3
        sample_size = 500
        workers = 2
    """)
    assert plan.name == "quick" and plan.seed == 7
    assert plan.alpha_grid == (0.5, 0.3)
    assert plan.size(10) == 500 and plan.alphas((0.1,)) == (0.5, 0.3)
    assert ExperimentPlan().size(10) == 10 and ExperimentPlan().thetas((1.0,)) == (1.0,)


@pytest.mark.parametrize("text", ["seed 3", "bogus = 1", "seed = x", "sample_size = 5", "workers = 0",
                                  "alpha_grid = ", "residual_eps = 2"])
def test_plan_errors(text):
    with pytest.raises(PlanError):
        ExperimentPlan.parse(text)


def test_plan_load(tmp_path):
    p = tmp_path / "plan.txt"
    p.write_text("seed = 5\n")
    assert ExperimentPlan.load(str(p)).seed == 5


def test_report_json_and_text():
    rep = TestReport("demo", 1)
    rep.add(Check("a", 1.0, 1.0, 0.1, "rule", True, 0.01))
    rep.add(Check("b", math.inf, None, 0.1, "rule", False, None, {"x": np.float64(math.nan)}))
    rep.runtimes["demo"] = 0.5
    d = json.loads(rep.to_json())
    jsonschema.validate(d, report_schema())
    assert d["passed"] is False and d["checks"][1]["value"] == "inf"
    assert "runtimes" not in d
    text = rep.to_text()
    assert "FAIL  b" in text and "runtime demo" in text and text.endswith("# overall: FAIL\n")
    outer = TestReport("all", 1)
    outer.extend(rep)
    assert [c.name for c in outer.checks] == ["demo/a", "demo/b"]


def test_raw_csv(tmp_path):
    rep = TestReport("demo", 1)
    rep.raw["s"] = np.array([0.5, 0.25])
    path = tmp_path / "raw.csv"
    rep.write_raw_csv(str(path))
    assert path.read_text().splitlines() == ["series,replica,value", "s,0,0.5", "s,1,0.25"]


def test_rarity_guard():
    with pytest.raises(RarityGuardError):
        estimate_ldp_slope("x", [1, 2, 3], [-1, -2, -3], -1.0, 0.1, hits=[100, 60, 3])
    c = estimate_ldp_slope("x", [1, 2, 3], [-1, -2, -3], -1.0, 0.1, hits=[100, 60, 50])
    assert c.passed and c.value == pytest.approx(-1.0)


def test_lln_suites_pass():
    for fn in (verify_lln_alpha0, verify_lln_alpha1):
        rep = fn(ExperimentPlan())
        assert rep.passed, rep.to_text()
        assert len(rep.checks) >= 2


def test_lln_grid_direction():
    with pytest.raises(PlanError):
        verify_lln_alpha0(ExperimentPlan(alpha_grid=(0.01, 0.1)))
    with pytest.raises(PlanError):
        verify_lln_alpha1(ExperimentPlan(alpha_grid=(0.99, 0.9)))


def test_small_suites_run():
    rep = verify_mgf(ExperimentPlan(sample_size=5000, alpha_grid=(0.5,)))
    assert rep.passed, rep.to_text()
    rep = verify_coalescence(ExperimentPlan(sample_size=5000, alpha_grid=(0.5,)))
    assert rep.passed, rep.to_text()
    rep = verify_representation_equivalence(ExperimentPlan(sample_size=1000, alpha_grid=(0.5,)))
    assert rep.passed, rep.to_text()
    rep = verify_fluctuation_ewens(ExperimentPlan(sample_size=500, theta_grid=(20.0,)))
    assert len(rep.checks) == 4


def test_determinism_and_workers():
    plan = ExperimentPlan(sample_size=4000, chunk_size=1000, alpha_grid=(0.5,))
    a = verify_mgf(plan).to_json()
    assert verify_mgf(plan).to_json() == a
    b = verify_mgf(ExperimentPlan(sample_size=4000, chunk_size=1000, alpha_grid=(0.5,), workers=2)).to_json()
    assert a == b
    c = verify_mgf(ExperimentPlan(sample_size=4000, chunk_size=1000, alpha_grid=(0.5,), seed=43)).to_json()
    assert a != c


def test_run_suite_dispatch():
    assert set(SUITES) == {"lln0", "lln1", "slopes", "mgf", "equiv", "fluct", "coalesce"}
    assert run_suite("lln1").suite == "lln1"
    with pytest.raises(PlanError):
        run_suite("nope")
