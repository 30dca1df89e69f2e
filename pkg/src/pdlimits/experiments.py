"""Monte-Carlo and quadrature checks of the PD(alpha, theta) limit results.

Every suite returns a TestReport.  Randomness comes from substreams
``spawn_rng(seed, suite, cell, chunk)``: samples are produced in chunks of a
fixed size and each chunk owns its stream, so a report depends only on the
plan and the seed, not on the number of worker processes or on completion
order.
"""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Callable, Optional, Sequence

import numpy as np
from scipy.special import logsumexp
from scipy.stats import norm

from . import __version__
from .partition_stats import coalescence_pi, fluctuation_statistic, moments_phi2_ewens
from .py_sampler import (
    PYParams,
    StopRule,
    _log_tail_draw,
    a_lambda,
    ladder_tail_moments,
    partition_masses_stable_batch,
    pd0_from_ladder,
    py_cell_masses_batch,
    sample_gem_batch,
    sample_ladder_batch,
    sample_pd_ranked,
    spawn_rng,
)
from .rate_functions import PartitionGrid, rate_in, rate_j_rho
from .stable_numerics import stable_log_sf_upper
from .stats import ks_one_sample, ks_two_sample, mean_se, ols_slope, var_se

__all__ = [
    "PlanError",
    "RarityGuardError",
    "ExperimentPlan",
    "Check",
    "TestReport",
    "SUITES",
    "run_suite",
    "verify_lln_alpha0",
    "verify_lln_alpha1",
    "estimate_ldp_slope",
    "verify_slopes",
    "verify_fluctuation_ewens",
    "verify_mgf",
    "verify_representation_equivalence",
    "verify_coalescence",
]

BUILD_TAG = f"pdlimits {__version__}"


class PlanError(ValueError):
    pass


class RarityGuardError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# plan and report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentPlan:
    """Run configuration.  Unset grids and sizes fall back to each suite's defaults."""
    name: str = "default"
    seed: int = 42
    alpha_grid: Optional[tuple] = None
    theta_grid: Optional[tuple] = None
    sample_size: Optional[int] = None
    ladder_terms: int = 512
    max_sticks: Optional[int] = None
    residual_eps: float = 1e-12
    chunk_size: int = 10_000
    workers: int = 1
    output_path: Optional[str] = None
    raw_path: Optional[str] = None

    def __post_init__(self):
        for g in ("alpha_grid", "theta_grid"):
            v = getattr(self, g)
            if v is not None:
                v = tuple(float(x) for x in v)
                if not v:
                    raise PlanError(f"{g} must be nonempty")
                object.__setattr__(self, g, v)
        if self.sample_size is not None and self.sample_size < 100:
            raise PlanError("sample_size must be at least 100")
        if not 0 <= self.seed < 2 ** 64:
            raise PlanError("seed must be a 64-bit unsigned integer")
        if self.ladder_terms < 16 or self.chunk_size < 1 or self.workers < 1:
            raise PlanError("ladder_terms >= 16, chunk_size >= 1 and workers >= 1 are required")
        if not 0.0 < self.residual_eps < 1.0:
            raise PlanError("residual_eps must lie in (0, 1)")

    @classmethod
    def parse(cls, text: str) -> "ExperimentPlan":
        """Parse `key = value` lines; '#' starts a comment, lists are comma separated."""
        kinds = {f.name: f.type for f in fields(cls)}
        kw: dict[str, Any] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise PlanError(f"line {lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in kinds:
                raise PlanError(f"line {lineno}: unknown key {key!r}")
            try:
                if key.endswith("_grid"):
                    kw[key] = tuple(float(x) for x in val.split(",") if x.strip())
                elif key in ("seed", "sample_size", "ladder_terms", "max_sticks", "chunk_size", "workers"):
                    kw[key] = int(val)
                elif key == "residual_eps":
                    kw[key] = float(val)
                else:
                    kw[key] = val
            except ValueError as exc:
                raise PlanError(f"line {lineno}: bad value for {key}: {val!r}") from exc
        return cls(**kw)

    @classmethod
    def load(cls, path: str) -> "ExperimentPlan":
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read())

    def size(self, default: int) -> int:
        return self.sample_size if self.sample_size is not None else default

    def alphas(self, default: Sequence[float]) -> tuple:
        return self.alpha_grid if self.alpha_grid is not None else tuple(default)

    def thetas(self, default: Sequence[float]) -> tuple:
        return self.theta_grid if self.theta_grid is not None else tuple(default)


def _jsonable(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    return v


@dataclass
class Check:
    """One judged quantity: `value` is compared to `target` by `rule` at `tolerance`."""
    name: str
    value: Any
    target: Any
    tolerance: Any
    rule: str
    passed: bool
    se: Optional[float] = None
    details: dict = field(default_factory=dict)


@dataclass
class TestReport:
    __test__ = False  # not a pytest class

    suite: str
    seed: int
    build: str = BUILD_TAG
    checks: list = field(default_factory=list)
    runtimes: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def extend(self, other: "TestReport") -> None:
        self.checks.extend(replace(c, name=f"{other.suite}/{c.name}") for c in other.checks)
        self.runtimes.update({f"{other.suite}/{k}": v for k, v in other.runtimes.items()})
        self.raw.update({f"{other.suite}/{k}": v for k, v in other.raw.items()})

    def to_dict(self) -> dict:
        # runtimes vary between runs and stay out of the machine-readable form
        return _jsonable({
            "suite": self.suite,
            "seed": self.seed,
            "build": self.build,
            "passed": self.passed,
            "checks": [asdict(c) for c in self.checks],
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = [f"# suite={self.suite} seed={self.seed} build={self.build}"]
        for c in self.checks:
            se = "" if c.se is None else f" se={_fmt(c.se)}"
            lines.append(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: value={_fmt(c.value)} "
                         f"target={_fmt(c.target)} rule={c.rule} tol={_fmt(c.tolerance)}{se}")
        for k, v in self.runtimes.items():
            lines.append(f"# runtime {k}: {v:.2f}s")
        lines.append(f"# overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"

    def write_raw_csv(self, path: str) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["series", "replica", "value"])
            for name, vals in self.raw.items():
                for i, v in enumerate(vals):
                    w.writerow([name, i, repr(float(v))])


def _fmt(v) -> str:
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}"
    return str(v)


def _within(name, value, target, se, k=4.0, **details) -> Check:
    ok = abs(value - target) <= k * se
    return Check(name, value, target, k, "|value - target| <= tol * se", bool(ok), se, details)


# ---------------------------------------------------------------------------
# chunked, substream-keyed sampling
# ---------------------------------------------------------------------------

SUITE_KEYS = {"lln": 1, "slopes": 2, "mgf": 3, "equiv": 4, "fluct": 5, "coalesce": 6}


def _chunk_call(args):
    fn, seed, key, size, kwargs = args
    return fn(spawn_rng(seed, *key), size, **kwargs)


def _chunked(fn: Callable, plan: ExperimentPlan, key: tuple, total: int, chunk: Optional[int] = None,
             **kwargs) -> list:
    """fn(rng, size, **kwargs) over chunks of `chunk` rows; chunk c uses spawn_rng(seed, *key, c)."""
    chunk = chunk or plan.chunk_size
    jobs = []
    for c, start in enumerate(range(0, total, chunk)):
        jobs.append((fn, plan.seed, key + (c,), min(chunk, total - start), kwargs))
    if plan.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=plan.workers) as ex:
            return list(ex.map(_chunk_call, jobs))
    return [_chunk_call(j) for j in jobs]


def _ladder_rows(rng, size, n_terms):
    return sample_ladder_batch(rng, size, n_terms)


def _ladder(plan: ExperimentPlan, key: tuple, total: int, chunk: Optional[int] = None):
    parts = _chunked(_ladder_rows, plan, key, total, chunk, n_terms=plan.ladder_terms)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def _ladder_stats(rng, size, n_terms, alpha, what):
    z, u = sample_ladder_batch(rng, size, n_terms)
    lw, _ = pd0_from_ladder(alpha, z, u)
    if what == "p1":
        return lw[:, 0]
    # homozygosity, including the conditional mean of the remote tail's squares
    _, lk2 = ladder_tail_moments(alpha, np.log(z[:, -1]))
    log_total = -np.log(z[:, 0]) / alpha - lw[:, 0]
    return np.exp(2 * lw).sum(axis=1) + np.exp(lk2 - 2 * log_total)


# ---------------------------------------------------------------------------
# coupled laws of large numbers
# ---------------------------------------------------------------------------

def _log_excess(alpha: float, z: np.ndarray, u: np.ndarray) -> np.ndarray:
    """log S with sum_i Z_i^(-1/a) = Z_1^(-1/a) (1 + S), per row."""
    lz = np.log(z)
    terms = (lz[:, :1] - lz[:, 1:]) / alpha
    tail = _log_tail_draw(alpha, lz[:, -1], u) + lz[:, 0] / alpha
    return logsumexp(np.concatenate((terms, tail[:, None]), axis=1), axis=1)


def _log_log1p_exp(ls: np.ndarray) -> np.ndarray:
    """log(log1p(exp(ls))), exact for very negative ls."""
    with np.errstate(divide="ignore"):
        return np.where(ls < -30.0, ls, np.log(np.log1p(np.exp(np.minimum(ls, 700.0)))))


def _log_one_minus_exp_neg(lx: np.ndarray) -> np.ndarray:
    """log(1 - exp(-x)) from lx = log x."""
    x = np.exp(np.minimum(lx, 700.0))
    with np.errstate(divide="ignore"):
        return np.where(lx < -30.0, lx, np.log(-np.expm1(-x)))


def _decreasing_check(name: str, grid, log_medians, final_limit: Optional[float], **details) -> Check:
    lm = [float(v) for v in log_medians]
    med = [math.exp(v) for v in lm]
    dec = all(b < a for a, b in zip(lm, lm[1:]))
    ok = dec and (final_limit is None or med[-1] < final_limit)
    rule = "strictly decreasing medians" + ("" if final_limit is None else ", final < tol")
    return Check(name, med, None, final_limit, rule, bool(ok), None,
                 dict(details, alpha_grid=list(grid), log10_medians=[v / math.log(10) for v in lm]))


def verify_lln_alpha0(plan: ExperimentPlan = ExperimentPlan()) -> TestReport:
    """P^{gamma(a)}(a, 0) along a -> 0 on a shared ladder per replica.

    gamma = a: limit (1, Z1/Z2, Z1/Z3, ...); the error max_{n<=10} is attained
    at n = 1 and equals 1 - (1 + S)^(-a), evaluated from log S.
    gamma = a^2: limit (1, 1, ...).  gamma = sqrt(a): limit (1, 0, 0, ...).
    """
    rep = TestReport("lln0", plan.seed)
    t0 = time.perf_counter()
    grid = plan.alphas((0.1, 0.01, 0.001))
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise PlanError("alpha grid must decrease toward 0")
    reps = plan.size(500)
    z, u = _ladder(plan, (SUITE_KEYS["lln"], 0), reps)
    n = min(10, z.shape[1])
    lz = np.log(z[:, :n])
    out = {"alpha": [], "alpha2": [], "sqrt_p1": [], "sqrt_p2": []}
    for a in grid:
        ls = _log_excess(a, z, u)
        lls = _log_log1p_exp(ls)  # log log(1 + S)
        log1p_s = np.exp(lls)
        # gamma = a
        err = _log_one_minus_exp_neg(math.log(a) + lls)
        out["alpha"].append(np.median(err))
        rep.raw[f"log_err_gamma_alpha@{a}"] = err
        # gamma = a^2: a^2 log P_n = a (log Z1 - log Zn) - a^2 log(1 + S)
        e2 = np.abs(np.expm1(a * (lz[:, :1] - lz) - a * a * log1p_s[:, None])).max(axis=1)
        out["alpha2"].append(np.log(np.median(e2)))
        # gamma = sqrt(a): 1 - P1^gamma and P2^gamma
        r = math.sqrt(a)
        out["sqrt_p1"].append(np.median(_log_one_minus_exp_neg(math.log(r) + lls)))
        out["sqrt_p2"].append(np.median(r * ((lz[:, 0] - lz[:, 1]) / a - log1p_s)))
    rep.add(_decreasing_check("gamma=alpha max_n|P_n^g - Z1/Zn|", grid, out["alpha"], 0.05, replicas=reps))
    rep.add(_decreasing_check("gamma=alpha^2 max_n|P_n^g - 1|", grid, out["alpha2"], 0.05, replicas=reps))
    rep.add(_decreasing_check("gamma=sqrt(alpha) 1-P_1^g", grid, out["sqrt_p1"], 0.05, replicas=reps))
    rep.add(_decreasing_check("gamma=sqrt(alpha) P_2^g", grid, out["sqrt_p2"], 0.05, replicas=reps))
    rep.runtimes["lln0"] = time.perf_counter() - t0
    return rep


def verify_lln_alpha1(plan: ExperimentPlan = ExperimentPlan()) -> TestReport:
    """iota(a) P(a, 0) with iota = 1/(1-a) against (1/Z1, 1/Z2, ...), shared ladders."""
    rep = TestReport("lln1", plan.seed)
    t0 = time.perf_counter()
    grid = plan.alphas((0.9, 0.99, 0.999))
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise PlanError("alpha grid must increase toward 1")
    reps = plan.size(500)
    z, u = _ladder(plan, (SUITE_KEYS["lln"], 1), reps)
    n = min(10, z.shape[1])
    meds = []
    for a in grid:
        lw, _ = pd0_from_ladder(a, z, u)
        err = np.abs(np.exp(lw[:, :n] - math.log1p(-a)) - 1.0 / z[:, :n]).max(axis=1)
        rep.raw[f"err_iota@{a}"] = err
        meds.append(math.log(np.median(err)))
    rep.add(_decreasing_check("iota*P_n vs 1/Z_n", grid, meds, 0.05, replicas=reps))
    # iota(a) / Gamma(1 - a) = 1 / Gamma(2 - a)
    gaps = [math.log(abs(1.0 / math.gamma(2.0 - a) - 1.0)) for a in grid]
    rep.add(_decreasing_check("iota/Gamma(1-a) - 1", grid, gaps, None))
    rep.runtimes["lln1"] = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------------------
# large-deviation slopes
# ---------------------------------------------------------------------------

def estimate_ldp_slope(name: str, speeds: Sequence[float], log_probs: Sequence[float], target: float,
                       tol: float, hits: Optional[Sequence[int]] = None, min_hits: int = 50, **details) -> Check:
    """Regress log P on the speed; pass when |slope - target| <= tol.

    For Monte-Carlo probabilities pass the hit counts: fewer than min_hits at
    any grid point raises RarityGuardError.
    """
    if hits is not None:
        low = [h for h in hits if h < min_hits]
        if low:
            raise RarityGuardError(f"{name}: only {min(low)} hits at some grid point (need {min_hits})")
    slope, _ = ols_slope(speeds, log_probs)
    d = dict(details, speeds=list(speeds), log_probs=list(log_probs))
    if hits is not None:
        d["hits"] = list(hits)
    return Check(name, slope, target, tol, "|slope - target| <= tol", bool(abs(slope - target) <= tol), None, d)


def _r1_power_hits(rng, size, alpha, gamma, x):
    # R_1 ~ Beta(a, 1) by the same inverse-power transform as ratio_sequence
    u = 1.0 - rng.random(size)
    log_r = np.log(u) / alpha
    return int(np.count_nonzero(gamma * log_r <= math.log(x)))


def _cell_box_hits(rng, size, alpha, lo, hi):
    m = partition_masses_stable_batch(alpha, [0.5], rng, size)
    return int(np.count_nonzero((m[:, 0] >= lo) & (m[:, 0] <= hi)))


def verify_slopes(plan: ExperimentPlan = ExperimentPlan()) -> TestReport:
    rep = TestReport("slopes", plan.seed)
    t0 = time.perf_counter()

    # {rho_1 > 1.5} by quadrature, speed -log(1 - a)
    grid = (0.9, 0.99, 0.999)
    x = 1.5
    lps = [stable_log_sf_upper(a, x - 1.0).log_prob for a in grid]
    rep.add(estimate_ldp_slope("P{rho_1 > 1.5} vs -log(1-a)", [-math.log1p(-a) for a in grid], lps,
                               -rate_j_rho(x), 0.2, mode="quadrature", alpha_grid=list(grid)))

    # {R_1^gamma <= 0.5}, gamma = a^2, speed a/gamma = 1/a, Monte Carlo
    grid = (0.5, 0.35, 0.25)
    x = 0.5
    n = plan.size(20_000)
    hits = [sum(_chunked(_r1_power_hits, plan, (SUITE_KEYS["slopes"], 1, i), n, alpha=a, gamma=a * a, x=x))
            for i, a in enumerate(grid)]
    lps = [math.log(h / n) for h in hits]
    rep.add(estimate_ldp_slope("P{R_1^(a^2) <= 0.5} vs 1/a", [1.0 / a for a in grid], lps, math.log(x), 0.15,
                               hits=hits, mode="monte_carlo", alpha_grid=list(grid), samples=n,
                               exact_log_probs=[math.log(x) / a for a in grid]))

    # two cells of [0, 1]: mass of [0, 1/2] in [0.3, 0.4], speed -log(1 - a)
    grid = (0.9, 0.99, 0.999)
    n = max(plan.size(20_000) * 20, 400_000)
    lo, hi = 0.3, 0.4
    rate = rate_in([0.35, 0.65], PartitionGrid((0.5,)))
    hits = [sum(_chunked(_cell_box_hits, plan, (SUITE_KEYS["slopes"], 2, i), n, chunk=50_000, alpha=a, lo=lo, hi=hi))
            for i, a in enumerate(grid)]
    lps = [math.log(h / n) for h in hits]
    rep.add(estimate_ldp_slope("P{Xi[0,1/2] in [0.3,0.4]} vs -log(1-a)", [-math.log1p(-a) for a in grid], lps,
                               -float(rate), 0.3, hits=hits, mode="monte_carlo", alpha_grid=list(grid), samples=n))
    rep.runtimes["slopes"] = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------------------
# fluctuations, moment generating function, coalescence
# ---------------------------------------------------------------------------

def _ewens_phi2(rng, size, theta, n_sticks):
    v, rem = sample_gem_batch(PYParams(0.0, theta), rng, size, n_sticks)
    return np.square(v).sum(axis=1) + rem ** 2 / (1.0 + theta)


def verify_fluctuation_ewens(plan: ExperimentPlan = ExperimentPlan()) -> TestReport:
    """sqrt(theta/2) (theta phi_2 - 1) under PD(0, theta) against N(0, 1)."""
    rep = TestReport("fluct", plan.seed)
    t0 = time.perf_counter()
    n = plan.size(10_000)
    for i, theta in enumerate(plan.thetas((200.0,))):
        # residual after k sticks is a product of Beta(theta, 1) factors, about exp(-k/(theta+1))
        k = plan.max_sticks or int(math.ceil((theta + 1.0) * -math.log(plan.residual_eps) * 1.5))
        phi2 = np.concatenate(_chunked(_ewens_phi2, plan, (SUITE_KEYS["fluct"], i), n, chunk=1000,
                                       theta=theta, n_sticks=k))
        s = fluctuation_statistic(theta, phi2)
        rep.raw[f"statistic@{theta}"] = s
        m, se = mean_se(s)
        v, vse = var_se(s)
        _, p = ks_one_sample(s, norm.cdf)
        rep.add(Check(f"theta={theta:g} |mean|", m, 0.0, 0.05, "|value| < tol", bool(abs(m) < 0.05), se,
                      {"samples": n, "sticks": k}))
        rep.add(Check(f"theta={theta:g} |var-1|", v, 1.0, 0.15, "|value - target| < tol", bool(abs(v - 1) < 0.15), vse))
        rep.add(Check(f"theta={theta:g} KS vs N(0,1)", p, None, 0.001, "p > tol", bool(p > 0.001)))
    skews = [abs(moments_phi2_ewens(t).skewness) for t in (10.0, 100.0, 1000.0)]
    rep.add(_decreasing_check("|skewness| along theta", (10.0, 100.0, 1000.0), np.log(skews), None,
                              source="closed-form moments"))
    rep.runtimes["fluct"] = time.perf_counter() - t0
    return rep


def verify_mgf(plan: ExperimentPlan = ExperimentPlan()) -> TestReport:
    """E exp{lam (1-a)(1/P_1 - 1)} against 1/(1 + A_{lam, a}) for lam < 0."""
    rep = TestReport("mgf", plan.seed)
    t0 = time.perf_counter()
    n = plan.size(100_000)
    lams = (-2.0, -1.0, -0.5)
    for i, a in enumerate(plan.alphas((0.3, 0.5, 0.7))):
        lp1 = np.concatenate(_chunked(_ladder_stats, plan, (SUITE_KEYS["mgf"], i), n, n_terms=plan.ladder_terms,
                                      alpha=a, what="p1"))
        inv_minus_one = np.expm1(-lp1)
        for lam in lams:
            A = a_lambda(a, lam)
            val, se = mean_se(np.exp(lam * (1.0 - a) * inv_minus_one))
            rep.add(_within(f"alpha={a:g} lambda={lam:g}", val, 1.0 / (1.0 + A), se, samples=n, A=A))
        rep.add(Check(f"alpha={a:g} A(lambda) >= 0 for lambda < 0", [a_lambda(a, lam) for lam in lams], 0.0, 0.0,
                      "all values >= tol", bool(all(a_lambda(a, lam) >= 0 for lam in lams))))
        rep.add(Check(f"alpha={a:g} A(0)", a_lambda(a, 0.0), 0.0, 0.0, "value == target", a_lambda(a, 0.0) == 0.0))
    rep.runtimes["mgf"] = time.perf_counter() - t0
    return rep


def verify_coalescence(plan: ExperimentPlan = ExperimentPlan()) -> TestReport:
    """Mean and variance of phi_2 under PD(a^k, 0) against 1 - a^k and a^k (1 - a^k)/3."""
    rep = TestReport("coalesce", plan.seed)
    t0 = time.perf_counter()
    n = plan.size(100_000)
    cell = 0
    for a in plan.alphas((0.5, 0.9)):
        for k in (1, 2, 5):
            b = a ** k
            phi2 = np.concatenate(_chunked(_ladder_stats, plan, (SUITE_KEYS["coalesce"], cell), n,
                                           n_terms=plan.ladder_terms, alpha=b, what="phi2"))
            cell += 1
            m, se = mean_se(phi2)
            rep.add(_within(f"alpha={a:g} k={k} mean", m, coalescence_pi(a, k), se, samples=n))
            v, vse = var_se(phi2)
            rep.add(_within(f"alpha={a:g} k={k} variance", v, b * (1 - b) / 3.0, vse, samples=n))
    rep.runtimes["coalesce"] = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------------------
# distributional equivalences
# ---------------------------------------------------------------------------

def _stick_p1(rng, size, alpha, max_sticks):
    stop = StopRule(max_sticks=max_sticks, exact_top=1)
    return np.array([sample_pd_ranked(PYParams(alpha, 0.0), rng, stop, raise_on_budget=False).weights[0]
                     for _ in range(size)])


def _py_cells(rng, size, alpha, grid, n_sticks):
    return py_cell_masses_batch(PYParams(alpha, 0.0), grid, rng, size, n_sticks)


def _stable_cells(rng, size, alpha, grid):
    return partition_masses_stable_batch(alpha, grid, rng, size)


def verify_representation_equivalence(plan: ExperimentPlan = ExperimentPlan(),
                                      cells: Sequence[float] = (0.25, 0.6), level: float = 0.01) -> TestReport:
    """Two-sample KS: (a) largest weight, sticks vs ladder; (b) cell masses,
    Pitman-Yor draws vs stable increments.  Bonferroni over the coordinates
    of each comparison."""
    rep = TestReport("equiv", plan.seed)
    t0 = time.perf_counter()
    n = plan.size(10_000)
    key = SUITE_KEYS["equiv"]
    for i, a in enumerate(plan.alphas((0.3, 0.5, 0.7))):
        p_stick = np.concatenate(_chunked(_stick_p1, plan, (key, 0, i), n, chunk=1000, alpha=a,
                                          max_sticks=plan.max_sticks or 1_000_000))
        p_ladder = np.exp(np.concatenate(_chunked(_ladder_stats, plan, (key, 1, i), n, n_terms=plan.ladder_terms,
                                                  alpha=a, what="p1")))
        d, p = ks_two_sample(p_stick, p_ladder)
        rep.add(Check(f"alpha={a:g} largest weight", p, None, level, "p > tol", bool(p > level), None,
                      {"ks_statistic": d, "samples": n}))
        m_py = np.concatenate(_chunked(_py_cells, plan, (key, 2, i), n, chunk=1000, alpha=a, grid=list(cells),
                                       n_sticks=plan.max_sticks or 2000))
        m_stable = np.concatenate(_chunked(_stable_cells, plan, (key, 3, i), n, alpha=a, grid=list(cells)))
        ncell = m_py.shape[1]
        for c in range(ncell):
            d, p = ks_two_sample(m_py[:, c], m_stable[:, c])
            rep.add(Check(f"alpha={a:g} cell {c + 1}/{ncell} mass", p, None, level / ncell, "p > tol",
                          bool(p > level / ncell), None, {"ks_statistic": d, "samples": n, "cuts": list(cells)}))
        sums = float(max(np.abs(m_py.sum(axis=1) - 1).max(), np.abs(m_stable.sum(axis=1) - 1).max()))
        rep.add(Check(f"alpha={a:g} cell masses sum to 1", sums, 0.0, 1e-12, "value <= tol", sums <= 1e-12))
    rep.runtimes["equiv"] = time.perf_counter() - t0
    return rep


SUITES: dict[str, Callable[[ExperimentPlan], TestReport]] = {
    "lln0": verify_lln_alpha0,
    "lln1": verify_lln_alpha1,
    "slopes": verify_slopes,
    "mgf": verify_mgf,
    "equiv": verify_representation_equivalence,
    "fluct": verify_fluctuation_ewens,
    "coalesce": verify_coalescence,
}


def run_suite(name: str, plan: ExperimentPlan = ExperimentPlan()) -> TestReport:
    if name == "all":
        rep = TestReport("all", plan.seed)
        for key, fn in SUITES.items():
            rep.extend(fn(plan))
        return rep
    if name not in SUITES:
        raise PlanError(f"unknown suite {name!r}")
    return SUITES[name](plan)
