"""Samplers for PD(alpha, theta), the Pitman-Yor measure and the stable ladder.

Two weight representations are provided:

* stick breaking (GEM): V_n = U_n prod_{i<n}(1 - U_i), U_i ~ Beta(1-a, theta+i a),
  valid for every admissible (a, theta);
* the exponential ladder (theta = 0 only): P_n = Z_n^(-1/a) / sum_i Z_i^(-1/a)
  with Z_1 < Z_2 < ... the arrival times of a unit-rate Poisson process.

Random streams are numpy Generators.  Independent substreams come from
``spawn_rng(seed, *key)``: the key tuple becomes the SeedSequence spawn key,
so (seed, key) -> stream is fixed and never depends on scheduling.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, TextIO

import numpy as np
from scipy import integrate
from scipy.special import gammaincinv, logsumexp

from .stable_numerics import (
    DEFAULT_CONFIG,
    QuadratureConfig,
    _index,
    _kanter_log,
)

__all__ = [
    "PYParams",
    "StopRule",
    "LadderStop",
    "RankedWeights",
    "ExponentialLadder",
    "DiscreteMeasureDraw",
    "ScalingSpec",
    "BudgetExhausted",
    "spawn_rng",
    "sample_gem",
    "sample_gem_batch",
    "py_cell_masses_batch",
    "ladder_log_total",
    "sample_pd_ranked",
    "sample_pd0_subordinator",
    "pd0_from_ladder",
    "ladder_tail_moments",
    "sample_ladder_batch",
    "powered_weights",
    "ratio_sequence",
    "sample_py_measure",
    "partition_masses_stable",
    "partition_masses_stable_batch",
    "a_lambda",
    "mgf_inv_p1",
    "write_draws_csv",
]


class BudgetExhausted(RuntimeError):
    """A truncated sampler hit its term budget before its accuracy target."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


def spawn_rng(seed: int, *key: int) -> np.random.Generator:
    """Substream for (seed, key...); distinct keys give independent streams."""
    ss = np.random.SeedSequence(entropy=int(seed) & ((1 << 64) - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class PYParams:
    alpha: float
    theta: float = 0.0

    def __post_init__(self):
        a, t = float(self.alpha), float(self.theta)
        if not 0.0 <= a < 1.0:
            raise ValueError(f"alpha must lie in [0, 1), got {a}")
        if not t + a > 0.0:
            raise ValueError(f"need theta > -alpha, got alpha={a}, theta={t}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "theta", t)

    @property
    def subordinator_available(self) -> bool:
        return self.theta == 0.0 and self.alpha > 0.0

    @property
    def phi2_mean(self) -> float:
        """E[sum_i P_i^2] = (1 - a) / (1 + theta)."""
        return (1.0 - self.alpha) / (1.0 + self.theta)


@dataclass(frozen=True)
class StopRule:
    """Stopping rule for stick breaking.

    Stop at the first of: residual < residual_eps, max_sticks sticks, or (when
    exact_top > 0) residual <= the exact_top-th largest stick so far, which
    makes the leading exact_top ranked weights exact.
    """
    max_sticks: int = 100_000
    residual_eps: float = 1e-12
    exact_top: int = 0
    block: int = 256

    def __post_init__(self):
        if not 0.0 < self.residual_eps < 1.0:
            raise ValueError("residual_eps must lie in (0, 1)")
        if self.max_sticks < 1 or self.block < 1 or self.exact_top < 0:
            raise ValueError("invalid stop rule")


@dataclass(frozen=True)
class LadderStop:
    """Stopping rule for the ladder: every omitted atom must be below weight_eps."""
    max_terms: int = 100_000
    weight_eps: float = 1e-4
    min_terms: int = 32
    block: int = 256

    def __post_init__(self):
        if not 0.0 < self.weight_eps < 1.0:
            raise ValueError("weight_eps must lie in (0, 1)")
        if self.max_terms < 1 or self.min_terms < 1 or self.block < 1:
            raise ValueError("invalid stop rule")


@dataclass
class RankedWeights:
    weights: np.ndarray
    residual_bound: float
    representation: str = "stick_breaking_ranked"
    atom_bound: float = math.nan
    mass_normalized: bool = True

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        self.weights = w
        if w.ndim != 1:
            raise ValueError("weights must be one-dimensional")
        if self.representation not in ("stick_breaking_ranked", "subordinator_ladder"):
            raise ValueError(f"unknown representation {self.representation!r}")
        if np.any(w <= 0) or np.any(np.diff(w) > 0):
            raise ValueError("weights must be positive and nonincreasing")
        if self.residual_bound < 0:
            raise ValueError("residual_bound must be nonnegative")
        if self.mass_normalized:
            s = float(w.sum())
            if s > 1.0 + 1e-9 or s < 1.0 - self.residual_bound - 1e-9:
                raise ValueError(f"weights sum {s} inconsistent with residual bound {self.residual_bound}")

    def __len__(self) -> int:
        return len(self.weights)


@dataclass
class ExponentialLadder:
    z: np.ndarray

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        if self.z.ndim != 1 or len(self.z) == 0:
            raise ValueError("ladder must be a nonempty vector")
        if self.z[0] <= 0 or np.any(np.diff(self.z) <= 0):
            raise ValueError("ladder must be positive and strictly increasing")

    @property
    def length(self) -> int:
        return len(self.z)

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.z, prepend=0.0)


@dataclass
class DiscreteMeasureDraw:
    """Atoms (location, weight) of a Pitman-Yor draw with uniform base measure.

    The unrepresented mass `residual_bound` belongs to infinitely many atoms
    that are each smaller than every represented one; ``cell_masses`` assigns
    it to cells in proportion to their length, which is its conditional mean.
    """
    locations: np.ndarray
    weights: np.ndarray
    residual_bound: float
    params: PYParams

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.locations.tolist(), self.weights.tolist()))

    def cell_masses(self, grid: Sequence[float]) -> np.ndarray:
        edges = _full_grid(grid)
        idx = np.searchsorted(edges, self.locations, side="left") - 1
        idx = np.clip(idx, 0, len(edges) - 2)
        masses = np.bincount(idx, weights=self.weights, minlength=len(edges) - 1)
        masses = masses + self.residual_bound * np.diff(edges)
        return masses / masses.sum()

    def mass_below(self, t: float) -> float:
        return float(self.weights[self.locations <= t].sum() + self.residual_bound * t)


@dataclass(frozen=True)
class ScalingSpec:
    """A closed-form scaling function of alpha and the limit constant it induces.

    kind "gamma_of_alpha": rule "power", value alpha**p, c_target = lim gamma/alpha.
    kind "iota_of_alpha": rule "inv_one_minus", value 1/(1-alpha), c_target = 1.
    """
    kind: str
    rule: str
    p: float = 1.0

    def __post_init__(self):
        if (self.kind, self.rule) not in (("gamma_of_alpha", "power"), ("iota_of_alpha", "inv_one_minus")):
            raise ValueError(f"unsupported scaling {self.kind}/{self.rule}")
        if self.rule == "power" and self.p <= 0:
            raise ValueError("power must be positive")

    def __call__(self, alpha: float) -> float:
        if self.rule == "power":
            return alpha ** self.p
        return 1.0 / (1.0 - alpha)

    @property
    def c_target(self) -> float:
        if self.rule == "inv_one_minus":
            return 1.0
        if self.p > 1:
            return 0.0
        return 1.0 if self.p == 1 else math.inf

    @classmethod
    def power(cls, p: float) -> "ScalingSpec":
        return cls("gamma_of_alpha", "power", p)

    @classmethod
    def inv_one_minus(cls) -> "ScalingSpec":
        return cls("iota_of_alpha", "inv_one_minus")


GAMMA_ALPHA_SQUARED = ScalingSpec.power(2.0)
GAMMA_ALPHA = ScalingSpec.power(1.0)
GAMMA_SQRT_ALPHA = ScalingSpec.power(0.5)
IOTA_INV_ONE_MINUS = ScalingSpec.inv_one_minus()


# ---------------------------------------------------------------------------
# stick breaking
# ---------------------------------------------------------------------------

def sample_gem(params: PYParams, rng: np.random.Generator, stop: StopRule = StopRule(),
               raise_on_budget: bool = True) -> tuple[np.ndarray, float]:
    """Size-biased sticks V_1..V_N and the residual prod_{i<=N}(1 - U_i).

    Sticks are generated in blocks of ``stop.block`` Beta variates, so the
    stream consumption depends only on the stop rule and the draw itself.
    """
    a, th = params.alpha, params.theta
    sticks: list[np.ndarray] = []
    log_rem = 0.0
    n = 0
    top = np.empty(0)
    while True:
        k = min(stop.block, stop.max_sticks - n)
        i = np.arange(n + 1, n + k + 1, dtype=float)
        u = rng.beta(1.0 - a, th + i * a)
        with np.errstate(divide="ignore"):
            # a stick of exactly 1 leaves no residual
            log_keep = np.cumsum(np.log1p(-u))
        prev = np.concatenate(([log_rem], log_rem + log_keep[:-1]))
        v = u * np.exp(prev)
        rem = np.exp(log_rem + log_keep)
        # first index inside the block where a stop condition holds
        hit = rem < stop.residual_eps
        if stop.exact_top:
            hit = hit | (rem <= _running_kth_largest(top, v, stop.exact_top))
        j = int(np.argmax(hit)) if hit.any() else -1
        if j >= 0:
            sticks.append(v[: j + 1])
            log_rem = log_rem + log_keep[j]
            n += j + 1
            break
        sticks.append(v)
        top = _top_k(np.concatenate((top, v)), stop.exact_top) if stop.exact_top else top
        log_rem = log_rem + log_keep[-1]
        n += k
        if n >= stop.max_sticks:
            out = (np.concatenate(sticks), math.exp(log_rem))
            if raise_on_budget:
                raise BudgetExhausted(
                    f"{n} sticks left residual {out[1]:.3e} >= {stop.residual_eps:.1e}", partial=out)
            return out
    vv = np.concatenate(sticks)
    return vv, math.exp(log_rem)


def sample_gem_batch(params: PYParams, rng: np.random.Generator, size: int,
                     n_sticks: int) -> tuple[np.ndarray, np.ndarray]:
    """(size, n_sticks) sticks with a fixed stick count, plus per-row residuals."""
    a, th = params.alpha, params.theta
    b = th + a * np.arange(1, n_sticks + 1, dtype=float)
    u = rng.beta(1.0 - a, np.broadcast_to(b, (size, n_sticks)))
    log_keep = np.cumsum(np.log1p(-u), axis=1)
    prev = np.concatenate((np.zeros((size, 1)), log_keep[:, :-1]), axis=1)
    return u * np.exp(prev), np.exp(log_keep[:, -1])


def _top_k(x: np.ndarray, k: int) -> np.ndarray:
    if len(x) <= k:
        return np.sort(x)[::-1]
    return np.sort(np.partition(x, len(x) - k)[len(x) - k:])[::-1]


def _running_kth_largest(top: np.ndarray, v: np.ndarray, k: int) -> np.ndarray:
    """k-th largest of top + v[:j+1] for every j (-inf while fewer than k values)."""
    out = np.empty(len(v))
    cur = list(np.sort(top)[::-1][:k])
    for j, x in enumerate(v):
        if len(cur) < k:
            cur.append(x)
            cur.sort(reverse=True)
        elif x > cur[-1]:
            cur[-1] = x
            cur.sort(reverse=True)
        out[j] = cur[k - 1] if len(cur) >= k else -math.inf
    return out


def sample_pd_ranked(params: PYParams, rng: np.random.Generator, stop: StopRule = StopRule(),
                     raise_on_budget: bool = True) -> RankedWeights:
    """PD(alpha, theta) weights: GEM sticks sorted in decreasing order.

    The ranking is exact for every weight above residual_bound; weights below it
    may be misordered relative to the untruncated sequence.
    """
    v, rem = sample_gem(params, rng, stop, raise_on_budget=raise_on_budget)
    w = np.sort(v)[::-1]
    return RankedWeights(w[w > 0], residual_bound=rem, representation="stick_breaking_ranked",
                         atom_bound=rem)


# ---------------------------------------------------------------------------
# exponential ladder (theta = 0)
# ---------------------------------------------------------------------------

def ladder_tail_moments(alpha: float, log_z):
    """Mean and variance of sum_{w in PPP(z, inf)} w^(-1/a), returned as logs.

    log kappa_1 = log(a/(1-a)) + (1 - 1/a) log z
    log kappa_2 = log(a/(2-a)) + (1 - 2/a) log z
    """
    a = alpha
    lk1 = math.log(a / (1.0 - a)) + (1.0 - 1.0 / a) * np.asarray(log_z)
    lk2 = math.log(a / (2.0 - a)) + (1.0 - 2.0 / a) * np.asarray(log_z)
    return lk1, lk2


def _log_tail_draw(alpha: float, log_z, u) -> np.ndarray:
    """log of the remote tail sum, moment-matched gamma quantile at level u."""
    a = alpha
    log_z = np.asarray(log_z, dtype=float)
    shape = a * (2.0 - a) / (1.0 - a) ** 2 * np.exp(log_z)
    log_scale = math.log((1.0 - a) / (2.0 - a)) - log_z / a
    q = gammaincinv(shape, np.asarray(u, dtype=float))
    with np.errstate(divide="ignore"):
        return np.log(q) + log_scale


def ladder_log_total(alpha: float, z: np.ndarray, tail_u) -> np.ndarray:
    """log sum_i Z_i^(-1/a): exact over the prefix z[..., :N], moment-matched
    gamma quantile at level tail_u for the points beyond z[..., -1]."""
    z = np.asarray(z, dtype=float)
    lt = _log_tail_draw(alpha, np.log(z[..., -1]), tail_u)
    return np.logaddexp(logsumexp(-np.log(z) / alpha, axis=-1), lt)


def pd0_from_ladder(alpha: float, z: np.ndarray, tail_u) -> tuple[np.ndarray, np.ndarray]:
    """Log-weights log P_n (n <= N) and log residual mass from ladder prefixes.

    z has shape (..., N); tail_u (shape (...)) picks the quantile of the remote
    tail sum over the ladder points beyond z[..., -1].  Using the same tail_u
    for several alpha couples the tails comonotonically.
    """
    z = np.asarray(z, dtype=float)
    lw = -np.log(z) / alpha
    lt = _log_tail_draw(alpha, np.log(z[..., -1]), tail_u)
    log_norm = np.logaddexp(logsumexp(lw, axis=-1), lt)
    return lw - log_norm[..., None], lt - log_norm


def sample_ladder_batch(rng: np.random.Generator, size: int, n_terms: int) -> tuple[np.ndarray, np.ndarray]:
    """(size, n_terms) ladder prefixes and one tail uniform per row."""
    e = rng.standard_exponential((size, n_terms))
    u = rng.random(size)
    return np.cumsum(e, axis=1), u


def sample_pd0_subordinator(alpha, rng: np.random.Generator, stop: LadderStop = LadderStop(),
                            raise_on_budget: bool = True) -> tuple[RankedWeights, ExponentialLadder]:
    """PD(alpha, 0) from P_n = Z_n^(-1/a) / sum_i Z_i^(-1/a).

    Ladder points are added until every omitted atom, each below
    Z_N^(-1/a) / total, is smaller than stop.weight_eps.  The sum over the
    omitted points enters the normaliser through a gamma variate matched to
    its exact mean and variance; the omitted mass is reported as
    residual_bound.
    """
    a = _index(alpha).alpha
    gaps: list[np.ndarray] = []
    z_last = 0.0
    n = 0
    log_head = -math.inf
    while True:
        k = min(stop.block, stop.max_terms - n)
        g = rng.standard_exponential(k)
        gaps.append(g)
        zb = z_last + np.cumsum(g)
        z_last = float(zb[-1])
        log_head = float(np.logaddexp(log_head, logsumexp(-np.log(zb) / a)))
        n += k
        lk1, _ = ladder_tail_moments(a, math.log(z_last))
        log_total = float(np.logaddexp(log_head, lk1))
        log_atom = -math.log(z_last) / a - log_total
        if n >= stop.min_terms and log_atom < math.log(stop.weight_eps):
            break
        if n >= stop.max_terms:
            if raise_on_budget:
                raise BudgetExhausted(f"{n} ladder terms leave atoms up to {math.exp(log_atom):.3e}")
            break
    z = np.cumsum(np.concatenate(gaps))
    u = rng.random()
    lw, lres = pd0_from_ladder(a, z, u)
    w = np.exp(lw)
    w = w[w > 0]
    # every omitted atom is smaller than the last represented one
    rw = RankedWeights(w, residual_bound=float(np.exp(lres)), representation="subordinator_ladder",
                       atom_bound=float(w[-1]) if len(w) else 0.0)
    return rw, ExponentialLadder(z)


def powered_weights(w: RankedWeights, exponent: float) -> RankedWeights:
    """Elementwise w_i**exponent.  The result is not mass-normalised: sums of
    powered omitted weights are unbounded, so residual_bound becomes inf."""
    if not 0.0 < exponent <= 1.0:
        raise ValueError("exponent must lie in (0, 1]")
    if exponent == 1.0:
        return w
    return RankedWeights(w.weights ** exponent, residual_bound=math.inf, representation=w.representation,
                         atom_bound=w.atom_bound ** exponent, mass_normalized=False)


def ratio_sequence(alpha, n: int, rng: np.random.Generator) -> np.ndarray:
    """R_k = P_{k+1}/P_k, k = 1..n: independent, R_k has density k a x^(k a - 1) on (0, 1)."""
    a = _index(alpha).alpha
    if n < 1:
        raise ValueError("n must be positive")
    u = 1.0 - rng.random(n)  # (0, 1]
    k = np.arange(1, n + 1, dtype=float)
    r = np.exp(np.log(u) / (k * a))
    return np.clip(r, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))


# ---------------------------------------------------------------------------
# random measure and cell masses
# ---------------------------------------------------------------------------

def sample_py_measure(params: PYParams, rng: np.random.Generator, stop=None,
                      representation: str = "stick", raise_on_budget: bool = True) -> DiscreteMeasureDraw:
    """Pitman-Yor draw with uniform base measure on [0, 1]."""
    if representation == "ladder":
        if not params.subordinator_available:
            raise ValueError("the ladder representation needs theta = 0 and alpha > 0")
        rw, _ = sample_pd0_subordinator(params.alpha, rng, stop or LadderStop(), raise_on_budget=raise_on_budget)
    elif representation == "stick":
        rw = sample_pd_ranked(params, rng, stop or StopRule(), raise_on_budget=raise_on_budget)
    else:
        raise ValueError(f"unknown representation {representation!r}")
    loc = rng.random(len(rw.weights))
    return DiscreteMeasureDraw(loc, rw.weights, rw.residual_bound, params)


def _full_grid(grid: Sequence[float]) -> np.ndarray:
    g = np.asarray(list(grid), dtype=float)
    if len(g) == 0 or g[0] != 0.0:
        g = np.concatenate(([0.0], g))
    if g[-1] != 1.0:
        g = np.concatenate((g, [1.0]))
    if np.any(np.diff(g) <= 0) or g[0] < 0 or g[-1] > 1:
        raise ValueError("grid must be strictly increasing inside [0, 1]")
    return g


def py_cell_masses_batch(params: PYParams, grid: Sequence[float], rng: np.random.Generator, size: int,
                         n_sticks: int) -> np.ndarray:
    """(size, cells) masses of Pitman-Yor draws built from n_sticks sticks.

    Same construction as sample_py_measure followed by cell_masses: uniform
    locations, residual spread in proportion to cell length.
    """
    edges = _full_grid(grid)
    v, rem = sample_gem_batch(params, rng, size, n_sticks)
    loc = rng.random(v.shape)
    idx = np.clip(np.searchsorted(edges, loc, side="left") - 1, 0, len(edges) - 2)
    m = len(edges) - 1
    out = np.stack([np.where(idx == k, v, 0.0).sum(axis=1) for k in range(m)], axis=1)
    out += rem[:, None] * np.diff(edges)[None, :]
    return out / out.sum(axis=1, keepdims=True)


def partition_masses_stable_batch(alpha, grid: Sequence[float], rng: np.random.Generator, size: int) -> np.ndarray:
    """(size, n+1) draws of the cell masses via independent stable increments.

    Cell k gets (t_k - t_{k-1})^(1/a) tau_k, normalised, with tau_k i.i.d.
    copies of rho_1; row r consumes stable draws (n+1) r .. (n+1) r + n.
    """
    a = _index(alpha).alpha
    edges = _full_grid(grid)
    m = len(edges) - 1
    log_tau = _kanter_log(a, rng, size * m).reshape(size, m)
    lx = np.log(np.diff(edges))[None, :] / a + log_tau
    lx -= logsumexp(lx, axis=1, keepdims=True)
    out = np.exp(lx)
    return out / out.sum(axis=1, keepdims=True)


def partition_masses_stable(alpha, grid: Sequence[float], rng: np.random.Generator) -> np.ndarray:
    return partition_masses_stable_batch(alpha, grid, rng, 1)[0]


# ---------------------------------------------------------------------------
# moment generating function of 1/P_1
# ---------------------------------------------------------------------------

def a_lambda(alpha, lam: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """A = a int_0^1 (1 - exp(lam (1-a) z)) z^(-1-a) dz.

    Integrated against the algebraic weight z^(-a) so the z -> 0 behaviour
    (1 - e^{cz}) ~ -c z is handled exactly.
    """
    a = _index(alpha).alpha
    c = lam * (1.0 - a)
    if c == 0.0:
        return 0.0
    f = lambda z: -math.expm1(c * z) / z if z > 0 else -c
    val, err = integrate.quad(f, 0.0, 1.0, weight="alg", wvar=(-a, 0.0),
                              epsabs=cfg.abs_tol, epsrel=cfg.rel_tol, limit=int(cfg.max_subdivisions))
    return a * val


def mgf_inv_p1(alpha, lam: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """E[exp(lam (1-a) (1/P_1 - 1))] = 1 / (1 + A_{lam, a})."""
    A = a_lambda(alpha, lam, cfg)
    if 1.0 + A <= 0.0:
        raise ValueError(f"1 + A = {1.0 + A:.4g} <= 0: lambda={lam} is beyond the convergence threshold")
    return 1.0 / (1.0 + A)


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------

def write_draws_csv(draws: Iterable, stream: TextIO, with_location: Optional[bool] = None) -> None:
    """CSV rows draw_id,rank,weight[,location]; ranks start at 1.

    Accepts RankedWeights or DiscreteMeasureDraw items.  Floats use repr(),
    the shortest string that round-trips.
    """
    draws = list(draws)
    if with_location is None:
        with_location = bool(draws) and isinstance(draws[0], DiscreteMeasureDraw)
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["draw_id", "rank", "weight"] + (["location"] if with_location else []))
    for i, d in enumerate(draws):
        weights = d.weights
        if with_location:
            order = np.argsort(-weights, kind="stable")
            for r, j in enumerate(order, start=1):
                w.writerow([i, r, repr(float(weights[j])), repr(float(d.locations[j]))])
        else:
            for r, x in enumerate(weights, start=1):
                w.writerow([i, r, repr(float(x))])
