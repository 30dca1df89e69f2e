"""One-sided alpha-stable law of rho_1 and the Mittag-Leffler law of rho_1^(-alpha).

The stable variable has Laplace transform exp(-lambda^alpha).  Its CDF is
evaluated from Zolotarev's function A(u) on (0, pi), its density from the
Laplace-inversion integral on (0, inf), and draws are produced by Kanter's
transform of one uniform angle and one unit exponential.

All heavy lifting happens in log space: the CDF integrand exp(-A(u)/x) is
written as exp(-A(0+)/x) * exp(-(A(u) - A(0+))/x) and the leading factor is
kept as a logarithm, so probabilities as small as exp(-1e27) stay
representable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy import integrate, optimize
from scipy.special import bernoulli

__all__ = [
    "StableIndex",
    "QuadratureConfig",
    "TailEstimate",
    "QuadratureError",
    "PrecisionLossError",
    "SeriesDivergenceError",
    "zolotarev_a",
    "log_zolotarev_a",
    "stable_log_cdf",
    "stable_cdf",
    "stable_cdf_table",
    "stable_pdf",
    "stable_log_sf_lower",
    "stable_log_sf_upper",
    "sample_stable",
    "sample_stable_batch",
    "sample_mittag_leffler_batch",
    "mittag_leffler_moment",
    "mittag_leffler_pdf",
]


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, error_estimate: float):
        super().__init__(f"{message} (achieved error estimate {error_estimate:.3e})")
        self.error_estimate = error_estimate


class PrecisionLossError(ArithmeticError):
    """The integrand underflows even after the log-domain shift."""


class SeriesDivergenceError(ArithmeticError):
    def __init__(self, message: str, largest_term: float):
        super().__init__(f"{message} (largest term {largest_term:.3e})")
        self.largest_term = largest_term


@dataclass(frozen=True)
class StableIndex:
    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not (0.0 < a < 1.0) or math.isnan(a):
            raise ValueError(f"stable index must lie in (0, 1), got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)

    @property
    def levy_constant(self) -> float:
        """alpha / Gamma(1 - alpha), the constant of the Levy density x^(-1-alpha)."""
        return self.alpha / math.gamma(1.0 - self.alpha)

    @property
    def cdf_exponent(self) -> float:
        return self.alpha / (1.0 - self.alpha)

    def __float__(self) -> float:
        return self.alpha


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 2000
    log_domain: bool = True

    def __post_init__(self):
        if self.abs_tol < 0 or self.rel_tol < 0:
            raise ValueError("tolerances must be nonnegative")
        if self.abs_tol == 0 and self.rel_tol == 0:
            raise ValueError("at least one of abs_tol, rel_tol must be positive")
        if int(self.max_subdivisions) < 1:
            raise ValueError("max_subdivisions must be a positive integer")


DEFAULT_CONFIG = QuadratureConfig()


@dataclass(frozen=True)
class TailEstimate:
    log_prob: float
    scaled_value: float
    alpha: StableIndex
    delta: float

    def __post_init__(self):
        if self.log_prob > 0:
            raise ValueError("log_prob must be <= 0")

    @property
    def prob(self) -> float:
        return math.exp(self.log_prob)


AlphaLike = Union[float, StableIndex]


def _index(alpha: AlphaLike) -> StableIndex:
    return alpha if isinstance(alpha, StableIndex) else StableIndex(alpha)


# ---------------------------------------------------------------------------
# Zolotarev's function
# ---------------------------------------------------------------------------

# log(sin z / z) = sum_n c_n z^(2n)
_B = bernoulli(24)
_LOGSINC_COEF = [
    (-1) ** n * 2 ** (2 * n - 1) * _B[2 * n] / (n * math.factorial(2 * n)) for n in range(1, 13)
]
_SERIES_CUT = 0.5


def _log_sinc(z: float) -> float:
    if z < _SERIES_CUT:
        z2 = z * z
        acc = 0.0
        for c in reversed(_LOGSINC_COEF):
            acc = acc * z2 + c
        return acc * z2
    return math.log(math.sin(z)) - math.log(z)


def _log_sinc_vec(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z < _SERIES_CUT
    zs = z[small] ** 2
    acc = np.zeros_like(zs)
    for c in reversed(_LOGSINC_COEF):
        acc = acc * zs + c
    out[small] = acc * zs
    zb = z[~small]
    with np.errstate(divide="ignore"):
        out[~small] = np.log(np.sin(zb)) - np.log(zb)
    return out


def _log_a0(a: float) -> float:
    # log of lim_{u->0} A(u) = (1 - a) a^(a / (1 - a))
    return math.log1p(-a) + a / (1.0 - a) * math.log(a)


def _excess(a: float, u: float) -> float:
    """D(u) = log A(u) - log A(0+) >= 0, computed without cancellation at small u."""
    if u < 1e-100:
        return 0.5 * a * u * u
    return (a * _log_sinc(a * u) + (1.0 - a) * _log_sinc((1.0 - a) * u) - _log_sinc(u)) / (1.0 - a)


def _log_excess(a: float, u: float) -> float:
    # log D(u); D ~ a u^2 / 2 near zero
    if u < 1e-100:
        return math.log(0.5 * a) + 2.0 * math.log(u)
    d = _excess(a, u)
    if d <= 0.0:
        return math.log(0.5 * a) + 2.0 * math.log(u)
    return math.log(d)


def _log_expm1_of_excess(a: float, u: float) -> float:
    """log(A(u)/A(0+) - 1)."""
    ld = _log_excess(a, u)
    if ld < -30.0:
        return ld + 0.5 * math.exp(ld)
    d = math.exp(ld)
    if d > 30.0:
        return d + math.log(-math.expm1(-d))
    return math.log(math.expm1(d))


def log_zolotarev_a(alpha: AlphaLike, u):
    """log A(u), vectorised over u."""
    a = _index(alpha).alpha
    u_arr = np.asarray(u, dtype=float)
    if np.any((u_arr <= 0) | (u_arr >= math.pi)):
        raise ValueError("Zolotarev's function is defined for 0 < u < pi")
    d = (a * _log_sinc_vec(a * u_arr) + (1 - a) * _log_sinc_vec((1 - a) * u_arr) - _log_sinc_vec(u_arr)) / (1 - a)
    out = _log_a0(a) + d
    return float(out) if np.ndim(out) == 0 else out


def zolotarev_a(alpha: AlphaLike, u):
    """A(u) = {sin^a(a u) sin^(1-a)((1-a) u) / sin u}^(1/(1-a)) for 0 < u < pi.

    Nondecreasing in u, from (1-a) a^(a/(1-a)) at 0+ to +inf at pi-.
    """
    return np.exp(log_zolotarev_a(alpha, u)) if np.ndim(u) else math.exp(log_zolotarev_a(alpha, u))


# ---------------------------------------------------------------------------
# quadrature helpers
# ---------------------------------------------------------------------------

def _quad(f: Callable[[float], float], lo: float, hi: float, cfg: QuadratureConfig,
          epsabs: float, epsrel: float) -> tuple[float, float]:
    if hi <= lo:
        return 0.0, 0.0
    res = integrate.quad(f, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=int(cfg.max_subdivisions),
                         full_output=1)
    val, err = res[0], res[1]
    if len(res) > 3:
        # ier != 0; accept when the error estimate still meets the target
        if err > 10.0 * max(epsabs, epsrel * abs(val)):
            raise QuadratureError(f"quadrature on [{lo:.6g}, {hi:.6g}] failed: {res[3].splitlines()[0]}", err)
    return val, err


def _solve_log_u(fn: Callable[[float], float], target: float) -> float:
    """Smallest-bracket root of fn(u) = target for fn increasing on (0, pi)."""
    lo_s, hi_s = math.log(1e-300), math.log(math.pi * (1.0 - 1e-15))
    g = lambda s: fn(math.exp(s)) - target
    if g(lo_s) >= 0.0:
        return math.exp(lo_s)
    if g(hi_s) <= 0.0:
        return math.pi
    s = optimize.brentq(g, lo_s, hi_s, xtol=1e-14, rtol=1e-14, maxiter=500)
    return math.exp(s)


_UNDERFLOW = 745.0


class _ShiftedCdf:
    """exp(-A(u)/x) = exp(-L) exp(-h(u)) with L = A(0+)/x, h = L (A/A0 - 1)."""

    def __init__(self, a: float, log_y: float):
        self.a = a
        self.log_x = a / (1.0 - a) * log_y
        self.log_lead = _log_a0(a) - self.log_x  # log L
        if self.log_lead > 709.0:
            raise PrecisionLossError(
                f"A(0+)/x = exp({self.log_lead:.1f}) overflows; probability below double range of logs")
        self.lead = math.exp(self.log_lead)

    def log_h(self, u: float) -> float:
        return self.log_lead + _log_expm1_of_excess(self.a, u)

    def h(self, u: float) -> float:
        lh = self.log_h(u)
        return math.exp(lh) if lh < 709.0 else math.inf

    def breakpoints(self) -> list[float]:
        """Points where h crosses a ladder of levels, ending where exp(-h) underflows.

        The integrand changes by a bounded factor between consecutive points,
        which keeps the Gauss-Kronrod error estimates honest when the
        transition region is very narrow (a close to 1).
        """
        pts = [0.0]
        for level in _LEVELS:
            u = _solve_log_u(self.log_h, math.log(level))
            if u > pts[-1]:
                pts.append(u)
        return pts

    def integrate(self, f: Callable[[float], float], cfg: QuadratureConfig, epsabs: float) -> float:
        pts = self.breakpoints()
        return math.fsum(_quad(f, lo, hi, cfg, epsabs, cfg.rel_tol)[0] for lo, hi in zip(pts[:-1], pts[1:]))


_LEVELS = (1e-12, 1e-8, 1e-5, 1e-3, 1e-2, 0.1, 0.5, 1.0, 3.0, 10.0, 40.0, 150.0, _UNDERFLOW)


def stable_log_cdf(alpha: AlphaLike, y: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """log P{rho_1 <= y}, accurate even when the probability underflows."""
    a = _index(alpha).alpha
    if y == 0:
        return -math.inf
    if not y > 0:
        raise ValueError("y must be nonnegative")
    sc = _ShiftedCdf(a, math.log(y))
    u1 = _solve_log_u(sc.log_h, 0.0)
    f = lambda u: math.exp(-sc.h(u))
    # the integral is at least u1/e; scale the absolute target accordingly
    epsabs = 0.01 * cfg.abs_tol * min(1.0, u1)
    total = sc.integrate(f, cfg, epsabs)
    if total <= 0.0:
        raise PrecisionLossError("shifted CDF integrand vanished")
    return -sc.lead + math.log(total / math.pi)


def stable_cdf(alpha: AlphaLike, y: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """P{rho_1 <= y} = (1/pi) int_0^pi exp(-A(u) / y^(a/(1-a))) du."""
    return min(1.0, math.exp(stable_log_cdf(alpha, y, cfg)))


def stable_log_sf_lower(alpha: AlphaLike, delta: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> TailEstimate:
    """log P{rho_1 <= 1 - delta} and its double-log scaling (1-a) log(-log P)."""
    idx = _index(alpha)
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    lp = min(0.0, stable_log_cdf(idx, 1.0 - delta, cfg))
    scaled = (1.0 - idx.alpha) * math.log(-lp) if lp < 0 else -math.inf
    return TailEstimate(log_prob=lp, scaled_value=scaled, alpha=idx, delta=float(delta))


def stable_log_sf_upper(alpha: AlphaLike, delta: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> TailEstimate:
    """log P{rho_1 > 1 + delta} and the normalised value log P / log(1/(1-a)).

    Uses the density integrated over (1+delta, inf):
        P = (1/pi) int_0^inf u^-1 e^{-(1+delta)u} e^{-u^a cos(pi a)} sin(u^a sin(pi a)) du
    after the substitution u = v^(1/a), which removes the u^(a-1) endpoint
    singularity.
    """
    idx = _index(alpha)
    a = idx.alpha
    if not delta > 0:
        raise ValueError("delta must be positive")
    x = 1.0 + delta
    c, s = math.cos(math.pi * a), math.sin(math.pi * a)
    inv = 1.0 / a

    def f(v: float) -> float:
        if v == 0.0:
            return s
        z = v * s
        sinc = math.sin(z) / z if z > 1e-8 else 1.0 - z * z / 6.0
        return math.exp(-x * v ** inv - v * c) * s * sinc

    gap = x + min(c, 0.0)
    tol = max(cfg.abs_tol, 1e-300) * a * math.pi
    v_max = max(1.0, math.log(1.0 / (tol * gap)) / gap)
    val, _ = _quad(f, 0.0, v_max, cfg, 0.1 * cfg.abs_tol * a * math.pi, cfg.rel_tol)
    prob = val / (a * math.pi)
    if prob <= 0.0:
        raise PrecisionLossError("upper-tail quadrature returned a nonpositive probability")
    lp = min(0.0, math.log(prob))
    return TailEstimate(log_prob=lp, scaled_value=lp / math.log(1.0 / (1.0 - a)), alpha=idx, delta=float(delta))


# ---------------------------------------------------------------------------
# density
# ---------------------------------------------------------------------------

def _laplace_cutoff(a: float, t: float, growth: float, tol: float) -> float:
    """u_max with int_{u_max}^inf exp(-t u + growth u^a) du < tol.

    f(u) = -t u + growth u^a is concave, so past its peak the tail integral is
    bounded by exp(f(u)) / |f'(u)|.
    """
    g = max(growth, 0.0)
    u = 1.0
    if g > 0:
        u = max(u, 2.0 * (a * g / t) ** (1.0 / (1.0 - a)))
    for _ in range(2000):
        slope = t - g * a * u ** (a - 1.0)
        if slope > 0 and -t * u + g * u ** a - math.log(slope) < math.log(tol):
            return u
        u *= 1.5
    raise QuadratureError("could not bound the Laplace-inversion tail", math.inf)


def _pdf_laplace(a: float, t: float, cfg: QuadratureConfig) -> tuple[float, float]:
    """Laplace-inversion form, returned with the integral of the envelope |integrand|."""
    c, s = math.cos(math.pi * a), math.sin(math.pi * a)
    inv = 1.0 / a
    # truncation: int_{u_max}^inf e^{-t u + |c| u^a} du < pi * abs_tol
    tol = math.pi * max(cfg.abs_tol, 1e-300)
    u_max = _laplace_cutoff(a, t, -c, tol)
    v_max = u_max ** a

    def f(v: float) -> float:
        if v == 0.0:
            return 0.0
        return math.exp(-t * v ** inv - v * c) * math.sin(v * s) * v ** (inv - 1.0)

    def env(v: float) -> float:
        if v == 0.0:
            return 0.0
        return math.exp(-t * v ** inv - v * c) * v ** (inv - 1.0)

    val, _ = _quad(f, 0.0, v_max, cfg, 0.1 * cfg.abs_tol * a * math.pi, cfg.rel_tol)
    mag, _ = integrate.quad(env, 0.0, v_max, limit=int(cfg.max_subdivisions), epsrel=1e-6)[:2]
    return val / (a * math.pi), mag / (a * math.pi)


def _pdf_zolotarev(a: float, t: float, cfg: QuadratureConfig) -> float:
    """Derivative of the Zolotarev CDF integral; positive integrand, no oscillation."""
    sc = _ShiftedCdf(a, math.log(t))
    u1 = _solve_log_u(sc.log_h, 0.0)
    f = lambda u: (sc.lead + sc.h(u)) * math.exp(-sc.h(u))
    scale = (a / (1.0 - a)) / (math.pi * t)
    epsabs = 0.01 * cfg.abs_tol * min(1.0, u1) / max(scale, 1e-300)
    return scale * math.exp(-sc.lead) * sc.integrate(f, cfg, epsabs)


def stable_pdf(alpha: AlphaLike, t: float, cfg: QuadratureConfig = DEFAULT_CONFIG, method: str = "auto") -> float:
    """Density of rho_1 at t > 0.

    method="laplace" evaluates
        (1/pi) int_0^inf e^{-tu} e^{-u^a cos(pi a)} sin(u^a sin(pi a)) du
    truncated where the exponential envelope bound drops below abs_tol.
    For a > 1/2 and small t that integrand grows like exp(|cos(pi a)| u^a)
    before it decays and the result is lost to cancellation; "auto" detects
    this from the envelope integral and switches to the Zolotarev form.
    """
    a = _index(alpha).alpha
    if t == 0:
        return 0.0
    if not t > 0:
        raise ValueError("t must be nonnegative")
    if method == "zolotarev":
        return _pdf_zolotarev(a, t, cfg)
    if method not in ("auto", "laplace"):
        raise ValueError(f"unknown method {method!r}")
    try:
        val, mag = _pdf_laplace(a, t, cfg)
    except (QuadratureError, OverflowError) as exc:
        if method == "laplace":
            if isinstance(exc, OverflowError):
                raise QuadratureError(f"Laplace-inversion integrand overflows at t={t}", math.inf) from exc
            raise
        return _pdf_zolotarev(a, t, cfg)
    well_conditioned = mag * 1e-13 <= max(cfg.rel_tol * abs(val), 0.01 * cfg.abs_tol)
    if method == "auto" and not well_conditioned:
        return _pdf_zolotarev(a, t, cfg)
    if val < -cfg.abs_tol:
        raise QuadratureError(f"negative density {val:.3e} at t={t}", abs(val))
    return max(val, 0.0)


def stable_cdf_table(alpha: AlphaLike, n_points: int = 600, cfg: QuadratureConfig = DEFAULT_CONFIG,
                     tail: float = 1e-12) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorised CDF from a monotone cubic interpolant on a log-spaced grid.

    The grid runs from where log P < -40 to where P{rho > y} < tail; values
    outside are clamped to 0 and 1.  Meant for many evaluations such as a
    KS test against a large sample.
    """
    from scipy.interpolate import PchipInterpolator

    a = _index(alpha).alpha
    lo = (1 - a) / a * (_log_a0(a) - math.log(40.0))
    hi = (math.log(1.0 / tail) - math.lgamma(1.0 - a)) / a
    log_y = np.linspace(lo, hi, int(n_points))
    vals = np.array([stable_cdf(a, math.exp(v), cfg) for v in log_y])
    vals = np.maximum.accumulate(vals)
    interp = PchipInterpolator(log_y, vals, extrapolate=False)

    def cdf(y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            ly = np.log(y)
        out = interp(np.clip(ly, lo, hi))
        out = np.where(ly < lo, 0.0, np.where(ly > hi, 1.0, out))
        return np.clip(out, 0.0, 1.0)

    return cdf


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def _log_a_vec(a: float, u: np.ndarray) -> np.ndarray:
    u = np.where(u <= 0.0, 1e-300, u)
    d = (a * _log_sinc_vec(a * u) + (1 - a) * _log_sinc_vec((1 - a) * u) - _log_sinc_vec(u)) / (1 - a)
    return _log_a0(a) + d


def _kanter_log(a: float, rng: np.random.Generator, size: int) -> np.ndarray:
    """log of `size` stable draws; two uniforms per draw, taken pairwise in order."""
    uv = rng.random((size, 2))
    angle = math.pi * uv[:, 0]
    e = -np.log1p(-uv[:, 1])
    e = np.where(e > 0.0, e, 5e-324)
    return (1.0 - a) / a * (_log_a_vec(a, angle) - np.log(e))


def sample_stable_batch(alpha: AlphaLike, rng: np.random.Generator, size: int) -> np.ndarray:
    """Kanter draws rho_1 = (A(U)/E)^((1-a)/a), U ~ Unif(0, pi), E ~ Exp(1)."""
    a = _index(alpha).alpha
    return np.exp(_kanter_log(a, rng, int(size)))


def sample_stable(alpha: AlphaLike, rng: np.random.Generator) -> float:
    return float(sample_stable_batch(alpha, rng, 1)[0])


def sample_mittag_leffler_batch(alpha: AlphaLike, rng: np.random.Generator, size: int) -> np.ndarray:
    """S_a = rho_1^(-a) from the same Kanter draws, computed without overflow."""
    a = _index(alpha).alpha
    return np.exp(-a * _kanter_log(a, rng, int(size)))


# ---------------------------------------------------------------------------
# Mittag-Leffler law
# ---------------------------------------------------------------------------

def mittag_leffler_moment(alpha: AlphaLike, r: float) -> float:
    """E[S_a^r] = Gamma(r+1) / Gamma(a r + 1), r > -1."""
    a = _index(alpha).alpha
    if not r > -1:
        raise ValueError("moment order must exceed -1")
    return math.exp(math.lgamma(r + 1.0) - math.lgamma(a * r + 1.0))


def mittag_leffler_pdf(alpha: AlphaLike, s: float, cfg: QuadratureConfig = DEFAULT_CONFIG,
                       max_term: float = 1e12, max_terms: int = 20000) -> float:
    """Density of S_a = rho_1^(-a) by its alternating power series.

        g(s) = sum_k (-s)^k / k! * Gamma(a k + a + 1) * sin(a (k+1) pi) / (a (k+1) pi)

    Only for moderate s: raises SeriesDivergenceError once a term exceeds max_term.
    """
    a = _index(alpha).alpha
    if not s >= 0:
        raise ValueError("s must be nonnegative")
    if s == 0.0:
        return math.gamma(a + 1.0) * math.sin(a * math.pi) / (a * math.pi)
    log_s = math.log(s)
    terms = []
    prev_bound = math.inf
    largest = 0.0
    for k in range(max_terms):
        log_bound = k * log_s - math.lgamma(k + 1.0) + math.lgamma(a * k + a + 1.0) - math.log(a * (k + 1) * math.pi)
        bound = math.exp(log_bound) if log_bound < 700 else math.inf
        largest = max(largest, bound)
        if bound > max_term:
            raise SeriesDivergenceError(f"Mittag-Leffler series unstable at s={s}", largest)
        term = (-1.0) ** k * bound * math.sin(a * (k + 1) * math.pi)
        terms.append(term)
        if bound < cfg.abs_tol * 1e-3 and bound < prev_bound:
            break
        prev_bound = bound
    else:
        raise SeriesDivergenceError("Mittag-Leffler series did not converge", largest)
    val = math.fsum(terms)
    # cancellation budget: largest term times a few ulps
    if val < -max(cfg.abs_tol, 1e-15 * largest) * 10:
        raise SeriesDivergenceError(f"negative series value {val:.3e}", largest)
    return max(val, 0.0)
