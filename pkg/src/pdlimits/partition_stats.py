"""Sampling-formula statistics, homozygosity moments and coalescence limits."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .py_sampler import RankedWeights

__all__ = [
    "IntegerPartition",
    "BoundedValue",
    "Phi2Moments",
    "PartitionLengthError",
    "integer_partitions",
    "phi_m",
    "phi2_gem_corrected",
    "distinct_tuple_sum",
    "distinct_tuple_sum_bruteforce",
    "conditional_pitman_formula",
    "moments_phi2_pd_alpha",
    "moments_phi2_ewens",
    "coalescence_pi",
    "fluctuation_statistic",
]


@dataclass(frozen=True)
class IntegerPartition:
    parts: tuple

    def __post_init__(self):
        p = tuple(sorted((int(v) for v in self.parts), reverse=True))
        if not p or p[-1] < 1:
            raise ValueError("parts must be positive integers")
        object.__setattr__(self, "parts", p)

    @property
    def n(self) -> int:
        return sum(self.parts)

    @property
    def length(self) -> int:
        return len(self.parts)

    @property
    def multiplicities(self) -> dict[int, int]:
        """a_j = number of parts equal to j."""
        return dict(sorted(Counter(self.parts).items()))

    @property
    def coefficient(self) -> int:
        """n! / (prod_k eta_k! prod_j a_j!)."""
        den = 1
        for k in self.parts:
            den *= math.factorial(k)
        for a in self.multiplicities.values():
            den *= math.factorial(a)
        return math.factorial(self.n) // den


def integer_partitions(n: int, max_part: int | None = None) -> Iterator[IntegerPartition]:
    """All partitions of n, largest parts first."""
    def rec(rem, cap):
        if rem == 0:
            yield ()
            return
        for k in range(min(rem, cap), 0, -1):
            for rest in rec(rem - k, k):
                yield (k,) + rest
    for p in rec(n, max_part or n):
        yield IntegerPartition(p)


class BoundedValue(NamedTuple):
    value: float
    error_bound: float


def _weights(w) -> np.ndarray:
    return np.asarray(w.weights if isinstance(w, RankedWeights) else w, dtype=float)


def phi_m(w, m: int = 2) -> BoundedValue:
    """sum_i w_i^m over the represented weights.

    The omitted weights sum to at most r = residual_bound, so their m-th
    powers sum to at most r^m.
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    x = _weights(w)
    r = w.residual_bound if isinstance(w, RankedWeights) else 0.0
    return BoundedValue(math.fsum(x ** m), r ** m)


def phi2_gem_corrected(sticks: np.ndarray, residual: float, alpha: float, theta: float) -> float:
    """sum V_i^2 plus the conditional mean of the unrepresented part.

    After N sticks the remainder is residual * GEM(alpha, theta + N alpha),
    whose homozygosity has mean (1 - alpha) / (1 + theta + N alpha).
    """
    n = len(sticks)
    return math.fsum(np.square(sticks)) + residual ** 2 * (1.0 - alpha) / (1.0 + theta + n * alpha)


# ---------------------------------------------------------------------------
# conditional sampling formula
# ---------------------------------------------------------------------------

class PartitionLengthError(ValueError):
    pass


def _set_partitions(items: list) -> Iterator[list[list]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


def distinct_tuple_sum(w, exponents: Sequence[int]) -> float:
    """sum over pairwise distinct (i_1..i_l) of prod_k w_{i_k}^{e_k}.

    Moebius inversion on the lattice of set partitions of {1..l}:
    sum_pi prod_B (-1)^{|B|-1} (|B|-1)! p_{e(B)}, with p_s = sum_i w_i^s.
    """
    x = _weights(w)
    e = list(exponents)
    cache: dict[int, float] = {}

    def p(s):
        if s not in cache:
            cache[s] = math.fsum(x ** s)
        return cache[s]

    terms = []
    for part in _set_partitions(list(range(len(e)))):
        t = 1.0
        for block in part:
            b = len(block)
            t *= (-1) ** (b - 1) * math.factorial(b - 1) * p(sum(e[i] for i in block))
        terms.append(t)
    return math.fsum(terms)


def distinct_tuple_sum_bruteforce(w, exponents: Sequence[int]) -> float:
    """Direct enumeration; for short weight vectors only."""
    from itertools import permutations

    x = _weights(w)
    e = list(exponents)
    return math.fsum(math.prod(x[i] ** k for i, k in zip(idx, e)) for idx in permutations(range(len(x)), len(e)))


def conditional_pitman_formula(w, eta: IntegerPartition, max_length: int = 4) -> float:
    """F_eta(w) = C(n, eta) * distinct_tuple_sum(w, eta.parts).

    The truncation error is controlled only when every part is at least 2;
    parts of size 1 pick up the unrepresented mass.
    """
    if eta.length > max_length:
        raise PartitionLengthError(f"partition length {eta.length} exceeds limit {max_length}")
    val = eta.coefficient * distinct_tuple_sum(w, eta.parts)
    return min(1.0, max(0.0, val))


# ---------------------------------------------------------------------------
# closed-form moments of phi_2
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Phi2Moments:
    mean: float
    second_moment: float
    third_moment: float
    variance: float
    skewness: float


def _rising(x: Fraction, n: int) -> Fraction:
    out = Fraction(1)
    for k in range(n):
        out *= x + k
    return out


def _assemble(m1: Fraction, m2: Fraction, m3: Fraction) -> Phi2Moments:
    # exact rational central moments avoid the cancellation near alpha -> 1
    var = m2 - m1 * m1
    mu3 = m3 - 3 * m1 * m2 + 2 * m1 ** 3
    skew = float(mu3) / float(var) ** 1.5 if var > 0 else math.nan
    return Phi2Moments(float(m1), float(m2), float(m3), float(var), skew)


def moments_phi2_pd_alpha(alpha: float) -> Phi2Moments:
    """Moments of sum_i P_i^2 under PD(alpha, 0).

    The distinct-triple term has weight 2 alpha^2 (1-alpha)^3 / 5!, which is
    what the partition structure gives for three blocks of size two.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    a = Fraction(alpha)
    b = 1 - a
    m1 = b
    m2 = (b * (2 - a) * (3 - a) + a * b ** 2) / 6
    m3 = (_rising(b, 5) + 3 * a * b ** 2 * (2 - a) * (3 - a) + 2 * a ** 2 * b ** 3) / 120
    return _assemble(m1, m2, m3)


def moments_phi2_ewens(theta: float) -> Phi2Moments:
    """Moments of sum_i P_i^2 under PD(0, theta)."""
    if not theta > 0.0:
        raise ValueError("theta must be positive")
    t = Fraction(theta)
    m1 = 1 / (t + 1)
    m2 = (6 + t) / ((t + 1) * (t + 2) * (t + 3))
    m3 = (120 + 18 * t + t ** 2) / _rising(t + 1, 5)
    return _assemble(m1, m2, m3)


def coalescence_pi(alpha: float, k: int) -> float:
    """1 - alpha^k."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if k < 1:
        raise ValueError("k must be a positive integer")
    return -math.expm1(k * math.log(alpha))


def fluctuation_statistic(theta: float, phi2_sample):
    """sqrt(theta/2) (theta phi_2 - 1); vectorised over phi2_sample."""
    if not theta > 0.0:
        raise ValueError("theta must be positive")
    out = math.sqrt(theta / 2.0) * (theta * np.asarray(phi2_sample, dtype=float) - 1.0)
    return float(out) if out.ndim == 0 else out
