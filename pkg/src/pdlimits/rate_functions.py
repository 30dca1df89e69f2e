"""Large-deviation rate functions on exact finite representations.

Sequences are prefixes followed by a constant tail (0 or c in (0, 1]).
Measures are finite atomic parts plus a multiple of the uniform law on [0, 1].
All evaluators return float('inf') for the infinite branch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

__all__ = [
    "TailedSequence",
    "MixtureMeasure",
    "PartitionGrid",
    "DepthInsufficient",
    "rate_j1",
    "rate_j2",
    "rate_i1",
    "rate_i2",
    "contraction_psi",
    "rate_j_rho",
    "rate_jn",
    "rate_in",
    "rate_measure",
    "partition_rate",
    "required_depth",
    "sup_partition_rate",
]

INF = math.inf


@dataclass(frozen=True)
class TailedSequence:
    """x = (prefix..., tail, tail, ...); tail == 0.0 stands for all zeros."""
    prefix: tuple
    tail: float = 0.0

    def __post_init__(self):
        p = tuple(float(v) for v in self.prefix)
        object.__setattr__(self, "prefix", p)
        t = float(self.tail)
        object.__setattr__(self, "tail", t)
        if any(not 0.0 <= v <= 1.0 for v in p):
            raise ValueError("coordinates must lie in [0, 1]")
        if not 0.0 <= t <= 1.0:
            raise ValueError("tail constant must lie in [0, 1]")

    @classmethod
    def zeros(cls, prefix: Sequence[float]) -> "TailedSequence":
        return cls(tuple(prefix), 0.0)

    @classmethod
    def constant(cls, prefix: Sequence[float], c: float) -> "TailedSequence":
        if not 0.0 < c <= 1.0:
            raise ValueError("constant tail must lie in (0, 1]")
        return cls(tuple(prefix), c)

    @property
    def first(self) -> float:
        return self.prefix[0] if self.prefix else self.tail

    def is_nonincreasing(self) -> bool:
        seq = self.prefix + (self.tail,)
        return all(a >= b for a, b in zip(seq, seq[1:]))

    def head(self, n: int) -> list[float]:
        """First n coordinates."""
        return list(self.prefix[:n]) + [self.tail] * max(0, n - len(self.prefix))


def _require_nabla(x: TailedSequence) -> None:
    if not x.is_nonincreasing():
        raise ValueError("sequence must be nonincreasing")


@dataclass(frozen=True)
class PartitionGrid:
    cuts: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in self.cuts)
        object.__setattr__(self, "cuts", c)
        if any(not 0.0 < v < 1.0 for v in c):
            raise ValueError("cuts must lie in the open interval (0, 1)")
        if any(b <= a for a, b in zip(c, c[1:])):
            raise ValueError("cuts must be strictly increasing")

    @property
    def n(self) -> int:
        return len(self.cuts)

    @property
    def edges(self) -> tuple:
        return (0.0,) + self.cuts + (1.0,)

    @property
    def lengths(self) -> list[float]:
        e = self.edges
        return [b - a for a, b in zip(e, e[1:])]


@dataclass(frozen=True)
class MixtureMeasure:
    """sum_i p_i delta_{x_i} + uniform_mass * Uniform[0, 1]."""
    atoms: tuple
    uniform_mass: float

    def __post_init__(self):
        atoms = tuple(sorted((float(x), float(p)) for x, p in self.atoms))
        object.__setattr__(self, "atoms", atoms)
        locs = [x for x, _ in atoms]
        if any(not 0.0 < x < 1.0 for x in locs):
            raise ValueError("atom locations must lie in (0, 1)")
        if len(set(locs)) != len(locs):
            raise ValueError("atom locations must be distinct")
        if any(p <= 0.0 for _, p in atoms):
            raise ValueError("atom masses must be positive")
        if self.uniform_mass < 0.0:
            raise ValueError("uniform mass must be nonnegative")
        if not math.isclose(math.fsum([p for _, p in atoms]) + self.uniform_mass, 1.0, abs_tol=1e-12):
            raise ValueError("total mass must be 1")

    @classmethod
    def from_atoms(cls, atoms: Sequence[tuple[float, float]]) -> "MixtureMeasure":
        atoms = tuple(atoms)
        return cls(atoms, 1.0 - math.fsum(p for _, p in atoms))

    def cell_masses(self, grid: PartitionGrid) -> list[float]:
        """mu of the cells [0, t1], (t1, t2], ..., (tn, 1]."""
        e = grid.edges
        out = []
        for k, (a, b) in enumerate(zip(e, e[1:])):
            inside = [p for x, p in self.atoms if (a < x <= b) or (k == 0 and x == 0.0)]
            out.append(math.fsum(inside) + self.uniform_mass * (b - a))
        return out


# ---------------------------------------------------------------------------
# sequence-space rates
# ---------------------------------------------------------------------------

def rate_j1(x: TailedSequence) -> float:
    """sum_n n log(1/x_n); finite only when the tail is 1 and nothing is 0."""
    if x.tail < 1.0 or any(v == 0.0 for v in x.prefix):
        return INF
    return math.fsum(-n * math.log(v) for n, v in enumerate(x.prefix, start=1))


def rate_j2(x: TailedSequence) -> float:
    """Number of positive coordinates."""
    if x.tail > 0.0:
        return INF
    return float(sum(1 for v in x.prefix if v > 0.0))


def rate_i1(x: TailedSequence) -> float:
    """sum_n n log(x_n / x_{n+1}) when x_1 = 1 and every x_n > 0."""
    _require_nabla(x)
    if x.first != 1.0 or x.tail == 0.0 or any(v == 0.0 for v in x.prefix):
        return INF
    seq = x.prefix + (x.tail,)
    return math.fsum(n * (math.log(a) - math.log(b)) for n, (a, b) in enumerate(zip(seq, seq[1:]), start=1))


def rate_i2(x: TailedSequence) -> float:
    """n - 1 for x = (1, x_2, ..., x_n, 0, 0, ...) with x_2..x_n > 0."""
    _require_nabla(x)
    if x.first != 1.0 or x.tail > 0.0:
        return INF
    p = list(x.prefix)
    while p and p[-1] == 0.0:
        p.pop()
    return float(len(p) - 1)


def contraction_psi(y: TailedSequence) -> TailedSequence:
    """(y_1, y_2, ...) -> (1, y_1, y_1 y_2, ...)."""
    out = [1.0]
    for v in y.prefix:
        out.append(out[-1] * v)
    if y.tail == 0.0:
        return TailedSequence(tuple(out), 0.0)
    if y.tail == 1.0:
        return TailedSequence(tuple(out[:-1]), out[-1])
    # a geometric tail has no constant representation
    raise ValueError("psi of a constant tail c in (0, 1) is not a constant-tail sequence")


# ---------------------------------------------------------------------------
# stable-law and partition rates
# ---------------------------------------------------------------------------

def rate_j_rho(x: float) -> float:
    """Rate of rho_1 under speed -log(1 - a): 0 at 1, 1 above, inf below."""
    if not x > 0.0:
        raise ValueError("x must be positive")
    if x == 1.0:
        return 0.0
    return 1.0 if x > 1.0 else INF


def rate_jn(u: Sequence[float]) -> int:
    """n + 1 - r, n - r or n by the position of min(u) relative to 1 (r = its multiplicity)."""
    u = [float(v) for v in u]
    if not u or any(v <= 0.0 for v in u):
        raise ValueError("u must be a nonempty vector of positive reals")
    n = len(u)
    m = min(u)
    r = sum(1 for v in u if v == m)
    if m < 1.0:
        return n + 1 - r
    if m == 1.0:
        return n - r
    return n


def rate_in(y: Sequence[float], grid: PartitionGrid) -> int:
    """(n + 1) minus the number of cells attaining min_i y_i / |B_i|.  Ties are exact."""
    y = [float(v) for v in y]
    if len(y) != grid.n + 1:
        raise ValueError(f"expected {grid.n + 1} cell masses, got {len(y)}")
    if any(v < 0.0 for v in y) or not math.isclose(math.fsum(y), 1.0, abs_tol=1e-12):
        raise ValueError("y must lie in the simplex")
    ratios = [v / L for v, L in zip(y, grid.lengths)]
    m = min(ratios)
    return grid.n + 1 - sum(1 for r in ratios if r == m)


def rate_measure(mu: MixtureMeasure) -> float:
    """0 for the uniform law, the number of atoms otherwise."""
    return float(len(mu.atoms))


def partition_rate(mu: MixtureMeasure, grid: PartitionGrid) -> int:
    """rate_in of the cell masses of mu, with each ratio formed as
    uniform_mass + (atom mass in cell) / |cell| so that atom-free cells tie exactly."""
    e = grid.edges
    ratios = []
    for k, (a, b) in enumerate(zip(e, e[1:])):
        atom = math.fsum(p for x, p in mu.atoms if a < x <= b or (k == 0 and x == a))
        ratios.append(mu.uniform_mass + (atom / (b - a) if atom else 0.0))
    m = min(ratios)
    return grid.n + 1 - sum(1 for r in ratios if r == m)


def required_depth(mu: MixtureMeasure) -> int:
    """Smallest level at which the isolating grids separate every atom."""
    locs = [0.0] + [x for x, _ in mu.atoms] + [1.0]
    gap = min(b - a for a, b in zip(locs, locs[1:]))
    return max(1, math.ceil(-math.log2(gap)) + 1)


class DepthInsufficient(RuntimeError):
    def __init__(self, message: str, best: int):
        super().__init__(message)
        self.best = best


def _isolating_grid(mu: MixtureMeasure, level: int) -> PartitionGrid:
    """Cuts at dyadic points 2^-level * k that avoid the atoms, with each atom
    additionally enclosed in a cell of half-width 2^-(level+2)."""
    h = 2.0 ** -level
    locs = [x for x, _ in mu.atoms]
    cuts = set()
    for k in range(1, 2 ** level):
        t = k * h
        if t not in locs:
            cuts.add(t)
    eps = h / 4.0
    for x in locs:
        for t in (x - eps, x + eps):
            if 0.0 < t < 1.0:
                cuts.add(t)
    # a cut sitting on an atom is not a continuity point
    cuts = sorted(t for t in cuts if t not in locs)
    return PartitionGrid(tuple(cuts))


def sup_partition_rate(mu: MixtureMeasure, depth: int, raise_if_growing: bool = True) -> int:
    """max of rate_in over refining grids made of continuity points.

    Level j uses dyadic cuts of mesh 2^-j plus a cell of width 2^-(j+1)
    around each atom; the family is refined up to level `depth`.  When the
    value still increased at the last level, the supremum may not have been
    reached and DepthInsufficient is raised.
    """
    if depth < 1:
        raise ValueError("depth must be positive")
    best = 0
    prev = 0
    for level in range(1, depth + 1):
        val = partition_rate(mu, _isolating_grid(mu, level))
        best = max(best, val)
        if level == depth and best > prev and raise_if_growing and level > 1:
            raise DepthInsufficient(f"supremum still increasing at depth {depth}", best)
        prev = best
    return best
