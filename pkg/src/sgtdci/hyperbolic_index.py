"""Hyperbolic-cross index sets.

Three families of truncation sets are generated here:

* the continuous frequency domain ``{xi : sum_l prod_{i in I_l} (1+|xi_i|^2)^(1/2) <= R}``,
* the discrete Fourier-box cells that intersect it,
* the angular sets over ``(l_1, ..., l_N)`` used to truncate partial-wave
  (Gaussian orbital) expansions, in sparse-grid and full-grid flavours.

Electron labels are 1-based throughout, matching the usual ``{1, ..., N}``.
An empty spin set contributes a factor of one to the hyperbolic sum.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# relative slack for boundary decisions (products like sqrt(2)*sqrt(2) == 2)
_REL_TOL = 1e-12


class TruncationMode(str, enum.Enum):
    SPARSE = "SG"
    FULL = "FG"

    @classmethod
    def parse(cls, value: "str | TruncationMode") -> "TruncationMode":
        if isinstance(value, cls):
            return value
        key = str(value).strip().upper()
        aliases = {"SG": cls.SPARSE, "SPARSE": cls.SPARSE, "SPARSEGRID": cls.SPARSE,
                   "FG": cls.FULL, "FULL": cls.FULL, "FULLGRID": cls.FULL}
        try:
            return aliases[key.replace("_", "").replace("-", "")]
        except KeyError:
            raise ValueError(f"unknown truncation mode {value!r}") from None


@dataclass(frozen=True)
class SpinPartition:
    """Disjoint electron-label sets ``i1``, ``i2`` covering ``{1, ..., N}``."""

    n_electrons: int
    i1: frozenset = field(default_factory=frozenset)
    i2: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n_electrons < 1:
            raise ValueError("n_electrons must be positive")
        object.__setattr__(self, "i1", frozenset(int(i) for i in self.i1))
        object.__setattr__(self, "i2", frozenset(int(i) for i in self.i2))
        if self.i1 & self.i2:
            raise ValueError("spin sets must be disjoint")
        if self.i1 | self.i2 != frozenset(range(1, self.n_electrons + 1)):
            raise ValueError("spin sets must cover 1..N")

    @classmethod
    def all_same_spin(cls, n_electrons: int) -> "SpinPartition":
        return cls(n_electrons, frozenset(range(1, n_electrons + 1)), frozenset())

    @property
    def blocks(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Both spin sets as sorted tuples of 0-based positions."""
        return (tuple(sorted(i - 1 for i in self.i1)),
                tuple(sorted(i - 1 for i in self.i2)))


@dataclass(frozen=True)
class HyperbolicCrossSpec:
    mode: TruncationMode
    radius: float
    partition: SpinPartition
    l_max: int = 7

    def __post_init__(self):
        object.__setattr__(self, "mode", TruncationMode.parse(self.mode))
        if not self.radius >= 0 or not math.isfinite(self.radius):
            # R = 0 is admitted for the full-grid ball (s-only)
            raise ValueError(f"radius must be a finite non-negative number, got {self.radius}")
        if self.mode is TruncationMode.SPARSE and self.radius <= 0:
            raise ValueError("sparse-grid radius must be positive")
        if self.l_max < 0:
            raise ValueError("l_max must be non-negative")

    @classmethod
    def sparse(cls, radius: float, n_electrons: int = 2, l_max: int = 7) -> "HyperbolicCrossSpec":
        return cls(TruncationMode.SPARSE, radius, SpinPartition.all_same_spin(n_electrons), l_max)

    @classmethod
    def full(cls, radius: float, n_electrons: int = 2, l_max: int = 7) -> "HyperbolicCrossSpec":
        return cls(TruncationMode.FULL, radius, SpinPartition.all_same_spin(n_electrons), l_max)


@dataclass(frozen=True, order=True)
class CellIndex:
    """Fourier-box index: intra-cell modes ``j_vec`` and cell position ``l_vec``."""

    l_vec: tuple[int, ...]
    j_vec: tuple[int, ...]
    box_width_inv: float = 1.0

    def __post_init__(self):
        if not self.box_width_inv > 0:
            raise ValueError("box_width_inv must be positive")
        if len(self.l_vec) != len(self.j_vec):
            raise ValueError("j_vec and l_vec must have equal length")


def _hyperbolic_sum_sq(block_sq: np.ndarray, partition: SpinPartition) -> np.ndarray:
    """Sum over spin sets of sqrt(prod (1+|xi_i|^2)) for ``block_sq[..., i] = |xi_i|^2``."""
    total = np.zeros(block_sq.shape[:-1])
    for block in partition.blocks:
        if block:
            total = total + np.sqrt(np.prod(1.0 + block_sq[..., list(block)], axis=-1))
        else:
            total = total + 1.0
    return total


def hyperbolic_weight(xi: Sequence[float], partition: SpinPartition) -> float:
    """Value of the hyperbolic-cross sum at a frequency vector of length ``N*d``."""
    xi = np.asarray(xi, dtype=float).ravel()
    n = partition.n_electrons
    if xi.size == 0 or xi.size % n:
        raise ValueError(f"frequency vector of length {xi.size} does not split into {n} blocks")
    blocks = xi.reshape(n, -1)
    return float(_hyperbolic_sum_sq(np.sum(blocks**2, axis=1), partition))


def continuous_membership(xi: Sequence[float], spec: HyperbolicCrossSpec) -> bool:
    if spec.mode is not TruncationMode.SPARSE:
        raise ValueError("the continuous domain is defined for sparse-grid specs only")
    return hyperbolic_weight(xi, spec.partition) <= spec.radius * (1 + _REL_TOL)


def closest_point(l_vec: Sequence[int], box_width_inv: float) -> np.ndarray:
    """Point of the closed cell ``L^-1 (l + [0,1]^k)`` nearest to the origin, per coordinate."""
    l_arr = np.asarray(l_vec, dtype=float)
    return np.where(l_arr >= 0, l_arr, l_arr + 1.0) / box_width_inv


def cell_intersects(l_vec: Sequence[int], box_width_inv: float, spec: HyperbolicCrossSpec) -> bool:
    """Does the cell at ``l_vec`` meet the hyperbolic cross?

    Each factor ``(1+|xi_i|^2)^(1/2)`` is monotone in every ``|xi_{i,k}|``, so the
    minimum over the (closed) cell sits at its coordinate-wise closest point to zero.
    """
    return continuous_membership(closest_point(l_vec, box_width_inv), spec)


def _cell_range(box_width_inv: float, spec: HyperbolicCrossSpec) -> range:
    # both spin terms are >= 1, so any one |xi_i| obeys (1+|xi_i|^2)^(1/2) <= R - 1
    reach = (spec.radius * (1 + _REL_TOL) - 1.0) ** 2 - 1.0 if spec.radius > 1 else -1.0
    if reach < 0:
        return range(0)
    bound = math.sqrt(reach)
    hi = math.floor(bound * box_width_inv + 1e-9)
    return range(-hi - 1, hi + 1)


def enumerate_cells(box_width_inv: float, spec: HyperbolicCrossSpec, dim_per_particle: int = 1,
                    l_window: tuple[int, int] | None = None) -> list[tuple[int, ...]]:
    """Sorted cell positions ``l_vec`` (length ``N*d``) meeting the hyperbolic cross.

    ``l_window = (lo, hi)`` restricts every coordinate to ``lo <= l <= hi``.
    """
    if not box_width_inv > 0:
        raise ValueError("box_width_inv must be positive")
    if dim_per_particle not in (1, 2, 3):
        raise ValueError("dim_per_particle must be 1, 2 or 3")
    n_coord = spec.partition.n_electrons * dim_per_particle
    coords = _cell_range(box_width_inv, spec)
    if l_window is not None:
        lo, hi = l_window
        coords = range(max(coords.start, lo), min(coords.stop, hi + 1)) if len(coords) else coords
    if len(coords) == 0:
        return []
    grid = np.array(list(itertools.product(coords, repeat=n_coord)), dtype=int)
    pts = closest_point(grid, box_width_inv).reshape(len(grid), spec.partition.n_electrons, -1)
    values = _hyperbolic_sum_sq(np.sum(pts**2, axis=2), spec.partition)
    keep = values <= spec.radius * (1 + _REL_TOL)
    return [tuple(int(v) for v in row) for row in grid[keep]]


def enumerate_discrete_cells(box_width_inv: float, spec: HyperbolicCrossSpec, j_cap: int,
                             dim_per_particle: int = 1,
                             l_window: tuple[int, int] | None = None) -> list[CellIndex]:
    """All ``(j, l)`` with ``|j|_inf <= j_cap`` whose cell meets the hyperbolic cross."""
    if j_cap < 0:
        raise ValueError("j_cap must be non-negative")
    cells = enumerate_cells(box_width_inv, spec, dim_per_particle, l_window)
    n_coord = spec.partition.n_electrons * dim_per_particle
    j_vectors = list(itertools.product(range(-j_cap, j_cap + 1), repeat=n_coord))
    return sorted(CellIndex(l, j, box_width_inv) for l in cells for j in j_vectors)


def angular_weight(ls: Sequence[int], partition: SpinPartition) -> float:
    total = 0.0
    for block in partition.blocks:
        total += math.prod(ls[j] + 0.5 for j in block) if block else 1.0
    return total


def enumerate_angular(spec: HyperbolicCrossSpec) -> list[tuple[int, ...]]:
    """Angular multi-indices ``(l_1, ..., l_N)`` retained by the truncation, sorted."""
    n = spec.partition.n_electrons
    out = []
    for ls in itertools.product(range(spec.l_max + 1), repeat=n):
        if spec.mode is TruncationMode.FULL:
            ok = max(ls) <= spec.radius * (1 + _REL_TOL)
        else:
            ok = angular_weight(ls, spec.partition) <= spec.radius * (1 + _REL_TOL)
        if ok:
            out.append(ls)
    return out


def cardinality(spec: HyperbolicCrossSpec) -> int:
    """Size of the angular set with every ``m_j`` in ``-l_j..l_j`` attached."""
    return sum(math.prod(2 * l + 1 for l in ls) for ls in enumerate_angular(spec))


def format_index_set(indices: Iterable[Sequence[int]]) -> str:
    return "".join(" ".join(str(int(v)) for v in idx) + "\n" for idx in indices)


def parse_index_set(text: str) -> list[tuple[int, ...]]:
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(tuple(int(tok) for tok in line.split()))
    return out
