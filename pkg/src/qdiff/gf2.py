"""Linear systems over GF(2) with rows packed into Python integers.

Bit i of a row is the coefficient of X_i. ``solve`` returns both solution
sets of ``S X = 0`` and ``S X = 1`` from one elimination pass over the
augmented matrix (the right-hand side lives in bit ``cols``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .bvsim import SampleSet

DEFAULT_CAP = 20


class DimensionTooLarge(Exception):
    """Explicit enumeration was refused; more BV runs shrink the sets."""

    def __init__(self, dim: int, cap: int = DEFAULT_CAP):
        super().__init__(
            f"solution space has dimension {dim} > cap {cap}; increase the run count p"
        )
        self.dim = dim
        self.cap = cap


@dataclass(frozen=True)
class BitMatrix:
    rows: tuple[int, ...]
    cols: int

    def __post_init__(self) -> None:
        if self.cols < 1:
            raise ValueError("cols must be >= 1")
        limit = 1 << self.cols
        for r in self.rows:
            if not 0 <= r < limit:
                raise ValueError(f"row {r:#x} is wider than {self.cols} columns")

    def apply(self, x: int) -> int:
        """S x, packed with row i at bit i."""
        out = 0
        for i, r in enumerate(self.rows):
            out |= (bin(r & x).count("1") & 1) << i
        return out

    def hex_rows(self) -> list[str]:
        width = (self.cols + 3) // 4
        return [f"{r:0{width}x}" for r in self.rows]


def from_samples(s: SampleSet) -> BitMatrix:
    """One row per distinct BV outcome, first-occurrence order."""
    if not s.samples:
        raise ValueError("empty sample set")
    return BitMatrix(tuple(dict.fromkeys(s.samples)), s.m)


def _reduce_basis(vectors: Iterable[int], width: int | None = None) -> list[int]:
    """Echelon form keyed by highest set bit, distinct leading bits.

    With ``width`` given, stops as soon as the rank reaches it.
    """
    pivots: dict[int, int] = {}
    for v in vectors:
        if width is not None and len(pivots) == width:
            break
        while v:
            lead = v.bit_length() - 1
            if lead not in pivots:
                pivots[lead] = v
                break
            v ^= pivots[lead]
    return [pivots[k] for k in sorted(pivots, reverse=True)]


def _reduce(v: int, echelon: list[int]) -> int:
    for b in echelon:
        if v >> (b.bit_length() - 1) & 1:
            v ^= b
    return v


@dataclass(frozen=True)
class SolutionSets:
    """A^0 = span(basis), A^1 = particular + span(basis) (or empty)."""

    m: int
    basis: tuple[int, ...]
    particular: int | None
    _echelon: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        echelon = _reduce_basis(self.basis)
        if len(echelon) != len(self.basis):
            raise ValueError("basis vectors are linearly dependent")
        object.__setattr__(self, "_echelon", tuple(echelon))

    @property
    def dim(self) -> int:
        return len(self.basis)

    def size(self, which: int) -> int:
        if which == 1 and self.particular is None:
            return 0
        return 1 << self.dim

    def to_json(self) -> dict:
        return {"m": self.m, "basis": list(self.basis), "particular": self.particular}


def rank(mat: BitMatrix) -> int:
    return len(_reduce_basis(mat.rows, width=mat.cols))


def solve(mat: BitMatrix) -> SolutionSets:
    m = mat.cols
    rhs = 1 << m
    if not mat.rows:
        # No constraints: A^0 is everything; A^1 is empty by convention.
        return SolutionSets(m, tuple(1 << i for i in range(m)), None)

    # Only the row space of [S | 1] matters, and it has rank <= m + 1.
    rows = _reduce_basis((r | rhs for r in mat.rows), width=m + 1)
    r0 = 0
    for col in range(m):
        bit = 1 << col
        for i in range(r0, len(rows)):
            if rows[i] & bit:
                rows[r0], rows[i] = rows[i], rows[r0]
                break
        else:
            continue
        piv = rows[r0]
        for i in range(len(rows)):
            if i != r0 and rows[i] & bit:
                rows[i] ^= piv
        r0 += 1
        if r0 == len(rows):
            break

    # Pivots were taken in ascending column order, so each pivot is its row's lowest bit.
    pivot_rows: list[tuple[int, int]] = []
    for i in range(r0):
        coeffs = rows[i] & (rhs - 1)
        pivot_rows.append(((coeffs & -coeffs).bit_length() - 1, rows[i]))
    pivot_cols = {c for c, _ in pivot_rows}
    consistent = all(rows[i] != rhs for i in range(r0, len(rows)))

    particular = None
    if consistent:
        particular = 0
        for c, row in pivot_rows:
            if row & rhs:
                particular |= 1 << c

    basis = []
    for free in range(m):
        if free in pivot_cols:
            continue
        v = 1 << free
        for c, row in pivot_rows:
            if row >> free & 1:
                v |= 1 << c
        basis.append(v)
    return SolutionSets(m, tuple(basis), particular)


def contains(sol: SolutionSets, which: int, a: int) -> bool:
    """Membership by reduction against the basis, O(m) word operations."""
    if which == 1:
        if sol.particular is None:
            return False
        a ^= sol.particular
    elif which != 0:
        raise ValueError("which must be 0 or 1")
    return _reduce(a, list(sol._echelon)) == 0


def enumerate_set(sol: SolutionSets, which: int, cap: int = DEFAULT_CAP) -> list[int]:
    """Sorted members of A^which."""
    if which not in (0, 1):
        raise ValueError("which must be 0 or 1")
    if which == 1 and sol.particular is None:
        return []
    if sol.dim > cap:
        raise DimensionTooLarge(sol.dim, cap)
    members = np.zeros(1, dtype=np.int64)
    for b in sol.basis:
        members = np.concatenate((members, members ^ b))
    if which == 1:
        members ^= sol.particular
    members.sort()
    return members.tolist()
