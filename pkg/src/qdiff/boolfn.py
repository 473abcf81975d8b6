"""Vectorial Boolean functions, component extraction and Walsh spectra.

Bit convention used everywhere in the package: bit 0 is the least
significant bit, ``w . x = parity(w & x)``, and the j-th component function
``f_j`` (1-based) is output bit ``j - 1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .rng import as_rng

MAX_WIDTH = 24


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def parity(v: np.ndarray | int) -> np.ndarray | int:
    """Parity of each (non-negative, < 2**32) integer."""
    if isinstance(v, (int, np.integer)):
        return bin(int(v)).count("1") & 1
    v = np.asarray(v, dtype=np.int64)
    v = v ^ (v >> 16)
    v = v ^ (v >> 8)
    v = v ^ (v >> 4)
    v = v ^ (v >> 2)
    v = v ^ (v >> 1)
    return v & 1


def _check_width(name: str, w: int) -> None:
    if not 1 <= w <= MAX_WIDTH:
        raise ValueError(f"{name} must be in [1, {MAX_WIDTH}], got {w}")


@dataclass(frozen=True, eq=False)
class TruthTable:
    """F: {0,1}^m -> {0,1}^n stored as 2^m output words."""

    m: int
    n: int
    table: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        _check_width("m", self.m)
        _check_width("n", self.n)
        table = np.array(self.table, dtype=np.int64)
        if table.shape != (1 << self.m,):
            raise ValueError(f"table must hold exactly 2^{self.m} entries, got shape {table.shape}")
        if table.size and (table.min() < 0 or table.max() >= 1 << self.n):
            raise ValueError(f"table entries must lie in [0, 2^{self.n})")
        object.__setattr__(self, "table", _frozen(table))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TruthTable):
            return NotImplemented
        return self.m == other.m and self.n == other.n and np.array_equal(self.table, other.table)

    def __hash__(self) -> int:
        return hash((self.m, self.n, self.table.tobytes()))

    def __call__(self, x):
        return self.table[x]

    def is_bijective(self) -> bool:
        return self.m == self.n and np.unique(self.table).size == self.table.size

    def inverse(self) -> "TruthTable":
        if not self.is_bijective():
            raise ValueError("table is not a bijection")
        inv = np.empty_like(self.table)
        inv[self.table] = np.arange(self.table.size, dtype=np.int64)
        return TruthTable(self.m, self.n, inv)

    def to_json(self) -> dict:
        return {"m": self.m, "n": self.n, "table": self.table.tolist()}

    @classmethod
    def from_json(cls, obj: dict | str) -> "TruthTable":
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            return cls(int(obj["m"]), int(obj["n"]), obj["table"])
        except KeyError as exc:
            raise ValueError(f"S-box JSON is missing field {exc}") from None


@dataclass(frozen=True, eq=False)
class BooleanComponent:
    """Single-output Boolean function on m bits, as a 0/1 vector of length 2^m."""

    m: int
    bits: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        _check_width("m", self.m)
        bits = np.array(self.bits, dtype=np.uint8)
        if bits.shape != (1 << self.m,):
            raise ValueError(f"bits must hold exactly 2^{self.m} entries, got shape {bits.shape}")
        if bits.size and bits.max() > 1:
            raise ValueError("bits must be 0 or 1")
        object.__setattr__(self, "bits", _frozen(bits))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BooleanComponent):
            return NotImplemented
        return self.m == other.m and np.array_equal(self.bits, other.bits)

    def __hash__(self) -> int:
        return hash((self.m, self.bits.tobytes()))


@dataclass(frozen=True, eq=False)
class WalshSpectrum:
    """Unnormalised Walsh coefficients W(w) = sum_x (-1)^(f(x) + w.x).

    The normalised transform is ``S_f(w) = W(w) / 2^m``; it is never stored
    so that everything downstream stays in exact integers.
    """

    m: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        coeffs = np.array(self.coeffs, dtype=np.int64)
        if coeffs.shape != (1 << self.m,):
            raise ValueError("coeffs must hold exactly 2^m entries")
        object.__setattr__(self, "coeffs", _frozen(coeffs))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WalshSpectrum):
            return NotImplemented
        return self.m == other.m and np.array_equal(self.coeffs, other.coeffs)

    def energy(self) -> int:
        """sum_w W(w)^2 as a Python int; equals 4^m by Parseval."""
        return sum(int(c) * int(c) for c in self.coeffs.tolist())


def component(F: TruthTable, j: int) -> BooleanComponent:
    """The j-th coordinate function f_j of F (1-based, f_1 = LSB)."""
    if not 1 <= j <= F.n:
        raise IndexError(f"component index must be in [1, {F.n}], got {j}")
    return BooleanComponent(F.m, (F.table >> (j - 1)) & 1)


def components(F: TruthTable) -> list[BooleanComponent]:
    return [component(F, j) for j in range(1, F.n + 1)]


def recompose(parts: Sequence[BooleanComponent]) -> TruthTable:
    """Inverse of :func:`components`."""
    if not parts:
        raise ValueError("need at least one component")
    m = parts[0].m
    table = np.zeros(1 << m, dtype=np.int64)
    for j, f in enumerate(parts):
        if f.m != m:
            raise ValueError("components have different input widths")
        table |= f.bits.astype(np.int64) << j
    return TruthTable(m, len(parts), table)


def fwht(values: np.ndarray) -> np.ndarray:
    """Fast Walsh-Hadamard transform (natural order, unnormalised) on int64."""
    a = np.array(values, dtype=np.int64)
    size = a.size
    if size & (size - 1):
        raise ValueError("length must be a power of two")
    h = 1
    while h < size:
        a = a.reshape(-1, 2, h)
        lo = a[:, 0, :]
        hi = a[:, 1, :]
        a = np.stack((lo + hi, lo - hi), axis=1)
        h <<= 1
    return a.reshape(size)


def walsh_spectrum(f: BooleanComponent) -> WalshSpectrum:
    signs = 1 - 2 * f.bits.astype(np.int64)
    return WalshSpectrum(f.m, fwht(signs))


def linear_component(m: int, v: int, c: int = 0) -> BooleanComponent:
    """x -> v.x + c."""
    _check_width("m", m)
    if not 0 <= v < 1 << m:
        raise ValueError(f"v must be an {m}-bit vector")
    if c not in (0, 1):
        raise ValueError("c must be 0 or 1")
    xs = np.arange(1 << m, dtype=np.int64)
    return BooleanComponent(m, parity(xs & v) ^ c)


def bent_component(m: int) -> BooleanComponent:
    """Inner-product bent function x0 x1 + x2 x3 + ... for even m."""
    if m % 2:
        raise ValueError("bent functions need even m")
    xs = np.arange(1 << m, dtype=np.int64)
    bits = np.zeros(1 << m, dtype=np.int64)
    for i in range(0, m, 2):
        bits ^= ((xs >> i) & 1) & ((xs >> (i + 1)) & 1)
    return BooleanComponent(m, bits)


def random_component(m: int, rng) -> BooleanComponent:
    return BooleanComponent(m, as_rng(rng).integers(0, 2, size=1 << m))


def random_sbox(m: int, n: int, seed) -> TruthTable:
    """Uniform draw over all (2^n)^(2^m) tables; ``seed`` is an int or a Generator."""
    _check_width("m", m)
    _check_width("n", n)
    return TruthTable(m, n, as_rng(seed).integers(0, 1 << n, size=1 << m))


def linear_sbox(m: int, columns: Sequence[int]) -> TruthTable:
    """x -> M x where column i of M is ``columns[i]``."""
    if len(columns) != m:
        raise ValueError("need one column per input bit")
    xs = np.arange(1 << m, dtype=np.int64)
    table = np.zeros(1 << m, dtype=np.int64)
    for i, col in enumerate(columns):
        table ^= ((xs >> i) & 1) * int(col)
    n = max(1, max(int(c) for c in columns).bit_length())
    return TruthTable(m, max(n, m), table)


# ls4: F(x ^ 8) = F(x) ^ 1 for all x; no other nonzero linear structure, and
# every other DDT entry is at most 4.
_FIXTURES: dict[str, tuple[int, int, tuple[int, ...]]] = {
    "identity4": (4, 4, tuple(range(16))),
    "linear4": (4, 4, tuple(linear_sbox(4, (0x3, 0x6, 0xC, 0x8)).table.tolist())),
    "ls4": (4, 4, (7, 5, 15, 10, 8, 3, 12, 0, 6, 4, 14, 11, 9, 2, 13, 1)),
    "present": (4, 4, (0xC, 0x5, 0x6, 0xB, 0x9, 0x0, 0xA, 0xD, 0x3, 0xE, 0xF, 0x8, 0x4, 0x7, 0x1, 0x2)),
}

FIXTURE_HELP = {
    "identity4": "4-bit identity map",
    "linear4": "invertible linear 4-bit map, columns 0x3 0x6 0xC 0x8",
    "ls4": "4-bit permutation with linear structure F(x^8) = F(x)^1",
    "present": "the PRESENT block cipher S-box",
}


def fixture_names() -> list[str]:
    return sorted(_FIXTURES)


def fixture_sbox(name: str) -> TruthTable:
    try:
        m, n, table = _FIXTURES[name]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(fixture_names())}") from None
    return TruthTable(m, n, table)
