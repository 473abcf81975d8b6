"""Exact sampling of Bernstein-Vazirani measurement outcomes.

Running BV on f and measuring the first m qubits yields w with probability
S_f(w)^2 = W(w)^2 / 4^m. That distribution is computed from the Walsh
spectrum and sampled with integer arithmetic only; no statevector is built.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .boolfn import BooleanComponent, walsh_spectrum


@dataclass(frozen=True, eq=False)
class BvDistribution:
    m: int
    weights: np.ndarray = field(repr=False)  # W(w)^2
    cumulative: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        weights = np.array(self.weights, dtype=np.int64)
        if weights.shape != (1 << self.m,):
            raise ValueError("weights must hold exactly 2^m entries")
        if weights.min() < 0:
            raise ValueError("weights must be non-negative")
        cumulative = np.cumsum(weights)
        if int(cumulative[-1]) != self.total:
            raise ValueError(f"weights sum to {int(cumulative[-1])}, expected 4^{self.m}")
        weights.setflags(write=False)
        cumulative.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "cumulative", cumulative)

    @property
    def total(self) -> int:
        return 1 << (2 * self.m)

    def probability(self, w: int) -> Fraction:
        return Fraction(int(self.weights[w]), self.total)

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights)


@dataclass(frozen=True)
class SampleSet:
    """Outcomes of p independent BV runs (a multiset, order kept)."""

    m: int
    samples: tuple[int, ...]

    @property
    def p(self) -> int:
        return len(self.samples)

    def to_json(self) -> list[int]:
        return list(self.samples)


def bv_distribution(f: BooleanComponent) -> BvDistribution:
    coeffs = walsh_spectrum(f).coeffs
    return BvDistribution(f.m, coeffs * coeffs)


def _draw(dist: BvDistribution, rng: np.random.Generator, size: int) -> np.ndarray:
    u = rng.integers(0, dist.total, size=size, dtype=np.int64)
    return np.searchsorted(dist.cumulative, u, side="right")


def bv_sample(dist: BvDistribution, rng: np.random.Generator) -> int:
    """One measurement: w with probability exactly weights[w] / 4^m."""
    return int(_draw(dist, rng, 1)[0])


def bv_batch(f: BooleanComponent | BvDistribution, p: int, rng: np.random.Generator) -> SampleSet:
    if p < 1:
        raise ValueError(f"run count p must be >= 1, got {p}")
    dist = f if isinstance(f, BvDistribution) else bv_distribution(f)
    return SampleSet(dist.m, tuple(_draw(dist, rng, p).tolist()))
