"""Brute-force ground truth for differentials and the sampling bounds."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .boolfn import TruthTable, random_sbox
from .differential import (
    DifferentialCandidate,
    ParamConfig,
    algorithm1,
    algorithm2_full,
    choose_p,
)
from .gf2 import DEFAULT_CAP, DimensionTooLarge
from .rng import derive_rng

MAX_DDT_BITS = 28
_PAIR_CHUNK = 1 << 20


@dataclass(frozen=True, eq=False)
class DDT:
    m: int
    n: int
    counts: np.ndarray = field(repr=False)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DDT):
            return NotImplemented
        return self.m == other.m and self.n == other.n and np.array_equal(self.counts, other.counts)

    def max_nontrivial(self) -> int:
        """Largest count over rows a != 0."""
        return int(self.counts[1:].max()) if self.m else 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["a"] + [str(b) for b in range(1 << self.n)])
        for a, row in enumerate(self.counts.tolist()):
            w.writerow([a] + row)
        return buf.getvalue()


def _check_ddt_size(F: TruthTable) -> None:
    if F.m + F.n > MAX_DDT_BITS:
        raise ValueError(f"DDT of a {F.m}->{F.n} function exceeds the 2^{MAX_DDT_BITS} cell bound")


def ddt(F: TruthTable) -> DDT:
    """Counts N(a, b) by scanning every ordered pair (x, x')."""
    _check_ddt_size(F)
    size = 1 << F.m
    t = F.table
    flat = np.zeros(size << F.n, dtype=np.int64)
    rows_per_chunk = max(1, _PAIR_CHUNK // size)
    xs = np.arange(size, dtype=np.int64)
    for start in range(0, size, rows_per_chunk):
        x1 = xs[start : start + rows_per_chunk, None]
        a = x1 ^ xs[None, :]
        b = t[x1] ^ t[None, :]
        flat += np.bincount(((a << F.n) | b).ravel(), minlength=flat.size)
    return DDT(F.m, F.n, flat.reshape(size, 1 << F.n))


def ddt_by_row(F: TruthTable) -> DDT:
    """Counts N(a, b) one input difference at a time (independent cross-check)."""
    _check_ddt_size(F)
    size = 1 << F.m
    xs = np.arange(size, dtype=np.int64)
    counts = np.zeros((size, 1 << F.n), dtype=np.int64)
    for a in range(size):
        counts[a] = np.bincount(F.table[xs ^ a] ^ F.table, minlength=1 << F.n)
    return DDT(F.m, F.n, counts)


def differential_probability(F: TruthTable, cand: DifferentialCandidate) -> Fraction:
    """|{x : (F(x ^ dx) ^ F(x)) & mask = dy}| / 2^m, exactly."""
    xs = np.arange(1 << F.m, dtype=np.int64)
    diff = F.table[xs ^ cand.dx] ^ F.table
    hits = int(np.count_nonzero((diff & cand.mask) == cand.dy))
    return Fraction(hits, 1 << F.m)


@dataclass(frozen=True)
class VerifiedCandidate:
    candidate: DifferentialCandidate
    probability: Fraction

    @property
    def below_half(self) -> bool:
        return self.probability <= Fraction(1, 2)

    def to_json(self) -> dict:
        return {
            **self.candidate.to_json(),
            "probability": f"{self.probability.numerator}/{self.probability.denominator}",
            "probability_float": float(self.probability),
            "below_half": self.below_half,
        }


def verify_candidates(F: TruthTable, cands: Sequence[DifferentialCandidate]) -> list[VerifiedCandidate]:
    """Exact probabilities, highest first (ties in candidate order)."""
    out = [VerifiedCandidate(c, differential_probability(F, c)) for c in cands]
    out.sort(key=lambda v: (-v.probability, v.candidate))
    return out


@dataclass
class ValidationReport:
    trials: int
    p: int
    epsilon: float
    threshold: float  # a differential "holds" when its probability exceeds this
    bound: float  # 1 - exp(-2 p eps^2) for one component
    joint_bound: float  # bound ** n
    checked: int = 0
    violations: int = 0
    skipped: int = 0
    trials_with_violation: int = 0
    n: int = 1
    union_bound: float | None = None  # 1 - n exp(-2 c2), joint case only
    floor: float | None = None  # 1 - 1/e^2, joint case only

    @property
    def empirical_rate(self) -> float:
        if self.checked == 0:
            return 1.0
        return 1 - self.violations / self.checked

    def to_json(self) -> dict:
        out = asdict(self)
        out["empirical_rate"] = self.empirical_rate
        return out


def hoeffding_bound(p: int, epsilon: float) -> float:
    return 1 - math.exp(-2 * p * epsilon**2)


SboxSampler = Callable[[int, int, np.random.Generator], TruthTable]


def _uniform_sbox(m: int, n: int, rng: np.random.Generator) -> TruthTable:
    return random_sbox(m, n, rng)


def _run_trials(report: ValidationReport, limit: Fraction, m: int, n: int, seed: int,
                cap: int, sampler: SboxSampler) -> ValidationReport:
    for t in range(report.trials):
        rng = derive_rng(seed, t)
        F = sampler(m, n, rng)
        sets = algorithm1(F, report.p, rng)
        try:
            cands = algorithm2_full(sets, cap)
        except DimensionTooLarge:
            report.skipped += 1
            continue
        bad = sum(1 for c in cands if differential_probability(F, c) <= limit)
        report.checked += len(cands)
        report.violations += bad
        report.trials_with_violation += bad > 0
    return report


def validate_theorem1(m: int, trials: int, p: int, epsilon: float, seed: int,
                      cap: int = DEFAULT_CAP, sampler: SboxSampler = _uniform_sbox) -> ValidationReport:
    """Monte Carlo check that found (a, i) have Pr[f(x^a)+f(x)=i] > 1 - epsilon.

    Each trial draws a single-output function with ``sampler`` (uniform by
    default) from stream ``(seed, trial)``.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must be in (0, 1)")
    if m > 12:
        raise ValueError("m must be <= 12 for brute-force verification")
    bound = hoeffding_bound(p, epsilon)
    report = ValidationReport(trials, p, epsilon, 1 - epsilon, bound, bound)
    return _run_trials(report, 1 - Fraction(epsilon), m, 1, seed, cap, sampler)


def validate_joint_bound(m: int, n: int, trials: int, cfg: ParamConfig, seed: int,
                         cap: int = DEFAULT_CAP, sampler: SboxSampler = _uniform_sbox) -> ValidationReport:
    """Same experiment for whole S-boxes with eps = 1/(c1 n) and threshold 1 - n eps."""
    if m + n > MAX_DDT_BITS:
        raise ValueError("S-box too large for brute-force verification")
    p = choose_p(m, n, cfg)
    eps = cfg.epsilon(n)
    bound = hoeffding_bound(p, eps)
    report = ValidationReport(trials, p, eps, 1 - n * eps, bound, bound**n, n=n)
    c2 = cfg.resolved_c2(n)
    report.union_bound = 1 - n * math.exp(-2 * c2)
    report.floor = 1 - math.exp(-2)
    limit = 1 - 1 / Fraction(cfg.c1)  # 1 - n * eps, exactly
    return _run_trials(report, limit, m, n, seed, cap, sampler)
