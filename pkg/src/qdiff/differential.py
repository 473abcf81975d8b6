"""BV-driven search for high-probability differentials.

``algorithm1`` samples every component function and solves the two linear
systems per component; ``algorithm2_full`` intersects the per-component sets
to get whole-output differentials, and ``algorithm2_partial`` keeps going
past components that have nothing to say, yielding differentials that fix
only some output bits.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .boolfn import TruthTable, component
from .bvsim import bv_batch
from .gf2 import DEFAULT_CAP, SolutionSets, contains, enumerate_set, from_samples, solve

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ParamConfig:
    """Constants of the run-count rule p = max(c*m, ceil(c2 * c1^2 * n^2)).

    ``c2=None`` means the smallest admissible value 1 + ln(n)/2.
    """

    c: float = 2
    c1: float = 2
    c2: float | None = None
    p_override: int | None = None

    def __post_init__(self) -> None:
        if self.c < 2:
            raise ValueError(f"c must be >= 2, got {self.c}")
        if self.c1 < 2:
            raise ValueError(f"c1 must be >= 2, got {self.c1}")
        if self.c2 is not None and self.c2 <= 0:
            raise ValueError(f"c2 must be positive, got {self.c2}")
        if self.p_override is not None and self.p_override < 1:
            raise ValueError(f"p_override must be >= 1, got {self.p_override}")

    def resolved_c2(self, n: int) -> float:
        return 1 + math.log(n) / 2 if self.c2 is None else self.c2

    def epsilon(self, n: int) -> float:
        return 1 / (self.c1 * n)

    def to_json(self, n: int | None = None) -> dict:
        out = {"c": self.c, "c1": self.c1, "c2": self.c2, "p_override": self.p_override}
        if n is not None:
            out["c2"] = self.resolved_c2(n)
            out["epsilon"] = self.epsilon(n)
        return out


@dataclass(frozen=True, order=True)
class DifferentialCandidate:
    """Input difference ``dx`` and output pattern ``dy`` on the bits of ``mask``.

    Bit j-1 of ``dy``/``mask`` belongs to component f_j.
    """

    dx: int
    dy: int
    mask: int

    def __post_init__(self) -> None:
        if self.dy & ~self.mask:
            raise ValueError("dy has bits outside mask")

    def known_bits(self) -> int:
        return bin(self.mask).count("1")

    def to_json(self) -> dict:
        return {"dx": self.dx, "dy": self.dy, "mask": self.mask}


def choose_p(m: int, n: int, cfg: ParamConfig = ParamConfig()) -> int:
    if cfg.p_override is not None:
        return cfg.p_override
    joint = cfg.resolved_c2(n) * cfg.c1**2 * n**2
    return max(math.ceil(cfg.c * m), math.ceil(joint))


def algorithm1(F: TruthTable, p: int, rng: np.random.Generator) -> list[SolutionSets]:
    """(A_j^0, A_j^1) for every component f_j, from p BV runs each.

    Each component gets its own child stream of ``rng``.
    """
    if p < 1:
        raise ValueError(f"run count p must be >= 1, got {p}")
    streams = rng.spawn(F.n)
    out = []
    for j, stream in enumerate(streams, start=1):
        samples = bv_batch(component(F, j), p, stream)
        out.append(solve(from_samples(samples)))
    return out


def _starting_points(first: SolutionSets, cap: int) -> list[tuple[int, int]]:
    # A^0 and A^1 are disjoint cosets, so each a gets a unique i_1.
    pts = [(a, 0) for a in enumerate_set(first, 0, cap) if a]
    pts += [(a, 1) for a in enumerate_set(first, 1, cap) if a]
    pts.sort()
    return pts


def algorithm2_full(sets: Sequence[SolutionSets], cap: int = DEFAULT_CAP) -> list[DifferentialCandidate]:
    """Differentials (a, i_1...i_n) shared by all components.

    An a that falls outside both sets of some component is dropped instead of
    being reported as the zero differential.
    """
    if not sets:
        return []
    full = (1 << len(sets)) - 1
    out = []
    for a, i1 in _starting_points(sets[0], cap):
        dy = i1
        for j in range(1, len(sets)):
            if contains(sets[j], 0, a):
                continue
            if contains(sets[j], 1, a):
                dy |= 1 << j
                continue
            log.debug("dropping a=%#x: outside both sets of component %d", a, j + 1)
            break
        else:
            out.append(DifferentialCandidate(a, dy, full))
    return out


def algorithm2_partial(
    sets: Sequence[SolutionSets], cap: int = DEFAULT_CAP, min_known: int = 1
) -> list[DifferentialCandidate]:
    """Like ``algorithm2_full`` but components outside both sets become unknown bits."""
    if min_known < 1:
        raise ValueError("min_known must be >= 1")
    if not sets:
        return []
    out = []
    for a, i1 in _starting_points(sets[0], cap):
        dy, mask = i1, 1
        for j in range(1, len(sets)):
            if contains(sets[j], 0, a):
                mask |= 1 << j
            elif contains(sets[j], 1, a):
                mask |= 1 << j
                dy |= 1 << j
        if bin(mask).count("1") >= min_known:
            out.append(DifferentialCandidate(a, dy, mask))
    return out
