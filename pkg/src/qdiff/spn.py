"""Toy substitution-permutation cipher and the last-round key-recovery attack.

Round structure with r rounds and round keys K_0..K_r:

    rounds 0..r-2:  x ^= K_i ; S-box layer ; bit permutation
    last round:     x ^= K_{r-1} ; S-box layer ; x ^= K_r

G maps the plaintext to the state right after ``x ^= K_{r-1}``, i.e. the
input of the last S-box layer. Building G's truth table needs the key: the
BV stage models a quantum oracle for G and is not a classical attack. The
key-recovery stage only talks to the encryption oracle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .boolfn import TruthTable, fixture_sbox
from .differential import DifferentialCandidate, ParamConfig, algorithm1, algorithm2_partial, choose_p
from .gf2 import DEFAULT_CAP
from .oracle import verify_candidates

MAX_PIPELINE_K = 20
DEFAULT_MAX_GROUPS = 3


class GuessSpaceTooLarge(Exception):
    def __init__(self, groups: int, max_groups: int):
        super().__init__(
            f"candidate activates {groups} S-box groups (> {max_groups}); "
            "pick a candidate with fewer active groups or raise max_groups"
        )
        self.groups = groups
        self.max_groups = max_groups


@dataclass(frozen=True)
class SpnSpec:
    k: int
    l: int
    m: int
    sbox: TruthTable
    perm: tuple[int, ...]
    rounds: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "perm", tuple(int(p) for p in self.perm))
        if self.k != self.l * self.m:
            raise ValueError(f"k={self.k} must equal l*m={self.l * self.m}")
        if self.sbox.m != self.m or self.sbox.n != self.m:
            raise ValueError("S-box must map m bits to m bits")
        if not self.sbox.is_bijective():
            raise ValueError("S-box must be a permutation for decryption to exist")
        if sorted(self.perm) != list(range(self.k)):
            raise ValueError("perm must be a bijection on {0..k-1}")
        if self.rounds < 2:
            raise ValueError("need at least 2 rounds")

    @property
    def block_mask(self) -> int:
        return (1 << self.k) - 1

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "l": self.l,
            "m": self.m,
            "sbox": self.sbox.table.tolist(),
            "perm": list(self.perm),
            "rounds": self.rounds,
        }

    @classmethod
    def from_json(cls, obj: dict | str) -> "SpnSpec":
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            m = int(obj["m"])
            raw = obj["sbox"]
            if isinstance(raw, str):
                sbox = fixture_sbox(raw)
            elif isinstance(raw, dict):
                sbox = TruthTable.from_json(raw)
            else:
                sbox = TruthTable(m, m, raw)
            return cls(int(obj["k"]), int(obj["l"]), m, sbox, tuple(obj["perm"]), int(obj["rounds"]))
        except KeyError as exc:
            raise ValueError(f"SPN spec JSON is missing field {exc}") from None


def transpose_perm(l: int, m: int) -> tuple[int, ...]:
    """Bit i of S-box s goes to bit s of S-box i (needs l == m)."""
    if l != m:
        raise ValueError("transpose permutation needs l == m")
    return tuple(m * (b % m) + b // m for b in range(l * m))


def reference_spec(sbox: str = "ls4", rounds: int = 3) -> SpnSpec:
    """16-bit, four 4-bit S-boxes, transpose permutation."""
    return SpnSpec(16, 4, 4, fixture_sbox(sbox), transpose_perm(4, 4), rounds)


@dataclass(frozen=True)
class SpnKey:
    round_keys: tuple[int, ...]

    @property
    def final(self) -> int:
        return self.round_keys[-1]

    def check(self, spec: SpnSpec) -> None:
        if len(self.round_keys) != spec.rounds + 1:
            raise ValueError(f"need {spec.rounds + 1} round keys, got {len(self.round_keys)}")
        if any(not 0 <= rk <= spec.block_mask for rk in self.round_keys):
            raise ValueError(f"round keys must be {spec.k}-bit words")


def random_key(spec: SpnSpec, rng: np.random.Generator) -> SpnKey:
    return SpnKey(tuple(int(v) for v in rng.integers(0, 1 << spec.k, size=spec.rounds + 1)))


def _sbox_layer(spec: SpnSpec, x: np.ndarray, table: np.ndarray) -> np.ndarray:
    lo = (1 << spec.m) - 1
    out = np.zeros_like(x)
    for g in range(spec.l):
        shift = g * spec.m
        out |= table[(x >> shift) & lo] << shift
    return out


def _permute(x: np.ndarray, perm: Sequence[int]) -> np.ndarray:
    out = np.zeros_like(x)
    for src, dst in enumerate(perm):
        out |= ((x >> src) & 1) << dst
    return out


def _inverse_perm(perm: Sequence[int]) -> tuple[int, ...]:
    inv = [0] * len(perm)
    for src, dst in enumerate(perm):
        inv[dst] = src
    return tuple(inv)


def _as_blocks(x) -> tuple[np.ndarray, bool]:
    scalar = np.ndim(x) == 0
    return np.atleast_1d(np.asarray(x, dtype=np.int64)), scalar


def _to_last_input(spec: SpnSpec, key: SpnKey, x: np.ndarray) -> np.ndarray:
    table = spec.sbox.table
    for i in range(spec.rounds - 1):
        x = _permute(_sbox_layer(spec, x ^ key.round_keys[i], table), spec.perm)
    return x ^ key.round_keys[spec.rounds - 1]


def encrypt(spec: SpnSpec, key: SpnKey, x):
    """Encrypt one block (int) or an array of blocks."""
    key.check(spec)
    xs, scalar = _as_blocks(x)
    y = _sbox_layer(spec, _to_last_input(spec, key, xs), spec.sbox.table) ^ key.final
    return int(y[0]) if scalar else y


def decrypt(spec: SpnSpec, key: SpnKey, c):
    key.check(spec)
    ys, scalar = _as_blocks(c)
    inv = spec.sbox.inverse().table
    inv_perm = _inverse_perm(spec.perm)
    y = _sbox_layer(spec, ys ^ key.final, inv) ^ key.round_keys[spec.rounds - 1]
    for i in range(spec.rounds - 2, -1, -1):
        y = _sbox_layer(spec, _permute(y, inv_perm), inv) ^ key.round_keys[i]
    return int(y[0]) if scalar else y


@dataclass(frozen=True)
class KeyedFunction:
    """G: plaintext -> input of the last S-box layer, under a fixed key."""

    k: int
    eval: Callable = field(repr=False)

    def __call__(self, x):
        return self.eval(x)

    def truth_table(self) -> TruthTable:
        return TruthTable(self.k, self.k, self.eval(np.arange(1 << self.k, dtype=np.int64)))


def extract_g(spec: SpnSpec, key: SpnKey) -> KeyedFunction:
    key.check(spec)

    def g(x):
        xs, scalar = _as_blocks(x)
        y = _to_last_input(spec, key, xs)
        return int(y[0]) if scalar else y

    return KeyedFunction(spec.k, g)


def method2_pipeline(
    spec: SpnSpec,
    key: SpnKey,
    cfg: ParamConfig,
    rng: np.random.Generator,
    cap: int = DEFAULT_CAP,
    min_known: int = 1,
) -> list[DifferentialCandidate]:
    """BV sampling over the k components of G, then the partial intersection walk."""
    if spec.k > MAX_PIPELINE_K:
        raise ValueError(f"k={spec.k} exceeds {MAX_PIPELINE_K}")
    G = extract_g(spec, key).truth_table()
    sets = algorithm1(G, choose_p(spec.k, spec.k, cfg), rng)
    return algorithm2_partial(sets, cap, min_known)


def group_roles(spec: SpnSpec, cand: DifferentialCandidate) -> tuple[list[int], list[int]]:
    """(active, filter) S-box groups of the last round for ``cand``.

    A group whose mask covers all m bits with a zero pattern carries no key
    information: S^-1 is a bijection, so its output difference is zero iff
    the ciphertext difference is. Such groups filter pairs; every other
    group touched by the mask is guessed.
    """
    lo = (1 << spec.m) - 1
    active, filters = [], []
    for g in range(spec.l):
        mg = (cand.mask >> (g * spec.m)) & lo
        dg = (cand.dy >> (g * spec.m)) & lo
        if not mg:
            continue
        if mg == lo and dg == 0:
            filters.append(g)
        else:
            active.append(g)
    return active, filters


def _guessed_bits(spec: SpnSpec, cand: DifferentialCandidate, active: Sequence[int]) -> int:
    lo = (1 << spec.m) - 1
    return sum(bin((cand.mask >> (g * spec.m)) & lo).count("1") for g in active)


@dataclass(frozen=True)
class SubkeyGuess:
    value: int  # final-key bits of the active groups, in place; other groups zero
    nibbles: tuple[tuple[int, int], ...]  # (group, guessed value)
    counter: int

    def to_json(self) -> dict:
        return {"value": self.value, "nibbles": [list(n) for n in self.nibbles], "counter": self.counter}


def recover_last_round_subkey(
    spec: SpnSpec,
    enc_oracle: Callable[[np.ndarray], np.ndarray],
    cand: DifferentialCandidate,
    num_pairs: int,
    rng: np.random.Generator,
    max_groups: int = DEFAULT_MAX_GROUPS,
) -> list[SubkeyGuess]:
    """Count, for every guess of the active final-key groups, the chosen-plaintext
    pairs whose partially decrypted difference matches ``cand`` on the mask.

    Sorted by counter descending, then by ``value`` ascending.
    """
    if cand.mask == 0:
        raise ValueError("candidate mask is empty")
    if num_pairs < 1:
        raise ValueError(f"num_pairs must be >= 1, got {num_pairs}")
    active, filters = group_roles(spec, cand)
    if len(active) > max_groups:
        raise GuessSpaceTooLarge(len(active), max_groups)
    if not active:
        raise ValueError("candidate fixes no key-dependent output bits")

    lo = (1 << spec.m) - 1
    inv = spec.sbox.inverse().table
    x = rng.integers(0, 1 << spec.k, size=num_pairs, dtype=np.int64)
    c1 = np.asarray(enc_oracle(x), dtype=np.int64)
    c2 = np.asarray(enc_oracle(x ^ cand.dx), dtype=np.int64)

    keep = np.ones(num_pairs, dtype=bool)
    for g in filters:
        s = g * spec.m
        keep &= ((c1 >> s) & lo) == ((c2 >> s) & lo)

    guesses = np.arange(1 << spec.m, dtype=np.int64)[:, None]
    hits = keep[None, :]
    values = np.zeros(1, dtype=np.int64)
    for g in active:
        s = g * spec.m
        u = inv[((c1 >> s) & lo)[None, :] ^ guesses] ^ inv[((c2 >> s) & lo)[None, :] ^ guesses]
        match = (u & ((cand.mask >> s) & lo)) == ((cand.dy >> s) & lo)
        # Earlier (lower) groups vary slowest here; the final sort fixes the order anyway.
        hits = (hits[:, None, :] & match[None, :, :]).reshape(-1, num_pairs)
        values = (values[:, None] | (guesses[:, 0] << s)[None, :]).reshape(-1)
    counters = hits.sum(axis=1)

    order = np.lexsort((values, -counters))
    out = []
    for idx in order.tolist():
        v = int(values[idx])
        nibbles = tuple((g, (v >> (g * spec.m)) & lo) for g in active)
        out.append(SubkeyGuess(v, nibbles, int(counters[idx])))
    return out


def default_num_pairs(probability: Fraction | float) -> int:
    if probability <= 0:
        raise ValueError("probability must be positive")
    return math.ceil(8 / Fraction(probability))


@dataclass
class AttackResult:
    p: int
    candidates: int
    candidate: DifferentialCandidate | None = None
    probability: Fraction | None = None
    num_pairs: int = 0
    ranking: list[SubkeyGuess] = field(default_factory=list)
    true_value: int | None = None

    @property
    def success(self) -> bool:
        """True subkey bits are the first entry of the ranking."""
        return bool(self.ranking) and self.ranking[0].value == self.true_value

    @property
    def true_rank(self) -> int | None:
        """1 + number of guesses with a strictly larger counter."""
        for guess in self.ranking:
            if guess.value == self.true_value:
                return 1 + sum(1 for g in self.ranking if g.counter > guess.counter)
        return None

    def to_json(self, top: int | None = None) -> dict:
        ranking = self.ranking if top is None else self.ranking[:top]
        return {
            "p": self.p,
            "candidates": self.candidates,
            "candidate": None if self.candidate is None else self.candidate.to_json(),
            "probability": None if self.probability is None else str(self.probability),
            "num_pairs": self.num_pairs,
            "true_value": self.true_value,
            "success": self.success,
            "true_rank": self.true_rank,
            "ranking": [g.to_json() for g in ranking],
        }


def run_attack(
    spec: SpnSpec,
    key: SpnKey,
    cfg: ParamConfig,
    rng: np.random.Generator,
    num_pairs: int | None = None,
    cap: int = DEFAULT_CAP,
    min_known: int = 1,
    max_groups: int = DEFAULT_MAX_GROUPS,
) -> AttackResult:
    """Full attack: candidates from G, exact verification, then key ranking.

    Among candidates with one to ``max_groups`` active last-round groups, the
    one used has the highest probability, then the fewest active groups, then
    the most known bits inside them. When no candidate is usable the result
    has an empty ranking.
    """
    bv_rng, pair_rng = rng.spawn(2)
    cands = method2_pipeline(spec, key, cfg, bv_rng, cap, min_known)
    result = AttackResult(p=choose_p(spec.k, spec.k, cfg), candidates=len(cands))
    G = extract_g(spec, key).truth_table()
    usable = []
    for v in verify_candidates(G, cands):
        active, _ = group_roles(spec, v.candidate)
        if v.probability > 0 and 1 <= len(active) <= max_groups:
            usable.append((-v.probability, len(active), -_guessed_bits(spec, v.candidate, active), v))
    if not usable:
        return result
    best = min(usable, key=lambda t: t[:3] + (t[3].candidate,))[3]
    result.candidate, result.probability = best.candidate, best.probability

    active, _ = group_roles(spec, result.candidate)
    result.true_value = key.final & sum(((1 << spec.m) - 1) << (g * spec.m) for g in active)
    result.num_pairs = num_pairs if num_pairs is not None else default_num_pairs(result.probability)
    result.ranking = recover_last_round_subkey(
        spec, lambda xs: encrypt(spec, key, xs), result.candidate, result.num_pairs, pair_rng, max_groups
    )
    return result
