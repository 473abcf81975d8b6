import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import ddt_loops
from qdiff.boolfn import TruthTable, fixture_sbox, linear_component, random_sbox
from qdiff.differential import DifferentialCandidate, ParamConfig, algorithm1, algorithm2_full
from qdiff.oracle import (
    ddt,
    ddt_by_row,
    differential_probability,
    hoeffding_bound,
    validate_joint_bound,
    validate_theorem1,
    verify_candidates,
)
from qdiff.rng import derive_rng


def test_identity_ddt():
    counts = ddt(fixture_sbox("identity4")).counts
    assert np.array_equal(counts, 16 * np.eye(16, dtype=np.int64))


def test_present_ddt_max_is_four():
    assert ddt(fixture_sbox("present")).max_nontrivial() == 4


@pytest.mark.parametrize("name", ["identity4", "linear4", "ls4", "present"])
def test_ddt_matches_loops_on_fixtures(name):
    F = fixture_sbox(name)
    assert ddt(F).counts.tolist() == ddt_loops(F.table.tolist(), 4, 4)


@settings(max_examples=40, deadline=None)
@given(m=st.integers(1, 6), n=st.integers(1, 6), seed=st.integers(0, 2**32))
def test_ddt_invariants_and_cross_check(m, n, seed):
    F = random_sbox(m, n, seed)
    d = ddt(F)
    assert d == ddt_by_row(F)
    assert d.counts.tolist() == ddt_loops(F.table.tolist(), m, n)
    assert np.all(d.counts.sum(axis=1) == 1 << m)
    assert d.counts[0, 0] == 1 << m and not d.counts[0, 1:].any()
    assert np.all(d.counts % 2 == 0)


def test_ddt_size_bound():
    with pytest.raises(ValueError):
        ddt(TruthTable(20, 10, np.zeros(1 << 20, dtype=np.int64)))


def test_ddt_csv():
    lines = ddt(fixture_sbox("identity4")).to_csv().splitlines()
    assert lines[0].startswith("a,0,1,")
    assert lines[1] == "0,16" + ",0" * 15


def test_differential_probability_examples():
    ident = fixture_sbox("identity4")
    assert differential_probability(ident, DifferentialCandidate(5, 5, 15)) == 1
    assert differential_probability(fixture_sbox("present"), DifferentialCandidate(0, 0, 15)) == 1
    assert differential_probability(fixture_sbox("ls4"), DifferentialCandidate(8, 1, 15)) == 1


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32), data=st.data())
def test_probability_agrees_with_ddt(seed, data):
    F = random_sbox(5, 4, seed)
    counts = ddt(F).counts
    dx = data.draw(st.integers(0, 31))
    dy = data.draw(st.integers(0, 15))
    assert differential_probability(F, DifferentialCandidate(dx, dy, 15)) == Fraction(int(counts[dx, dy]), 32)
    # Partial mask: sum over the completions of the unknown bits.
    mask = data.draw(st.integers(0, 15))
    dy &= mask
    expected = sum(int(counts[dx, b]) for b in range(16) if b & mask == dy)
    assert differential_probability(F, DifferentialCandidate(dx, dy, mask)) == Fraction(expected, 32)


def test_verify_candidates_sorted_and_flagged():
    F = fixture_sbox("present")
    cands = [DifferentialCandidate(a, b, 15) for a in (1, 9) for b in range(16)]
    rows = verify_candidates(F, cands)
    probs = [r.probability for r in rows]
    assert probs == sorted(probs, reverse=True)
    assert all(r.below_half for r in rows)
    assert verify_candidates(F, []) == []


def test_verify_linear_candidates():
    F = fixture_sbox("linear4")
    rows = verify_candidates(F, algorithm2_full(algorithm1(F, 20, derive_rng(0))))
    assert len(rows) == 15
    assert all(r.probability == 1 and not r.below_half for r in rows)


def test_hoeffding_bound_values():
    assert hoeffding_bound(64, 0.25) == pytest.approx(1 - math.exp(-8))
    assert hoeffding_bound(0, 0.25) == 0
    assert all(hoeffding_bound(p, 0.1) <= hoeffding_bound(p + 1, 0.1) for p in range(200))


def _linear_sampler(m, n, rng):
    return TruthTable(m, 1, linear_component(m, int(rng.integers(0, 1 << m))).bits)


def _noisy_linear_sampler(m, n, rng):
    # A linear function with 8 flipped points: every differential is within 1/16 of 1.
    bits = np.array(linear_component(m, int(rng.integers(1, 1 << m))).bits)
    bits[rng.choice(1 << m, 8, replace=False)] ^= 1
    return TruthTable(m, 1, bits)


def test_single_bound_linear_functions_never_violate():
    rep = validate_theorem1(6, 20, 16, 0.25, seed=1, sampler=_linear_sampler)
    assert rep.checked > 0 and rep.violations == 0 and rep.empirical_rate == 1


def test_single_bound_noisy_linear_is_not_vacuous():
    rep = validate_theorem1(8, 30, 64, 0.25, seed=2, sampler=_noisy_linear_sampler)
    assert rep.checked >= 30
    assert rep.violations == 0


def test_single_bound_small_p_does_violate():
    # p = 2 cannot rule out much; expect violations at a strict epsilon.
    rep = validate_theorem1(6, 20, 2, 0.05, seed=3)
    assert rep.violations > 0
    assert rep.empirical_rate < 1


def test_single_bound_input_checks():
    with pytest.raises(ValueError):
        validate_theorem1(8, 1, 8, 1.0, seed=0)
    with pytest.raises(ValueError):
        validate_theorem1(13, 1, 8, 0.2, seed=0)


def test_single_bound_deterministic():
    a = validate_theorem1(6, 10, 4, 0.25, seed=9)
    b = validate_theorem1(6, 10, 4, 0.25, seed=9)
    assert a == b


def test_joint_with_one_output_is_single_bound():
    cfg = ParamConfig(c1=4)
    joint = validate_joint_bound(6, 1, 25, cfg, seed=5)
    single = validate_theorem1(6, 25, joint.p, 1 / 4, seed=5)
    assert (joint.checked, joint.violations, joint.skipped) == (single.checked, single.violations, single.skipped)
    assert joint.threshold == single.threshold


def test_joint_bounds_reported():
    rep = validate_joint_bound(8, 4, 3, ParamConfig(), seed=0)
    assert rep.p == 109 and rep.epsilon == 1 / 8 and rep.threshold == 0.5
    assert rep.joint_bound >= rep.union_bound >= rep.floor - 1e-12
    assert rep.floor == pytest.approx(1 - math.exp(-2))


def test_joint_linear_sboxes_never_violate():
    def sampler(m, n, rng):
        return fixture_sbox("linear4")

    rep = validate_joint_bound(4, 4, 5, ParamConfig(), seed=0, sampler=sampler)
    assert rep.checked == 5 * 15 and rep.violations == 0


def test_skips_are_counted():
    def constant(m, n, rng):
        return TruthTable(m, 1, np.zeros(1 << m, dtype=np.int64))

    rep = validate_theorem1(8, 4, 8, 0.25, seed=0, cap=4, sampler=constant)
    assert rep.skipped == 4 and rep.checked == 0
