from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from npg_search.objectives import ContractError, ObjectiveSpec, ParetoArchive
from npg_search.rewards import AdcSpec, DesirabilitySpec, adc_reward, adf_reward, desirability

UNIT = ObjectiveSpec(("max", "min"), ("quality", "params"), ((0, 1), (0, 1)))


def test_desirability_examples():
    d = DesirabilitySpec(1.05, 0.95)
    assert desirability(1.05, d) == 1.0
    assert desirability(0.1, d) == 0.0
    assert desirability(2.0, d) == 0.0
    assert desirability(1.525, d) == pytest.approx(0.5, abs=1e-15)
    assert desirability(5.0, d) == 0.0
    with pytest.raises(ContractError):
        DesirabilitySpec(1.0, 0.0)


@given(st.floats(-3, 3), st.floats(0.01, 2))
def test_desirability_symmetric(x, delta):
    d = DesirabilitySpec(0.0, delta)
    assert desirability(x, d) == desirability(-x, d)
    assert 0.0 <= desirability(x, d) <= 1.0


def test_adf_reward_examples():
    assert adf_reward(0.73, [1.2], [DesirabilitySpec(1.2, 0.19)]) == 0.73
    assert adf_reward(0.9, [1.6], [DesirabilitySpec(1.2, 0.19)]) == 0.0
    specs = [DesirabilitySpec(1.0, 0.2), DesirabilitySpec(0.1, 0.04)]
    assert adf_reward(0.8, [1.1, 0.08], specs) == pytest.approx(0.2, abs=1e-12)
    with pytest.raises(ContractError):
        adf_reward(0.8, [1.0], specs)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 2))
def test_adf_reward_monotone_in_quality(q1, q2, f):
    spec = [DesirabilitySpec(1.0, 0.5)]
    lo, hi = sorted((q1, q2))
    assert adf_reward(lo, [f], spec) <= adf_reward(hi, [f], spec)


def test_adc_reward_examples():
    spec = AdcSpec((0.01, 0.01), c=10)
    assert adc_reward((0.5, 0.5), ParetoArchive(UNIT), spec) == 0.0
    four = ParetoArchive(UNIT, [((0,), (0.5, 0.5)), ((1,), (0.4, 0.4)), ((2,), (0.9, 0.95)), ((3,), (0.2, 0.1))])
    assert adc_reward((0.6, 0.35), four, spec) == pytest.approx(0.537050, abs=1e-6)
    three = ParetoArchive(UNIT, [((0,), (0.5, 0.5)), ((1,), (0.6, 0.6)), ((2,), (0.7, 0.7))])
    # (0.41, 0.8) is dominated by all three; only (0.7, 0.7) lies inside its box.
    spec_box = AdcSpec((0.3, 0.15), c=10)
    assert three.stats((0.41, 0.8), spec_box.epsilon) == (3, 0, 1)
    assert adc_reward((0.41, 0.8), three, spec_box) == pytest.approx(-0.379949, abs=1e-6)


coord = st.integers(0, 8).map(lambda x: x / 8)


@given(st.lists(st.tuples(coord, coord), max_size=15), st.tuples(coord, coord))
def test_adc_reward_sign_matches_dominance(points, cand):
    from npg_search.objectives import dominates, extract_pareto_front

    archive = extract_pareto_front([((i,), p) for i, p in enumerate(points)], UNIT)
    r = adc_reward(cand, archive, AdcSpec((0.1, 0.1)))
    dominated = any(dominates(v, cand, UNIT) for _, v in archive)
    assert (r < 0) == dominated
    assert -1 < r < 1


def test_adc_reward_nondecreasing_in_archive_size():
    spec = AdcSpec((0.0, 0.0), c=10)
    entries = [((i,), (0.1 * i, 0.1 * i)) for i in range(1, 9)]
    cand = (0.95, 0.05)  # dominates every entry
    prev = -1.0
    for n in range(len(entries) + 1):
        r = adc_reward(cand, ParetoArchive(UNIT, entries[:n]), spec)
        assert r >= prev
        prev = r
    # Fixed dominated count, growing archive: incomparable entries only.
    base = [((0,), (0.5, 0.5))]
    extra = [((i,), (0.5 + 0.01 * i, 0.5 + 0.01 * i)) for i in range(1, 6)]
    cand = (0.51, 0.45)
    rs = [adc_reward(cand, ParetoArchive(UNIT, base + extra[:k]), spec) for k in range(6)]
    assert all(b >= a for a, b in zip(rs, rs[1:]))


def test_adc_spec_validation():
    with pytest.raises(ContractError):
        AdcSpec((0.1, -0.1))
    with pytest.raises(ContractError):
        AdcSpec((0.1, 0.1), c=0)
