import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsefoot.config import ScheduleConfig
from sparsefoot.errors import ValidationError
from sparsefoot.schedulers import (ADVANCED, BASIC, P_CAP, ScheduleState, adasmpl_probability,
                                   assign_terrain, assign_terrains, curriculum_probability,
                                   sample_command, sample_ground_truth_substitution,
                                   update_difficulty)
from sparsefoot.terrain import Family

returns = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=2, max_size=50)


def test_adasmpl_constant_window():
    assert adasmpl_probability([5, 5, 5, 5]) == 0.0


def test_adasmpl_hand_value():
    assert adasmpl_probability([1, 3]) == pytest.approx(0.46211715726, abs=1e-9)
    assert adasmpl_probability([1, 3]) == pytest.approx(math.tanh(0.5), abs=1e-15)


def test_adasmpl_zero_mean_and_errors():
    assert adasmpl_probability([-1, 1]) == P_CAP
    with pytest.raises(ValidationError):
        adasmpl_probability([1.0])
    with pytest.raises(ValidationError):
        adasmpl_probability([1.0, np.nan])


@settings(max_examples=200, deadline=None)
@given(returns)
def test_adasmpl_strictly_below_one(r):
    p = adasmpl_probability(r)
    assert 0.0 <= p < 1.0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0.1, 100), min_size=2, max_size=30), st.sampled_from([0.1, 10.0, 3.7]))
def test_adasmpl_scale_invariance(r, c):
    assert adasmpl_probability(np.array(r) * c) == pytest.approx(adasmpl_probability(r), abs=1e-12)


def test_substitution_extremes_and_rate():
    rng = np.random.default_rng(0)
    assert not any(sample_ground_truth_substitution(0.0, rng) for _ in range(1000))
    assert all(sample_ground_truth_substitution(1.0, rng) for _ in range(1000))
    hits = sum(sample_ground_truth_substitution(0.5, rng) for _ in range(100_000))
    assert abs(hits / 100_000 - 0.5) <= 0.01
    with pytest.raises(ValidationError):
        sample_ground_truth_substitution(1.5, rng)


def test_substitution_deterministic():
    a = [sample_ground_truth_substitution(0.3, r) for r in [np.random.default_rng(4)] for _ in range(50)]
    b = [sample_ground_truth_substitution(0.3, r) for r in [np.random.default_rng(4)] for _ in range(50)]
    assert a == b


def test_curriculum_endpoints():
    assert curriculum_probability(2000, 2000, 6000, 0.9) == 0.0
    assert curriculum_probability(0, 2000, 6000, 0.9) == 0.0
    assert curriculum_probability(4000, 2000, 6000, 0.9) == 0.45
    assert curriculum_probability(6000, 2000, 6000, 0.9) == 0.9
    assert curriculum_probability(10**6, 2000, 6000, 0.9) == 0.9
    with pytest.raises(ValidationError):
        curriculum_probability(0, 10, 10, 0.9)


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e4, 1e5), st.floats(0, 1e3))
def test_curriculum_monotone(t, dt):
    assert curriculum_probability(t + dt, 2000, 6000, 0.9) >= curriculum_probability(t, 2000, 6000, 0.9)


@pytest.mark.parametrize("level,frac,expected", [(10, 1.0, 10), (4, 0.9, 5), (4, 0.2, 3),
                                                 (1, 0.0, 1), (4, 0.8, 4), (4, 0.4, 4)])
def test_update_difficulty(level, frac, expected):
    assert update_difficulty(level, frac) == expected


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 10), st.floats(0, 1))
def test_update_difficulty_single_step(level, frac):
    new = update_difficulty(level, frac)
    assert abs(new - level) <= 1 and 1 <= new <= 10


def test_command_distribution():
    rng = np.random.default_rng(7)
    n = 100_000
    zero = 0
    for _ in range(n):
        c = sample_command(rng)
        assert c.vy == 0.0
        assert not 0.0 < c.vx < 0.3
        if c.vx == 0.0:
            zero += 1
            assert -1.2 <= c.wyaw <= 1.2
        else:
            assert c.wyaw == 0.0
    assert abs(zero / n - 0.2) <= 0.01


def _state(p):
    # iteration chosen so the ramp yields p exactly
    cfg = ScheduleConfig()
    s = ScheduleState(cfg)
    s.iteration = cfg.t_start if p == 0.0 else cfg.t_end
    if p == 1.0:
        s.config = ScheduleConfig(p_max=1.0)
    return s


def test_assign_never_advanced_at_zero():
    s, rng = _state(0.0), np.random.default_rng(1)
    assert all(assign_terrain(s, rng) in BASIC for _ in range(10_000))


def test_assign_uniform_thirds_when_always_advanced():
    s, rng = _state(1.0), np.random.default_rng(2)
    assert s.p_advance == 1.0
    counts = Counter(assign_terrain(s, rng) for _ in range(100_000))
    assert set(counts) == set(ADVANCED)
    for v in counts.values():
        assert abs(v / 100_000 - 1 / 3) <= 0.02


def test_assign_deterministic_and_gap_quota():
    s = _state(0.0)
    a = assign_terrains(s, np.random.default_rng(5), 50)
    b = assign_terrains(s, np.random.default_rng(5), 50)
    assert a == b
    assert sum(1 for fam, _ in a if fam is Family.GAPS) == 10
    assert all(fam is not Family.GAPS for fam, _ in a[10:])


def test_schedule_state_window_and_levels():
    s = ScheduleState(ScheduleConfig(window=3))
    assert s.p_smpl == P_CAP
    for r in [1.0, 100.0, 1.0, 3.0]:
        s.record_return(r)
    assert list(s.returns) == [100.0, 1.0, 3.0]
    assert s.report_episode(0, 0.9) == 2
    assert s.level(1) == 1
    s.step()
    assert s.iteration == 1
    with pytest.raises(ValidationError):
        ScheduleState(ScheduleConfig(window=1))
