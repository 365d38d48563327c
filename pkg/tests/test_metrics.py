import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsefoot.core import Command
from sparsefoot.errors import ShapeMismatchError, TerrainMismatchError, ValidationError
from sparsefoot.metrics import (edge_violation_counts, foothold_kde, kde_grid, mean_edge_violation,
                                reconstruction_error, silverman_bandwidth, success_rate,
                                traversing_rate)
from sparsefoot.perception import edge_distance_field
from sparsefoot.terrain import TerrainSpec, generate
from sparsefoot.walker import ContactEvent, EpisodeLog, Outcome, StepRecord, run_episode

from .oracles import naive_kde


def fake_log(outcome, dist, fp="x", contacts=()):
    steps = [StepRecord(0.0, (0, 0, 0.3, 0), (1, 0, 0), [(0, 0, 0)] * 4, [True] * 4, list(contacts))]
    return EpisodeLog(steps, Outcome(outcome), dist, 6.0, 0.02, 0, fp)


def test_success_rate_example():
    logs = [fake_log("success", 6.0)] * 3 + [fake_log("fall", 2.0), fake_log("timeout", 5.0)]
    assert success_rate(logs, 6.0) == pytest.approx(0.6)


def test_traversing_rate_example():
    mean, std = traversing_rate([fake_log("success", 6.0), fake_log("fall", 3.0)])
    assert (mean, std) == pytest.approx((0.75, 0.25))


def test_rates_reject_empty():
    with pytest.raises(ValidationError):
        success_rate([], 6.0)
    with pytest.raises(ValidationError):
        traversing_rate([])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 6), min_size=1, max_size=20), st.lists(st.floats(0, 6), min_size=1, max_size=20))
def test_rates_recombine_over_concatenation(a, b):
    la = [fake_log("success" if d == 6 else "fall", d) for d in a]
    lb = [fake_log("success" if d == 6 else "fall", d) for d in b]
    sa, sb, sab = success_rate(la, 6.0), success_rate(lb, 6.0), success_rate(la + lb, 6.0)
    assert sab == pytest.approx((sa * len(a) + sb * len(b)) / (len(a) + len(b)), abs=1e-12)
    ma, mb, mab = traversing_rate(la)[0], traversing_rate(lb)[0], traversing_rate(la + lb)[0]
    assert mab == pytest.approx((ma * len(a) + mb * len(b)) / (len(a) + len(b)), abs=1e-12)


@pytest.fixture(scope="module")
def stones():
    hf = generate(TerrainSpec("stones", 4, "high", seed=6))
    return hf, edge_distance_field(hf)


def test_walker_logs_have_zero_mev(stones):
    hf, fe = stones
    logs = [run_episode(hf, Command(1.0, 0.0, 0.0), 10.0, s, field_e=fe) for s in range(5)]
    assert mean_edge_violation(logs, fe) == 0.0


def _boundary_contacts(fe, n):
    cells = np.argwhere((fe.distances > 0) & (fe.distances <= 0.025))[:n]
    return [ContactEvent(0, fe.cell_center(i, j) + (0.0,), (int(i), int(j)), float(fe.distances[i, j]))
            for i, j in cells]


def test_boundary_contacts_all_violate(stones):
    _, fe = stones
    log = fake_log("fall", 1.0, fe.source_fingerprint, _boundary_contacts(fe, 25))
    assert mean_edge_violation([log], fe) == 1.0


def test_mev_threshold_monotone(stones):
    hf, fe = stones
    logs = [run_episode(hf, Command(1.0, 0.0, 0.0), 10.0, 2, field_e=fe),
            fake_log("fall", 1.0, fe.source_fingerprint, _boundary_contacts(fe, 10))]
    values = [mean_edge_violation(logs, fe, t) for t in (0.0, 0.025, 0.05, 0.1, 0.2)]
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_mev_errors(stones):
    _, fe = stones
    with pytest.raises(TerrainMismatchError):
        edge_violation_counts([fake_log("fall", 1.0, "other")], fe)
    with pytest.raises(ValidationError):
        mean_edge_violation([fake_log("fall", 1.0, fe.source_fingerprint)], fe)


def test_kde_single_point_peaks_at_point():
    xs, ys = kde_grid((0.0, 0.0), 0.2, 0.005)
    d, _, _, h = foothold_kde([(0.0, 0.0)], 0.05, (xs, ys))
    a, b = np.unravel_index(np.argmax(d), d.shape)
    assert (xs[a], ys[b]) == (0.0, 0.0)
    assert d[a, b] == pytest.approx(1.0 / (2 * math.pi * 0.05 ** 2))


def test_kde_mirror_symmetry():
    pts = np.array([(0.03, 0.01), (-0.03, 0.01), (0.02, -0.04), (-0.02, -0.04)])
    xs, ys = kde_grid((0.0, 0.0), 0.3, 0.005)
    d = foothold_kde(pts, 0.04, (xs, ys))[0]
    assert np.max(np.abs(d - d[::-1, :])) <= 1e-9 * d.max()


def test_kde_integrates_to_one(rng):
    pts = rng.normal(scale=0.05, size=(200, 2))
    d, xs, ys, h = foothold_kde(pts)
    step = xs[1] - xs[0]
    assert d.sum() * step * step == pytest.approx(1.0, abs=0.02)
    assert h == pytest.approx(silverman_bandwidth(pts))


def test_kde_permutation_invariant(rng):
    pts = rng.normal(scale=0.05, size=(50, 2))
    a = foothold_kde(pts)
    b = foothold_kde(pts[rng.permutation(50)])
    assert a[0].tobytes() == b[0].tobytes() and a[3] == b[3]


def test_kde_matches_naive_sum(rng):
    pts = rng.normal(scale=0.05, size=(12, 2))
    xs, ys = kde_grid((0.0, 0.0), 0.1, 0.02)
    d = foothold_kde(pts, 0.03, (xs, ys))[0]
    assert np.allclose(d, naive_kde(pts, 0.03, xs, ys), rtol=1e-12, atol=1e-12)


def test_kde_errors():
    with pytest.raises(ValidationError):
        foothold_kde(np.zeros((0, 2)))
    with pytest.raises(ValidationError):
        foothold_kde([(0.0, 0.0)], bandwidth=0.0)
    with pytest.raises(ValidationError):
        foothold_kde([(np.nan, 0.0)])


def test_silverman_fallback_for_degenerate_sets():
    assert silverman_bandwidth(np.zeros((5, 2))) == 0.05
    assert silverman_bandwidth(np.array([[1.0, 2.0]])) == 0.05


def test_reconstruction_error_examples():
    z = np.zeros((32, 16))
    assert reconstruction_error(z, z) == (0.0, 0.0)
    assert reconstruction_error(z + 0.02, z) == pytest.approx((0.02, 0.02), abs=1e-15)
    with pytest.raises(ShapeMismatchError):
        reconstruction_error(z, np.zeros((16, 32)))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32))
def test_rmse_dominates_mae(seed):
    rng = np.random.default_rng(seed)
    mae, rmse = reconstruction_error(rng.normal(size=(8, 8)), rng.normal(size=(8, 8)))
    assert rmse >= mae - 1e-15 and mae >= 0.0
