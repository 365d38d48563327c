import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsefoot.errors import ShapeMismatchError, ValidationError
from sparsefoot.losses import (DiagGaussian, grad_check, ie_loss, kl_grad, kl_to_standard_normal, l1,
                               l1_grad, mse, mse_grad, run_gradient_checks, tr_loss)

small = st.floats(-5, 5, allow_nan=False)


def test_kl_values():
    assert kl_to_standard_normal(DiagGaussian(np.zeros(7), np.ones(7))) == 0.0
    assert kl_to_standard_normal(DiagGaussian([1.0], [1.0])) == 0.5
    assert kl_to_standard_normal(DiagGaussian([0.0], [2.0])) == pytest.approx(
        0.5 * (4 - 1 - math.log(4)), abs=1e-15)
    assert kl_to_standard_normal(DiagGaussian([0.0], [2.0])) == pytest.approx(0.806853, abs=1e-6)


def test_kl_rejects_bad_sigma():
    with pytest.raises(ValidationError):
        DiagGaussian([0.0], [0.0])
    with pytest.raises(ShapeMismatchError):
        DiagGaussian([0.0, 1.0], [1.0])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(small, st.floats(0.05, 5)), min_size=1, max_size=8))
def test_kl_non_negative(pairs):
    mu, sigma = np.array(pairs).T
    kl = kl_to_standard_normal(DiagGaussian(mu, sigma))
    assert kl >= -1e-12
    if np.all(mu == 0) and np.all(sigma == 1):
        assert abs(kl) <= 1e-12


def test_mse_l1_values():
    assert mse([0, 0], [1, 3]) == 5.0
    assert l1([0, 0], [1, 3]) == 2.0
    assert mse([0, 0], [1, 3]) >= l1([0, 0], [1, 3]) ** 2
    assert mse([1, 2], [1, 2]) == 0.0 and l1([1, 2], [1, 2]) == 0.0
    with pytest.raises(ShapeMismatchError):
        mse([1, 2], [1, 2, 3])
    with pytest.raises(ShapeMismatchError):
        l1(np.zeros((2, 2)), np.zeros(4))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(small, small), min_size=1, max_size=10))
def test_mse_l1_symmetric_non_negative(pairs):
    a, b = np.array(pairs).T
    assert mse(a, b) == mse(b, a) >= 0.0
    assert l1(a, b) == l1(b, a) >= 0.0
    # the converse fails for subnormal differences, whose squares underflow
    assert mse(a, a) == 0.0 and l1(b, b) == 0.0
    if np.array_equal(a, b):
        assert mse(a, b) == 0.0


def test_ie_loss_zero_and_velocity_only():
    obs, v = np.zeros(45), np.zeros(3)
    hf, hb = np.zeros((4, 5, 5)), np.zeros((32, 16))
    q = DiagGaussian(np.zeros(16), np.ones(16))
    total, parts = ie_loss(q, obs, obs, v, v, hf, hf, hb, hb)
    assert total == 0.0 and set(parts) == {"kl", "next_obs", "velocity", "foot_heightmaps",
                                           "body_heightmap"}
    total, parts = ie_loss(q, obs, obs, np.array([0.1, 0, 0]), v, hf, hf, hb, hb)
    assert total == pytest.approx(0.01 / 3, abs=1e-15)


def test_ie_loss_shape_errors():
    z = np.zeros
    with pytest.raises(ShapeMismatchError):
        ie_loss(0.0, z(44), z(44), z(3), z(3), z((4, 5, 5)), z((4, 5, 5)), z((32, 16)), z((32, 16)))
    with pytest.raises(ShapeMismatchError):
        ie_loss(0.0, z(45), z(45), z(3), z(3), z((4, 5, 5)), z((4, 5, 5)), z((32, 16)), z((16, 32)))


def test_tr_loss_values():
    t = np.zeros((32, 16))
    assert tr_loss(t, t, t)[0] == 0.0
    assert tr_loss(t, t + 0.05, t)[0] == pytest.approx(0.05, abs=1e-15)
    assert tr_loss(t + 0.1, t, t)[0] == pytest.approx(0.01, abs=1e-15)
    with pytest.raises(ShapeMismatchError):
        tr_loss(t, t, np.zeros((32, 15)))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32))
def test_breakdowns_sum_to_totals(seed):
    rng = np.random.default_rng(seed)
    n = rng.normal
    total, parts = ie_loss(DiagGaussian(n(size=8), rng.uniform(0.5, 2, 8)), n(size=45), n(size=45),
                           n(size=3), n(size=3), n(size=(4, 5, 5)), n(size=(4, 5, 5)),
                           n(size=(32, 16)), n(size=(32, 16)))
    assert abs(sum(parts.values()) - total) <= 1e-12
    total, parts = tr_loss(n(size=(32, 16)), n(size=(32, 16)), n(size=(32, 16)))
    assert abs(sum(parts.values()) - total) <= 1e-12


def test_grad_check_examples():
    rng = np.random.default_rng(0)
    x, b = rng.normal(size=6), rng.normal(size=6)
    assert grad_check(lambda z: mse(z, b), x, mse_grad(x, b), 1e-5) < 1e-5
    mu, sigma = np.array([0.3]), np.array([1.2])
    g_mu, g_sigma = kl_grad(DiagGaussian(mu, sigma))
    assert grad_check(lambda m: kl_to_standard_normal(DiagGaussian(m, sigma)), mu, g_mu) < 1e-5
    assert grad_check(lambda s: kl_to_standard_normal(DiagGaussian(mu, s)), sigma, g_sigma) < 1e-5
    assert grad_check(lambda z: 3.0, x, np.zeros(6)) == 0.0


def test_l1_grad_away_from_ties():
    a, b = np.array([0.5, -1.0, 2.0]), np.array([0.0, 0.0, 0.0])
    assert grad_check(lambda z: l1(z, b), a, l1_grad(a, b)) < 1e-5
    assert np.array_equal(l1_grad(b, b), np.zeros(3))


def test_gradient_check_suite():
    rows = run_gradient_checks(seed=0, n=100)
    assert [r[0] for r in rows] == ["kl", "mse", "l1"]
    assert all(ok for _, _, ok in rows)
