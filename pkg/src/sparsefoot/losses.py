"""Loss formulas for the estimator and reconstruction heads, with analytic
gradients and a central-difference checker."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FOOT_PATCH, HM_LENGTH, HM_WIDTH, N_FEET, OBS_DIM
from .errors import ShapeMismatchError, ValidationError


@dataclass(frozen=True)
class DiagGaussian:
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=np.float64))
        sigma = np.atleast_1d(np.asarray(self.sigma, dtype=np.float64))
        if mu.shape != sigma.shape:
            raise ShapeMismatchError("mu and sigma must share a shape")
        if not np.all(sigma > 0):
            raise ValidationError("sigma must be strictly positive")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)


def kl_to_standard_normal(q: DiagGaussian) -> float:
    """KL divergence of a diagonal Gaussian from N(0, I)."""
    mu, s2 = q.mu, q.sigma ** 2
    return 0.5 * float(np.sum(mu ** 2 + s2 - 1.0 - np.log(s2)))


def kl_grad(q: DiagGaussian) -> tuple:
    """Gradient of :func:`kl_to_standard_normal` w.r.t. ``(mu, sigma)``."""
    return q.mu.copy(), q.sigma - 1.0 / q.sigma


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"shapes differ: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ShapeMismatchError("empty arrays")
    return a, b


def mse(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.mean((a - b) ** 2))


def l1(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.mean(np.abs(a - b)))


def mse_grad(a, b) -> np.ndarray:
    a, b = _pair(a, b)
    return 2.0 * (a - b) / a.size


def l1_grad(a, b) -> np.ndarray:
    # subgradient 0 at ties
    a, b = _pair(a, b)
    return np.sign(a - b) / a.size


def _check_shape(name, arr, shape):
    arr = np.asarray(arr, dtype=np.float64)
    if arr.shape != shape:
        raise ShapeMismatchError(f"{name} must have shape {shape}, got {arr.shape}")
    return arr


def ie_loss(kl, next_obs_pred, next_obs, v_hat, v, hf_hat, hf, hb_hat, hb) -> tuple:
    """Unweighted sum of the five estimator terms.

    ``kl`` is either a precomputed scalar or a :class:`DiagGaussian`.
    Returns ``(total, breakdown)``.
    """
    if isinstance(kl, DiagGaussian):
        kl = kl_to_standard_normal(kl)
    kl = float(kl)
    feet = (N_FEET, FOOT_PATCH, FOOT_PATCH)
    body = (HM_LENGTH, HM_WIDTH)
    breakdown = {
        "kl": kl,
        "next_obs": mse(_check_shape("next_obs_pred", next_obs_pred, (OBS_DIM,)),
                        _check_shape("next_obs", next_obs, (OBS_DIM,))),
        "velocity": mse(_check_shape("v_hat", v_hat, (3,)), _check_shape("v", v, (3,))),
        "foot_heightmaps": mse(_check_shape("hf_hat", hf_hat, feet), _check_shape("hf", hf, feet)),
        "body_heightmap": mse(_check_shape("hb_hat", hb_hat, body), _check_shape("hb", hb, body)),
    }
    total = 0.0
    for value in breakdown.values():
        total += value
    return total, breakdown


def tr_loss(rough, refined, target) -> tuple:
    """MSE on the rough reconstruction plus L1 on the refined one."""
    body = (HM_LENGTH, HM_WIDTH)
    rough = _check_shape("rough", getattr(rough, "heights", rough), body)
    refined = _check_shape("refined", getattr(refined, "heights", refined), body)
    target = _check_shape("target", getattr(target, "heights", target), body)
    breakdown = {"rough_mse": mse(rough, target), "refined_l1": l1(refined, target)}
    total = breakdown["rough_mse"] + breakdown["refined_l1"]
    return total, breakdown


def grad_check(f, x, analytic_grad, eps: float = 1e-5, skip=None) -> float:
    """Largest relative deviation between ``analytic_grad`` and a central
    difference of ``f`` at ``x``.

    Coordinates flagged in ``skip`` (e.g. kinks of L1) are ignored.  A
    coordinate where both gradients are exactly zero contributes zero.
    """
    x = np.array(x, dtype=np.float64)
    g = np.asarray(analytic_grad, dtype=np.float64).reshape(x.shape)
    skip = np.zeros(x.shape, dtype=bool) if skip is None else np.asarray(skip, dtype=bool)
    worst = 0.0
    flat = x.reshape(-1)
    for k in range(flat.size):
        if skip.reshape(-1)[k]:
            continue
        orig = flat[k]
        flat[k] = orig + eps
        fp = f(x)
        flat[k] = orig - eps
        fm = f(x)
        flat[k] = orig
        num = (fp - fm) / (2.0 * eps)
        ana = g.reshape(-1)[k]
        denom = max(abs(num), abs(ana))
        if denom == 0.0:
            continue
        worst = max(worst, abs(num - ana) / denom)
    return worst


def run_gradient_checks(seed: int = 0, n: int = 100, eps: float = 1e-5, tol: float = 1e-5) -> list:
    """Gradient checks for KL, MSE and L1 on ``n`` random inputs each.

    Returns rows ``(name, worst_relative_error, passed)``.
    """
    rng = np.random.default_rng(seed)
    rows = []
    worst = 0.0
    for _ in range(n):
        mu = rng.normal(size=4)
        sigma = rng.uniform(0.5, 2.0, size=4)
        g_mu, g_sigma = kl_grad(DiagGaussian(mu, sigma))
        worst = max(worst,
                    grad_check(lambda m: kl_to_standard_normal(DiagGaussian(m, sigma)), mu, g_mu, eps),
                    grad_check(lambda s: kl_to_standard_normal(DiagGaussian(mu, s)), sigma, g_sigma, eps))
    rows.append(("kl", worst, worst < tol))
    worst = 0.0
    for _ in range(n):
        a, b = rng.normal(size=(2, 8))
        worst = max(worst, grad_check(lambda z: mse(z, b), a, mse_grad(a, b), eps))
    rows.append(("mse", worst, worst < tol))
    worst = 0.0
    for _ in range(n):
        a, b = rng.normal(size=(2, 8))
        near_kink = np.abs(a - b) <= 2 * eps
        worst = max(worst, grad_check(lambda z: l1(z, b), a, l1_grad(a, b), eps, skip=near_kink))
    rows.append(("l1", worst, worst < tol))
    return rows
