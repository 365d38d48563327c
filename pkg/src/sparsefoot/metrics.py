"""Evaluation metrics over collections of episode logs."""

from __future__ import annotations

import math

import numpy as np

from .errors import ShapeMismatchError, TerrainMismatchError, ValidationError
from .perception import EdgeDistanceField
from .walker import EpisodeLog, Outcome

DEFAULT_MEV_THRESHOLD = 0.025
FALLBACK_BANDWIDTH = 0.05


def _nonempty(logs) -> list:
    logs = list(logs)
    if not logs:
        raise ValidationError("metric needs at least one episode")
    return logs


def success_rate(logs, goal: float) -> float:
    """Fraction of episodes that reached ``goal`` meters."""
    logs = _nonempty(logs)
    ok = sum(1 for lg in logs if lg.outcome is Outcome.SUCCESS and lg.distance_traversed >= goal - 1e-9)
    return ok / len(logs)


def traversing_rate(logs) -> tuple:
    """Mean and population std of ``distance_traversed / total_distance``."""
    logs = _nonempty(logs)
    r = np.array([lg.traversed_fraction for lg in logs], dtype=np.float64)
    return float(np.mean(r)), float(np.std(r))


def edge_violation_counts(logs, field_e: EdgeDistanceField,
                          threshold: float = DEFAULT_MEV_THRESHOLD) -> tuple:
    """``(violations, contacts)`` with distances read from ``field_e``.

    Raises:
        TerrainMismatchError: if a log was recorded on another terrain.
    """
    bad = total = 0
    for lg in logs:
        if lg.terrain_fingerprint != field_e.source_fingerprint:
            raise TerrainMismatchError(
                f"log terrain {lg.terrain_fingerprint} differs from field {field_e.source_fingerprint}")
        for c in lg.contacts():
            i, j = c.cell
            total += 1
            if field_e.distances[i, j] <= threshold:
                bad += 1
    return bad, total


def mean_edge_violation(logs, field_e: EdgeDistanceField,
                        threshold: float = DEFAULT_MEV_THRESHOLD) -> float:
    """Fraction of logged contacts within ``threshold`` of a terrain edge."""
    bad, total = edge_violation_counts(_nonempty(logs), field_e, threshold)
    if total == 0:
        raise ValidationError("logs contain no contact events")
    return bad / total


def silverman_bandwidth(points: np.ndarray) -> float:
    """Isotropic rule-of-thumb bandwidth ``n^(-1/6) * sigma`` for 2-D data,
    with ``sigma`` the root mean per-axis variance."""
    n = points.shape[0]
    sigma = math.sqrt(float(np.mean(np.var(points, axis=0))))
    if n < 2 or sigma == 0.0:
        return FALLBACK_BANDWIDTH
    return n ** (-1.0 / 6.0) * sigma


def kde_grid(center, half_width: float, step: float) -> tuple:
    """Axis vectors of a square grid symmetric about ``center``."""
    n = int(round(half_width / step))
    offs = np.arange(-n, n + 1) * step
    return float(center[0]) + offs, float(center[1]) + offs


def foothold_kde(contacts, bandwidth: float | None = None, grid=None) -> tuple:
    """Isotropic Gaussian KDE of 2-D foothold positions.

    Args:
        contacts: ``(n, 2)`` array-like of xy positions (extra columns ignored).
        bandwidth: kernel std in meters; Silverman's rule when ``None``.
        grid: ``(xs, ys)`` axis vectors; defaults to +-4 bandwidths around
            the contact mean at a tenth of a bandwidth.

    Returns:
        ``(density, xs, ys, bandwidth)`` with ``density[a, b]`` evaluated
        at ``(xs[a], ys[b])``.
    """
    pts = np.asarray(contacts, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] < 2:
        raise ValidationError("need at least one 2-D contact")
    pts = pts[:, :2]
    if not np.all(np.isfinite(pts)):
        raise ValidationError("contacts contain non-finite values")
    # canonical order keeps the floating-point sums permutation invariant
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
    h = silverman_bandwidth(pts) if bandwidth is None else float(bandwidth)
    if not h > 0:
        raise ValidationError("bandwidth must be positive")
    if grid is None:
        mean = pts.mean(axis=0)
        spread = float(np.max(np.abs(pts - mean))) if len(pts) > 1 else 0.0
        xs, ys = kde_grid(mean, spread + 4.0 * h, h / 10.0)
    else:
        xs = np.asarray(grid[0], dtype=np.float64)
        ys = np.asarray(grid[1], dtype=np.float64)
    kx = np.exp(-0.5 * ((xs[None, :] - pts[:, 0:1]) / h) ** 2)
    ky = np.exp(-0.5 * ((ys[None, :] - pts[:, 1:2]) / h) ** 2)
    density = (kx.T @ ky) / (len(pts) * 2.0 * math.pi * h * h)
    return density, xs, ys, h


def reconstruction_error(estimate, truth) -> tuple:
    """Per-cell ``(mae, rmse)`` in meters between two heightmaps."""
    a = np.asarray(getattr(estimate, "heights", estimate), dtype=np.float64)
    b = np.asarray(getattr(truth, "heights", truth), dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"heightmap shapes differ: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ShapeMismatchError("empty heightmaps")
    err = a - b
    return float(np.mean(np.abs(err))), float(math.sqrt(np.mean(err * err)))


def summarize(logs: list[EpisodeLog], goal: float) -> dict:
    mean, std = traversing_rate(logs)
    return {"episodes": len(logs), "success_rate": success_rate(logs, goal),
            "traversing_mean": mean, "traversing_std": std}
