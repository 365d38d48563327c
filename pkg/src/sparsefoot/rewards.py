"""Reward terms for velocity-tracking locomotion on sparse footholds.

Every term is returned raw (before weighting) together with its weight, so
callers can log the breakdown and recombine it exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT, RobotConfig
from .core import N_FEET, N_JOINTS, Command, RobotState
from .errors import ValidationError
from .perception import EdgeDistanceField

TRACKING_SIGMA = 0.25
STUMBLE_RATIO = 4.0
EDGE_BANDS = (0.025, 0.05)
EDGE_BAND_WEIGHTS = (1.0, 0.5)

WEIGHTS = {
    "lin_vel_tracking": 1.5,
    "ang_vel_tracking": 0.5,
    "lin_vel_z": -2.0,
    "ang_vel_xy": -0.05,
    "orientation": -1.0,
    "torques": -1.0e-5,
    "action_rate": -0.01,
    "smoothness": -0.01,
    "joint_power": -2.0e-5,
    "joint_accel": -2.5e-7,
    "joint_error": -0.01,
    "collision": -10.0,
    "stumble": -1.0,
    "feet_edge": -1.0,
}
TERMS = tuple(WEIGHTS)


@dataclass(frozen=True)
class RewardBreakdown:
    terms: dict
    weights: dict
    weighted_total: float

    def weighted(self) -> dict:
        return {k: self.weights[k] * self.terms[k] for k in TERMS}

    def recompute_total(self) -> float:
        total = 0.0
        for k in TERMS:
            total += self.weights[k] * self.terms[k]
        return total

    def as_row(self) -> dict:
        row = {k: self.terms[k] for k in TERMS}
        row["weighted_total"] = self.weighted_total
        return row


def _vec(name, a, size):
    arr = np.asarray(a, dtype=np.float64)
    if arr.shape != (size,):
        raise ValidationError(f"{name} must have shape ({size},)")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    return arr


def lin_vel_tracking(v_xy, cmd_xy) -> float:
    # overshooting the command is not penalized: the velocity is clipped at the command
    err = np.minimum(v_xy, cmd_xy) - cmd_xy
    return math.exp(-float(err @ err) / TRACKING_SIGMA)


def ang_vel_tracking(w_yaw: float, cmd_yaw: float) -> float:
    return math.exp(-((w_yaw - cmd_yaw) ** 2) / TRACKING_SIGMA)


def feet_edge_term(state: RobotState, field_e: EdgeDistanceField) -> float:
    """Sum over contacting feet of the band weights whose edge band contains
    the foot (raw, positive; the negative weight is applied once)."""
    total = 0.0
    for i in range(N_FEET):
        if not state.contact_state[i]:
            continue
        p = state.foot_positions[i]
        dist = field_e.distance_at(float(p[0]), float(p[1]))
        for band, w in zip(EDGE_BANDS, EDGE_BAND_WEIGHTS):
            if dist <= band:
                total += w
    return total


def compute_rewards(state: RobotState, cmd: Command, action, prev_action, prev_action2,
                    field_e: EdgeDistanceField, robot: RobotConfig = DEFAULT.robot) -> RewardBreakdown:
    a0 = _vec("action", action, N_JOINTS)
    a1 = _vec("prev_action", prev_action, N_JOINTS)
    a2 = _vec("prev_action2", prev_action2, N_JOINTS)
    q_default = _vec("default_joint_angles", robot.default_joint_angles, N_JOINTS)

    v = state.base_lin_vel
    w = state.base_ang_vel
    g = state.gravity_in_body
    tau = state.joint_torques
    f_feet = state.foot_contact_forces

    nonfoot = np.linalg.norm(state.nonfoot_contact_forces, axis=1)
    f_xy = np.linalg.norm(f_feet[:, :2], axis=1)

    terms = {
        "lin_vel_tracking": lin_vel_tracking(v[:2], np.array([cmd.vx, cmd.vy])),
        "ang_vel_tracking": ang_vel_tracking(float(w[2]), cmd.wyaw),
        "lin_vel_z": float(v[2] ** 2),
        "ang_vel_xy": float(w[0] ** 2 + w[1] ** 2),
        "orientation": float(g[0] ** 2 + g[1] ** 2),
        "torques": float(np.sum(tau ** 2)),
        "action_rate": float(np.sum((a0 - a1) ** 2)),
        "smoothness": float(np.sum((a0 - 2.0 * a1 + a2) ** 2)),
        "joint_power": float(np.sum(np.abs(tau) * np.abs(state.joint_vels))),
        "joint_accel": float(np.sum(state.joint_accels ** 2)),
        "joint_error": float(np.sum((state.joint_angles - q_default) ** 2)),
        "collision": float(np.count_nonzero(nonfoot > robot.collision_force_threshold)),
        "stumble": float(np.any(f_xy > STUMBLE_RATIO * np.abs(f_feet[:, 2]))),
        "feet_edge": feet_edge_term(state, field_e),
    }
    weights = dict(WEIGHTS)
    total = 0.0
    for k in TERMS:
        total += weights[k] * terms[k]
    return RewardBreakdown(terms, weights, total)
