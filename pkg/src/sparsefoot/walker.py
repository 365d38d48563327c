"""Scripted kinematic trot walker.

Stands in for a learned policy: the base follows the command exactly and
each swing foot lands on the cell that maximizes edge clearance within a
reach radius of its nominal (Raibert-style) touchdown point.  A fall is
declared as soon as a swing foot has nowhere safe to land.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from .config import DEFAULT, RobotConfig, WalkerConfig
from .core import N_FEET, N_JOINTS, Command, HeightField, RobotState
from .errors import OutOfBoundsError, ValidationError
from .perception import EdgeDistanceField, edge_distance_field

# diagonal pairs swing alternately: (FL, RR) then (FR, RL)
TROT_PAIRS = ((0, 3), (1, 2))


class InvalidStartError(ValidationError):
    """No feasible initial stance near the requested start pose."""


class Outcome(str, Enum):
    SUCCESS = "success"
    FALL = "fall"
    TIMEOUT = "timeout"


class Foothold(NamedTuple):
    i: int
    j: int
    x: float
    y: float
    edge_distance: float


def plan_foothold(field_e: EdgeDistanceField, nominal, reach: float,
                  min_clearance: float = DEFAULT.walker.min_clearance) -> Foothold | None:
    """Safest cell center within ``reach`` of ``nominal``.

    Maximizes edge distance; ties go to the cell nearest ``nominal``, then
    to the smaller ``(i, j)``.  Only cells whose edge distance exceeds
    ``min_clearance`` qualify; returns ``None`` when none does.
    """
    nx_, ny_ = float(nominal[0]), float(nominal[1])
    ci, cj = field_e.cell_of(nx_, ny_)
    n_i, n_j = field_e.shape
    if not (0 <= ci < n_i and 0 <= cj < n_j):
        raise OutOfBoundsError(f"nominal foothold ({nx_:.3f}, {ny_:.3f}) is outside the patch")
    res = field_e.resolution
    ox, oy = field_e.origin_xy
    span = int(math.ceil(reach / res)) + 1
    reach_sq = reach * reach
    dist = field_e.distances
    best = None
    best_key = None
    for i in range(max(ci - span, 0), min(ci + span + 1, n_i)):
        cx = ox + (i + 0.5) * res
        ddx = cx - nx_
        for j in range(max(cj - span, 0), min(cj + span + 1, n_j)):
            cy = oy + (j + 0.5) * res
            ddy = cy - ny_
            d2 = ddx * ddx + ddy * ddy
            if d2 > reach_sq:
                continue
            e = dist[i, j]
            if not e > min_clearance:
                continue
            key = (-e, d2, i, j)
            if best_key is None or key < best_key:
                best_key = key
                best = (i, j, cx, cy, float(e))
    return None if best is None else Foothold(*best)


@dataclass
class ContactEvent:
    foot: int
    position: tuple
    cell: tuple
    edge_distance: float

    def to_dict(self) -> dict:
        return {"foot": self.foot, "position": list(self.position), "cell": list(self.cell),
                "edge_distance": self.edge_distance}

    @classmethod
    def from_dict(cls, d: dict) -> "ContactEvent":
        return cls(int(d["foot"]), tuple(d["position"]), tuple(d["cell"]), float(d["edge_distance"]))


@dataclass
class StepRecord:
    time: float
    base: tuple
    command: tuple
    feet: list
    stance: list
    contacts: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"t": self.time, "base": list(self.base), "cmd": list(self.command),
                "feet": [list(f) for f in self.feet], "stance": list(self.stance),
                "contacts": [c.to_dict() for c in self.contacts]}

    @classmethod
    def from_dict(cls, d: dict) -> "StepRecord":
        return cls(float(d["t"]), tuple(d["base"]), tuple(d["cmd"]),
                   [tuple(f) for f in d["feet"]], [bool(s) for s in d["stance"]],
                   [ContactEvent.from_dict(c) for c in d["contacts"]])


@dataclass
class EpisodeLog:
    steps: list
    outcome: Outcome
    distance_traversed: float
    total_distance: float
    dt: float
    seed: int
    terrain_fingerprint: str
    terrain: dict = field(default_factory=dict)
    run: int = 0

    def contacts(self) -> list:
        return [c for s in self.steps for c in s.contacts]

    @property
    def traversed_fraction(self) -> float:
        return self.distance_traversed / self.total_distance

    def to_dict(self) -> dict:
        return {"run": self.run, "seed": self.seed, "terrain": self.terrain,
                "terrain_fingerprint": self.terrain_fingerprint, "dt": self.dt,
                "outcome": self.outcome.value, "distance_traversed": self.distance_traversed,
                "total_distance": self.total_distance,
                "steps": [s.to_dict() for s in self.steps]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "EpisodeLog":
        return cls([StepRecord.from_dict(s) for s in d["steps"]], Outcome(d["outcome"]),
                   float(d["distance_traversed"]), float(d["total_distance"]), float(d["dt"]),
                   int(d["seed"]), d["terrain_fingerprint"], dict(d.get("terrain", {})),
                   int(d.get("run", 0)))

    @classmethod
    def from_json(cls, line: str) -> "EpisodeLog":
        return cls.from_dict(json.loads(line))


def _hip_world(x, y, yaw, hip):
    c, s = math.cos(yaw), math.sin(yaw)
    return x + c * hip[0] - s * hip[1], y + s * hip[0] + c * hip[1]


def _advance(x, y, yaw, cmd: Command, dt: float):
    mid = yaw + 0.5 * cmd.wyaw * dt
    return x + cmd.vx * math.cos(mid) * dt, y + cmd.vx * math.sin(mid) * dt, yaw + cmd.wyaw * dt


def _initial_stance(field_e, x, y, robot, walker):
    feet = []
    for hip in robot.hip_offsets:
        hx, hy = _hip_world(x, y, 0.0, hip)
        if not _inside(field_e, hx, hy):
            return None
        fh = plan_foothold(field_e, (hx, hy), walker.reach, walker.min_clearance)
        if fh is None:
            return None
        feet.append(fh)
    return feet


def _inside(field_e, x, y):
    i, j = field_e.cell_of(x, y)
    return 0 <= i < field_e.shape[0] and 0 <= j < field_e.shape[1]


def find_start(field_e: EdgeDistanceField, x0: float, y0: float,
               walker: WalkerConfig = DEFAULT.walker, robot: RobotConfig = DEFAULT.robot) -> tuple:
    """First start ``(x, y, footholds)`` with a feasible four-foot stance.

    Scans x forward from ``x0`` in cell steps up to ``walker.start_search``,
    first at ``y0`` and then on the patch centerline.

    Raises:
        InvalidStartError: if neither scan finds a stance.
    """
    res = field_e.resolution
    y_mid = field_e.origin_xy[1] + field_e.shape[1] * res / 2.0
    n_tries = int(round(walker.start_search / res))
    for y in (y0, y_mid) if y0 != y_mid else (y0,):
        for k in range(n_tries + 1):
            x = x0 + k * res
            feet = _initial_stance(field_e, x, y, robot, walker)
            if feet is not None:
                return x, y, feet
    raise InvalidStartError(f"no feasible stance within {walker.start_search} m of x={x0:.2f}")


def run_episode(hf: HeightField, cmd: Command, max_time: float, seed: int, goal: float = 6.0,
                field_e: EdgeDistanceField | None = None, walker: WalkerConfig = DEFAULT.walker,
                robot: RobotConfig = DEFAULT.robot, run: int = 0) -> EpisodeLog:
    """Walk ``hf`` under ``cmd`` until the base has advanced ``goal`` meters
    along x, a foothold becomes infeasible, or ``max_time`` elapses."""
    if field_e is None:
        field_e = edge_distance_field(hf)
    if field_e.source_fingerprint and field_e.source_fingerprint != hf.fingerprint():
        raise ValidationError("edge-distance field was built from a different terrain")
    rng = np.random.Generator(np.random.PCG64(seed))
    y = hf.origin_xy[1] + hf.ny * hf.resolution / 2.0
    y += float(rng.uniform(-walker.start_y_jitter, walker.start_y_jitter))
    x0 = hf.origin_xy[0] + walker.start_x

    x, y, stance_feet = find_start(field_e, x0, y, walker, robot)
    start_x = x
    yaw = 0.0

    dt = walker.dt
    half_period = 0.5 / walker.step_frequency
    step_length = cmd.vx * half_period
    feet = [(fh.x, fh.y, hf.height_at(fh.x, fh.y)) for fh in stance_feet]
    stance = [True] * N_FEET
    lift = list(feet)
    targets = list(feet)
    steps = []
    phase = -1
    progress = 0.0
    t_lift = 0.0
    outcome = None
    n = 0
    while True:
        t = n * dt
        contacts = []
        h = math.floor(t / half_period + 1e-9)
        if h != phase:
            if phase >= 0:
                for f in TROT_PAIRS[phase % 2]:
                    feet[f] = targets[f]
                    stance[f] = True
                    ci, cj = hf.cell_of(feet[f][0], feet[f][1])
                    contacts.append(ContactEvent(f, feet[f], (ci, cj),
                                                 field_e.distance_at(feet[f][0], feet[f][1])))
            phase = h
            # predict the base at touchdown by replaying the integrator
            px, py, pyaw = x, y, yaw
            t_td = (h + 1) * half_period
            for _ in range(max(int(round((t_td - t) / dt)), 0)):
                px, py, pyaw = _advance(px, py, pyaw, cmd, dt)
            for f in TROT_PAIRS[h % 2]:
                hx, hy = _hip_world(px, py, pyaw, robot.hip_offsets[f])
                nom = (hx + 0.5 * step_length * math.cos(pyaw), hy + 0.5 * step_length * math.sin(pyaw))
                fh = None
                if _inside(field_e, *nom):
                    fh = plan_foothold(field_e, nom, walker.reach, walker.min_clearance)
                if fh is None:
                    outcome = Outcome.FALL
                    break
                targets[f] = (fh.x, fh.y, hf.height_at(fh.x, fh.y))
                lift[f] = feet[f]
                stance[f] = False
            t_lift = t
        else:
            s = min((t - t_lift) / half_period, 1.0)
            for f in TROT_PAIRS[phase % 2]:
                a, b = lift[f], targets[f]
                feet[f] = (a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1]),
                           a[2] + s * (b[2] - a[2]) + walker.swing_height * math.sin(math.pi * s))
        support = [feet[f][2] for f in range(N_FEET) if stance[f]]
        z = robot.nominal_base_height + sum(support) / len(support)
        progress = max(progress, x - start_x)
        steps.append(StepRecord(t, (x, y, z, yaw), (cmd.vx, cmd.vy, cmd.wyaw),
                                list(feet), list(stance), contacts))
        if outcome is None and progress >= goal:
            outcome = Outcome.SUCCESS
        if outcome is None and t >= max_time:
            outcome = Outcome.TIMEOUT
        if outcome is not None:
            break
        x, y, yaw = _advance(x, y, yaw, cmd, dt)
        n += 1
    return EpisodeLog(steps, outcome, min(progress, goal), goal, dt, int(seed),
                      hf.fingerprint(), dict(hf.meta), run)


def synthesize_state(log: EpisodeLog, k: int, robot: RobotConfig = DEFAULT.robot) -> RobotState:
    """Kinematic :class:`RobotState` for step ``k`` of ``log``.

    Velocities come from finite differences of the logged base pose, stance
    feet share the body weight vertically, joints sit at the default pose
    with zero velocity, acceleration and torque.
    """
    steps = log.steps
    cur = steps[k]
    if len(steps) == 1:
        lin_w = np.zeros(3)
        wz = 0.0
    else:
        a, b = (steps[k - 1], cur) if k > 0 else (cur, steps[k + 1])
        dt = b.time - a.time
        lin_w = (np.array(b.base[:3]) - np.array(a.base[:3])) / dt
        wz = (b.base[3] - a.base[3]) / dt
    yaw = cur.base[3]
    c, s = math.cos(yaw), math.sin(yaw)
    lin_b = np.array([c * lin_w[0] + s * lin_w[1], -s * lin_w[0] + c * lin_w[1], lin_w[2]])
    forces = np.zeros((N_FEET, 3))
    n_stance = sum(cur.stance)
    if n_stance:
        forces[list(np.flatnonzero(cur.stance)), 2] = robot.mass * robot.gravity / n_stance
    return RobotState(
        base_position=cur.base[:3],
        base_yaw_roll_pitch=(yaw, 0.0, 0.0),
        base_lin_vel=lin_b,
        base_ang_vel=(0.0, 0.0, wz),
        gravity_in_body=(0.0, 0.0, -1.0),
        joint_angles=robot.default_joint_angles,
        joint_vels=np.zeros(N_JOINTS),
        joint_accels=np.zeros(N_JOINTS),
        joint_torques=np.zeros(N_JOINTS),
        foot_positions=np.array(cur.feet, dtype=np.float64),
        foot_contact_forces=forces,
        nonfoot_contact_forces=np.zeros((robot.n_collision_bodies, 3)),
        contact_threshold=robot.contact_threshold,
    )
