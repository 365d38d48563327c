"""Shared domain types and the proprioceptive / privileged vectors."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .config import DEFAULT, RobotConfig
from .errors import OutOfBoundsError, ValidationError

N_JOINTS = 12
N_FEET = 4
OBS_DIM = 45
# segment sizes of the observation: ang vel, gravity, command, joint pos, joint vel, last action
OBS_LAYOUT = (("ang_vel", 3), ("gravity", 3), ("command", 3),
              ("joint_angles", 12), ("joint_vels", 12), ("prev_action", 12))

HM_LENGTH = 32
HM_WIDTH = 16
HM_RES = 0.05
HM_X_MIN = -0.5
HM_Y_MIN = -0.4
FOOT_PATCH = 5


def _frozen(a, dtype=np.float64, shape=None, name="array"):
    arr = np.array(a, dtype=dtype, copy=True)
    if shape is not None and arr.shape != shape:
        raise ValidationError(f"{name} must have shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


def _require_finite(name, arr):
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")


@dataclass(frozen=True, eq=False)
class HeightField:
    """World-frame elevation grid with a steppable mask.

    ``heights[i, j]`` is the elevation of the cell whose lower-left corner is
    ``origin_xy + (i, j) * resolution``; ``i`` runs along x.
    """

    origin_xy: tuple
    resolution: float
    heights: np.ndarray
    steppable: np.ndarray
    pit_depth: float
    platform_base: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.resolution > 0:
            raise ValidationError("resolution must be positive")
        h = _frozen(self.heights, name="heights")
        if h.ndim != 2 or h.size == 0:
            raise ValidationError("heights must be a non-empty 2-D grid")
        _require_finite("heights", h)
        m = _frozen(self.steppable, dtype=bool, shape=h.shape, name="steppable")
        object.__setattr__(self, "heights", h)
        object.__setattr__(self, "steppable", m)
        object.__setattr__(self, "origin_xy", (float(self.origin_xy[0]), float(self.origin_xy[1])))
        object.__setattr__(self, "resolution", float(self.resolution))
        object.__setattr__(self, "pit_depth", float(self.pit_depth))
        object.__setattr__(self, "platform_base", float(self.platform_base))

    @property
    def nx(self) -> int:
        return self.heights.shape[0]

    @property
    def ny(self) -> int:
        return self.heights.shape[1]

    @property
    def floor_z(self) -> float:
        """Elevation of the pit floor (also used outside the patch)."""
        return self.platform_base - self.pit_depth

    @property
    def extent(self) -> tuple:
        return self.nx * self.resolution, self.ny * self.resolution

    def cell_of(self, x: float, y: float) -> tuple:
        """Index of the cell containing ``(x, y)``; may be outside the grid."""
        return (math.floor((x - self.origin_xy[0]) / self.resolution),
                math.floor((y - self.origin_xy[1]) / self.resolution))

    def contains(self, x: float, y: float) -> bool:
        i, j = self.cell_of(x, y)
        return 0 <= i < self.nx and 0 <= j < self.ny

    def cell_center(self, i: int, j: int) -> tuple:
        return (self.origin_xy[0] + (i + 0.5) * self.resolution,
                self.origin_xy[1] + (j + 0.5) * self.resolution)

    def height_at(self, x: float, y: float) -> float:
        """Nearest-cell height; the pit floor outside the patch."""
        i, j = self.cell_of(x, y)
        if 0 <= i < self.nx and 0 <= j < self.ny:
            return float(self.heights[i, j])
        return self.floor_z

    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        digest.update(np.array([self.nx, self.ny], dtype="<i8").tobytes())
        digest.update(np.array([*self.origin_xy, self.resolution, self.pit_depth,
                                self.platform_base], dtype="<f8").tobytes())
        digest.update(self.heights.astype("<f8").tobytes())
        digest.update(self.steppable.astype(np.uint8).tobytes())
        return digest.hexdigest()[:16]


class BasePose(NamedTuple):
    x: float
    y: float
    z: float
    yaw: float = 0.0


@dataclass(frozen=True)
class Command:
    vx: float = 0.0
    vy: float = 0.0
    wyaw: float = 0.0

    def __post_init__(self):
        for name in ("vx", "vy", "wyaw"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"command {name} must be finite")
        if self.vy != 0.0:
            raise ValidationError("lateral command must be zero")
        if not 0.0 <= self.vx <= 1.5:
            raise ValidationError(f"vx={self.vx} outside [0, 1.5]")
        if 0.0 < self.vx < 0.3:
            raise ValidationError(f"vx={self.vx} inside the dead band (0, 0.3)")
        if abs(self.wyaw) > 1.2:
            raise ValidationError(f"wyaw={self.wyaw} outside [-1.2, 1.2]")

    def as_array(self) -> np.ndarray:
        return np.array([self.vx, self.vy, self.wyaw])


def contact_from_forces(forces, threshold: float = DEFAULT.robot.contact_threshold) -> np.ndarray:
    return np.linalg.norm(np.asarray(forces, dtype=np.float64), axis=1) > threshold


@dataclass(frozen=True, eq=False)
class RobotState:
    """Kinematic snapshot of the robot.

    Linear and angular base velocities are expressed in the body frame;
    foot positions are world-frame.  ``contact_state`` is derived from the
    foot forces when omitted.
    """

    base_position: np.ndarray
    base_yaw_roll_pitch: np.ndarray
    base_lin_vel: np.ndarray
    base_ang_vel: np.ndarray
    gravity_in_body: np.ndarray
    joint_angles: np.ndarray
    joint_vels: np.ndarray
    joint_accels: np.ndarray
    joint_torques: np.ndarray
    foot_positions: np.ndarray
    foot_contact_forces: np.ndarray
    contact_state: np.ndarray | None = None
    nonfoot_contact_forces: np.ndarray | None = None
    contact_threshold: float = DEFAULT.robot.contact_threshold

    def __post_init__(self):
        shapes = {
            "base_position": (3,), "base_yaw_roll_pitch": (3,), "base_lin_vel": (3,),
            "base_ang_vel": (3,), "gravity_in_body": (3,), "joint_angles": (N_JOINTS,),
            "joint_vels": (N_JOINTS,), "joint_accels": (N_JOINTS,), "joint_torques": (N_JOINTS,),
            "foot_positions": (N_FEET, 3), "foot_contact_forces": (N_FEET, 3),
        }
        for name, shape in shapes.items():
            arr = _frozen(getattr(self, name), shape=shape, name=name)
            _require_finite(name, arr)
            object.__setattr__(self, name, arr)
        nonfoot = self.nonfoot_contact_forces
        nonfoot = np.zeros((0, 3)) if nonfoot is None else nonfoot
        nonfoot = _frozen(nonfoot, name="nonfoot_contact_forces")
        if nonfoot.ndim != 2 or nonfoot.shape[1] != 3:
            raise ValidationError("nonfoot_contact_forces must have shape (k, 3)")
        _require_finite("nonfoot_contact_forces", nonfoot)
        object.__setattr__(self, "nonfoot_contact_forces", nonfoot)
        if abs(float(np.linalg.norm(self.gravity_in_body)) - 1.0) > 1e-9:
            raise ValidationError("gravity_in_body must be a unit vector")
        derived = contact_from_forces(self.foot_contact_forces, self.contact_threshold)
        if self.contact_state is None:
            contact = derived
        else:
            contact = np.array(self.contact_state, dtype=bool)
            if contact.shape != (N_FEET,) or not np.array_equal(contact, derived):
                raise ValidationError("contact_state disagrees with foot contact forces")
        object.__setattr__(self, "contact_state", _frozen(contact, dtype=bool))

    @property
    def yaw(self) -> float:
        return float(self.base_yaw_roll_pitch[0])

    @property
    def base_pose(self) -> BasePose:
        x, y, z = (float(c) for c in self.base_position)
        return BasePose(x, y, z, self.yaw)

    @classmethod
    def standing(cls, base_position=(0.0, 0.0, 0.3), yaw: float = 0.0,
                 robot: RobotConfig = DEFAULT.robot, **overrides) -> "RobotState":
        """Upright robot at rest with the default joint pose and feet loaded
        evenly under the hips."""
        bx, by, bz = base_position
        c, s = math.cos(yaw), math.sin(yaw)
        feet = np.array([[bx + c * hx - s * hy, by + s * hx + c * hy, bz - robot.nominal_base_height]
                         for hx, hy in robot.hip_offsets])
        forces = np.zeros((N_FEET, 3))
        forces[:, 2] = robot.mass * robot.gravity / N_FEET
        kwargs = dict(
            base_position=base_position,
            base_yaw_roll_pitch=(yaw, 0.0, 0.0),
            base_lin_vel=np.zeros(3),
            base_ang_vel=np.zeros(3),
            gravity_in_body=(0.0, 0.0, -1.0),
            joint_angles=robot.default_joint_angles,
            joint_vels=np.zeros(N_JOINTS),
            joint_accels=np.zeros(N_JOINTS),
            joint_torques=np.zeros(N_JOINTS),
            foot_positions=feet,
            foot_contact_forces=forces,
            nonfoot_contact_forces=np.zeros((robot.n_collision_bodies, 3)),
            contact_threshold=robot.contact_threshold,
        )
        kwargs.update(overrides)
        return cls(**kwargs)


def gravity_from_roll_pitch(roll: float, pitch: float) -> np.ndarray:
    """Unit gravity direction in the body frame; independent of yaw."""
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    return np.array([sp, -sr * cp, -cr * cp])


@dataclass(frozen=True, eq=False)
class LocalHeightmap:
    """Robot-centric 32 x 16 height grid at 5 cm, relative to base height.

    Row ``k`` is longitudinal (x forward), column ``l`` lateral (y left);
    cell centers sit at ``(-0.475 + 0.05 k, -0.375 + 0.05 l)`` in the
    yaw-aligned, gravity-leveled robot frame.
    """

    heights: np.ndarray

    def __post_init__(self):
        h = _frozen(self.heights, shape=(HM_LENGTH, HM_WIDTH), name="heights")
        _require_finite("heights", h)
        object.__setattr__(self, "heights", h)

    @staticmethod
    def cell_centers() -> tuple:
        xs = HM_X_MIN + (np.arange(HM_LENGTH) + 0.5) * HM_RES
        ys = HM_Y_MIN + (np.arange(HM_WIDTH) + 0.5) * HM_RES
        return xs, ys


@dataclass(frozen=True, eq=False)
class PrivilegedState:
    base_lin_vel: np.ndarray
    contact_state: np.ndarray
    body_heightmap: LocalHeightmap
    foot_patches: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base_lin_vel", _frozen(self.base_lin_vel, shape=(3,)))
        object.__setattr__(self, "contact_state",
                           _frozen(self.contact_state, dtype=bool, shape=(N_FEET,)))
        patches = _frozen(self.foot_patches, shape=(N_FEET, FOOT_PATCH, FOOT_PATCH),
                          name="foot_patches")
        _require_finite("foot_patches", patches)
        object.__setattr__(self, "foot_patches", patches)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.base_lin_vel, self.contact_state.astype(np.float64),
                               self.body_heightmap.heights.ravel(), self.foot_patches.ravel()])


def build_observation(state: RobotState, cmd: Command, prev_action) -> np.ndarray:
    """Proprioceptive observation: angular velocity, gravity, command,
    joint angles, joint velocities and previous action (45 values)."""
    prev_action = np.asarray(prev_action, dtype=np.float64)
    if prev_action.shape != (N_JOINTS,):
        raise ValidationError(f"prev_action must have shape ({N_JOINTS},)")
    _require_finite("prev_action", prev_action)
    obs = np.concatenate([state.base_ang_vel, state.gravity_in_body, cmd.as_array(),
                          state.joint_angles, state.joint_vels, prev_action])
    _require_finite("observation", obs)
    return obs


def split_observation(obs) -> dict:
    """Inverse of :func:`build_observation`."""
    obs = np.asarray(obs)
    if obs.shape != (OBS_DIM,):
        raise ValidationError(f"observation must have shape ({OBS_DIM},)")
    out, start = {}, 0
    for name, size in OBS_LAYOUT:
        out[name] = obs[start:start + size]
        start += size
    return out


def build_privileged(state: RobotState, hf: HeightField) -> PrivilegedState:
    from .perception import foot_patch, raster_local_heightmap

    bx, by, _ = state.base_position
    if not hf.contains(bx, by):
        raise OutOfBoundsError(f"base ({bx:.3f}, {by:.3f}) is outside the terrain patch")
    body = raster_local_heightmap(hf, state.base_pose)
    patches = np.stack([foot_patch(hf, p) for p in state.foot_positions])
    return PrivilegedState(state.base_lin_vel, state.contact_state, body, patches)
