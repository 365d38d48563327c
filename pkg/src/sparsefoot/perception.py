"""Ground-truth perception: local heightmaps, foot patches, edge distances
and raycast depth images."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .config import DEFAULT, CameraConfig
from .core import (FOOT_PATCH, BasePose, HeightField,
                   LocalHeightmap, _frozen)
from .errors import ConfigError, OutOfBoundsError

# distance reported when a field has no steppable/non-steppable boundary
EDGE_DISTANCE_CAP = 10.0


def _as_pose(base_pose) -> BasePose:
    if isinstance(base_pose, BasePose):
        return base_pose
    if hasattr(base_pose, "base_pose"):
        return base_pose.base_pose
    return BasePose(*(float(v) for v in base_pose))


def local_sample_points(base_pose) -> tuple:
    """World xy of every local heightmap cell center, shape (32, 16) each."""
    pose = _as_pose(base_pose)
    xs, ys = LocalHeightmap.cell_centers()
    lx, ly = np.meshgrid(xs, ys, indexing="ij")
    c, s = math.cos(pose.yaw), math.sin(pose.yaw)
    wx = c * lx - s * ly + pose.x
    wy = s * lx + c * ly + pose.y
    return wx, wy


def sample_heights(hf: HeightField, wx, wy) -> tuple:
    """Nearest-cell heights at world points; pit floor outside the patch.
    Returns ``(heights, inside)``."""
    i = np.floor((np.asarray(wx) - hf.origin_xy[0]) / hf.resolution).astype(np.int64)
    j = np.floor((np.asarray(wy) - hf.origin_xy[1]) / hf.resolution).astype(np.int64)
    inside = (i >= 0) & (i < hf.nx) & (j >= 0) & (j < hf.ny)
    out = np.full(i.shape, hf.floor_z)
    out[inside] = hf.heights[i[inside], j[inside]]
    return out, inside


def raster_local_heightmap(hf: HeightField, base_pose) -> LocalHeightmap:
    """Body-centric heightmap spanning 0.5 m behind to 1.1 m ahead and
    0.4 m to each side, in the yaw-aligned leveled frame, relative to the
    base height."""
    pose = _as_pose(base_pose)
    wx, wy = local_sample_points(pose)
    h, inside = sample_heights(hf, wx, wy)
    if not inside.any():
        raise OutOfBoundsError("local heightmap window lies entirely outside the patch")
    return LocalHeightmap(h - pose.z)


def foot_patch(hf: HeightField, foot_position) -> np.ndarray:
    """5 x 5 world-aligned patch of cells around the cell containing the foot,
    relative to the foot height (covers +-0.1 m)."""
    fx, fy = float(foot_position[0]), float(foot_position[1])
    fz = float(foot_position[2]) if len(foot_position) > 2 else hf.height_at(fx, fy)
    ci, cj = hf.cell_of(fx, fy)
    if not (0 <= ci < hf.nx and 0 <= cj < hf.ny):
        raise OutOfBoundsError(f"foot ({fx:.3f}, {fy:.3f}) is outside the patch")
    half = FOOT_PATCH // 2
    ii = np.arange(ci - half, ci + half + 1)[:, None]
    jj = np.arange(cj - half, cj + half + 1)[None, :]
    inside = (ii >= 0) & (ii < hf.nx) & (jj >= 0) & (jj < hf.ny)
    patch = np.full((FOOT_PATCH, FOOT_PATCH), hf.floor_z)
    ib, jb = np.broadcast_arrays(ii, jj)
    patch[inside] = hf.heights[ib[inside], jb[inside]]
    return patch - fz


@dataclass(frozen=True, eq=False)
class EdgeDistanceField:
    """Per-cell distance (m) from cell centers to the nearest boundary
    between steppable and non-steppable cells.

    Steppable cells carry the center-to-center distance to the nearest
    non-steppable cell minus half a cell, so cells touching a pit read
    0.025 m at 5 cm resolution.  Non-steppable cells carry 0.  Without any
    boundary every cell carries :data:`EDGE_DISTANCE_CAP`.
    """

    distances: np.ndarray
    origin_xy: tuple
    resolution: float
    source_fingerprint: str = ""
    cap: float = EDGE_DISTANCE_CAP

    def __post_init__(self):
        object.__setattr__(self, "distances", _frozen(self.distances))

    @property
    def shape(self) -> tuple:
        return self.distances.shape

    def cell_of(self, x: float, y: float) -> tuple:
        return (math.floor((x - self.origin_xy[0]) / self.resolution),
                math.floor((y - self.origin_xy[1]) / self.resolution))

    def cell_center(self, i: int, j: int) -> tuple:
        return (self.origin_xy[0] + (i + 0.5) * self.resolution,
                self.origin_xy[1] + (j + 0.5) * self.resolution)

    def distance_at(self, x: float, y: float) -> float:
        i, j = self.cell_of(x, y)
        nx, ny = self.distances.shape
        if not (0 <= i < nx and 0 <= j < ny):
            raise OutOfBoundsError(f"position ({x:.3f}, {y:.3f}) is outside the patch")
        return float(self.distances[i, j])


def distance_from_sq(sq: np.ndarray, steppable: np.ndarray, res: float,
                     cap: float = EDGE_DISTANCE_CAP) -> np.ndarray:
    """Convert squared cell distances to boundary distances in meters."""
    if (sq < 0).any():
        return np.where(steppable, cap, 0.0)
    d = np.sqrt(sq.astype(np.float64)) * res - 0.5 * res
    d = np.minimum(d, cap)
    return np.where(steppable, d, 0.0)


def edge_distance_field(hf: HeightField) -> EdgeDistanceField:
    sq = kernels.edt_sq(~hf.steppable)
    d = distance_from_sq(sq, hf.steppable, hf.resolution)
    return EdgeDistanceField(d, hf.origin_xy, hf.resolution, hf.fingerprint())


def edge_mask(field_e: EdgeDistanceField, p, d: float) -> bool:
    """True when the cell containing ``p`` lies within ``d`` meters of an edge."""
    return field_e.distance_at(float(p[0]), float(p[1])) <= d


@dataclass(frozen=True)
class Intrinsics:
    width: int = 60
    height: int = 60
    fx: float = 0.0
    fy: float = 0.0
    cx: float = 30.0
    cy: float = 30.0
    near: float = 0.1
    far: float = 3.0

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ConfigError("image dimensions must be positive")
        if not (self.fx > 0 and self.fy > 0 and math.isfinite(self.fx) and math.isfinite(self.fy)):
            raise ConfigError("focal lengths must be positive and finite")
        if not 0 < self.near < self.far:
            raise ConfigError("clip planes must satisfy 0 < near < far")

    @classmethod
    def from_fov(cls, width: int = 60, height: int = 60, hfov_deg: float = 87.0,
                 near: float = 0.1, far: float = 3.0) -> "Intrinsics":
        if not 0 < hfov_deg < 180:
            raise ConfigError("horizontal field of view must be in (0, 180) degrees")
        fx = (width / 2.0) / math.tan(math.radians(hfov_deg) / 2.0)
        return cls(width, height, fx, fx, width / 2.0, height / 2.0, near, far)

    @classmethod
    def from_config(cls, cam: CameraConfig = DEFAULT.camera) -> "Intrinsics":
        return cls.from_fov(cam.width, cam.height, cam.hfov_deg, cam.near, cam.far)


class CameraPose(tuple):
    """``(x, y, z, yaw, pitch)``; pitch is positive looking down."""

    def __new__(cls, x, y, z, yaw=0.0, pitch=0.0):
        return super().__new__(cls, (float(x), float(y), float(z), float(yaw), float(pitch)))

    @property
    def position(self):
        return np.array(self[:3])

    def axes(self) -> tuple:
        """Unit forward, right and down vectors in the world frame."""
        _, _, _, yaw, pitch = self
        cy, sy = math.cos(yaw), math.sin(yaw)
        cp, sp = math.cos(pitch), math.sin(pitch)
        forward = np.array([cp * cy, cp * sy, -sp])
        right = np.array([sy, -cy, 0.0])
        down = np.array([-sp * cy, -sp * sy, -cp])
        return forward, right, down


def camera_pose_from_base(base_pose, cam: CameraConfig = DEFAULT.camera) -> CameraPose:
    pose = _as_pose(base_pose)
    fx_, fy_, fz_ = cam.mount_offset
    c, s = math.cos(pose.yaw), math.sin(pose.yaw)
    return CameraPose(pose.x + c * fx_ - s * fy_, pose.y + s * fx_ + c * fy_, pose.z + fz_,
                      pose.yaw, math.radians(cam.pitch_deg))


def pixel_rays(pose: CameraPose, intr: Intrinsics) -> np.ndarray:
    """Ray directions, shape (height * width, 3), scaled so the component
    along the optical axis is 1; the ray parameter is then the depth."""
    forward, right, down = pose.axes()
    u = (np.arange(intr.width) + 0.5 - intr.cx) / intr.fx
    v = (np.arange(intr.height) + 0.5 - intr.cy) / intr.fy
    vv, uu = np.meshgrid(v, u, indexing="ij")
    dirs = forward[None, None, :] + uu[..., None] * right + vv[..., None] * down
    return dirs.reshape(-1, 3)


@dataclass(frozen=True, eq=False)
class DepthImage:
    depth: np.ndarray
    intrinsics: Intrinsics
    pose: CameraPose

    def __post_init__(self):
        object.__setattr__(self, "depth", _frozen(self.depth))


def render_depth(hf: HeightField, camera_pose, intrinsics: Intrinsics | None = None,
                 noise_sigma: float = 0.0, rng: np.random.Generator | None = None) -> DepthImage:
    """Depth along the optical axis for every pixel, by exact ray/column
    intersection over the grid; misses read ``far``."""
    intr = Intrinsics.from_fov() if intrinsics is None else intrinsics
    pose = camera_pose if isinstance(camera_pose, CameraPose) else CameraPose(*camera_pose)
    dirs = pixel_rays(pose, intr)
    t = kernels.raycast(hf.heights, hf.origin_xy[0], hf.origin_xy[1], hf.resolution,
                        hf.floor_z, pose.position, dirs, intr.far)
    depth = np.where(t < 0.0, intr.far, t)
    if noise_sigma > 0.0:
        if rng is None:
            raise ConfigError("depth noise requires an explicit rng")
        depth = depth * (1.0 + noise_sigma * rng.standard_normal(depth.shape))
    depth = np.clip(depth, intr.near, intr.far).reshape(intr.height, intr.width)
    return DepthImage(depth, intr, pose)

