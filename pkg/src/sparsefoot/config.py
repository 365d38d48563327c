"""Robot, camera and walker constants, with JSON overrides.

A config file is a JSON object with optional top-level sections ``robot``,
``camera``, ``walker`` and ``schedule``.  Each section maps field names of
the corresponding dataclass below to values; unknown keys are rejected.

Example::

    {"robot": {"mass": 12.0}, "walker": {"reach": 0.12}}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError

LEG_NAMES = ("FL", "FR", "RL", "RR")


@dataclass(frozen=True)
class RobotConfig:
    mass: float = 12.7
    gravity: float = 9.81
    nominal_base_height: float = 0.30
    # body-frame (x, y) of each hip, ordered as LEG_NAMES
    hip_offsets: tuple = ((0.1745, 0.12), (0.1745, -0.12), (-0.1745, 0.12), (-0.1745, -0.12))
    # hip ab/ad, thigh, knee per leg, ordered as LEG_NAMES
    default_joint_angles: tuple = (0.0, -0.8, 1.6) * 4
    contact_threshold: float = 1.0
    collision_force_threshold: float = 0.1
    n_collision_bodies: int = 9


@dataclass(frozen=True)
class CameraConfig:
    width: int = 60
    height: int = 60
    hfov_deg: float = 87.0
    # body-frame mount offset (forward, lateral, up) from the base origin
    mount_offset: tuple = (0.25, 0.0, 0.08)
    pitch_deg: float = 30.0
    near: float = 0.1
    far: float = 3.0
    noise_sigma: float = 0.0


@dataclass(frozen=True)
class WalkerConfig:
    step_frequency: float = 2.0
    reach: float = 0.15
    min_clearance: float = 0.025
    dt: float = 0.02
    swing_height: float = 0.08
    start_x: float = 1.0
    start_y_jitter: float = 0.05
    start_search: float = 0.4


@dataclass(frozen=True)
class ScheduleConfig:
    window: int = 100
    t_start: int = 2000
    t_end: int = 6000
    p_max: float = 0.9
    promote_threshold: float = 0.8
    demote_threshold: float = 0.4
    gap_quota: float = 0.2


@dataclass(frozen=True)
class Config:
    robot: RobotConfig = field(default_factory=RobotConfig)
    camera: CameraConfig = field(default_factory=CameraConfig)
    walker: WalkerConfig = field(default_factory=WalkerConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)


def _apply(section, overrides: dict, name: str):
    if not isinstance(overrides, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    known = {f.name: f for f in fields(section)}
    clean = {}
    for key, value in overrides.items():
        if key not in known:
            raise ConfigError(f"unknown key {name}.{key}")
        default = getattr(section, key)
        if isinstance(default, tuple):
            value = tuple(tuple(v) if isinstance(v, list) else v for v in value)
            if len(value) != len(default):
                raise ConfigError(f"{name}.{key} must have {len(default)} entries")
        elif isinstance(default, bool) or not isinstance(default, (int, float)):
            pass
        elif not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigError(f"{name}.{key} must be a finite number")
        clean[key] = value
    return replace(section, **clean)


def config_from_dict(data: dict) -> Config:
    cfg = Config()
    for name in data:
        if name not in ("robot", "camera", "walker", "schedule"):
            raise ConfigError(f"unknown config section {name!r}")
    return Config(
        robot=_apply(cfg.robot, data.get("robot", {}), "robot"),
        camera=_apply(cfg.camera, data.get("camera", {}), "camera"),
        walker=_apply(cfg.walker, data.get("walker", {}), "walker"),
        schedule=_apply(cfg.schedule, data.get("schedule", {}), "schedule"),
    )


def load_config(path: str | Path | None) -> Config:
    """Load a JSON config file; ``None`` returns the defaults."""
    if path is None:
        return Config()
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return config_from_dict(data)


DEFAULT = Config()
