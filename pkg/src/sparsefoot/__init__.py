"""Deterministic terrain, perception and evaluation harness for
sparse-foothold quadruped locomotion."""

from .core import (BasePose, Command, HeightField, LocalHeightmap, PrivilegedState, RobotState,
                   build_observation, build_privileged)
from .kernels import BACKEND
from .terrain import Family, Randomness, TerrainSpec, generate, sparsity

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BasePose", "Command", "Family", "HeightField", "LocalHeightmap",
    "PrivilegedState", "Randomness", "RobotState", "TerrainSpec", "build_observation",
    "build_privileged", "generate", "sparsity",
]
