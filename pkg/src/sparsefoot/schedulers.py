"""Training schedules: adaptive ground-truth sampling, the terrain
progression, per-env difficulty levels and command sampling."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT, ScheduleConfig
from .core import Command
from .errors import ValidationError
from .terrain import Family, Randomness

P_CAP = 1.0 - 1e-6

ADVANCED = ((Family.STEPPING_STONES, Randomness.HIGH),
            (Family.BALANCE_BEAM, Randomness.LOW),
            (Family.STEPPING_BEAMS, Randomness.LOW))
BASIC = ((Family.STEPPING_STONES, Randomness.LOW),
         (Family.FLAT, Randomness.LOW))


def adasmpl_probability(returns) -> float:
    """``tanh`` of the coefficient of variation of recent episode returns.

    Uses the population standard deviation and ``|mean|``.  A zero mean maps
    to the cap ``1 - 1e-6``; a constant window maps to 0.
    """
    r = np.asarray(returns, dtype=np.float64)
    if r.ndim != 1 or r.size < 2:
        raise ValidationError("need at least two returns to form a coefficient of variation")
    if not np.all(np.isfinite(r)):
        raise ValidationError("returns contain non-finite values")
    std = float(np.std(r))
    if std == 0.0:
        return 0.0
    mean = abs(float(np.mean(r)))
    if mean == 0.0:
        return P_CAP
    return min(math.tanh(std / mean), P_CAP)


def sample_ground_truth_substitution(p: float, rng: np.random.Generator) -> bool:
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"probability {p} outside [0, 1]")
    return bool(rng.random() < p)


def curriculum_probability(T: float, t_start: float, t_end: float, p_max: float) -> float:
    """Linear ramp from 0 at ``t_start`` to ``p_max`` at ``t_end``, clamped."""
    if not t_start < t_end:
        raise ValidationError("t_start must be smaller than t_end")
    p = p_max * (T - t_start) / (t_end - t_start)
    return min(max(p, 0.0), p_max)


def update_difficulty(level: int, traversed_fraction: float, promote: float = 0.8,
                      demote: float = 0.4) -> int:
    if not 1 <= level <= 10:
        raise ValidationError(f"level {level} outside 1..10")
    if traversed_fraction > promote:
        level += 1
    elif traversed_fraction < demote:
        level -= 1
    return min(max(level, 1), 10)


def sample_command(rng: np.random.Generator) -> Command:
    vx = float(rng.uniform(0.0, 1.5))
    if vx < 0.3:
        return Command(0.0, 0.0, float(rng.uniform(-1.2, 1.2)))
    return Command(vx, 0.0, 0.0)


@dataclass
class ScheduleState:
    """Mutable per-trainer schedule state; owned by a single trainer."""

    config: ScheduleConfig = field(default_factory=lambda: DEFAULT.schedule)
    iteration: int = 0
    levels: dict = field(default_factory=dict)
    returns: deque = None

    def __post_init__(self):
        cfg = self.config
        if cfg.window < 2:
            raise ValidationError("reward window must hold at least two returns")
        if not 0.0 <= cfg.p_max <= 1.0:
            raise ValidationError("p_max must lie in [0, 1]")
        if not cfg.t_start < cfg.t_end:
            raise ValidationError("t_start must be smaller than t_end")
        if self.returns is None:
            self.returns = deque(maxlen=cfg.window)

    def record_return(self, value: float) -> None:
        self.returns.append(float(value))

    def step(self) -> None:
        self.iteration += 1

    @property
    def p_advance(self) -> float:
        c = self.config
        return curriculum_probability(self.iteration, c.t_start, c.t_end, c.p_max)

    @property
    def p_smpl(self) -> float:
        return adasmpl_probability(self.returns) if len(self.returns) >= 2 else P_CAP

    def level(self, env_id: int) -> int:
        return self.levels.get(env_id, 1)

    def report_episode(self, env_id: int, traversed_fraction: float) -> int:
        c = self.config
        new = update_difficulty(self.level(env_id), traversed_fraction,
                                c.promote_threshold, c.demote_threshold)
        self.levels[env_id] = new
        return new


def assign_terrain(state: ScheduleState, rng: np.random.Generator) -> tuple:
    """``(family, randomness)`` for one environment in the progression."""
    if rng.random() < state.p_advance:
        return ADVANCED[int(rng.integers(len(ADVANCED)))]
    return BASIC[int(rng.integers(len(BASIC)))]


def assign_terrains(state: ScheduleState, rng: np.random.Generator, n_envs: int) -> list:
    """Assignments for ``n_envs`` environments: a fixed leading quota gets
    gaps, the rest follow the progression."""
    n_gaps = round(state.config.gap_quota * n_envs)
    out = [(Family.GAPS, Randomness.LOW)] * n_gaps
    out.extend(assign_terrain(state, rng) for _ in range(n_envs - n_gaps))
    return out
