"""Procedural sparse-foothold terrain patches.

Every patch is 8 m x 4 m on a 5 cm grid with the terrain axis along x.
Elements (stones, beams, platforms) are axis-aligned rectangles whose lower
edges are snapped to grid lines; everything else is pit floor.

Geometry scales linearly with difficulty: gaps grow from zero at level 1 to
the family maximum at level 10, element widths shrink from 0.3 m to the
family minimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import HeightField
from .errors import ConfigError, InvalidOperationError

PATCH_LENGTH = 8.0
PATCH_WIDTH = 4.0
RESOLUTION = 0.05
PIT_DEPTH_RANGE = (0.2, 0.7)
HEIGHT_VARIATION = 0.05
EASY_WIDTH = 0.3


class Family(str, Enum):
    STEPPING_STONES = "stepping-stones"
    BALANCE_BEAM = "balance-beam"
    STEPPING_BEAMS = "stepping-beams"
    GAPS = "gaps"
    FLAT = "flat"


class Randomness(str, Enum):
    LOW = "low"
    HIGH = "high"


FAMILY_ALIASES = {
    "stones": Family.STEPPING_STONES,
    "stepping_stones": Family.STEPPING_STONES,
    "beam": Family.BALANCE_BEAM,
    "balance_beam": Family.BALANCE_BEAM,
    "beams": Family.STEPPING_BEAMS,
    "stepping_beams": Family.STEPPING_BEAMS,
    "gap": Family.GAPS,
}

# (min element width, max gap x, max gap y) at difficulty 10
_HARDEST = {
    Family.STEPPING_STONES: (0.2, 0.25, 0.175),
    Family.BALANCE_BEAM: (0.175, 0.0, 0.0),
    Family.STEPPING_BEAMS: (0.15, 0.275, 0.0),
    Family.GAPS: (None, 0.7, 0.0),
    Family.FLAT: (None, 0.0, 0.0),
}


def parse_family(name) -> Family:
    if isinstance(name, Family):
        return name
    key = str(name).strip().lower()
    if key in FAMILY_ALIASES:
        return FAMILY_ALIASES[key]
    try:
        return Family(key.replace("_", "-"))
    except ValueError:
        raise ConfigError(f"unknown terrain family {name!r}") from None


def parse_randomness(name) -> Randomness:
    if isinstance(name, Randomness):
        return name
    try:
        return Randomness(str(name).strip().lower())
    except ValueError:
        raise ConfigError(f"unknown randomness level {name!r}") from None


@dataclass(frozen=True)
class TerrainSpec:
    family: Family
    difficulty: int
    randomness: Randomness = Randomness.LOW
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "family", parse_family(self.family))
        object.__setattr__(self, "randomness", parse_randomness(self.randomness))
        if isinstance(self.difficulty, bool) or not isinstance(self.difficulty, (int, np.integer)):
            raise ConfigError("difficulty must be an integer")
        if not 1 <= int(self.difficulty) <= 10:
            raise ConfigError(f"difficulty {self.difficulty} outside 1..10")
        object.__setattr__(self, "difficulty", int(self.difficulty))
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def _frac(self) -> float:
        return (self.difficulty - 1) / 9.0

    @property
    def element_width(self) -> float | None:
        w_min = _HARDEST[self.family][0]
        if w_min is None:
            return None
        return EASY_WIDTH + (w_min - EASY_WIDTH) * self._frac

    @property
    def gap_x(self) -> float:
        return _HARDEST[self.family][1] * self._frac

    @property
    def gap_y(self) -> float:
        return _HARDEST[self.family][2] * self._frac

    def to_dict(self) -> dict:
        return {"family": self.family.value, "difficulty": self.difficulty,
                "randomness": self.randomness.value, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "TerrainSpec":
        return cls(d["family"], d["difficulty"], d.get("randomness", "low"), d.get("seed", 0))


@dataclass
class Element:
    """One platform rectangle in meters before snapping.

    ``column`` groups stones sharing a lateral index, i.e. a line of stones
    running along x; column offsets move the whole line along x.
    """

    x0: float
    y0: float
    size_x: float
    size_y: float
    height: float = 0.0
    row: int = 0
    column: int = 0
    dx: float = 0.0
    dy: float = 0.0
    column_dx: float = 0.0

    def cells(self, nx: int, ny: int, res: float = RESOLUTION) -> tuple:
        """Half-open, clipped cell ranges ``(i0, i1, j0, j1)``."""
        i0 = _snap(self.x0 + self.dx + self.column_dx, res)
        j0 = _snap(self.y0 + self.dy, res)
        i1 = i0 + _snap(self.size_x, res)
        j1 = j0 + _snap(self.size_y, res)
        return max(i0, 0), min(i1, nx), max(j0, 0), min(j1, ny)


def _snap(v: float, res: float = RESOLUTION) -> int:
    return math.floor(v / res + 0.5 + 1e-9)


def _lattice(length: float, width: float, gap: float) -> list:
    # element lower edges with a gap centered on the patch midline, clipped by the caller
    pitch = width + gap
    first = length / 2.0 + gap / 2.0
    k_lo = -math.ceil(first / pitch) - 1
    k_hi = math.ceil((length - first) / pitch) + 1
    return [first + k * pitch for k in range(k_lo, k_hi)]


def _streams(seed: int):
    base, jitter = np.random.SeedSequence(seed).spawn(2)
    return np.random.Generator(np.random.PCG64(base)), np.random.Generator(np.random.PCG64(jitter))


def layout(spec: TerrainSpec) -> tuple:
    """Unrandomized elements and the pit depth for ``spec``."""
    rng, _ = _streams(spec.seed)
    pit_depth = float(rng.uniform(*PIT_DEPTH_RANGE))
    L, W = PATCH_LENGTH, PATCH_WIDTH
    fam = spec.family
    elements = []
    if fam is Family.FLAT:
        elements.append(Element(0.0, 0.0, L, W))
    elif fam is Family.GAPS:
        g = spec.gap_x
        elements.append(Element(0.0, 0.0, L / 2 - g / 2, W))
        start = _snap(L / 2 - g / 2) * RESOLUTION + _snap(g) * RESOLUTION
        elements.append(Element(start, 0.0, L - start, W))
    elif fam is Family.BALANCE_BEAM:
        w = spec.element_width
        elements.append(Element(0.0, W / 2 - w / 2, L, w))
    elif fam is Family.STEPPING_BEAMS:
        w = spec.element_width
        for r, x0 in enumerate(_lattice(L, w, spec.gap_x)):
            elements.append(Element(x0, 0.0, w, W, row=r))
    else:
        w = spec.element_width
        xs = _lattice(L, w, spec.gap_x)
        ys = _lattice(W, w, spec.gap_y)
        for r, x0 in enumerate(xs):
            for c, y0 in enumerate(ys):
                elements.append(Element(x0, y0, w, w, row=r, column=c))
    if fam in (Family.STEPPING_STONES, Family.BALANCE_BEAM, Family.STEPPING_BEAMS):
        offsets = rng.uniform(-HEIGHT_VARIATION, HEIGHT_VARIATION, size=len(elements))
        for el, off in zip(elements, offsets):
            el.height = float(off)
    return elements, pit_depth


def jitter(elements: list, spec: TerrainSpec, shift_factor: float = 0.5,
           column_factor: float = 0.45) -> list:
    """Copy of ``elements`` with per-stone shifts and per-column x offsets.

    Each stone moves by uniform amounts in ``+-shift_factor * gap`` on each
    axis (x uses the x gap, y the y gap); every column additionally moves
    along x by a uniform amount in ``+-column_factor * gap_x``.
    """
    _, rng = _streams(spec.seed)
    n_cols = 1 + max((el.column for el in elements), default=0)
    gx, gy = spec.gap_x, spec.gap_y
    col_dx = rng.uniform(-1.0, 1.0, size=n_cols) * (column_factor * gx)
    shifts = rng.uniform(-1.0, 1.0, size=(len(elements), 2)) * np.array([shift_factor * gx,
                                                                        shift_factor * gy])
    out = []
    for el, (sx, sy) in zip(elements, shifts):
        out.append(Element(el.x0, el.y0, el.size_x, el.size_y, el.height, el.row, el.column,
                           float(sx), float(sy), float(col_dx[el.column])))
    return out


def rasterize(elements: list, pit_depth: float, nx: int = None, ny: int = None,
              origin=(0.0, 0.0), res: float = RESOLUTION, platform_base: float = 0.0,
              meta: dict | None = None) -> HeightField:
    nx = round(PATCH_LENGTH / res) if nx is None else nx
    ny = round(PATCH_WIDTH / res) if ny is None else ny
    heights = np.full((nx, ny), platform_base - pit_depth)
    mask = np.zeros((nx, ny), dtype=bool)
    for el in elements:
        i0, i1, j0, j1 = el.cells(nx, ny, res)
        if i0 < i1 and j0 < j1:
            heights[i0:i1, j0:j1] = platform_base + el.height
            mask[i0:i1, j0:j1] = True
    return HeightField(origin, res, heights, mask, pit_depth, platform_base, dict(meta or {}))


def _meta(spec: TerrainSpec, pit_depth: float) -> dict:
    return {
        **spec.to_dict(),
        "element_width": spec.element_width,
        "gap_x": spec.gap_x,
        "gap_y": spec.gap_y,
        "pit_depth": pit_depth,
        "height_variation": HEIGHT_VARIATION if spec.family in (
            Family.STEPPING_STONES, Family.BALANCE_BEAM, Family.STEPPING_BEAMS) else 0.0,
    }


def generate(spec: TerrainSpec) -> HeightField:
    """Height field for ``spec``; a pure function of the spec and its seed."""
    elements, pit_depth = layout(spec)
    hf = rasterize(elements, pit_depth, meta=_meta(spec, pit_depth))
    if spec.family is Family.STEPPING_STONES and spec.randomness is Randomness.HIGH:
        hf = randomize_stones(hf, spec)
    return hf


def randomize_stones(hf: HeightField, spec: TerrainSpec, shift_factor: float = 0.5,
                     column_factor: float = 0.45) -> HeightField:
    """Re-rasterize the stones of ``spec`` with position randomization onto
    the grid of ``hf``."""
    if spec.family is not Family.STEPPING_STONES:
        raise InvalidOperationError(f"stone randomization does not apply to {spec.family.value}")
    if spec.randomness is not Randomness.HIGH:
        raise InvalidOperationError("stone randomization requires high randomness")
    elements, _ = layout(spec)
    moved = jitter(elements, spec, shift_factor, column_factor)
    return rasterize(moved, hf.pit_depth, hf.nx, hf.ny, hf.origin_xy, hf.resolution,
                     hf.platform_base, meta=hf.meta)


def sparsity(hf: HeightField) -> float:
    """Fraction of cells that are not steppable."""
    return float(np.count_nonzero(~hf.steppable)) / hf.steppable.size
