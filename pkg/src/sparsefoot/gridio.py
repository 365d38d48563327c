"""File formats: headered binary grids, CSV grids, 16-bit PGM depth images
and JSON terrain sidecars.

Binary grid layout (little-endian)::

    magic    4s   b"SFGD"
    version  u16
    channels u16
    rows     u32
    cols     u32
    res      f64  meters per cell
    origin_x f64
    origin_y f64
    data     f64[channels, rows, cols], row-major
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .core import HeightField
from .errors import ValidationError

GRID_MAGIC = b"SFGD"
GRID_VERSION = 1
_HEADER = struct.Struct("<4sHHIIddd")
SIDECAR_VERSION = 1
PGM_VERSION = 1
PGM_MAX = 65535


def write_grid(path, channels, resolution: float, origin_xy=(0.0, 0.0)) -> None:
    arr = np.asarray(channels, dtype="<f8")
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3:
        raise ValidationError("grid must be 2-D or a stack of 2-D channels")
    c, r, n = arr.shape
    header = _HEADER.pack(GRID_MAGIC, GRID_VERSION, c, r, n, float(resolution),
                          float(origin_xy[0]), float(origin_xy[1]))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(arr).tobytes())


def read_grid(path) -> tuple:
    """Returns ``(data, header)`` with ``data`` shaped (channels, rows, cols)."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValidationError(f"{path}: truncated grid header")
    magic, version, c, r, n, res, ox, oy = _HEADER.unpack_from(raw)
    if magic != GRID_MAGIC:
        raise ValidationError(f"{path}: not a grid file")
    if version != GRID_VERSION:
        raise ValidationError(f"{path}: unsupported grid version {version}")
    expected = _HEADER.size + 8 * c * r * n
    if len(raw) != expected:
        raise ValidationError(f"{path}: expected {expected} bytes, found {len(raw)}")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(c, r, n).astype(np.float64)
    header = {"version": version, "channels": c, "rows": r, "cols": n,
              "resolution": res, "origin_xy": (ox, oy)}
    return data, header


def write_heightfield(path, hf: HeightField) -> None:
    """Two channels: heights and the steppable mask as 0/1."""
    write_grid(path, [hf.heights, hf.steppable.astype(np.float64)], hf.resolution, hf.origin_xy)


def read_heightfield(path, pit_depth: float, platform_base: float = 0.0) -> HeightField:
    data, header = read_grid(path)
    if header["channels"] != 2:
        raise ValidationError(f"{path}: heightfield grids carry two channels")
    return HeightField(origin_xy=header["origin_xy"], resolution=header["resolution"],
                       heights=data[0], steppable=data[1] > 0.5, pit_depth=pit_depth,
                       platform_base=platform_base)


def write_csv_grid(path, grid, fmt: str = "%.9g") -> None:
    np.savetxt(path, np.asarray(grid, dtype=np.float64), fmt=fmt, delimiter=",")


def write_pgm16(path, depth, scale: float = 0.001) -> None:
    """Depth in meters quantized to ``scale`` (default millimeters), rows top
    to bottom, big-endian samples as PGM requires."""
    d = np.asarray(depth, dtype=np.float64)
    if d.ndim != 2:
        raise ValidationError("depth image must be 2-D")
    q = np.clip(np.rint(d / scale), 0, PGM_MAX).astype(">u2")
    h, w = d.shape
    head = f"P5\n# sparsefoot depth v{PGM_VERSION} scale={scale:g}\n{w} {h}\n{PGM_MAX}\n"
    with open(path, "wb") as fh:
        fh.write(head.encode("ascii"))
        fh.write(q.tobytes())


def read_pgm16(path) -> tuple:
    """Returns ``(depth_m, scale)``."""
    raw = Path(path).read_bytes()
    lines = []
    pos = 0
    scale = 0.001
    while len(lines) < 4:
        end = raw.index(b"\n", pos)
        line = raw[pos:end].decode("ascii")
        pos = end + 1
        if line.startswith("#"):
            for tok in line.split():
                if tok.startswith("scale="):
                    scale = float(tok[6:])
            continue
        lines.extend(line.split())
    if lines[0] != "P5":
        raise ValidationError(f"{path}: not a binary PGM")
    w, h, maxval = int(lines[1]), int(lines[2]), int(lines[3])
    if maxval != PGM_MAX:
        raise ValidationError(f"{path}: expected 16-bit samples")
    q = np.frombuffer(raw, dtype=">u2", offset=pos, count=w * h).reshape(h, w)
    return q.astype(np.float64) * scale, scale


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def terrain_sidecar(hf: HeightField, extra: dict | None = None) -> dict:
    out = {"version": SIDECAR_VERSION, "fingerprint": hf.fingerprint(),
           "meta": dict(hf.meta), "nx": hf.nx, "ny": hf.ny,
           "resolution": hf.resolution, "origin_xy": list(hf.origin_xy)}
    if extra:
        out.update(extra)
    return out
