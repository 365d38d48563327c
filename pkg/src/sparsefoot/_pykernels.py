"""Pure-Python reference kernels.

Used when the compiled ``_kernels`` extension is unavailable or when
``SPARSEFOOT_PURE_PYTHON=1`` is set.  Both backends implement the same
algorithms with the same floating-point operation order, so their outputs
are bit-identical.
"""

import math

import numpy as np

_INF_SQ = 1 << 60


def _edt_1d(f, n, out):
    # Lower envelope of parabolas (Felzenszwalb & Huttenlocher); f holds
    # squared distances, _INF_SQ marks "no feature in this line".
    v = [0] * n
    z = [0.0] * (n + 1)
    k = -1
    for q in range(n):
        fq = f[q]
        if fq >= _INF_SQ:
            continue
        if k < 0:
            k = 0
            v[0] = q
            z[0] = -math.inf
            z[1] = math.inf
            continue
        while True:
            p = v[k]
            s = ((fq + q * q) - (f[p] + p * p)) / (2.0 * (q - p))
            if s <= z[k]:
                k -= 1
                if k < 0:
                    break
            else:
                break
        k += 1
        v[k] = q
        z[k] = s if k > 0 else -math.inf
        z[k + 1] = math.inf
    if k < 0:
        for q in range(n):
            out[q] = _INF_SQ
        return
    j = 0
    for q in range(n):
        while z[j + 1] < q:
            j += 1
        p = v[j]
        out[q] = (q - p) * (q - p) + f[p]


def edt_sq(feature):
    """Squared Euclidean distance (in cells) from every cell to the nearest
    feature cell.  Returns int64; -1 everywhere if there is no feature."""
    feature = np.asarray(feature, dtype=bool)
    nx, ny = feature.shape
    rows = feature.tolist()
    g = [[0] * ny for _ in range(nx)]
    for i in range(nx):
        row = rows[i]
        gi = g[i]
        d = _INF_SQ
        for j in range(ny):
            if row[j]:
                d = 0
            elif d < _INF_SQ:
                d += 1
            gi[j] = d
        d = _INF_SQ
        for j in range(ny - 1, -1, -1):
            if row[j]:
                d = 0
            elif d < _INF_SQ:
                d += 1
            if d < gi[j]:
                gi[j] = d
    out = np.empty((nx, ny), dtype=np.int64)
    f = [0] * nx
    col = [0] * nx
    for j in range(ny):
        for i in range(nx):
            gij = g[i][j]
            f[i] = gij * gij if gij < _INF_SQ else _INF_SQ
        _edt_1d(f, nx, col)
        for i in range(nx):
            out[i, j] = col[i]
    if out[0, 0] >= _INF_SQ:
        out.fill(-1)
    return out


def _floor_hit(oz, dz, floor_z, a, b):
    if oz + dz * a <= floor_z:
        return a
    if dz < 0.0:
        th = (floor_z - oz) / dz
        if th <= b:
            return th
    return -1.0


def _cast_one(h, nx, ny, x0, y0, res, floor_z, px, py, pz, dx, dy, dz, t_max):
    x1 = x0 + nx * res
    y1 = y0 + ny * res
    if dx != 0.0:
        ta = (x0 - px) / dx
        tb = (x1 - px) / dx
        tx_lo, tx_hi = (ta, tb) if ta < tb else (tb, ta)
    elif x0 <= px < x1:
        tx_lo, tx_hi = -math.inf, math.inf
    else:
        tx_lo, tx_hi = math.inf, -math.inf
    if dy != 0.0:
        ta = (y0 - py) / dy
        tb = (y1 - py) / dy
        ty_lo, ty_hi = (ta, tb) if ta < tb else (tb, ta)
    elif y0 <= py < y1:
        ty_lo, ty_hi = -math.inf, math.inf
    else:
        ty_lo, ty_hi = math.inf, -math.inf
    t_in = max(0.0, tx_lo, ty_lo)
    t_exit = min(tx_hi, ty_hi)
    t_out = min(t_max, t_exit)
    if t_in >= t_out:
        return _floor_hit(pz, dz, floor_z, 0.0, t_max)
    if t_in > 0.0:
        th = _floor_hit(pz, dz, floor_z, 0.0, t_in)
        if th >= 0.0:
            return th

    i = int(math.floor((px + dx * t_in - x0) / res))
    j = int(math.floor((py + dy * t_in - y0) / res))
    i = min(max(i, 0), nx - 1)
    j = min(max(j, 0), ny - 1)
    step_i = 1 if dx > 0.0 else -1
    step_j = 1 if dy > 0.0 else -1
    t = t_in
    while True:
        if dx != 0.0:
            tmx = (x0 + (i + (1 if step_i > 0 else 0)) * res - px) / dx
        else:
            tmx = math.inf
        if dy != 0.0:
            tmy = (y0 + (j + (1 if step_j > 0 else 0)) * res - py) / dy
        else:
            tmy = math.inf
        t_next = min(tmx, tmy, t_out)
        hc = h[i][j]
        if pz + dz * t <= hc:
            return t
        if dz < 0.0:
            th = (hc - pz) / dz
            if th <= t_next:
                return th
        if t_next >= t_out:
            break
        if tmx < tmy:
            i += step_i
            t = tmx
        else:
            j += step_j
            t = tmy
        if i < 0 or i >= nx or j < 0 or j >= ny:
            break
    if t_out >= t_max:
        return -1.0
    return _floor_hit(pz, dz, floor_z, t_exit, t_max)


def raycast(heights, x0, y0, res, floor_z, origin, dirs, t_max):
    """First intersection parameter of each ray with a column heightfield.

    Cells are flat-topped columns; everything outside the grid is a plane at
    ``floor_z``.  Returns -1 for rays with no hit in ``[0, t_max]``.
    """
    heights = np.asarray(heights, dtype=np.float64)
    dirs = np.asarray(dirs, dtype=np.float64)
    nx, ny = heights.shape
    h = heights.tolist()
    px, py, pz = (float(c) for c in origin)
    out = np.empty(dirs.shape[0], dtype=np.float64)
    for k, (dx, dy, dz) in enumerate(dirs.tolist()):
        out[k] = _cast_one(h, nx, ny, float(x0), float(y0), float(res), float(floor_z),
                           px, py, pz, dx, dy, dz, float(t_max))
    return out
