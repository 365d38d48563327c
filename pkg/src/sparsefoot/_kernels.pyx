# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: exact squared EDT and column-heightfield raycasting.

Mirrors ``_pykernels`` operation for operation.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, INFINITY

cnp.import_array()

cdef long long INF_SQ = 1LL << 60


cdef void _edt_1d(long long[::1] f, Py_ssize_t n, long long[::1] out,
                  Py_ssize_t[::1] v, double[::1] z) noexcept nogil:
    cdef Py_ssize_t q, p, j
    cdef Py_ssize_t k = -1
    cdef double s = 0.0
    cdef long long fq
    for q in range(n):
        fq = f[q]
        if fq >= INF_SQ:
            continue
        if k < 0:
            k = 0
            v[0] = q
            z[0] = -INFINITY
            z[1] = INFINITY
            continue
        while True:
            p = v[k]
            s = <double>((fq + q * q) - (f[p] + p * p)) / (2.0 * (q - p))
            if s <= z[k]:
                k -= 1
                if k < 0:
                    break
            else:
                break
        k += 1
        v[k] = q
        if k > 0:
            z[k] = s
        else:
            z[k] = -INFINITY
        z[k + 1] = INFINITY
    if k < 0:
        for q in range(n):
            out[q] = INF_SQ
        return
    j = 0
    for q in range(n):
        while z[j + 1] < q:
            j += 1
        p = v[j]
        out[q] = (q - p) * (q - p) + f[p]


def edt_sq(feature):
    """Squared Euclidean distance (in cells) to the nearest feature cell;
    -1 everywhere if there is no feature."""
    cdef const cnp.uint8_t[:, ::1] feat = np.ascontiguousarray(feature, dtype=np.uint8)
    cdef Py_ssize_t nx = feat.shape[0], ny = feat.shape[1]
    cdef long long[:, ::1] g = np.empty((nx, ny), dtype=np.int64)
    result = np.empty((nx, ny), dtype=np.int64)
    cdef long long[:, ::1] out = result
    cdef long long[::1] f = np.empty(nx, dtype=np.int64)
    cdef long long[::1] col = np.empty(nx, dtype=np.int64)
    cdef Py_ssize_t[::1] v = np.empty(nx, dtype=np.intp)
    cdef double[::1] z = np.empty(nx + 1, dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef long long d, gij
    with nogil:
        for i in range(nx):
            d = INF_SQ
            for j in range(ny):
                if feat[i, j]:
                    d = 0
                elif d < INF_SQ:
                    d += 1
                g[i, j] = d
            d = INF_SQ
            for j in range(ny - 1, -1, -1):
                if feat[i, j]:
                    d = 0
                elif d < INF_SQ:
                    d += 1
                if d < g[i, j]:
                    g[i, j] = d
        for j in range(ny):
            for i in range(nx):
                gij = g[i, j]
                if gij < INF_SQ:
                    f[i] = gij * gij
                else:
                    f[i] = INF_SQ
            _edt_1d(f, nx, col, v, z)
            for i in range(nx):
                out[i, j] = col[i]
    if nx > 0 and ny > 0 and out[0, 0] >= INF_SQ:
        result.fill(-1)
    return result


cdef inline double _floor_hit(double oz, double dz, double floor_z,
                              double a, double b) noexcept nogil:
    cdef double th
    if oz + dz * a <= floor_z:
        return a
    if dz < 0.0:
        th = (floor_z - oz) / dz
        if th <= b:
            return th
    return -1.0


cdef double _cast_one(const double[:, ::1] h, Py_ssize_t nx, Py_ssize_t ny,
                      double x0, double y0, double res, double floor_z,
                      double px, double py, double pz,
                      double dx, double dy, double dz, double t_max) noexcept nogil:
    cdef double x1 = x0 + nx * res
    cdef double y1 = y0 + ny * res
    cdef double ta, tb, tx_lo, tx_hi, ty_lo, ty_hi, t_in, t_exit, t_out
    cdef double t, tmx, tmy, t_next, hc, th
    cdef Py_ssize_t i, j
    cdef int step_i, step_j
    if dx != 0.0:
        ta = (x0 - px) / dx
        tb = (x1 - px) / dx
        if ta < tb:
            tx_lo = ta; tx_hi = tb
        else:
            tx_lo = tb; tx_hi = ta
    elif x0 <= px and px < x1:
        tx_lo = -INFINITY; tx_hi = INFINITY
    else:
        tx_lo = INFINITY; tx_hi = -INFINITY
    if dy != 0.0:
        ta = (y0 - py) / dy
        tb = (y1 - py) / dy
        if ta < tb:
            ty_lo = ta; ty_hi = tb
        else:
            ty_lo = tb; ty_hi = ta
    elif y0 <= py and py < y1:
        ty_lo = -INFINITY; ty_hi = INFINITY
    else:
        ty_lo = INFINITY; ty_hi = -INFINITY
    t_in = 0.0
    if tx_lo > t_in:
        t_in = tx_lo
    if ty_lo > t_in:
        t_in = ty_lo
    t_exit = tx_hi if tx_hi < ty_hi else ty_hi
    t_out = t_max if t_max < t_exit else t_exit
    if t_in >= t_out:
        return _floor_hit(pz, dz, floor_z, 0.0, t_max)
    if t_in > 0.0:
        th = _floor_hit(pz, dz, floor_z, 0.0, t_in)
        if th >= 0.0:
            return th

    i = <Py_ssize_t>floor((px + dx * t_in - x0) / res)
    j = <Py_ssize_t>floor((py + dy * t_in - y0) / res)
    if i < 0:
        i = 0
    elif i > nx - 1:
        i = nx - 1
    if j < 0:
        j = 0
    elif j > ny - 1:
        j = ny - 1
    step_i = 1 if dx > 0.0 else -1
    step_j = 1 if dy > 0.0 else -1
    t = t_in
    while True:
        if dx != 0.0:
            tmx = (x0 + (i + (1 if step_i > 0 else 0)) * res - px) / dx
        else:
            tmx = INFINITY
        if dy != 0.0:
            tmy = (y0 + (j + (1 if step_j > 0 else 0)) * res - py) / dy
        else:
            tmy = INFINITY
        t_next = tmx
        if tmy < t_next:
            t_next = tmy
        if t_out < t_next:
            t_next = t_out
        hc = h[i, j]
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


def raycast(heights, double x0, double y0, double res, double floor_z,
            origin, dirs, double t_max):
    """First intersection parameter of each ray with a column heightfield;
    -1 for rays with no hit in ``[0, t_max]``."""
    cdef const double[:, ::1] h = np.ascontiguousarray(heights, dtype=np.float64)
    cdef const double[:, ::1] d = np.ascontiguousarray(dirs, dtype=np.float64)
    cdef Py_ssize_t nx = h.shape[0], ny = h.shape[1], n = d.shape[0], k
    cdef double px = float(origin[0]), py = float(origin[1]), pz = float(origin[2])
    result = np.empty(n, dtype=np.float64)
    cdef double[::1] out = result
    with nogil:
        for k in range(n):
            out[k] = _cast_one(h, nx, ny, x0, y0, res, floor_z, px, py, pz,
                               d[k, 0], d[k, 1], d[k, 2], t_max)
    return result
