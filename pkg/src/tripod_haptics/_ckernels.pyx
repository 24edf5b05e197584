# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-tick contact kernels; see ``_pykernels`` for the reference.

Every routine keeps the operation order of the Python fallback. The extension
is built with ``-ffp-contract=off`` so no fused multiply-adds creep in and the
two backends agree bit for bit.
"""

import numpy as np

from libc.math cimport sqrt, fabs

import math

cdef double STICK_SLACK = 1e-12

SPHERE = 0
HALFSPACE = 1
BOX = 2
CYLINDER = 3


cdef struct SD:
    double d
    double cx, cy, cz
    double nx, ny, nz


cdef inline double _clamp(double v, double lo, double hi) nogil:
    # same evaluation as Python min(max(v, lo), hi)
    cdef double m = v if v >= lo else lo
    if m > hi:
        return hi
    return m


cdef SD _sd_sphere(double[16] p, double px, double py, double pz) nogil:
    cdef SD r
    cdef double vx = px - p[0]
    cdef double vy = py - p[1]
    cdef double vz = pz - p[2]
    cdef double length = sqrt(vx * vx + vy * vy + vz * vz)
    if length == 0.0:
        r.nx = 1.0
        r.ny = 0.0
        r.nz = 0.0
    else:
        r.nx = vx / length
        r.ny = vy / length
        r.nz = vz / length
    r.d = length - p[3]
    r.cx = p[0] + p[3] * r.nx
    r.cy = p[1] + p[3] * r.ny
    r.cz = p[2] + p[3] * r.nz
    return r


cdef SD _sd_halfspace(double[16] p, double px, double py, double pz) nogil:
    cdef SD r
    cdef double d = (px - p[0]) * p[3] + (py - p[1]) * p[4] + (pz - p[2]) * p[5]
    r.d = d
    r.cx = px - d * p[3]
    r.cy = py - d * p[4]
    r.cz = pz - d * p[5]
    r.nx = p[3]
    r.ny = p[4]
    r.nz = p[5]
    return r


cdef SD _sd_box(double[16] p, double px, double py, double pz) nogil:
    cdef SD r
    cdef double hx = p[3], hy = p[4], hz = p[5]
    cdef double r00 = p[6], r01 = p[7], r02 = p[8]
    cdef double r10 = p[9], r11 = p[10], r12 = p[11]
    cdef double r20 = p[12], r21 = p[13], r22 = p[14]
    cdef double dx = px - p[0]
    cdef double dy = py - p[1]
    cdef double dz = pz - p[2]
    cdef double lx = r00 * dx + r10 * dy + r20 * dz
    cdef double ly = r01 * dx + r11 * dy + r21 * dz
    cdef double lz = r02 * dx + r12 * dy + r22 * dz
    cdef double ex = fabs(lx) - hx
    cdef double ey = fabs(ly) - hy
    cdef double ez = fabs(lz) - hz
    cdef double qx, qy, qz, gx, gy, gz, dist, mx, my, mz, d, s
    if ex > 0.0 or ey > 0.0 or ez > 0.0:
        qx = _clamp(lx, -hx, hx)
        qy = _clamp(ly, -hy, hy)
        qz = _clamp(lz, -hz, hz)
        gx = lx - qx
        gy = ly - qy
        gz = lz - qz
        dist = sqrt(gx * gx + gy * gy + gz * gz)
        mx = gx / dist
        my = gy / dist
        mz = gz / dist
        d = dist
    else:
        qx = lx
        qy = ly
        qz = lz
        mx = 0.0
        my = 0.0
        mz = 0.0
        if ex >= ey and ex >= ez:
            d = ex
            s = 1.0 if lx >= 0.0 else -1.0
            qx = s * hx
            mx = s
        elif ey >= ez:
            d = ey
            s = 1.0 if ly >= 0.0 else -1.0
            qy = s * hy
            my = s
        else:
            d = ez
            s = 1.0 if lz >= 0.0 else -1.0
            qz = s * hz
            mz = s
    r.d = d
    r.cx = p[0] + (r00 * qx + r01 * qy + r02 * qz)
    r.cy = p[1] + (r10 * qx + r11 * qy + r12 * qz)
    r.cz = p[2] + (r20 * qx + r21 * qy + r22 * qz)
    r.nx = r00 * mx + r01 * my + r02 * mz
    r.ny = r10 * mx + r11 * my + r12 * mz
    r.nz = r20 * mx + r21 * my + r22 * mz
    return r


cdef SD _sd_cylinder(double[16] p, double px, double py, double pz) nogil:
    cdef SD r
    cdef double bx = p[0], by = p[1], bz = p[2]
    cdef double ax = p[3], ay = p[4], az = p[5]
    cdef double radius = p[6], height = p[7]
    cdef double vx = px - bx
    cdef double vy = py - by
    cdef double vz = pz - bz
    cdef double along = vx * ax + vy * ay + vz * az
    cdef double rx = vx - along * ax
    cdef double ry = vy - along * ay
    cdef double rz = vz - along * az
    cdef double rho = sqrt(rx * rx + ry * ry + rz * rz)
    cdef double ux, uy, uz, gr, ga, dist, a_c, r_c, cr, ca
    if rho == 0.0:
        ux = p[8]
        uy = p[9]
        uz = p[10]
    else:
        ux = rx / rho
        uy = ry / rho
        uz = rz / rho
    cdef double e_side = rho - radius
    cdef double e_bottom = -along
    cdef double e_top = along - height
    if e_side > 0.0 or e_bottom > 0.0 or e_top > 0.0:
        gr = e_side if e_side > 0.0 else 0.0
        if e_bottom > 0.0:
            ga = -e_bottom
        elif e_top > 0.0:
            ga = e_top
        else:
            ga = 0.0
        dist = sqrt(gr * gr + ga * ga)
        a_c = _clamp(along, 0.0, height)
        r_c = rho if rho <= radius else radius
        cr = gr / dist
        ca = ga / dist
        r.d = dist
        r.cx = bx + a_c * ax + r_c * ux
        r.cy = by + a_c * ay + r_c * uy
        r.cz = bz + a_c * az + r_c * uz
        r.nx = cr * ux + ca * ax
        r.ny = cr * uy + ca * ay
        r.nz = cr * uz + ca * az
        return r
    if e_side >= e_bottom and e_side >= e_top:
        r.d = e_side
        r.cx = bx + along * ax + radius * ux
        r.cy = by + along * ay + radius * uy
        r.cz = bz + along * az + radius * uz
        r.nx = ux
        r.ny = uy
        r.nz = uz
        return r
    if e_bottom >= e_top:
        r.d = e_bottom
        r.cx = px - along * ax
        r.cy = py - along * ay
        r.cz = pz - along * az
        r.nx = -ax
        r.ny = -ay
        r.nz = -az
        return r
    r.d = e_top
    r.cx = px + e_top * -ax
    r.cy = py + e_top * -ay
    r.cz = pz + e_top * -az
    r.nx = ax
    r.ny = ay
    r.nz = az
    return r


cdef inline SD _sd(int kind, double[16] p, double px, double py, double pz) nogil:
    if kind == 0:
        return _sd_sphere(p, px, py, pz)
    if kind == 1:
        return _sd_halfspace(p, px, py, pz)
    if kind == 2:
        return _sd_box(p, px, py, pz)
    return _sd_cylinder(p, px, py, pz)


cdef int _load(tuple params, double[16] out) except -1:
    cdef Py_ssize_t i, n = len(params)
    if n > 16:
        raise ValueError("too many shape parameters")
    for i in range(n):
        out[i] = params[i]
    for i in range(n, 16):
        out[i] = 0.0
    return 0


# out: in_contact, slipping, px, py, pz, nx, ny, nz, depth
cdef void _proxy_step(int kind, double[16] p, double tip_radius, double mu,
                      double ax, double ay, double az,
                      double hx, double hy, double hz, double[9] out) nogil:
    cdef SD h = _sd(kind, p, hx, hy, hz)
    cdef double s = h.d - tip_radius
    cdef double depth, qx, qy, qz, sx, sy, sz, wx, wy, wz, wn, tx, ty, tz
    cdef double tmag, cap, f
    cdef SD a, g
    if s >= 0.0:
        out[0] = 0.0
        out[1] = 0.0
        out[2] = hx
        out[3] = hy
        out[4] = hz
        out[5] = h.nx
        out[6] = h.ny
        out[7] = h.nz
        out[8] = 0.0
        return
    depth = -s
    qx = h.cx + tip_radius * h.nx
    qy = h.cy + tip_radius * h.ny
    qz = h.cz + tip_radius * h.nz
    a = _sd(kind, p, ax, ay, az)
    sx = a.cx + tip_radius * a.nx
    sy = a.cy + tip_radius * a.ny
    sz = a.cz + tip_radius * a.nz
    wx = sx - qx
    wy = sy - qy
    wz = sz - qz
    wn = wx * h.nx + wy * h.ny + wz * h.nz
    tx = wx - wn * h.nx
    ty = wy - wn * h.ny
    tz = wz - wn * h.nz
    tmag = sqrt(tx * tx + ty * ty + tz * tz)
    cap = mu * (depth + wn)
    if cap < 0.0:
        cap = 0.0
    out[0] = 1.0
    out[5] = h.nx
    out[6] = h.ny
    out[7] = h.nz
    out[8] = depth
    if tmag <= cap + STICK_SLACK:
        out[1] = 0.0
        out[2] = sx
        out[3] = sy
        out[4] = sz
        return
    out[1] = 1.0
    if cap == 0.0:
        out[2] = qx
        out[3] = qy
        out[4] = qz
        return
    f = cap / tmag
    g = _sd(kind, p, qx + f * tx, qy + f * ty, qz + f * tz)
    out[2] = g.cx + tip_radius * g.nx
    out[3] = g.cy + tip_radius * g.ny
    out[4] = g.cz + tip_radius * g.nz


def signed_distance(int kind, tuple params, double px, double py, double pz):
    """Return ``(d, cx, cy, cz, nx, ny, nz)`` for point ``p`` against a shape."""
    cdef double[16] p
    _load(params, p)
    cdef SD r = _sd(kind, p, px, py, pz)
    return (r.d, r.cx, r.cy, r.cz, r.nx, r.ny, r.nz)


def proxy_update(int kind, tuple params, double tip_radius, double mu,
                 double ax, double ay, double az,
                 double hx, double hy, double hz):
    """Advance one god-object proxy; same contract as the Python fallback."""
    cdef double[16] p
    cdef double[9] o
    _load(params, p)
    _proxy_step(kind, p, tip_radius, mu, ax, ay, az, hx, hy, hz, o)
    return (o[0] != 0.0, o[1] != 0.0, o[2], o[3], o[4], o[5], o[6], o[7], o[8])


def proxy_walk(int kind, tuple params, double tip_radius, double mu, start, hips):
    """Run the proxy update over an ``(N, 3)`` HIP array; returns ``(N, 9)``."""
    cdef double[16] p
    _load(params, p)
    cdef double[:, ::1] h = np.ascontiguousarray(hips, dtype=np.float64)
    cdef Py_ssize_t n = h.shape[0], i
    res = np.empty((n, 9), dtype=np.float64)
    cdef double[:, ::1] out = res
    cdef double ax = start[0], ay = start[1], az = start[2]
    with nogil:
        for i in range(n):
            _proxy_step(kind, p, tip_radius, mu, ax, ay, az,
                        h[i, 0], h[i, 1], h[i, 2], &out[i, 0])
            ax = out[i, 2]
            ay = out[i, 3]
            az = out[i, 4]
    return res


def proxy_batch(int kind, tuple params, radii, double mu, proxies, hips):
    """One proxy update per row of ``(K, 3)`` proxies and HIPs; returns ``(K, 9)``."""
    cdef double[16] p
    _load(params, p)
    cdef double[::1] r = np.ascontiguousarray(radii, dtype=np.float64)
    cdef double[:, ::1] a = np.ascontiguousarray(proxies, dtype=np.float64)
    cdef double[:, ::1] h = np.ascontiguousarray(hips, dtype=np.float64)
    cdef Py_ssize_t n = h.shape[0], i
    if a.shape[0] != n or r.shape[0] != n:
        raise ValueError("radii, proxies and hips must have the same length")
    res = np.empty((n, 9), dtype=np.float64)
    cdef double[:, ::1] out = res
    with nogil:
        for i in range(n):
            _proxy_step(kind, p, r[i], mu, a[i, 0], a[i, 1], a[i, 2],
                        h[i, 0], h[i, 1], h[i, 2], &out[i, 0])
    return res


def cone_wrenches(normals, arms, double mu, int edges):
    """Linearised friction-cone wrenches, ``(6, K * edges)``."""
    cdef double[:, ::1] n = np.ascontiguousarray(normals, dtype=np.float64)
    cdef double[:, ::1] a = np.ascontiguousarray(arms, dtype=np.float64)
    cdef Py_ssize_t k = n.shape[0], i, j, c, idx
    res = np.empty((6, k * edges), dtype=np.float64)
    cdef double[:, ::1] out = res
    cdef double scale = 0.0, s2, cs, sn, dot, nrm
    # trig through Python's math module: gcc would fuse cos/sin into sincos,
    # which can differ from separate libm calls in the last bit
    cdef double[::1] cos_t = np.array([math.cos(2.0 * math.pi * j / edges) for j in range(edges)])
    cdef double[::1] sin_t = np.array([math.sin(2.0 * math.pi * j / edges) for j in range(edges)])
    cdef double e[3]
    cdef double t1[3]
    cdef double t2[3]
    cdef double f[3]
    for i in range(k):
        s2 = 0.0 + a[i, 0] * a[i, 0]
        s2 = s2 + a[i, 1] * a[i, 1]
        s2 = s2 + a[i, 2] * a[i, 2]
        if s2 > scale:
            scale = s2
    scale = sqrt(scale)
    if not scale > 0.0:
        scale = 1.0
    for i in range(k):
        # first axis with the smallest |n_c|, as numpy.argmin
        idx = 0
        for c in range(1, 3):
            if fabs(n[i, c]) < fabs(n[i, idx]):
                idx = c
        for c in range(3):
            e[c] = 1.0 if c == idx else 0.0
        dot = 0.0 + e[0] * n[i, 0]
        dot = dot + e[1] * n[i, 1]
        dot = dot + e[2] * n[i, 2]
        for c in range(3):
            t1[c] = e[c] - dot * n[i, c]
        nrm = 0.0 + t1[0] * t1[0]
        nrm = nrm + t1[1] * t1[1]
        nrm = nrm + t1[2] * t1[2]
        nrm = sqrt(nrm)
        for c in range(3):
            t1[c] = t1[c] / nrm
        t2[0] = n[i, 1] * t1[2] - n[i, 2] * t1[1]
        t2[1] = n[i, 2] * t1[0] - n[i, 0] * t1[2]
        t2[2] = n[i, 0] * t1[1] - n[i, 1] * t1[0]
        for j in range(edges):
            cs = cos_t[j]
            sn = sin_t[j]
            for c in range(3):
                f[c] = n[i, c] + mu * (cs * t1[c] + sn * t2[c])
            nrm = 0.0 + f[0] * f[0]
            nrm = nrm + f[1] * f[1]
            nrm = nrm + f[2] * f[2]
            nrm = sqrt(nrm)
            for c in range(3):
                f[c] = f[c] / nrm
                out[c, i * edges + j] = f[c]
            out[3, i * edges + j] = (a[i, 1] * f[2] - a[i, 2] * f[1]) / scale
            out[4, i * edges + j] = (a[i, 2] * f[0] - a[i, 0] * f[2]) / scale
            out[5, i * edges + j] = (a[i, 0] * f[1] - a[i, 1] * f[0]) / scale
    return res
