"""Pure-Python implementation of the per-tick contact kernels.

This module mirrors ``_ckernels.pyx`` operation for operation so the two
backends produce bit-identical results (the C build disables FP contraction).
Shapes are passed as ``(kind, params)`` where ``params`` is the flat tuple
produced by :attr:`tripod_haptics.geometry.Shape.packed`.
"""

import math
from math import sqrt

import numpy as np

SPHERE = 0
HALFSPACE = 1
BOX = 2
CYLINDER = 3

# Slack on the stick test so rounding noise on a purely normal approach is not
# reported as sliding.
STICK_SLACK = 1e-12


def _sd_sphere(params, px, py, pz):
    cx, cy, cz, radius = params[0], params[1], params[2], params[3]
    vx = px - cx
    vy = py - cy
    vz = pz - cz
    length = sqrt(vx * vx + vy * vy + vz * vz)
    if length == 0.0:
        nx, ny, nz = 1.0, 0.0, 0.0
    else:
        nx = vx / length
        ny = vy / length
        nz = vz / length
    return (length - radius,
            cx + radius * nx, cy + radius * ny, cz + radius * nz,
            nx, ny, nz)


def _sd_halfspace(params, px, py, pz):
    qx, qy, qz, nx, ny, nz = params[0], params[1], params[2], params[3], params[4], params[5]
    d = (px - qx) * nx + (py - qy) * ny + (pz - qz) * nz
    return (d, px - d * nx, py - d * ny, pz - d * nz, nx, ny, nz)


def _sd_box(params, px, py, pz):
    cx, cy, cz = params[0], params[1], params[2]
    hx, hy, hz = params[3], params[4], params[5]
    # rotation matrix, row major; columns are the box axes in world coordinates
    r00, r01, r02 = params[6], params[7], params[8]
    r10, r11, r12 = params[9], params[10], params[11]
    r20, r21, r22 = params[12], params[13], params[14]
    dx = px - cx
    dy = py - cy
    dz = pz - cz
    lx = r00 * dx + r10 * dy + r20 * dz
    ly = r01 * dx + r11 * dy + r21 * dz
    lz = r02 * dx + r12 * dy + r22 * dz
    ex = abs(lx) - hx
    ey = abs(ly) - hy
    ez = abs(lz) - hz
    if ex > 0.0 or ey > 0.0 or ez > 0.0:
        qx = min(max(lx, -hx), hx)
        qy = min(max(ly, -hy), hy)
        qz = min(max(lz, -hz), hz)
        gx = lx - qx
        gy = ly - qy
        gz = lz - qz
        dist = sqrt(gx * gx + gy * gy + gz * gz)
        mx = gx / dist
        my = gy / dist
        mz = gz / dist
        d = dist
    else:
        # nearest face; ties resolved in x, y, z order
        qx, qy, qz = lx, ly, lz
        mx = my = mz = 0.0
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
    return (d,
            cx + (r00 * qx + r01 * qy + r02 * qz),
            cy + (r10 * qx + r11 * qy + r12 * qz),
            cz + (r20 * qx + r21 * qy + r22 * qz),
            r00 * mx + r01 * my + r02 * mz,
            r10 * mx + r11 * my + r12 * mz,
            r20 * mx + r21 * my + r22 * mz)


def _sd_cylinder(params, px, py, pz):
    bx, by, bz = params[0], params[1], params[2]
    ax, ay, az = params[3], params[4], params[5]
    radius, height = params[6], params[7]
    vx = px - bx
    vy = py - by
    vz = pz - bz
    along = vx * ax + vy * ay + vz * az
    rx = vx - along * ax
    ry = vy - along * ay
    rz = vz - along * az
    rho = sqrt(rx * rx + ry * ry + rz * rz)
    if rho == 0.0:
        ux, uy, uz = params[8], params[9], params[10]
    else:
        ux = rx / rho
        uy = ry / rho
        uz = rz / rho
    e_side = rho - radius
    e_bottom = -along
    e_top = along - height
    if e_side > 0.0 or e_bottom > 0.0 or e_top > 0.0:
        gr = e_side if e_side > 0.0 else 0.0
        if e_bottom > 0.0:
            ga = -e_bottom
        elif e_top > 0.0:
            ga = e_top
        else:
            ga = 0.0
        dist = sqrt(gr * gr + ga * ga)
        a_c = min(max(along, 0.0), height)
        r_c = min(rho, radius)
        cr = gr / dist
        ca = ga / dist
        return (dist,
                bx + a_c * ax + r_c * ux,
                by + a_c * ay + r_c * uy,
                bz + a_c * az + r_c * uz,
                cr * ux + ca * ax,
                cr * uy + ca * ay,
                cr * uz + ca * az)
    # inside: nearest of side, bottom, top in that tie order
    if e_side >= e_bottom and e_side >= e_top:
        return (e_side,
                bx + along * ax + radius * ux,
                by + along * ay + radius * uy,
                bz + along * az + radius * uz,
                ux, uy, uz)
    if e_bottom >= e_top:
        return (e_bottom, px - along * ax, py - along * ay, pz - along * az,
                -ax, -ay, -az)
    return (e_top,
            px + e_top * -ax, py + e_top * -ay, pz + e_top * -az,
            ax, ay, az)


_DISPATCH = (_sd_sphere, _sd_halfspace, _sd_box, _sd_cylinder)


def signed_distance(kind, params, px, py, pz):
    """Return ``(d, cx, cy, cz, nx, ny, nz)`` for point ``p`` against a shape."""
    return _DISPATCH[kind](params, px, py, pz)


def proxy_update(kind, params, tip_radius, mu, ax, ay, az, hx, hy, hz):
    """Advance one god-object proxy against a shape inflated by ``tip_radius``.

    ``(ax, ay, az)`` is the previous proxy, ``(hx, hy, hz)`` the new HIP.
    Returns ``(in_contact, slipping, px, py, pz, nx, ny, nz, depth)``; the
    normal is the outward surface normal at the HIP's closest point and depth
    is the fingertip penetration (0 in free space).
    """
    sd = _DISPATCH[kind]
    d, cx, cy, cz, nx, ny, nz = sd(params, hx, hy, hz)
    s = d - tip_radius
    if s >= 0.0:
        return (False, False, hx, hy, hz, nx, ny, nz, 0.0)
    depth = -s
    # closest point on the inflated surface
    qx = cx + tip_radius * nx
    qy = cy + tip_radius * ny
    qz = cz + tip_radius * nz
    # previous proxy re-seated on the inflated surface
    _, acx, acy, acz, anx, any_, anz = sd(params, ax, ay, az)
    sx = acx + tip_radius * anx
    sy = acy + tip_radius * any_
    sz = acz + tip_radius * anz
    wx = sx - qx
    wy = sy - qy
    wz = sz - qz
    wn = wx * nx + wy * ny + wz * nz
    tx = wx - wn * nx
    ty = wy - wn * ny
    tz = wz - wn * nz
    tmag = sqrt(tx * tx + ty * ty + tz * tz)
    cap = mu * (depth + wn)
    if cap < 0.0:
        cap = 0.0
    if tmag <= cap + STICK_SLACK:
        return (True, False, sx, sy, sz, nx, ny, nz, depth)
    if cap == 0.0:
        return (True, True, qx, qy, qz, nx, ny, nz, depth)
    f = cap / tmag
    gx = qx + f * tx
    gy = qy + f * ty
    gz = qz + f * tz
    _, gcx, gcy, gcz, gnx, gny, gnz = sd(params, gx, gy, gz)
    return (True, True,
            gcx + tip_radius * gnx, gcy + tip_radius * gny, gcz + tip_radius * gnz,
            nx, ny, nz, depth)


def proxy_walk(kind, params, tip_radius, mu, start, hips):
    """Run :func:`proxy_update` over a HIP sequence starting from ``start``.

    ``hips`` is an ``(N, 3)`` float array; returns an ``(N, 9)`` array of the
    per-step results with booleans stored as 0.0/1.0.
    """
    ax, ay, az = float(start[0]), float(start[1]), float(start[2])
    rows = []
    for hx, hy, hz in np.asarray(hips, dtype=float).tolist():
        res = proxy_update(kind, params, tip_radius, mu, ax, ay, az, hx, hy, hz)
        ax, ay, az = res[2], res[3], res[4]
        rows.append(res)
    return np.array(rows, dtype=float).reshape(-1, 9)


def proxy_batch(kind, params, radii, mu, proxies, hips):
    """One :func:`proxy_update` per row: ``proxies``, ``hips`` are ``(K, 3)``.

    ``radii`` holds one tip radius per row; returns a ``(K, 9)`` array.
    """
    rows = []
    for r, (ax, ay, az), (hx, hy, hz) in zip(
            np.asarray(radii, dtype=float).tolist(),
            np.asarray(proxies, dtype=float).tolist(),
            np.asarray(hips, dtype=float).tolist()):
        rows.append(proxy_update(kind, params, r, mu, ax, ay, az, hx, hy, hz))
    return np.array(rows, dtype=float).reshape(-1, 9)


def _cross_rows(a, b):
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b0, b1, b2 = b[..., 0], b[..., 1], b[..., 2]
    return np.stack([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0], axis=-1)


def cone_wrenches(normals, arms, mu, edges):
    """Linearised friction-cone wrenches, ``(6, K * edges)``.

    Row ``i`` of ``normals`` (unit, inward) and ``arms`` describes contact
    ``i``. Each cone edge is a unit force; moments are divided by the longest
    arm. Tangents start from the coordinate axis least aligned with the
    normal (first one on ties).
    """
    n = np.asarray(normals, dtype=float)
    arms = np.asarray(arms, dtype=float)
    scale = float(np.sqrt(np.max(np.sum(arms * arms, axis=1))))
    scale = scale if scale > 0 else 1.0
    # libm trig through ``math`` so the compiled kernel can match bit for bit
    th = [2.0 * math.pi * j / edges for j in range(edges)]
    cos = np.array([math.cos(x) for x in th])
    sin = np.array([math.sin(x) for x in th])
    e = np.zeros_like(n)
    e[np.arange(len(n)), np.argmin(np.abs(n), axis=1)] = 1.0
    t1 = e - np.sum(e * n, axis=1, keepdims=True) * n
    t1 /= np.sqrt(np.sum(t1 * t1, axis=1, keepdims=True))
    t2 = _cross_rows(n, t1)
    f = n[:, None, :] + mu * (cos[None, :, None] * t1[:, None, :]
                              + sin[None, :, None] * t2[:, None, :])
    f = f / np.sqrt(np.sum(f * f, axis=2, keepdims=True))
    m = _cross_rows(arms[:, None, :], f) / scale
    return np.concatenate([f, m], axis=2).reshape(-1, 6).T
