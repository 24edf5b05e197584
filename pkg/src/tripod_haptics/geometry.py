"""Shape primitives, fingertip contact, sphere fitting and Euler decomposition.

All quantities are SI: metres, radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Union

import numpy as np

from . import kernels
from .errors import DegenerateGeometryError, InvalidInputError

UNIT_TOL = 1e-9
DEFAULT_TIP_RADIUS = 0.008


def _vec3(v, name: str) -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(-1)
    if a.shape != (3,) or not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} must be a finite 3-vector, got {v!r}")
    return a


def _unit(v, name: str) -> np.ndarray:
    a = _vec3(v, name)
    if abs(np.linalg.norm(a) - 1.0) > UNIT_TOL:
        raise InvalidInputError(f"{name} must be unit length within {UNIT_TOL:g}")
    return a


def quat_to_matrix(q) -> np.ndarray:
    """Rotation matrix of a unit quaternion ``(w, x, y, z)``."""
    w, x, y, z = (float(c) for c in q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_multiply(a, b) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def _any_perpendicular(axis: np.ndarray) -> np.ndarray:
    # pick the world axis least aligned with ``axis`` so the result is stable
    i = int(np.argmin(np.abs(axis)))
    e = np.zeros(3)
    e[i] = 1.0
    p = e - np.dot(e, axis) * axis
    return p / np.linalg.norm(p)


@dataclass(frozen=True)
class Sphere:
    center: np.ndarray
    radius: float
    kind: int = field(default=kernels.SPHERE, init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "center", _vec3(self.center, "center"))
        if not self.radius > 0:
            raise InvalidInputError("radius must be > 0")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def packed(self) -> tuple:
        return (*self.center.tolist(), self.radius)

    def transformed(self, position, orientation) -> "Sphere":
        r = quat_to_matrix(orientation)
        return Sphere(np.asarray(position, dtype=float) + r @ self.center, self.radius)


@dataclass(frozen=True)
class HalfSpace:
    point: np.ndarray
    normal: np.ndarray
    kind: int = field(default=kernels.HALFSPACE, init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "point", _vec3(self.point, "point"))
        object.__setattr__(self, "normal", _unit(self.normal, "normal"))

    @property
    def packed(self) -> tuple:
        return (*self.point.tolist(), *self.normal.tolist())

    def transformed(self, position, orientation) -> "HalfSpace":
        r = quat_to_matrix(orientation)
        n = r @ self.normal
        return HalfSpace(np.asarray(position, dtype=float) + r @ self.point, n / np.linalg.norm(n))


@dataclass(frozen=True)
class Box:
    center: np.ndarray
    half_extents: np.ndarray
    orientation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    kind: int = field(default=kernels.BOX, init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "center", _vec3(self.center, "center"))
        h = _vec3(self.half_extents, "half_extents")
        if not np.all(h > 0):
            raise InvalidInputError("half_extents must be > 0 componentwise")
        object.__setattr__(self, "half_extents", h)
        q = np.asarray(self.orientation, dtype=float).reshape(-1)
        if q.shape != (4,) or abs(np.linalg.norm(q) - 1.0) > UNIT_TOL:
            raise InvalidInputError("orientation must be a unit quaternion (w, x, y, z)")
        object.__setattr__(self, "orientation", q)

    @property
    def rotation(self) -> np.ndarray:
        return quat_to_matrix(self.orientation)

    @property
    def packed(self) -> tuple:
        return (*self.center.tolist(), *self.half_extents.tolist(),
                *self.rotation.reshape(-1).tolist())

    def transformed(self, position, orientation) -> "Box":
        r = quat_to_matrix(orientation)
        q = quat_multiply(orientation, self.orientation)
        return Box(np.asarray(position, dtype=float) + r @ self.center, self.half_extents,
                   q / np.linalg.norm(q))


@dataclass(frozen=True)
class Cylinder:
    """Solid cylinder from ``base`` along ``axis`` for ``height`` metres."""

    base: np.ndarray
    axis: np.ndarray
    radius: float
    height: float
    kind: int = field(default=kernels.CYLINDER, init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "base", _vec3(self.base, "base"))
        object.__setattr__(self, "axis", _unit(self.axis, "axis"))
        if not self.radius > 0 or not self.height > 0:
            raise InvalidInputError("radius and height must be > 0")
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "height", float(self.height))

    @property
    def center(self) -> np.ndarray:
        return self.base + 0.5 * self.height * self.axis

    @property
    def packed(self) -> tuple:
        return (*self.base.tolist(), *self.axis.tolist(), self.radius, self.height,
                *_any_perpendicular(self.axis).tolist())

    def transformed(self, position, orientation) -> "Cylinder":
        r = quat_to_matrix(orientation)
        axis = r @ self.axis
        return Cylinder(np.asarray(position, dtype=float) + r @ self.base,
                        axis / np.linalg.norm(axis), self.radius, self.height)


Shape = Union[Sphere, HalfSpace, Box, Cylinder]


class SignedDistance(NamedTuple):
    distance: float
    closest: np.ndarray
    normal: np.ndarray


@dataclass(frozen=True)
class SpherePose:
    center: np.ndarray
    radius: float = DEFAULT_TIP_RADIUS

    def __post_init__(self):
        object.__setattr__(self, "center", _vec3(self.center, "center"))
        if not self.radius > 0:
            raise InvalidInputError("fingertip radius must be > 0")


@dataclass(frozen=True)
class Contact:
    point: np.ndarray
    normal: np.ndarray
    depth: float
    area: float


def check_shape(s) -> None:
    if not isinstance(s, (Sphere, HalfSpace, Box, Cylinder)):
        raise InvalidInputError(f"not a shape: {s!r}")


def signed_distance(p, s: Shape) -> SignedDistance:
    """Signed distance from ``p`` to the surface of ``s`` (negative inside).

    Box interiors resolve to the nearest face, ties in x, y, z order; a point
    at a sphere centre gets the +x normal.
    """
    check_shape(s)
    p = _vec3(p, "p")
    d, cx, cy, cz, nx, ny, nz = kernels.signed_distance(s.kind, s.packed, *p.tolist())
    return SignedDistance(d, np.array([cx, cy, cz]), np.array([nx, ny, nz]))


def cap_area(radius: float, depth: float) -> float:
    """Area of the circle where a plane cuts a sphere ``depth`` deep."""
    d = min(depth, radius)
    return math.pi * (2.0 * radius * d - d * d)


def fingertip_contact(tip: SpherePose, s: Shape) -> Optional[Contact]:
    sd = signed_distance(tip.center, s)
    if sd.distance >= tip.radius:
        return None
    depth = tip.radius - sd.distance
    return Contact(sd.closest, sd.normal, depth, cap_area(tip.radius, depth))


def fit_sphere(points) -> tuple[np.ndarray, float]:
    """Algebraic least-squares sphere through ``points`` (N x 3, N >= 4).

    Solves the linear system ``2 p . c + (r^2 - |c|^2) = |p|^2`` on centred
    coordinates.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 4:
        raise DegenerateGeometryError("need at least 4 points of dimension 3", rank=None)
    mean = pts.mean(axis=0)
    centred = pts - mean
    sv = np.linalg.svd(centred, compute_uv=False)
    rank = int(np.sum(sv > 1e-9 * sv[0])) if sv[0] > 0 else 0
    if rank < 3:
        raise DegenerateGeometryError(
            f"points span rank {rank} < 3 (coplanar or degenerate)", rank=rank)
    a = np.column_stack([2.0 * centred, np.ones(len(pts))])
    b = np.einsum("ij,ij->i", centred, centred)
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    c = sol[:3]
    r2 = sol[3] + c @ c
    return c + mean, float(math.sqrt(max(r2, 0.0)))


class EulerAngles(NamedTuple):
    yaw: float
    pitch: float
    roll: float
    gimbal_lock: bool = False


def _wrap(a: float) -> float:
    # map into (-pi, pi]
    return math.pi if a <= -math.pi else a


def orientation_matrix(direction, palm_normal) -> np.ndarray:
    """Rotation taking (direction=+x, palm_normal=-z) to the measured frame."""
    x = _vec3(direction, "direction")
    pn = _vec3(palm_normal, "palm_normal")
    x = x / np.linalg.norm(x)
    z = -pn
    z = z - np.dot(z, x) * x
    nz = np.linalg.norm(z)
    if nz < 1e-9:
        raise DegenerateGeometryError("direction and palm normal are parallel", rank=1)
    z = z / nz
    y = np.cross(z, x)
    return np.column_stack([x, y, z])


def matrix_to_euler(r: np.ndarray, eps: float = 1e-9) -> EulerAngles:
    """Decompose ``R = Rz(yaw) Ry(pitch) Rx(roll)``."""
    cp = math.hypot(r[0, 0], r[1, 0])
    pitch = math.atan2(-r[2, 0], cp)
    if cp < eps:
        # gimbal lock: roll fixed to zero
        yaw = math.atan2(-r[0, 1], r[1, 1])
        return EulerAngles(_wrap(yaw), pitch, 0.0, True)
    yaw = math.atan2(r[1, 0], r[0, 0])
    roll = math.atan2(r[2, 1], r[2, 2])
    return EulerAngles(_wrap(yaw), _wrap(pitch), _wrap(roll), False)


def euler_to_matrix(yaw: float, pitch: float, roll: float) -> np.ndarray:
    cy, sy = math.cos(yaw), math.sin(yaw)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cr, sr = math.cos(roll), math.sin(roll)
    rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    return rz @ ry @ rx


@dataclass(frozen=True)
class Orientation:
    direction: np.ndarray
    palm_normal: np.ndarray

    def __post_init__(self):
        d = _unit_loose(self.direction, "direction")
        n = _unit_loose(self.palm_normal, "palm_normal")
        if abs(float(np.dot(d, n))) >= 1.0 - 1e-9:
            raise DegenerateGeometryError("direction and palm normal are parallel", rank=1)
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "palm_normal", n)


def euler_decompose(o: Orientation) -> EulerAngles:
    """Yaw/pitch/roll of a hand frame; x forward, y left, z up."""
    return matrix_to_euler(orientation_matrix(o.direction, o.palm_normal))


def _unit_loose(v, name):
    a = _vec3(v, name)
    n = np.linalg.norm(a)
    if n == 0:
        raise InvalidInputError(f"{name} is the zero vector")
    return a / n


def angle_between(a, b) -> float:
    """Angle in [0, pi] between two vectors, stable near 0 and pi."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return math.atan2(float(np.linalg.norm(np.cross(a, b))), float(np.dot(a, b)))
