"""God-object proxy maintenance and per-finger force laws.

Each virtual finger owns one proxy that tracks its haptic interaction point
(HIP) in free space and is held on the object surface during contact. The
rendered force is a spring from the HIP to the proxy; its tangential part is
limited to the Coulomb cone.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import kernels
from .errors import InvalidInputError, TunnelingError, UndefinedPerceptionError
from .geometry import DEFAULT_TIP_RADIUS, Contact, Shape, cap_area, check_shape

log = logging.getLogger(__name__)

MAX_HIP_STEP = 0.05
_ZERO = np.zeros(3)


@dataclass(frozen=True)
class RenderParams:
    k_spring: float = 1000.0
    mu: float = 0.0
    k_material: float = 1.0
    epsilon_contact: float = 1e-6

    def __post_init__(self):
        if not self.k_spring > 0:
            raise InvalidInputError("k_spring must be > 0")
        if not self.mu >= 0:
            raise InvalidInputError("mu must be >= 0")
        if not self.k_material > 0:
            raise InvalidInputError("k_material must be > 0")
        if not 0 <= self.epsilon_contact <= 1e-4:
            raise InvalidInputError("epsilon_contact must be in [0, 1e-4]")


@dataclass(frozen=True)
class ProxyState:
    hip: np.ndarray
    proxy: np.ndarray
    in_contact: bool = False
    contact: Optional[Contact] = None
    displacement: np.ndarray = field(default_factory=lambda: _ZERO.copy())
    last_hip_delta: np.ndarray = field(default_factory=lambda: _ZERO.copy())
    slipping: bool = False
    tip_radius: float = 0.0

    @classmethod
    def at(cls, position, tip_radius: float = 0.0) -> "ProxyState":
        """Free-space proxy sitting on its HIP."""
        p = np.array(position, dtype=float)
        return cls(hip=p, proxy=p.copy(), tip_radius=float(tip_radius))


@dataclass(frozen=True)
class FingerForce:
    spring: np.ndarray
    friction: np.ndarray
    total: np.ndarray
    normal_magnitude: float

    @classmethod
    def zero(cls) -> "FingerForce":
        return cls(_ZERO.copy(), _ZERO.copy(), _ZERO.copy(), 0.0)


def update_proxy(prev: ProxyState, new_hip, s: Shape, p: RenderParams,
                 tip_radius: Optional[float] = None,
                 max_step: Optional[float] = None) -> ProxyState:
    """Move the proxy for a new HIP position.

    In free space the proxy coincides with the HIP. Inside the object the
    proxy stays on the surface: it sticks while the HIP remains inside the
    friction cone anchored at the proxy, otherwise it slides to the cone
    boundary. With ``mu == 0`` it is the closest surface point. ``tip_radius``
    treats the HIP as a sphere (the surface is offset by that radius).
    """
    check_shape(s)
    r = prev.tip_radius if tip_radius is None else float(tip_radius)
    hip = np.asarray(new_hip, dtype=float)
    delta = hip - prev.hip
    if max_step is not None:
        jump = float(np.linalg.norm(delta))
        if jump > max_step:
            log.warning("HIP moved %.6f m in one tick (limit %.3f m)", jump, max_step)
            raise TunnelingError(f"HIP moved {jump:.6f} m in one tick (limit {max_step} m)",
                                 jump=jump)
    hx, hy, hz = hip.tolist()
    ax, ay, az = prev.proxy.tolist()
    res = kernels.proxy_update(s.kind, s.packed, r, p.mu, ax, ay, az, hx, hy, hz)
    return proxy_state_from_kernel(res, hip, delta, s, r)


def proxy_state_from_kernel(res, hip: np.ndarray, delta: np.ndarray, s: Shape,
                            tip_radius: float) -> ProxyState:
    in_contact, slipping, px, py, pz, nx, ny, nz, depth = res
    if not in_contact:
        return ProxyState(hip=hip, proxy=hip.copy(), last_hip_delta=delta,
                          tip_radius=tip_radius)
    proxy = np.array([px, py, pz])
    normal = np.array([nx, ny, nz])
    # contact point on the object surface below the HIP sphere
    point = hip - (tip_radius - depth) * normal
    # a bare point HIP borrows the default pad size for its contact area
    area = cap_area(tip_radius if tip_radius > 0 else DEFAULT_TIP_RADIUS, depth)
    contact = Contact(point=point, normal=normal, depth=depth, area=area)
    return ProxyState(hip=hip, proxy=proxy, in_contact=True, contact=contact,
                      displacement=hip - proxy, last_hip_delta=delta,
                      slipping=bool(slipping), tip_radius=tip_radius)


def spring_force(ps: ProxyState, p: RenderParams) -> FingerForce:
    """Spring from HIP to proxy, ``k * (proxy - hip)``; zero off contact."""
    if not ps.in_contact:
        return FingerForce.zero()
    spring = p.k_spring * (ps.proxy - ps.hip)
    fn = float(spring @ ps.contact.normal)
    return FingerForce(spring, _ZERO.copy(), spring, fn)


def friction_force(ps: ProxyState, spring, p: RenderParams) -> FingerForce:
    """Split the spring into normal and Coulomb-limited tangential parts.

    In the result ``spring`` holds the normal component, ``friction`` the
    clamped tangential one, so ``total = spring + friction``.
    """
    if not ps.in_contact:
        return FingerForce.zero()
    spring = np.asarray(spring, dtype=float)
    n = ps.contact.normal
    fn = float(spring @ n)
    normal_part = fn * n
    tangential = spring - normal_part
    cap = p.mu * max(fn, 0.0)
    tmag = math.sqrt(float(tangential @ tangential))
    if tmag > cap:
        friction = tangential * (cap / tmag) if tmag > 0 else _ZERO.copy()
    else:
        friction = tangential
    # keep the friction exactly orthogonal after scaling
    friction = friction - float(friction @ n) * n
    return FingerForce(normal_part, friction, normal_part + friction, fn)


def render(ps: ProxyState, p: RenderParams) -> FingerForce:
    """Spring plus friction for one finger."""
    if not ps.in_contact:
        return FingerForce.zero()
    return friction_force(ps, spring_force(ps, p).spring, p)


def perception_rate(p: RenderParams, ps: ProxyState, f: FingerForce) -> float:
    """``k_material * |dX| * |F| / A`` for one finger in contact."""
    if not ps.in_contact or ps.contact is None or ps.contact.area <= 0:
        raise UndefinedPerceptionError("perception rate needs a contact with positive area")
    return (p.k_material * math.sqrt(float(ps.last_hip_delta @ ps.last_hip_delta))
            * math.sqrt(float(f.total @ f.total)) / ps.contact.area)


def carry_proxy(ps: ProxyState, rotation: np.ndarray, old_origin: np.ndarray,
                new_origin: np.ndarray) -> ProxyState:
    """Move a contacting proxy rigidly with its object."""
    if not ps.in_contact:
        return ps
    proxy = new_origin + rotation @ (ps.proxy - old_origin)
    return replace(ps, proxy=proxy, displacement=ps.hip - proxy)


@dataclass(frozen=True)
class ContactRows:
    """Per-finger contact and force results for one object, one row per finger."""

    in_contact: np.ndarray   # (K,) bool
    slipping: np.ndarray     # (K,) bool
    proxy: np.ndarray        # (K, 3)
    normal: np.ndarray       # (K, 3) outward; zero off contact
    point: np.ndarray        # (K, 3) contact point; HIP off contact
    total: np.ndarray        # (K, 3) spring + friction
    normal_force: np.ndarray  # (K,)
    perception: np.ndarray   # (K,) NaN off contact


def render_rows(res: np.ndarray, hips: np.ndarray, prev_hips: np.ndarray, radii: np.ndarray,
                p: RenderParams) -> ContactRows:
    """Vectorised :func:`render` and :func:`perception_rate` over kernel rows.

    ``res`` is the ``(K, 9)`` output of ``kernels.proxy_batch``.
    """
    on = res[:, 0] != 0.0
    normal = np.where(on[:, None], res[:, 5:8], 0.0)
    proxy = np.where(on[:, None], res[:, 2:5], hips)
    depth = np.where(on, res[:, 8], 0.0)
    spring = p.k_spring * (proxy - hips)
    fn = np.sum(spring * normal, axis=1)
    normal_part = fn[:, None] * normal
    tangential = spring - normal_part
    cap = p.mu * np.maximum(fn, 0.0)
    tmag = np.sqrt(np.sum(tangential * tangential, axis=1))
    over = tmag > cap
    scale = np.where(over, cap / np.where(tmag > 0, tmag, 1.0), 1.0)
    friction = tangential * scale[:, None]
    friction = friction - np.sum(friction * normal, axis=1)[:, None] * normal
    total = normal_part + friction
    point = hips - (radii - depth)[:, None] * normal
    r = np.where(radii > 0, radii, DEFAULT_TIP_RADIUS)
    d = np.minimum(depth, r)
    area = math.pi * (2.0 * r * d - d * d)
    delta = hips - prev_hips
    with np.errstate(divide="ignore", invalid="ignore"):
        perc = (p.k_material * np.sqrt(np.sum(delta * delta, axis=1))
                * np.sqrt(np.sum(total * total, axis=1)) / area)
    perc = np.where(on & (area > 0), perc, np.nan)
    return ContactRows(on, on & (res[:, 1] != 0.0), proxy, normal, point, total, fn, perc)
