"""Virtual-finger aggregation, grasp map, wrench, force closure and grasp state.

The grasp map follows the usual contact formulation: the columns of ``normals``
are inward contact normals, ``arms`` are the vectors from the object's centre
of mass to each virtual-finger grasp point, and the object wrench is the sum
of reacted finger forces and their moments about that point.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from . import kernels
from .errors import InvalidInputError, NoGraspError
from .geometry import Box, Cylinder, HalfSpace, Shape, Sphere, quat_multiply, quat_to_matrix
from .rendering import FingerForce
from .taxonomy import VFAssignment

CLOSURE_MARGIN = 1e-9
DEFAULT_CONE_EDGES = 8


@dataclass(frozen=True)
class FingerSample:
    """One real finger at one tick: tip position, rendered force, contact."""

    tip: np.ndarray
    force: FingerForce
    in_contact: bool = False
    contact_point: Optional[np.ndarray] = None
    normal: Optional[np.ndarray] = None  # outward object normal
    slipping: bool = False


@dataclass(frozen=True)
class VirtualFingerState:
    vf_id: int
    member_fingers: frozenset
    position: Optional[np.ndarray]
    force: np.ndarray
    in_contact: bool
    grasp_point: Optional[np.ndarray] = None
    normal: Optional[np.ndarray] = None  # outward object normal at the grasp point
    slipping: bool = False

    @property
    def normal_force(self) -> float:
        """Magnitude of the rendered force along the outward normal."""
        if not self.in_contact or self.normal is None:
            return 0.0
        return float(self.force @ self.normal)


def aggregate_virtual_fingers(per_finger: Mapping[int, FingerSample],
                              assignment: VFAssignment) -> tuple[VirtualFingerState, ...]:
    out = []
    for vf_id, members in enumerate(assignment, start=1):
        ids = sorted(members)
        force = np.zeros(3)
        for i in ids:
            force = force + per_finger[i].force.total
        touching = [i for i in ids if per_finger[i].in_contact]
        if not ids:
            out.append(VirtualFingerState(vf_id, frozenset(), None, force, False))
            continue
        use = touching or ids
        position = sum(per_finger[i].tip for i in use) / len(use)
        grasp_point = normal = None
        if touching:
            grasp_point = sum(per_finger[i].contact_point for i in touching) / len(touching)
            nsum = sum(per_finger[i].normal for i in touching)
            nn = math.sqrt(float(nsum @ nsum))
            normal = nsum / nn if nn > 0 else per_finger[touching[0]].normal
        out.append(VirtualFingerState(
            vf_id, frozenset(ids), position, force, bool(touching), grasp_point, normal,
            any(per_finger[i].slipping for i in touching)))
    return tuple(out)


def aggregate_rows(tips: np.ndarray, in_contact: np.ndarray, points: np.ndarray,
                   normals: np.ndarray, forces: np.ndarray, slipping: np.ndarray,
                   assignment: VFAssignment) -> tuple[VirtualFingerState, ...]:
    """:func:`aggregate_virtual_fingers` over ``(5, ...)`` finger arrays (row = id - 1)."""
    out = []
    for vf_id, members in enumerate(assignment, start=1):
        ids = [i - 1 for i in sorted(members)]
        if not ids:
            out.append(VirtualFingerState(vf_id, frozenset(), None, np.zeros(3), False))
            continue
        force = np.zeros(3)
        for i in ids:
            force = force + forces[i]
        touching = [i for i in ids if in_contact[i]]
        use = touching or ids
        position = sum(tips[i] for i in use) / len(use)
        grasp_point = normal = None
        if touching:
            grasp_point = sum(points[i] for i in touching) / len(touching)
            nsum = sum(normals[i] for i in touching)
            nn = math.sqrt(float(nsum @ nsum))
            normal = nsum / nn if nn > 0 else normals[touching[0]]
        out.append(VirtualFingerState(
            vf_id, frozenset(members), position, force, bool(touching), grasp_point, normal,
            bool(any(slipping[i] for i in touching))))
    return tuple(out)


@dataclass(frozen=True)
class GraspMap:
    reference: np.ndarray
    normals: np.ndarray  # (3, 3), row i = inward normal of VF i (zero if absent)
    arms: np.ndarray     # (3, 3), row i = grasp point - reference
    active: tuple        # which VFs contribute

    @property
    def u(self) -> np.ndarray:
        """Normals as matrix columns."""
        return self.normals.T

    @property
    def contact_count(self) -> int:
        return sum(self.active)


@dataclass(frozen=True)
class Wrench:
    force: np.ndarray
    moment: np.ndarray


@dataclass(frozen=True)
class RigidObjectState:
    shape: Shape            # geometry in the body frame, centred on the centre of mass
    mass: float
    position: np.ndarray
    orientation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    angular_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    mu: float = 0.5
    k_spring: float = 1000.0
    fixed: bool = False
    support_height: Optional[float] = None

    def __post_init__(self):
        if not self.mass > 0:
            raise InvalidInputError("mass must be > 0")
        q = np.asarray(self.orientation, dtype=float)
        if q.shape != (4,) or abs(np.linalg.norm(q) - 1.0) > 1e-9:
            raise InvalidInputError("orientation must be a unit quaternion")
        object.__setattr__(self, "orientation", q)
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))

    def world_shape(self) -> Shape:
        return self.shape.transformed(self.position, self.orientation)


def build_grasp_map(vfs: Sequence[VirtualFingerState], obj: RigidObjectState) -> GraspMap:
    active = tuple(bool(v.in_contact) for v in vfs)
    if not any(active):
        raise NoGraspError("no virtual finger is in contact")
    ref = np.array(obj.position, dtype=float)
    normals = np.zeros((3, 3))
    arms = np.zeros((3, 3))
    for i, v in enumerate(vfs):
        if v.in_contact:
            normals[i] = -v.normal
            arms[i] = v.grasp_point - ref
    return GraspMap(ref, normals, arms, active)


def resultant_wrench(g: GraspMap, vfs: Sequence[VirtualFingerState], gravity,
                     obj: RigidObjectState) -> Wrench:
    """Wrench on the object: reacted finger forces plus weight."""
    forces = np.array([v.force for v in vfs])
    on = np.asarray(g.active, dtype=bool)
    moment = _cross_rows(g.arms[on], -forces[on]).sum(axis=0)
    force = -forces.sum(axis=0) + obj.mass * np.asarray(gravity, dtype=float)
    return Wrench(force, moment)


def _cross_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise cross product of broadcastable (..., 3) arrays."""
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b0, b1, b2 = b[..., 0], b[..., 1], b[..., 2]
    return np.stack([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0], axis=-1)


def contact_wrenches(g: GraspMap, mu: float, cone_edges: int) -> np.ndarray:
    """Unit edge forces of each linearised cone with their scaled moments, (6, m).

    Columns are grouped by contact, ``cone_edges`` per contact; moments are
    divided by the longest arm so both halves have comparable scale.
    """
    on = np.asarray(g.active, dtype=bool)
    return kernels.cone_wrenches(g.normals[on], g.arms[on], float(mu), int(cone_edges))


def _closure_lp(w: np.ndarray):
    """Solve ``max t`` s.t. ``W l = 0, sum(l) = 1, l >= t``; returns (t, l)."""
    m = w.shape[1]
    # variables: l_1..l_m, t ; maximise t
    c = np.zeros(m + 1)
    c[-1] = -1.0
    a_eq = np.zeros((w.shape[0] + 1, m + 1))
    a_eq[:-1, :m] = w
    a_eq[-1, :m] = 1.0
    b_eq = np.zeros(w.shape[0] + 1)
    b_eq[-1] = 1.0
    a_ub = np.hstack([-np.eye(m), np.ones((m, 1))])  # t - l_j <= 0
    b_ub = np.zeros(m)
    bounds = [(0, None)] * m + [(None, None)]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds,
                  method="highs")
    if res.status == 2:  # infeasible: origin not even in the hull
        return -1.0, None
    if res.status != 0:
        raise RuntimeError(f"closure LP failed: {res.message}")
    return float(res.x[-1]), res.x[:m]


def closure_margin(w: np.ndarray) -> float:
    """Largest ``t`` with ``W l = 0, sum(l) = 1, l >= t`` (negative if none).

    The origin is strictly inside the hull of the columns iff the columns
    span the wrench space and the optimum is positive.
    """
    return _closure_lp(w)[0]


def _check_closure_args(g: GraspMap, mu: float, cone_edges: int) -> None:
    if g.contact_count != 3:
        raise InvalidInputError("force closure test needs exactly 3 contacts")
    if mu < 0:
        raise InvalidInputError("mu must be >= 0")
    if cone_edges < 4:
        raise InvalidInputError("cone_edges must be >= 4")


def force_closure(g: GraspMap, mu: float, cone_edges: int = DEFAULT_CONE_EDGES) -> bool:
    _check_closure_args(g, mu, cone_edges)
    w = contact_wrenches(g, mu, cone_edges)
    if np.linalg.matrix_rank(w, tol=1e-9) < 6:
        return False
    return closure_margin(w) >= CLOSURE_MARGIN


class ClosureTester:
    """``force_closure`` that reuses the last LP weights as a certificate.

    Columns that span the wrench space and admit weights ``l > 0`` with
    ``W l = 0`` positively span it, which is force closure. The previous
    optimal weights are projected onto the null space of the new ``W``; if
    they stay above the closure margin the LP is skipped. Any other case
    falls back to the LP, so the answer always equals ``force_closure``
    up to the LP's own tolerance.
    """

    def __init__(self, cone_edges: int = DEFAULT_CONE_EDGES):
        self.cone_edges = cone_edges
        self._weights: Optional[np.ndarray] = None
        self.lp_calls = 0

    def __call__(self, g: GraspMap, mu: float) -> bool:
        _check_closure_args(g, mu, self.cone_edges)
        w = contact_wrenches(g, mu, self.cone_edges)
        if np.linalg.svd(w, compute_uv=False)[-1] <= 1e-9:  # rank < 6
            self._weights = None
            return False
        lam = self._weights
        if lam is not None and lam.shape[0] == w.shape[1]:
            lam = lam - w.T @ np.linalg.solve(w @ w.T, w @ lam)
            lam = lam / lam.sum()
            if lam.min() >= CLOSURE_MARGIN:
                self._weights = lam
                return True
        self.lp_calls += 1
        t, lam = _closure_lp(w)
        self._weights = lam if t >= CLOSURE_MARGIN else None
        return t >= CLOSURE_MARGIN


class Phase(str, enum.Enum):
    FREE = "Free"
    TOUCHING = "Touching"
    GRASPED = "Grasped"
    LIFTED = "Lifted"
    SLIPPING = "Slipping"


@dataclass(frozen=True)
class GraspParams:
    force_threshold: float = 0.5
    lift_height: float = 0.02
    required_vfs: int = 3
    slip_ticks: int = 10
    dt: float = 0.001


@dataclass(frozen=True)
class GraspState:
    phase: Phase = Phase.FREE
    contact_count: int = 0
    closure: bool = False
    hold_time: float = 0.0
    hold_ticks: int = 0
    slip_counts: tuple = (0, 0, 0)
    grasp_height: Optional[float] = None


def step_grasp_state(prev: GraspState, vfs: Sequence[VirtualFingerState], closure: bool,
                     obj: RigidObjectState, params: GraspParams) -> GraspState:
    """Advance the grasp phase by one tick.

    Slipping holds until every contact is released. Hold time counts ticks
    spent Grasped or Lifted since the grasp began.
    """
    contacts = sum(1 for v in vfs if v.in_contact)
    strong = sum(1 for v in vfs if v.in_contact and v.normal_force >= params.force_threshold)
    touching = any(v.in_contact and v.normal_force > 0 for v in vfs)
    slips = tuple((c + 1) if (v.in_contact and v.slipping) else 0
                  for c, v in zip(prev.slip_counts, vfs))
    holds = strong >= params.required_vfs and closure
    height = float(obj.position[2])
    phase = prev.phase
    grasp_height = prev.grasp_height

    if phase is Phase.SLIPPING:
        nxt = Phase.FREE if contacts == 0 else Phase.SLIPPING
    elif contacts and max(slips) > params.slip_ticks:
        nxt = Phase.SLIPPING
    elif not touching:
        nxt = Phase.FREE
    elif phase is Phase.FREE:
        nxt = Phase.TOUCHING
    elif phase is Phase.TOUCHING:
        nxt = Phase.GRASPED if holds else Phase.TOUCHING
    elif holds:
        nxt = phase
        if phase is Phase.GRASPED and height - grasp_height >= params.lift_height:
            nxt = Phase.LIFTED
    else:
        nxt = Phase.TOUCHING

    if nxt is Phase.GRASPED and phase is Phase.TOUCHING:
        grasp_height = height
        hold_ticks = 1
    elif nxt in (Phase.GRASPED, Phase.LIFTED):
        hold_ticks = prev.hold_ticks + 1
    else:
        hold_ticks = prev.hold_ticks if nxt is Phase.SLIPPING else 0
        if nxt is not Phase.SLIPPING:
            grasp_height = None
    return GraspState(nxt, contacts, closure, hold_ticks * params.dt, hold_ticks, slips,
                      grasp_height)


def _inertia_diag(shape: Shape, mass: float) -> np.ndarray:
    if isinstance(shape, Sphere):
        return np.full(3, 0.4 * mass * shape.radius ** 2)
    if isinstance(shape, Box):
        a, b, c = 2.0 * shape.half_extents
        return mass / 12.0 * np.array([b * b + c * c, a * a + c * c, a * a + b * b])
    if isinstance(shape, Cylinder):
        r, h = shape.radius, shape.height
        side = mass * (3 * r * r + h * h) / 12.0
        # body axis is whatever the shape's axis is; use the isotropic bound
        return np.array([side, side, max(side, 0.5 * mass * r * r)])
    return np.full(3, mass)  # unbounded half-space: unit-inertia stand-in


def step_object(obj: RigidObjectState, w: Wrench, dt: float,
                attach_to: Optional[np.ndarray] = None) -> RigidObjectState:
    """Semi-implicit Euler step; ``attach_to`` pins the centre of mass there."""
    if not 0 < dt <= 0.01:
        raise InvalidInputError("dt must be in (0, 0.01]")
    if obj.fixed:
        return obj
    if attach_to is not None:
        pos = np.asarray(attach_to, dtype=float)
        vel = (pos - obj.position) / dt
        return replace(obj, position=pos, velocity=vel, angular_velocity=np.zeros(3))
    vel = obj.velocity + (w.force / obj.mass) * dt
    pos = obj.position + vel * dt
    if obj.support_height is not None and pos[2] < obj.support_height:
        pos = pos.copy()
        vel = vel.copy()
        pos[2] = obj.support_height
        vel[2] = max(vel[2], 0.0)
    rot = quat_to_matrix(obj.orientation)
    inertia = rot @ np.diag(_inertia_diag(obj.shape, obj.mass)) @ rot.T
    omega = obj.angular_velocity + np.linalg.solve(inertia, w.moment) * dt
    q = obj.orientation
    angle = float(np.linalg.norm(omega)) * dt
    if angle > 0:
        axis = omega / np.linalg.norm(omega)
        dq = np.concatenate([[math.cos(angle / 2)], math.sin(angle / 2) * axis])
        q = quat_multiply(dq, q)
        q = q / np.linalg.norm(q)
    return replace(obj, position=pos, velocity=vel, angular_velocity=omega, orientation=q)
