"""Fixed-rate replay of a hand-frame stream against a scene.

Each tick runs the tripod pipeline: virtual-finger assignment, proxy updates,
spring and friction forces, actuator channels, grasp map and wrench, grasp
state, object step. Frames are resampled onto the tick grid with exact
rational tick times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .devicesim import ActuatorChannel, Channel, command_force
from .errors import InvalidInputError, TunnelingError
from .geometry import quat_to_matrix
from .graspmodel import (ClosureTester, GraspParams, GraspState, Phase, RigidObjectState,
                         Wrench, aggregate_rows, build_grasp_map, resultant_wrench,
                         step_grasp_state, step_object)
from .io import Scene, fmt
from .metrics import HandFrame, StreamAnalysis, analyze_stream, summarize_series
from .rendering import MAX_HIP_STEP, RenderParams, render_rows
from .taxonomy import FINGERS, PALM, assign_virtual_fingers, load_taxonomy

TICK_FIELDS = (
    "tick", "time", "phase", "contacts", "closure",
    "vf1_force", "vf2_force", "vf3_force",
    "vf1_normal", "vf2_normal", "vf3_normal",
    "act_thumb", "act_index", "act_middle",
    "f_thumb", "f_index", "f_middle", "f_ring", "f_little",
    "p_thumb", "p_index", "p_middle", "p_ring", "p_little",
    "obj_x", "obj_y", "obj_z",
)


@dataclass(frozen=True)
class TickRecord:
    tick: int
    time: float
    phase: Phase
    contacts: int
    closure: bool
    vf_force: tuple          # |F| per virtual finger
    vf_normal: tuple         # normal component per virtual finger
    actuator: tuple          # applied channel outputs
    finger_force: tuple      # |F| per real finger
    perception: tuple        # per real finger, None off contact
    object_position: tuple

    def csv_row(self) -> str:
        cells = [str(self.tick), fmt(self.time), self.phase.value, str(self.contacts),
                 "1" if self.closure else "0"]
        cells += [fmt(x) for x in self.vf_force + self.vf_normal + self.actuator
                  + self.finger_force + self.perception + self.object_position]
        return ",".join(cells)


@dataclass
class ReplayReport:
    ticks: list[TickRecord]
    outcome: Phase
    final_phase: Phase
    phases_seen: tuple
    metrics: Optional[StreamAnalysis] = None
    force_stats: dict = field(default_factory=dict)

    def ticks_csv(self) -> str:
        return "\n".join([",".join(TICK_FIELDS)] + [t.csv_row() for t in self.ticks]) + "\n"

    def summary_text(self) -> str:
        lines = [f"ticks {len(self.ticks)}",
                 f"duration_s {fmt(self.ticks[-1].time - self.ticks[0].time)}",
                 f"outcome {self.outcome.value}",
                 f"final_phase {self.final_phase.value}",
                 "phases " + " ".join(p.value for p in self.phases_seen)]
        for name, s in self.force_stats.items():
            lines.append(f"force {name} min {fmt(s.min)} q1 {fmt(s.q1)} median {fmt(s.median)} "
                         f"q3 {fmt(s.q3)} max {fmt(s.max)} mean {fmt(s.mean)}")
        if self.metrics is not None:
            for name, s in self.metrics.stats.items():
                lines.append(f"metric {name} mean {fmt(s.mean)} sd {fmt(s.sd)} "
                             f"median {fmt(s.median)} iqr {fmt(s.iqr)}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# resampling

def tick_count(t_first: Fraction, t_last: Fraction, rate) -> int:
    return math.ceil((t_last - t_first) * Fraction(rate)) + 1


def _slerp(a: np.ndarray, b: np.ndarray, u: float) -> np.ndarray:
    """Shortest-arc interpolation between unit vectors."""
    d = max(-1.0, min(1.0, float(a @ b)))
    theta = math.acos(d)
    if theta < 1e-9:
        v = a + u * (b - a)
    elif math.pi - theta < 1e-9:
        # antipodal: rotate about any perpendicular axis
        axis = np.cross(a, [1.0, 0.0, 0.0])
        if np.linalg.norm(axis) < 1e-6:
            axis = np.cross(a, [0.0, 1.0, 0.0])
        axis /= np.linalg.norm(axis)
        ang = u * math.pi
        v = a * math.cos(ang) + np.cross(axis, a) * math.sin(ang)
    else:
        s = math.sin(theta)
        v = (math.sin((1 - u) * theta) / s) * a + (math.sin(u * theta) / s) * b
    return v / np.linalg.norm(v)


def _lerp(a: np.ndarray, b: np.ndarray, u: float) -> np.ndarray:
    return a + u * (b - a)


def interpolate_frame(f0: HandFrame, f1: HandFrame, t_ms: Fraction,
                      t0: Optional[Fraction] = None, t1: Optional[Fraction] = None) -> HandFrame:
    t0 = Fraction(f0.timestamp_ms) if t0 is None else t0
    t1 = Fraction(f1.timestamp_ms) if t1 is None else t1
    if t_ms == t0:
        return f0
    if t_ms == t1:
        return f1
    u = float((t_ms - t0) / (t1 - t0))
    bases = None
    if f0.finger_bases is not None and f1.finger_bases is not None:
        bases = _lerp(f0.finger_bases, f1.finger_bases, u)
    return HandFrame(
        timestamp_ms=float(t_ms), tips=_lerp(f0.tips, f1.tips, u),
        palm=_lerp(f0.palm, f1.palm, u), wrist=_lerp(f0.wrist, f1.wrist, u),
        direction=_slerp(f0.direction, f1.direction, u),
        palm_normal=_slerp(f0.palm_normal, f1.palm_normal, u),
        finger_bases=bases, grabbing=f0.grabbing)


def resample(frames: Sequence[HandFrame], rate) -> list[HandFrame]:
    """Frames on the tick grid; the first and last inputs appear unchanged."""
    if len(frames) < 2:
        raise InvalidInputError("need at least 2 frames")
    rate = Fraction(rate)
    stamps = [Fraction(f.timestamp_ms) for f in frames]
    t_first, t_last = stamps[0], stamps[-1]
    n = tick_count(t_first / 1000, t_last / 1000, rate)
    step = 1000 / rate
    out = []
    seg = 0
    for k in range(n):
        t = min(t_first + k * step, t_last)
        while seg < len(frames) - 2 and stamps[seg + 1] <= t:
            seg += 1
        out.append(interpolate_frame(frames[seg], frames[seg + 1], t, stamps[seg],
                                     stamps[seg + 1]))
    return out


# ---------------------------------------------------------------------------
# engine

def active_fingers(grasp_class: int) -> frozenset:
    """Finger ids named in the virtual-finger cells of a taxonomy class."""
    g = load_taxonomy().by_id(grasp_class)
    ids = set()
    for cell in g.vf_allocation.values():
        for m in cell or ():
            if m.part != PALM:
                ids.add(int(m.part))
    return frozenset(ids) if ids else frozenset(FINGERS)


def _object_state(o, target: bool) -> RigidObjectState:
    return RigidObjectState(
        shape=o.shape, mass=o.mass, position=np.array(o.position, dtype=float),
        orientation=np.array(o.orientation, dtype=float), mu=o.mu, k_spring=o.k_spring,
        fixed=o.fixed or not target,
        support_height=float(o.position[2]) if o.support else None)


def replay(scene: Scene, frames: Sequence[HandFrame], rate=None,
           with_metrics: bool = True) -> ReplayReport:
    """Run the tick pipeline over ``frames``; see the module docstring."""
    rate = Fraction(scene.actuator.tick_rate if rate is None else rate)
    if rate <= 0:
        raise InvalidInputError("rate must be > 0")
    dt = float(1 / rate)
    if dt > 0.01:
        raise InvalidInputError("tick rate must be at least 100 Hz")
    ticks_frames = resample(frames, rate)
    assignment = assign_virtual_fingers(active_fingers(scene.grasp_class))
    target = scene.target_index
    objects = [_object_state(o, i == target) for i, o in enumerate(scene.objects)]
    params = [RenderParams(k_spring=o.k_spring, mu=o.mu, k_material=scene.k_material)
              for o in scene.objects]
    gparams = GraspParams(force_threshold=scene.thresholds.force_threshold,
                          lift_height=scene.thresholds.lift_height,
                          slip_ticks=scene.thresholds.slip_ticks, dt=dt)
    channels = [ActuatorChannel(c, p, scene.actuator.slew)
                for c, p in zip(Channel, scene.actuator.peaks)]
    radii = np.array(scene.fingertip_radii, dtype=float)
    gravity = np.asarray(scene.gravity, dtype=float)
    prev_tips = ticks_frames[0].tips
    proxies = [prev_tips.copy() for _ in objects]
    touching = [np.zeros(5, dtype=bool) for _ in objects]
    shapes = [None] * len(objects)
    gstate = GraspState()
    closure_test = ClosureTester()
    attach_offset = None
    records: list[TickRecord] = []
    phases = [gstate.phase]
    t0 = Fraction(frames[0].timestamp_ms) / 1000

    for k, fr in enumerate(ticks_frames):
        tips = fr.tips
        jumps = np.sqrt(np.sum((tips - prev_tips) ** 2, axis=1))
        worst = int(np.argmax(jumps))
        if jumps[worst] > MAX_HIP_STEP:
            raise TunnelingError(
                f"tick {k}: finger {worst + 1} HIP moved {jumps[worst]:.6f} m "
                f"(limit {MAX_HIP_STEP} m)", tick=k, finger=worst + 1, jump=float(jumps[worst]))
        totals = np.zeros((5, 3))
        perc = np.full(5, np.nan)
        rows = None
        for oi, (o, rp) in enumerate(zip(objects, params)):
            if shapes[oi] is None:
                shapes[oi] = o.world_shape()
            s = shapes[oi]
            res = kernels.proxy_batch(s.kind, s.packed, radii, rp.mu, proxies[oi], tips)
            cr = render_rows(res, tips, prev_tips, radii, rp)
            proxies[oi] = cr.proxy
            touching[oi] = cr.in_contact
            totals += cr.total
            perc = np.where(np.isnan(perc), cr.perception, perc + np.nan_to_num(cr.perception))
            if oi == target:
                rows = cr
        prev_tips = tips

        vfs = aggregate_rows(tips, rows.in_contact, rows.point, rows.normal, rows.total,
                             rows.slipping, assignment)
        obj = objects[target]
        demands = [math.sqrt(float(v.force @ v.force)) for v in vfs]
        applied = tuple(command_force(ch, d, dt) for ch, d in zip(channels, demands))

        contacts = sum(v.in_contact for v in vfs)
        if contacts:
            g = build_grasp_map(vfs, obj)
            closure = contacts == 3 and closure_test(g, obj.mu)
            wrench = resultant_wrench(g, vfs, gravity, obj)
        else:
            closure = False
            wrench = Wrench(obj.mass * gravity, np.zeros(3))
        prev_phase = gstate.phase
        gstate = step_grasp_state(gstate, vfs, closure, obj, gparams)
        if gstate.phase is not phases[-1]:
            phases.append(gstate.phase)

        attach = None
        if gstate.phase in (Phase.GRASPED, Phase.LIFTED):
            placed = [v.position for v in vfs if v.position is not None]
            centroid = sum(placed) / len(placed)
            if prev_phase not in (Phase.GRASPED, Phase.LIFTED) or attach_offset is None:
                attach_offset = obj.position - centroid
            attach = centroid + attach_offset
        else:
            attach_offset = None
        new_obj = step_object(obj, wrench, dt, attach_to=attach)
        if new_obj is not obj:
            # contacting proxies ride along with the object
            rot = quat_to_matrix(new_obj.orientation) @ quat_to_matrix(obj.orientation).T
            moved = new_obj.position + (proxies[target] - obj.position) @ rot.T
            proxies[target] = np.where(touching[target][:, None], moved, proxies[target])
            objects[target] = new_obj
            shapes[target] = None

        time = float(Fraction(fr.timestamp_ms) / 1000 - t0)
        records.append(TickRecord(
            tick=k, time=time, phase=gstate.phase, contacts=contacts, closure=closure,
            vf_force=tuple(demands), vf_normal=tuple(v.normal_force for v in vfs),
            actuator=applied,
            finger_force=tuple(np.sqrt(np.sum(totals * totals, axis=1)).tolist()),
            perception=tuple(None if math.isnan(x) else x for x in perc.tolist()),
            object_position=tuple(objects[target].position.tolist())))

    outcome = next((p for p in reversed(phases) if p is not Phase.FREE), Phase.FREE)
    force_stats = {name: summarize_series([r.vf_force[i] for r in records])
                   for i, name in enumerate(("vf1", "vf2", "vf3"))}
    metrics = analyze_stream(frames) if with_metrics else None
    return ReplayReport(records, outcome, gstate.phase, tuple(phases), metrics, force_stats)
