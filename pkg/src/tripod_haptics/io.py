"""File formats: hand-frame streams, scenes, FSR force logs.

Hand frames and force logs are newline-delimited JSON, one record per line,
positions in millimetres. Scenes are TOML documents in SI units (fingertip
radii in mm, as named).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, TextIO, Union

import numpy as np

from .devicesim import DEFAULT_PEAKS, DEFAULT_SLEW, DEFAULT_TICK_RATE
from .errors import FormatError, InvalidInputError
from .geometry import Box, Cylinder, HalfSpace, Shape, Sphere
from .metrics import HandFrame

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger(__name__)

MM = 1e-3
RENORM_WARN = 1e-3
RENORM_REJECT = 0.1

HAND_FIELDS = ("timestamp_ms", "tips", "palm", "wrist", "direction", "palm_normal",
               "finger_bases", "grabbing")
_REQUIRED_HAND = HAND_FIELDS[:6]


def _point(value, lineno: int, name: str) -> np.ndarray:
    try:
        a = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise FormatError(f"line {lineno}: field {name} is not numeric") from None
    if a.shape != (3,) or not np.all(np.isfinite(a)):
        raise FormatError(f"line {lineno}: field {name} must be 3 finite numbers")
    return a


def _points(value, lineno: int, name: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) != 5:
        raise FormatError(f"line {lineno}: field {name} must hold 5 points")
    return np.array([_point(v, lineno, f"{name}[{i}]") for i, v in enumerate(value)])


def _unit(value, lineno: int, name: str) -> np.ndarray:
    v = _point(value, lineno, name)
    n = float(np.linalg.norm(v))
    dev = abs(n - 1.0)
    if dev > RENORM_REJECT:
        raise FormatError(f"line {lineno}: {name} has norm {n:.6f}, not a unit vector")
    if dev > RENORM_WARN:
        log.warning("line %d: %s has norm %.6f; renormalised", lineno, name, n)
    if dev > 1e-12:
        v = v / n
    return v


def parse_hand_record(rec: dict, lineno: int = 1) -> HandFrame:
    if not isinstance(rec, dict):
        raise FormatError(f"line {lineno}: record is not an object")
    for key in _REQUIRED_HAND:
        if key not in rec:
            raise FormatError(f"line {lineno}: missing field {key}")
    unknown = set(rec) - set(HAND_FIELDS)
    if unknown:
        raise FormatError(f"line {lineno}: unknown field {sorted(unknown)[0]}")
    ts = rec["timestamp_ms"]
    if isinstance(ts, bool) or not isinstance(ts, (int, float)) or not math.isfinite(ts):
        raise FormatError(f"line {lineno}: timestamp_ms must be a finite number")
    bases = rec.get("finger_bases")
    grabbing = rec.get("grabbing", False)
    if not isinstance(grabbing, bool):
        raise FormatError(f"line {lineno}: grabbing must be true or false")
    return HandFrame(
        timestamp_ms=float(ts),
        tips=_points(rec["tips"], lineno, "tips") * MM,
        palm=_point(rec["palm"], lineno, "palm") * MM,
        wrist=_point(rec["wrist"], lineno, "wrist") * MM,
        direction=_unit(rec["direction"], lineno, "direction"),
        palm_normal=_unit(rec["palm_normal"], lineno, "palm_normal"),
        finger_bases=None if bases is None else _points(bases, lineno, "finger_bases") * MM,
        grabbing=grabbing,
    )


def parse_hand_frames(lines: Iterable[str]) -> list[HandFrame]:
    """Parse a hand-frame stream; blank lines are skipped."""
    frames: list[HandFrame] = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"line {lineno}: malformed record ({exc.msg})") from None
        frame = parse_hand_record(rec, lineno)
        if frames and not frame.timestamp_ms > frames[-1].timestamp_ms:
            raise FormatError(
                f"line {lineno}: timestamp {frame.timestamp_ms!r} ms does not follow "
                f"{frames[-1].timestamp_ms!r} ms")
        frames.append(frame)
    return frames


def hand_record(f: HandFrame) -> dict:
    rec = {
        "timestamp_ms": f.timestamp_ms,
        "tips": (f.tips / MM).tolist(),
        "palm": (f.palm / MM).tolist(),
        "wrist": (f.wrist / MM).tolist(),
        "direction": f.direction.tolist(),
        "palm_normal": f.palm_normal.tolist(),
        "grabbing": bool(f.grabbing),
    }
    if f.finger_bases is not None:
        rec["finger_bases"] = (f.finger_bases / MM).tolist()
    return rec


def write_hand_frames(frames: Iterable[HandFrame], out: TextIO) -> None:
    for f in frames:
        out.write(json.dumps(hand_record(f), separators=(",", ":")))
        out.write("\n")


def read_hand_file(path) -> list[HandFrame]:
    with open(path, encoding="utf-8") as fh:
        return parse_hand_frames(fh)


@dataclass(frozen=True)
class ForceFrame:
    timestamp_ms: float
    f: tuple


def parse_force_frames(lines: Iterable[str]) -> list[ForceFrame]:
    """FSR log: ``{"timestamp_ms": t, "f": [thumb, index, middle, ring, little]}``."""
    out: list[ForceFrame] = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"line {lineno}: malformed record ({exc.msg})") from None
        if not isinstance(rec, dict):
            raise FormatError(f"line {lineno}: record is not an object")
        for key in ("timestamp_ms", "f"):
            if key not in rec:
                raise FormatError(f"line {lineno}: missing field {key}")
        f = rec["f"]
        if (not isinstance(f, list) or len(f) != 5
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in f)):
            raise FormatError(f"line {lineno}: f must be 5 numbers")
        if any(x < 0 for x in f):
            raise FormatError(f"line {lineno}: forces must be >= 0")
        frame = ForceFrame(float(rec["timestamp_ms"]), tuple(float(x) for x in f))
        if out and not frame.timestamp_ms > out[-1].timestamp_ms:
            raise FormatError(
                f"line {lineno}: timestamp {frame.timestamp_ms!r} ms does not follow "
                f"{out[-1].timestamp_ms!r} ms")
        out.append(frame)
    return out


# ---------------------------------------------------------------------------
# scenes

@dataclass(frozen=True)
class SceneObject:
    name: str
    shape: Shape  # body frame, centred on the centre of mass
    mass: float
    k_spring: float = 1000.0
    mu: float = 0.5
    position: tuple = (0.0, 0.0, 0.0)
    orientation: tuple = (1.0, 0.0, 0.0, 0.0)
    fixed: bool = False
    support: bool = True


@dataclass(frozen=True)
class ActuatorConfig:
    peaks: tuple = (DEFAULT_PEAKS["Thumb"], DEFAULT_PEAKS["Index"], DEFAULT_PEAKS["Middle"])
    slew: float = DEFAULT_SLEW
    tick_rate: int = DEFAULT_TICK_RATE


@dataclass(frozen=True)
class Thresholds:
    force_threshold: float = 0.5
    lift_height: float = 0.02
    slip_ticks: int = 10


@dataclass(frozen=True)
class Scene:
    objects: tuple
    fingertip_radii: tuple = (0.008,) * 5
    actuator: ActuatorConfig = field(default_factory=ActuatorConfig)
    thresholds: Thresholds = field(default_factory=Thresholds)
    gravity: tuple = (0.0, 0.0, -9.81)
    grasp_class: int = 14
    k_material: float = 1.0
    target: Optional[str] = None

    @property
    def target_index(self) -> int:
        if self.target is None:
            return 0
        for i, o in enumerate(self.objects):
            if o.name == self.target:
                return i
        raise InvalidInputError(f"target {self.target!r} is not a scene object")


_TOP_KEYS = {"objects", "fingertip_radii_mm", "actuator", "thresholds", "gravity",
             "grasp_class", "k_material", "target"}
_OBJ_KEYS = {"name", "shape", "radius", "half_extents", "height", "normal", "mass",
             "k_spring", "mu", "position", "orientation", "fixed", "support"}
_SHAPE_KEYS = {"sphere": {"radius"}, "box": {"half_extents"},
               "cylinder": {"radius", "height"}, "halfspace": {"normal"}}


def _num(d: dict, key: str, where: str, default=None, positive=False, nonneg=False):
    if key not in d:
        if default is None:
            raise FormatError(f"{where}: missing key {key}")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise FormatError(f"{where}: {key} must be a number")
    if positive and not v > 0:
        raise FormatError(f"{key} must be > 0")
    if nonneg and not v >= 0:
        raise FormatError(f"{key} must be >= 0")
    return float(v)


def _vec(d: dict, key: str, where: str, n: int, default=None) -> tuple:
    if key not in d:
        if default is None:
            raise FormatError(f"{where}: missing key {key}")
        return tuple(default)
    v = d[key]
    if (not isinstance(v, list) or len(v) != n
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
        raise FormatError(f"{where}: {key} must be {n} numbers")
    return tuple(float(x) for x in v)


def _check_keys(d: dict, allowed: set, where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise FormatError(f"{where}: unknown key {sorted(unknown)[0]}")


def _parse_object(d: dict, i: int) -> SceneObject:
    where = f"objects[{i}]"
    if not isinstance(d, dict):
        raise FormatError(f"{where}: must be a table")
    _check_keys(d, _OBJ_KEYS, where)
    kind = d.get("shape")
    if kind not in _SHAPE_KEYS:
        raise FormatError(f"{where}: shape must be one of {sorted(_SHAPE_KEYS)}")
    extra = {"radius", "half_extents", "height", "normal"} - _SHAPE_KEYS[kind]
    for k in extra:
        if k in d:
            raise FormatError(f"{where}: key {k} does not apply to a {kind}")
    name = d.get("name", f"object{i}")
    if not isinstance(name, str):
        raise FormatError(f"{where}: name must be text")
    try:
        if kind == "sphere":
            shape: Shape = Sphere((0, 0, 0), _num(d, "radius", where, positive=True))
        elif kind == "box":
            h = _vec(d, "half_extents", where, 3)
            if not all(x > 0 for x in h):
                raise FormatError("half_extents must be > 0")
            shape = Box((0, 0, 0), h)
        elif kind == "cylinder":
            r = _num(d, "radius", where, positive=True)
            ht = _num(d, "height", where, positive=True)
            shape = Cylinder((0, 0, -ht / 2), (0, 0, 1), r, ht)
        else:
            n = np.array(_vec(d, "normal", where, 3, default=(0, 0, 1)))
            if np.linalg.norm(n) == 0:
                raise FormatError(f"{where}: normal must be non-zero")
            shape = HalfSpace((0, 0, 0), n / np.linalg.norm(n))
    except InvalidInputError as exc:
        raise FormatError(f"{where}: {exc}") from None
    fixed = d.get("fixed", kind == "halfspace")
    support = d.get("support", True)
    for key, val in (("fixed", fixed), ("support", support)):
        if not isinstance(val, bool):
            raise FormatError(f"{where}: {key} must be true or false")
    if kind == "halfspace" and not fixed:
        raise FormatError(f"{where}: a halfspace must be fixed")
    mass = _num(d, "mass", where, default=1.0 if fixed else None, positive=True)
    q = _vec(d, "orientation", where, 4, default=(1, 0, 0, 0))
    qn = math.sqrt(sum(x * x for x in q))
    if abs(qn - 1.0) > 1e-6:
        raise FormatError(f"{where}: orientation must be a unit quaternion")
    return SceneObject(
        name=name, shape=shape, mass=mass,
        k_spring=_num(d, "k_spring", where, default=1000.0, positive=True),
        mu=_num(d, "mu", where, default=0.5, nonneg=True),
        position=_vec(d, "position", where, 3, default=(0, 0, 0)),
        orientation=tuple(x / qn for x in q), fixed=fixed, support=support)


def parse_scene(text: str) -> Scene:
    """Parse a TOML scene; unknown keys are errors.

    Defaults: gravity (0, 0, -9.81); fingertip_radii_mm 8 each; grasp_class 14;
    k_material 1; actuator peaks 10.4/10.1/10.2 N, slew 500 N/s, tick_rate
    1000 Hz; thresholds force 0.5 N, lift 0.02 m, slip 10 ticks; per object
    k_spring 1000 N/m, mu 0.5, position origin, identity orientation,
    fixed false (true for halfspaces), support true.
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise FormatError(f"scene: {exc}") from None
    _check_keys(doc, _TOP_KEYS, "scene")
    objs = doc.get("objects")
    if not isinstance(objs, list) or not objs:
        raise FormatError("scene: at least one [[objects]] entry is required")
    objects = tuple(_parse_object(o, i) for i, o in enumerate(objs))
    names = [o.name for o in objects]
    if len(set(names)) != len(names):
        raise FormatError("scene: object names must be unique")

    radii = _vec(doc, "fingertip_radii_mm", "scene", 5, default=(8.0,) * 5)
    if not all(r > 0 for r in radii):
        raise FormatError("fingertip_radii_mm must be > 0")
    act = doc.get("actuator", {})
    if not isinstance(act, dict):
        raise FormatError("actuator must be a table")
    _check_keys(act, {"peaks", "slew", "tick_rate"}, "actuator")
    peaks = _vec(act, "peaks", "actuator", 3, default=ActuatorConfig().peaks)
    if not all(p > 0 for p in peaks):
        raise FormatError("peaks must be > 0")
    rate = act.get("tick_rate", DEFAULT_TICK_RATE)
    if isinstance(rate, bool) or not isinstance(rate, int) or rate <= 0:
        raise FormatError("tick_rate must be a positive integer")
    thr = doc.get("thresholds", {})
    if not isinstance(thr, dict):
        raise FormatError("thresholds must be a table")
    _check_keys(thr, {"force_threshold", "lift_height", "slip_ticks"}, "thresholds")
    slip = thr.get("slip_ticks", 10)
    if isinstance(slip, bool) or not isinstance(slip, int) or slip < 0:
        raise FormatError("slip_ticks must be a non-negative integer")
    grasp_class = doc.get("grasp_class", 14)
    if isinstance(grasp_class, bool) or not isinstance(grasp_class, int) or not 1 <= grasp_class <= 33:
        raise FormatError("grasp_class must be an integer 1-33")
    target = doc.get("target")
    scene = Scene(
        objects=objects,
        fingertip_radii=tuple(r * MM for r in radii),
        actuator=ActuatorConfig(peaks, _num(act, "slew", "actuator", default=DEFAULT_SLEW,
                                            positive=True), rate),
        thresholds=Thresholds(
            _num(thr, "force_threshold", "thresholds", default=0.5, positive=True),
            _num(thr, "lift_height", "thresholds", default=0.02, positive=True), slip),
        gravity=_vec(doc, "gravity", "scene", 3, default=(0.0, 0.0, -9.81)),
        grasp_class=grasp_class,
        k_material=_num(doc, "k_material", "scene", default=1.0, positive=True),
        target=target,
    )
    if target is not None:
        if not isinstance(target, str):
            raise FormatError("target must be an object name")
        try:
            scene.target_index
        except InvalidInputError as exc:
            raise FormatError(str(exc)) from None
    return scene


def read_scene_file(path) -> Scene:
    with open(path, encoding="utf-8") as fh:
        return parse_scene(fh.read())


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return repr(float(v)) if isinstance(v, float) else str(v)


def scene_to_toml(scene: Scene) -> str:
    """Serialise a scene so that ``parse_scene`` reads it back unchanged."""
    lines = [
        f"gravity = {_toml_value(scene.gravity)}",
        f"fingertip_radii_mm = {_toml_value([r / MM for r in scene.fingertip_radii])}",
        f"grasp_class = {scene.grasp_class}",
        f"k_material = {_toml_value(scene.k_material)}",
    ]
    if scene.target is not None:
        lines.append(f"target = {_toml_value(scene.target)}")
    a, t = scene.actuator, scene.thresholds
    lines += ["", "[actuator]", f"peaks = {_toml_value(a.peaks)}",
              f"slew = {_toml_value(a.slew)}", f"tick_rate = {a.tick_rate}",
              "", "[thresholds]", f"force_threshold = {_toml_value(t.force_threshold)}",
              f"lift_height = {_toml_value(t.lift_height)}", f"slip_ticks = {t.slip_ticks}"]
    for o in scene.objects:
        lines += ["", "[[objects]]", f"name = {_toml_value(o.name)}"]
        s = o.shape
        if isinstance(s, Sphere):
            lines += ['shape = "sphere"', f"radius = {_toml_value(s.radius)}"]
        elif isinstance(s, Box):
            lines += ['shape = "box"', f"half_extents = {_toml_value(s.half_extents.tolist())}"]
        elif isinstance(s, Cylinder):
            lines += ['shape = "cylinder"', f"radius = {_toml_value(s.radius)}",
                      f"height = {_toml_value(s.height)}"]
        else:
            lines += ['shape = "halfspace"', f"normal = {_toml_value(s.normal.tolist())}"]
        lines += [f"mass = {_toml_value(o.mass)}", f"k_spring = {_toml_value(o.k_spring)}",
                  f"mu = {_toml_value(o.mu)}", f"position = {_toml_value(o.position)}",
                  f"orientation = {_toml_value(o.orientation)}",
                  f"fixed = {_toml_value(o.fixed)}", f"support = {_toml_value(o.support)}"]
    return "\n".join(lines) + "\n"


def fmt(x: Union[float, int, None]) -> str:
    """Fixed-point, 6 decimals, no negative zero; empty for missing values."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    s = f"{float(x):.6f}"
    return "0.000000" if s == "-0.000000" else s
