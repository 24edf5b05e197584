"""Synthetic hand-frame generators and their companion scenes.

These streams are test fixtures, not recordings. ``tripod-press`` drives the
thumb, index and middle tips into a fixed sphere; ``grasp-lift`` squeezes a
tennis ball and raises it; ``free-motion`` moves the hand in free space with
orientation statistics drawn from the figures reported for human grasping
(yaw mean -11.57 deg, SD 6.7 deg; pitch 20.04/13.09; roll -53.68/32.29).
"""

from __future__ import annotations

import math
from importlib import resources
from typing import Optional

import numpy as np

from .errors import InvalidInputError
from .geometry import euler_to_matrix
from .io import Scene, parse_scene
from .metrics import HandFrame

PRESETS = ("tripod-press", "grasp-lift", "free-motion")
FRAME_RATE = 100  # Hz, a typical optical hand-tracker rate

# tripod-press: spring depths giving 7.0 / 3.5 / 3.7 N at 1000 N/m
PRESS_DEPTHS = (0.0070, 0.0035, 0.0037)
PRESS_RADIUS = 0.03
PRESS_JITTER = 5e-5
# grasp-lift: ITF tennis ball (diameter 6.7 cm, mass 58 g)
BALL_RADIUS = 0.0335
BALL_MASS = 0.058
SQUEEZE = 0.005
LIFT = 0.03
TIP_RADIUS = 0.008

YAW = (-11.57, 6.7)
PITCH = (20.04, 13.09)
ROLL = (-53.68, 32.29)

_DOWN = np.array([0.0, 0.0, -1.0])
_FORWARD = np.array([1.0, 0.0, 0.0])


def load_preset_scene(name: str) -> Scene:
    if name not in PRESETS:
        raise InvalidInputError(f"unknown preset {name!r}")
    text = resources.files("tripod_haptics").joinpath("scenes", f"{name}.toml").read_text(
        encoding="utf-8")
    return parse_scene(text)


def _ramp(t: float, t0: float, t1: float) -> float:
    """0 before t0, 1 after t1, smoothstep in between."""
    if t <= t0:
        return 0.0
    if t >= t1:
        return 1.0
    u = (t - t0) / (t1 - t0)
    return u * u * (3 - 2 * u)


def _azimuth(deg: float) -> np.ndarray:
    a = math.radians(deg)
    return np.array([math.cos(a), math.sin(a), 0.0])


def _parked_tips(palm: np.ndarray) -> np.ndarray:
    """Ring and little fingers curled against the palm, clear of objects."""
    return np.array([palm + [-0.02, 0.015, 0.0], palm + [-0.02, 0.03, 0.0]])


def _squeeze_frames(center: np.ndarray, object_radius: float, depths, schedule,
                    lift: float, jitter: float, rng, duration: float) -> list[HandFrame]:
    """Thumb, index and middle close radially on ``center`` at 0/120/240 deg.

    ``schedule`` is (approach_end, lift_start, lift_end, release_start).
    """
    approach_end, lift_start, lift_end, release_start = schedule
    dirs = [_azimuth(0.0), _azimuth(120.0), _azimuth(240.0)]
    surface = object_radius + TIP_RADIUS
    n = int(round(duration * FRAME_RATE)) + 1
    frames = []
    for i in range(n):
        t = i / FRAME_RATE
        close = _ramp(t, 0.1, approach_end) - _ramp(t, release_start, duration)
        up = lift * _ramp(t, lift_start, lift_end)
        c = center + [0.0, 0.0, up]
        tips = []
        for d, depth in zip(dirs, depths):
            r = surface + 0.01 - close * (0.01 + depth)
            tip = c + r * d
            if 0 < close:
                tip = tip + rng.normal(0.0, jitter, 3)
            tips.append(tip)
        palm = c + [0.0, 0.0, object_radius + 0.035]
        tips = np.vstack([tips, _parked_tips(palm)])
        frames.append(HandFrame(
            timestamp_ms=i * 1000.0 / FRAME_RATE, tips=tips, palm=palm,
            wrist=palm - 0.07 * _FORWARD, direction=_FORWARD, palm_normal=_DOWN,
            grabbing=close >= 1.0))
    return frames


def tripod_press(seed: int, duration: float = 10.0) -> list[HandFrame]:
    rng = np.random.default_rng(seed)
    return _squeeze_frames(np.zeros(3), PRESS_RADIUS, PRESS_DEPTHS,
                           (0.5, duration, duration, duration - 0.5), 0.0, PRESS_JITTER,
                           rng, duration)


def grasp_lift(seed: int, duration: float = 3.0) -> list[HandFrame]:
    rng = np.random.default_rng(seed)
    return _squeeze_frames(np.array([0.0, 0.0, BALL_RADIUS]), BALL_RADIUS, (SQUEEZE,) * 3,
                           (0.5, 1.0, 2.0, duration + 1.0), LIFT, 1e-5, rng, duration)


def orientation_series(rng, n: int, spec=YAW) -> np.ndarray:
    """Independent normal draws in degrees."""
    return rng.normal(spec[0], spec[1], n)


def _hand_pose(yaw: float, pitch: float, roll: float, palm: np.ndarray,
               spread: tuple, bend: float):
    r = euler_to_matrix(math.radians(yaw), math.radians(pitch), math.radians(roll))
    x, z = r[:, 0], r[:, 2]
    palm_normal = -z
    thumb_index, index_middle = spread
    angles = (thumb_index, 0.0, -index_middle, -index_middle - 15.0, -index_middle - 30.0)
    bases, tips = [], []
    for k, a in enumerate(angles):
        ray = math.cos(math.radians(a)) * x + math.sin(math.radians(a)) * r[:, 1]
        bases.append(palm + 0.05 * ray)
        reach = 0.07 if k == 0 else 0.09
        tips.append(palm + reach * ray + 0.02 * palm_normal)
    # tilt the wrist off the hand axis by the grasp angle
    back = -math.cos(bend) * x - math.sin(bend) * palm_normal
    return palm, np.array(tips), np.array(bases), palm + 0.07 * back, x, palm_normal


def free_motion(seed: int, duration: float = 20.0, rate: int = FRAME_RATE) -> list[HandFrame]:
    rng = np.random.default_rng(seed)
    n = int(round(duration * rate)) + 1
    yaw = orientation_series(rng, n, YAW)
    pitch = orientation_series(rng, n, PITCH)
    roll = np.clip(orientation_series(rng, n, ROLL), -175.0, 60.0)
    ti = rng.uniform(50.0, 60.0, n)
    im = rng.uniform(20.0, 30.0, n)
    bend = np.abs(rng.normal(math.radians(1.33), math.radians(1.10), n))
    frames = []
    for i in range(n):
        t = i / rate
        palm = np.array([0.02 * math.sin(0.5 * t), 0.1 + 0.06 * math.sin(0.8 * t),
                         0.3 + 0.01 * math.sin(0.3 * t)])
        palm, tips, bases, wrist, x, pn = _hand_pose(
            yaw[i], pitch[i], roll[i], palm, (ti[i], im[i]), bend[i])
        frames.append(HandFrame(
            timestamp_ms=i * 1000.0 / rate, tips=tips, palm=palm, wrist=wrist, direction=x,
            palm_normal=pn, finger_bases=bases, grabbing=int(t // 2.0) % 2 == 1))
    return frames


def generate(preset: str, seed: int, duration: Optional[float] = None) -> list[HandFrame]:
    gens = {"tripod-press": tripod_press, "grasp-lift": grasp_lift, "free-motion": free_motion}
    if preset not in gens:
        raise InvalidInputError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
    if duration is None:
        return gens[preset](seed)
    if not duration > 0:
        raise InvalidInputError("duration must be > 0")
    return gens[preset](seed, duration)
