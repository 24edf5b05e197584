"""Grasp characterisation metrics over hand-tracking streams.

Quartiles use linear interpolation between order statistics at position
``(n - 1) p``. SD is the population SD (divisor ``n``). The Q-Q correlation is
Pearson's r between the sorted sample and standard-normal quantiles at
``(i - 0.5) / n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateGeometryError, InsufficientDataError, InvalidInputError
from .geometry import Orientation, angle_between, euler_decompose, fit_sphere

NORMAL_IQR_THRESHOLD = 0.99
_STD_NORMAL = NormalDist()


@dataclass(frozen=True)
class SummaryStats:
    n: int
    mean: float
    sd: float
    min: float
    max: float
    q1: float
    median: float
    q3: float
    iqr: float
    qq_corr: float
    degenerate: bool = False
    normal_in_iqr: bool = False


def quantile_sorted(xs: Sequence[float], p: float) -> float:
    """Type-7 quantile of an already sorted sequence."""
    pos = (len(xs) - 1) * p
    lo = math.floor(pos)
    hi = min(lo + 1, len(xs) - 1)
    frac = pos - lo
    return xs[lo] + (xs[hi] - xs[lo]) * frac


def _pearson(a: np.ndarray, b: np.ndarray) -> Optional[float]:
    a = a - a.mean()
    b = b - b.mean()
    den = math.sqrt(float(a @ a) * float(b @ b))
    if den == 0:
        return None
    return max(-1.0, min(1.0, float(a @ b) / den))


def normal_scores(n: int) -> np.ndarray:
    return np.array([_STD_NORMAL.inv_cdf((i - 0.5) / n) for i in range(1, n + 1)])


def summarize_series(xs) -> SummaryStats:
    values = [float(x) for x in xs]
    n = len(values)
    if n < 2:
        raise InsufficientDataError(f"need at least 2 values, got {n}")
    if not all(math.isfinite(v) for v in values):
        raise InvalidInputError("series contains non-finite values")
    s = sorted(values)
    arr = np.array(s)
    mean = float(arr.mean())
    sd = float(np.sqrt(np.mean((arr - mean) ** 2)))
    q1, med, q3 = (quantile_sorted(s, p) for p in (0.25, 0.5, 0.75))
    scores = normal_scores(n)
    r = _pearson(arr, scores)
    degenerate = r is None
    in_iqr = (arr >= q1) & (arr <= q3)
    r_iqr = _pearson(arr[in_iqr], scores[in_iqr]) if in_iqr.sum() >= 3 else None
    return SummaryStats(
        n=n, mean=mean, sd=sd, min=s[0], max=s[-1], q1=q1, median=med, q3=q3,
        iqr=q3 - q1, qq_corr=0.0 if r is None else r, degenerate=degenerate,
        normal_in_iqr=r_iqr is not None and r_iqr > NORMAL_IQR_THRESHOLD)


@dataclass(frozen=True)
class HandFrame:
    """One hand-tracking sample in SI units (timestamps kept in ms)."""

    timestamp_ms: float
    tips: np.ndarray          # (5, 3) thumb..little, metres
    palm: np.ndarray
    wrist: np.ndarray
    direction: np.ndarray
    palm_normal: np.ndarray
    finger_bases: Optional[np.ndarray] = None  # (5, 3)
    grabbing: bool = False

    def __post_init__(self):
        tips = np.asarray(self.tips, dtype=float)
        if tips.shape != (5, 3):
            raise InvalidInputError("tips must be 5 points")
        object.__setattr__(self, "tips", tips)
        for name in ("palm", "wrist", "direction", "palm_normal"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,):
                raise InvalidInputError(f"{name} must be a 3-vector")
            object.__setattr__(self, name, v)
        if self.finger_bases is not None:
            b = np.asarray(self.finger_bases, dtype=float)
            if b.shape != (5, 3):
                raise InvalidInputError("finger_bases must be 5 points")
            object.__setattr__(self, "finger_bases", b)

    @property
    def timestamp(self) -> float:
        return self.timestamp_ms / 1000.0


def grasp_angle(f: HandFrame) -> float:
    """Angle between the hand direction and the wrist-to-palm vector."""
    v = f.palm - f.wrist
    if not np.any(v):
        raise InvalidInputError("wrist and palm coincide")
    return angle_between(f.direction, v)


def pinch_distance(f: HandFrame) -> float:
    """Thumb tip to the nearest other fingertip."""
    return float(np.min(np.linalg.norm(f.tips[1:] - f.tips[0], axis=1)))


def grasp_sphere(f: HandFrame) -> tuple[np.ndarray, float]:
    return fit_sphere(np.vstack([f.tips, f.palm]))


def inter_finger_angles(f: HandFrame) -> tuple[float, float, float]:
    """(thumb-index, index-middle, thumb-middle) angles seen from the palm.

    Falls back to fingertips when finger bases are absent; see
    :func:`uses_tip_fallback`.
    """
    pts = f.finger_bases if f.finger_bases is not None else f.tips
    rays = pts[:3] - f.palm
    return (angle_between(rays[0], rays[1]), angle_between(rays[1], rays[2]),
            angle_between(rays[0], rays[2]))


def uses_tip_fallback(f: HandFrame) -> bool:
    return f.finger_bases is None


ROW_FIELDS = (
    "timestamp", "yaw", "pitch", "roll", "grasp_angle",
    "sphere_center_x", "sphere_center_y", "sphere_center_z", "sphere_radius",
    "pinch_distance", "angle_thumb_index", "angle_index_middle", "angle_thumb_middle",
    "wrist_x", "wrist_y", "wrist_z", "palm_x", "palm_y", "palm_z",
    "grabbing", "bases_from_tips",
)
STAT_FIELDS = tuple(f for f in ROW_FIELDS if f not in ("timestamp", "grabbing", "bases_from_tips"))


@dataclass(frozen=True)
class HandMetricsRow:
    timestamp: float
    yaw: float
    pitch: float
    roll: float
    grasp_angle: Optional[float]
    sphere_center: Optional[np.ndarray]
    sphere_radius: Optional[float]
    pinch_distance: float
    angle_thumb_index: float
    angle_index_middle: float
    angle_thumb_middle: float
    wrist_pos: np.ndarray
    palm_pos: np.ndarray
    grabbing: bool
    bases_from_tips: bool = False

    def values(self) -> dict[str, Optional[float]]:
        c = self.sphere_center
        return {
            "timestamp": self.timestamp, "yaw": self.yaw, "pitch": self.pitch,
            "roll": self.roll, "grasp_angle": self.grasp_angle,
            "sphere_center_x": None if c is None else float(c[0]),
            "sphere_center_y": None if c is None else float(c[1]),
            "sphere_center_z": None if c is None else float(c[2]),
            "sphere_radius": self.sphere_radius,
            "pinch_distance": self.pinch_distance,
            "angle_thumb_index": self.angle_thumb_index,
            "angle_index_middle": self.angle_index_middle,
            "angle_thumb_middle": self.angle_thumb_middle,
            "wrist_x": float(self.wrist_pos[0]), "wrist_y": float(self.wrist_pos[1]),
            "wrist_z": float(self.wrist_pos[2]),
            "palm_x": float(self.palm_pos[0]), "palm_y": float(self.palm_pos[1]),
            "palm_z": float(self.palm_pos[2]),
            "grabbing": float(self.grabbing), "bases_from_tips": float(self.bases_from_tips),
        }


def metrics_row(f: HandFrame) -> HandMetricsRow:
    e = euler_decompose(Orientation(f.direction, f.palm_normal))
    try:
        center, radius = grasp_sphere(f)
    except DegenerateGeometryError:
        center, radius = None, None
    try:
        ga = grasp_angle(f)
    except InvalidInputError:
        ga = None
    ti, im, tm = inter_finger_angles(f)
    return HandMetricsRow(
        timestamp=f.timestamp, yaw=e.yaw, pitch=e.pitch, roll=e.roll,
        grasp_angle=ga, sphere_center=center, sphere_radius=radius,
        pinch_distance=pinch_distance(f), angle_thumb_index=ti, angle_index_middle=im,
        angle_thumb_middle=tm, wrist_pos=f.wrist, palm_pos=f.palm, grabbing=f.grabbing,
        bases_from_tips=uses_tip_fallback(f))


@dataclass
class StreamAnalysis:
    rows: list[HandMetricsRow]
    stats: dict[str, SummaryStats] = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)


def analyze_stream(frames: Sequence[HandFrame], grabbing_only: bool = False) -> StreamAnalysis:
    """Per-frame metric rows plus summary statistics per column.

    With ``grabbing_only`` only rows flagged as grabbing feed the statistics;
    the row table always covers every frame. A column without enough values
    gets an entry in ``errors`` instead of ``stats``.
    """
    if len(frames) < 2:
        raise InsufficientDataError("need at least 2 frames")
    rows = [metrics_row(f) for f in frames]
    out = StreamAnalysis(rows)
    used = [r.values() for r in rows if r.grabbing or not grabbing_only]
    for name in STAT_FIELDS:
        xs = [v[name] for v in used if v[name] is not None]
        try:
            out.stats[name] = summarize_series(xs)
        except InsufficientDataError as exc:
            out.errors[name] = str(exc)
    return out
