import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import sorted_quartiles
from tripod_haptics.errors import InsufficientDataError, InvalidInputError
from tripod_haptics.geometry import euler_to_matrix
from tripod_haptics.metrics import (HandFrame, analyze_stream, grasp_angle, grasp_sphere,
                                    inter_finger_angles, metrics_row, pinch_distance,
                                    quantile_sorted, summarize_series, uses_tip_fallback)


def _frame(tips=None, palm=(0, 0, 0), wrist=(-0.07, 0, 0), direction=(1, 0, 0),
           palm_normal=(0, 0, -1), bases=None, grabbing=False, t=0.0):
    tips = np.zeros((5, 3)) if tips is None else np.asarray(tips, float)
    return HandFrame(t, tips, palm, wrist, direction, palm_normal, bases, grabbing)


def _ray(deg):
    a = math.radians(deg)
    return np.array([math.cos(a), math.sin(a), 0.0])


def test_small_ordered_set():
    s = summarize_series([0, 1, 2, 3, 4])
    assert (s.q1, s.median, s.q3, s.iqr) == (1, 2, 3, 2)
    assert (s.min, s.max, s.n, s.mean) == (0, 4, 5, 2)
    assert s.sd == pytest.approx(math.sqrt(2))


def test_constant_series_is_degenerate():
    s = summarize_series([5, 5, 5])
    assert s.sd == 0 and s.iqr == 0 and s.qq_corr == 0 and s.degenerate
    assert not s.normal_in_iqr


def test_normal_samples_look_normal():
    s = summarize_series(np.random.default_rng(0).normal(size=10_000))
    assert s.qq_corr > 0.999 and s.normal_in_iqr and not s.degenerate


def test_series_errors():
    with pytest.raises(InsufficientDataError):
        summarize_series([1.0])
    with pytest.raises(InvalidInputError):
        summarize_series([1.0, float("nan")])


@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=200))
def test_quartiles_match_oracle_and_order(xs):
    s = summarize_series(xs)
    assert (s.q1, s.median, s.q3) == sorted_quartiles(xs)
    assert s.min <= s.q1 <= s.median <= s.q3 <= s.max
    assert -1.0 <= s.qq_corr <= 1.0


def test_quantile_endpoints():
    xs = [1.0, 2.0, 10.0]
    assert quantile_sorted(xs, 0.0) == 1.0 and quantile_sorted(xs, 1.0) == 10.0


def test_grasp_angle_cases():
    assert grasp_angle(_frame()) == pytest.approx(0.0, abs=1e-15)
    assert grasp_angle(_frame(direction=(0, 1, 0), palm_normal=(0, 0, -1))) == pytest.approx(
        math.pi / 2)
    with pytest.raises(InvalidInputError):
        grasp_angle(_frame(wrist=(0, 0, 0)))


def test_grasp_angle_high_precision_oracle():
    rng = np.random.default_rng(1)
    mpmath.mp.dps = 50
    for _ in range(200):
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        n = np.cross(d, rng.normal(size=3))
        n /= np.linalg.norm(n)
        wrist, palm = rng.normal(0, 0.1, 3), rng.normal(0, 0.1, 3)
        f = _frame(palm=palm, wrist=wrist, direction=d, palm_normal=n)
        a = [mpmath.mpf(float(x)) for x in f.direction]
        b = [mpmath.mpf(float(p)) - mpmath.mpf(float(w)) for p, w in zip(f.palm, f.wrist)]
        dot = sum(x * y for x, y in zip(a, b))
        cos = dot / (mpmath.sqrt(sum(x * x for x in a)) * mpmath.sqrt(sum(y * y for y in b)))
        assert abs(grasp_angle(f) - float(mpmath.acos(cos))) <= 1e-12


def test_pinch_distance():
    tips = [[0, 0, 0], [0.07, 0, 0], [0.1, 0, 0], [0, 0.2, 0], [0, 0, 0.3]]
    assert pinch_distance(_frame(tips)) == pytest.approx(0.07)
    assert pinch_distance(_frame(np.zeros((5, 3)))) == 0.0


@given(st.permutations([1, 2, 3, 4]))
def test_pinch_distance_permutation_invariant(perm):
    rng = np.random.default_rng(2)
    tips = rng.normal(0, 0.05, (5, 3))
    shuffled = tips.copy()
    shuffled[1:] = tips[[p for p in perm]]
    assert pinch_distance(_frame(tips)) == pinch_distance(_frame(shuffled))


def test_grasp_sphere_exact_and_degenerate():
    dirs = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1], [-1, 0, 0], [0, -1, 0]])
    f = _frame(tips=0.05 * dirs, palm=(0, 0, -0.05))
    assert grasp_sphere(f)[1] == pytest.approx(0.05, abs=1e-9)
    flat = _frame(tips=[[0, 0, 0], [0.01, 0, 0], [0, 0.01, 0], [0.02, 0.01, 0], [0.01, 0.03, 0]],
                  palm=(0.03, 0.02, 0.0))
    row = metrics_row(flat)
    assert row.sphere_radius is None and row.values()["sphere_center_x"] is None


def test_noisy_grasp_sphere_radii():
    rng = np.random.default_rng(3)
    for _ in range(100):
        r = rng.uniform(0.031, 0.050)
        d = rng.normal(size=(6, 3))
        d /= np.linalg.norm(d, axis=1)[:, None]
        pts = r * d + rng.uniform(-5e-4, 5e-4, (6, 3))
        f = _frame(tips=pts[:5], palm=pts[5])
        assert 0.025 <= grasp_sphere(f)[1] <= 0.06


def test_inter_finger_angles_from_bases():
    bases = np.array([0.05 * _ray(55), 0.05 * _ray(0), 0.05 * _ray(-25),
                      0.05 * _ray(-40), 0.05 * _ray(-55)])
    ti, im, tm = inter_finger_angles(_frame(bases=bases))
    assert math.degrees(ti) == pytest.approx(55)
    assert math.degrees(im) == pytest.approx(25)
    assert math.degrees(tm) == pytest.approx(80)
    assert 50 <= math.degrees(ti) <= 60 and 20 <= math.degrees(im) <= 30
    assert 70 <= math.degrees(tm) <= 90
    assert not uses_tip_fallback(_frame(bases=bases))


def test_collinear_rays_and_tip_fallback():
    tips = np.array([[0.02, 0, 0], [0.05, 0, 0], [0.09, 0, 0], [0.1, 0, 0], [0.1, 0.1, 0]])
    f = _frame(tips=tips)
    assert inter_finger_angles(f) == (0.0, 0.0, 0.0)
    assert uses_tip_fallback(f) and metrics_row(f).bases_from_tips


@given(st.floats(0.1, 10.0))
def test_angles_scale_invariant_about_palm(s):
    rng = np.random.default_rng(4)
    bases = rng.normal(0, 0.05, (5, 3))
    palm = np.array([0.01, 0.02, 0.03])
    a = inter_finger_angles(_frame(palm=palm, bases=palm + bases))
    b = inter_finger_angles(_frame(palm=palm, bases=palm + s * bases))
    assert np.allclose(a, b, atol=1e-12, rtol=0)


def test_angle_metrics_invariant_under_rigid_motion():
    rng = np.random.default_rng(5)
    for _ in range(100):
        r = euler_to_matrix(*rng.uniform(-3, 3, 3))
        t = rng.normal(0, 0.5, 3)
        tips, bases = rng.normal(0, 0.05, (5, 3)), rng.normal(0, 0.05, (5, 3))
        palm, wrist = rng.normal(0, 0.05, 3), rng.normal(0, 0.05, 3)
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        f = _frame(tips, palm, wrist, d, np.cross(d, [0.3, 0.2, 0.9]) / np.linalg.norm(
            np.cross(d, [0.3, 0.2, 0.9])), bases)
        g = HandFrame(0.0, f.tips @ r.T + t, r @ f.palm + t, r @ f.wrist + t, r @ f.direction,
                      r @ f.palm_normal, f.finger_bases @ r.T + t)
        assert abs(grasp_angle(f) - grasp_angle(g)) <= 1e-9
        assert np.allclose(inter_finger_angles(f), inter_finger_angles(g), atol=1e-9, rtol=0)
        assert abs(pinch_distance(f) - pinch_distance(g)) <= 1e-12


def _yaw_stream(n, rng, grabbing=lambda i: True):
    frames = []
    yaw = rng.normal(math.radians(-11.57), math.radians(6.7), n)
    for i in range(n):
        r = euler_to_matrix(yaw[i], 0.2, -0.5)
        tips = rng.normal(0, 0.04, (5, 3))
        frames.append(HandFrame(10.0 * i, tips, np.zeros(3), -0.07 * r[:, 0], r[:, 0], -r[:, 2],
                                grabbing=grabbing(i)))
    return frames


def test_recovers_yaw_distribution():
    a = analyze_stream(_yaw_stream(10_000, np.random.default_rng(6)))
    s = a.stats["yaw"]
    assert abs(math.degrees(s.mean) + 11.57) <= 0.5
    assert abs(math.degrees(s.sd) - 6.7) <= 0.5
    assert abs(math.degrees(a.stats["pitch"].mean) - math.degrees(0.2)) < 1e-9


def test_grabbing_filter():
    frames = _yaw_stream(40, np.random.default_rng(7), grabbing=lambda i: i % 3 == 0)
    on = analyze_stream(frames, grabbing_only=True)
    off = analyze_stream(frames)
    assert len(on.rows) == len(off.rows) == 40
    kept = [r.yaw for r in off.rows if r.grabbing]
    assert on.stats["yaw"] == summarize_series(kept)
    none = analyze_stream(_yaw_stream(5, np.random.default_rng(8), grabbing=lambda i: False),
                          grabbing_only=True)
    assert not none.stats and len(none.rows) == 5
    assert "yaw" in none.errors and "pinch_distance" in none.errors


def test_stream_needs_two_frames():
    with pytest.raises(InsufficientDataError):
        analyze_stream([_frame()])


def test_hand_frame_validation():
    with pytest.raises(InvalidInputError):
        _frame(tips=np.zeros((4, 3)))
    with pytest.raises(InvalidInputError):
        _frame(palm=(0, 0))
    with pytest.raises(InvalidInputError):
        _frame(bases=np.zeros((3, 3)))
    assert _frame(t=1500.0).timestamp == 1.5
