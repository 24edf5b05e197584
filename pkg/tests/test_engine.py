import math
from fractions import Fraction

import numpy as np
import pytest

from tripod_haptics.engine import (TICK_FIELDS, active_fingers, interpolate_frame, replay,
                                   resample, tick_count)
from tripod_haptics.errors import InvalidInputError, TunnelingError
from tripod_haptics.graspmodel import Phase
from tripod_haptics.metrics import HandFrame
from tripod_haptics.presets import FRAME_RATE, PRESETS, generate, load_preset_scene


def _frame(t_ms, tips, direction=(1, 0, 0)):
    d = np.asarray(direction, float)
    n = np.cross(d, [0, 1.0, 0]) if abs(d[1]) < 0.9 else np.cross(d, [1.0, 0, 0])
    return HandFrame(t_ms, np.asarray(tips, float), np.zeros(3), -0.07 * d, d,
                     n / np.linalg.norm(n))


def test_tick_count():
    assert tick_count(Fraction(0), Fraction(1), 1000) == 1001
    assert tick_count(Fraction(0), Fraction(1, 3), 1000) == 335
    assert tick_count(Fraction(2), Fraction(2), 500) == 1


def test_resample_preserves_endpoints():
    rng = np.random.default_rng(0)
    stamps = np.cumsum(rng.uniform(5, 15, 20))
    frames = [_frame(float(t), rng.normal(0, 0.05, (5, 3))) for t in stamps]
    out = resample(frames, 1000)
    assert out[0] is frames[0] and out[-1] is frames[-1]
    assert len(out) == tick_count(Fraction(frames[0].timestamp_ms) / 1000,
                                  Fraction(frames[-1].timestamp_ms) / 1000, 1000)
    assert all(b.timestamp_ms > a.timestamp_ms for a, b in zip(out, out[1:]))


def test_interpolation_is_linear_and_slerped():
    f0 = _frame(0.0, np.zeros((5, 3)), (1, 0, 0))
    f1 = _frame(10.0, np.ones((5, 3)), (0, 1, 0))
    mid = interpolate_frame(f0, f1, Fraction(5))
    np.testing.assert_allclose(mid.tips, 0.5)
    np.testing.assert_allclose(mid.direction, [math.sqrt(0.5), math.sqrt(0.5), 0], atol=1e-15)
    q = interpolate_frame(f0, f1, Fraction(10, 3))
    assert math.atan2(q.direction[1], q.direction[0]) == pytest.approx(math.pi / 6)


def test_resample_needs_two_frames():
    with pytest.raises(InvalidInputError):
        resample([_frame(0.0, np.zeros((5, 3)))], 1000)


def test_active_fingers():
    assert active_fingers(14) == {1, 2, 3}


def _far_frames(n=11):
    return [_frame(10.0 * i, np.full((5, 3), 0.5) + [0.001 * i, 0, 0]) for i in range(n)]


def test_no_contact_stays_free():
    rep = replay(load_preset_scene("grasp-lift"), _far_frames(), with_metrics=False)
    assert len(rep.ticks) == 101
    assert rep.outcome is Phase.FREE and rep.phases_seen == (Phase.FREE,)
    assert all(max(t.finger_force) == 0 and t.contacts == 0 for t in rep.ticks)
    header = rep.ticks_csv().splitlines()[0]
    assert header.split(",") == list(TICK_FIELDS)


def test_tunneling_is_reported():
    frames = _far_frames(3)
    frames[2] = _frame(20.0, frames[1].tips + [0, 0, 0.2])
    with pytest.raises(TunnelingError) as err:
        replay(load_preset_scene("grasp-lift"), frames, rate=100)
    assert err.value.tick == 2 and err.value.finger == 1


@pytest.mark.parametrize("rate", [0, -5, 50])
def test_rate_validation(rate):
    with pytest.raises(InvalidInputError):
        replay(load_preset_scene("grasp-lift"), _far_frames(), rate=rate)


def test_replay_is_deterministic():
    scene = load_preset_scene("grasp-lift")
    frames = generate("grasp-lift", 4)
    a, b = replay(scene, frames), replay(scene, frames)
    assert a.ticks_csv() == b.ticks_csv() and a.summary_text() == b.summary_text()


@pytest.mark.parametrize("name", PRESETS)
def test_generators(name):
    a = generate(name, 7, duration=1.0)
    assert len(a) == FRAME_RATE + 1
    b = generate(name, 7, duration=1.0)
    assert all(np.array_equal(x.tips, y.tips) for x, y in zip(a, b))
    c = generate(name, 8, duration=1.0)
    assert len(c) == len(a)


def test_generator_errors():
    with pytest.raises(InvalidInputError, match="unknown preset"):
        generate("juggle", 1)
    with pytest.raises(InvalidInputError):
        generate("grasp-lift", 1, duration=0)
    with pytest.raises(Exception):
        load_preset_scene("juggle")
