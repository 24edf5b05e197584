import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import closure_lp_oracle
from tripod_haptics.errors import InvalidInputError, NoGraspError
from tripod_haptics.geometry import Sphere
from tripod_haptics.graspmodel import (ClosureTester, FingerSample, GraspMap, GraspParams,
                                       GraspState, Phase, RigidObjectState, VirtualFingerState,
                                       Wrench, aggregate_rows, aggregate_virtual_fingers,
                                       build_grasp_map, force_closure, resultant_wrench,
                                       step_grasp_state, step_object)
from tripod_haptics.rendering import FingerForce
from tripod_haptics.taxonomy import assign_virtual_fingers

ALL = assign_virtual_fingers({1, 2, 3, 4, 5})
BALL = RigidObjectState(Sphere([0, 0, 0], 0.03), 0.058, np.zeros(3))


def _sample(force, normal=(0, 0, 1.0), tip=(0, 0, 0), touching=True):
    f = np.array(force, float)
    return FingerSample(np.array(tip, float), FingerForce(f, np.zeros(3), f, 0.0), touching,
                        np.array(tip, float) if touching else None,
                        np.array(normal, float) if touching else None)


def _equator(r=0.03, angles=(0.0, 120.0, 240.0)):
    return [np.array([r * math.cos(math.radians(a)), r * math.sin(math.radians(a)), 0.0])
            for a in angles]


def _vfs(points, forces=None, normals=None):
    out = []
    for i, p in enumerate(points):
        n = p / np.linalg.norm(p) if normals is None else normals[i]
        f = n * 5.0 if forces is None else np.asarray(forces[i], float)
        out.append(VirtualFingerState(i + 1, frozenset({i + 1}), p, f, True, p, n))
    return out


def test_vf3_sums_member_forces():
    per = {1: _sample([0, 0, 1]), 2: _sample([0, 0, 1]), 3: _sample([0, 0, 2]),
           4: _sample([0, 0, 1]), 5: _sample([0, 0, 0.5])}
    vfs = aggregate_virtual_fingers(per, ALL)
    np.testing.assert_allclose(vfs[2].force, [0, 0, 3.5])
    assert vfs[2].member_fingers == {3, 4, 5}
    assert vfs[2].normal_force == pytest.approx(3.5)


def test_empty_vf3():
    vfs = aggregate_virtual_fingers({1: _sample([0, 0, 1]), 2: _sample([0, 0, 1])},
                                    assign_virtual_fingers({1, 2}))
    np.testing.assert_array_equal(vfs[2].force, 0)
    assert not vfs[2].in_contact and vfs[2].position is None


def test_triangle_inequality_sweep():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        per = {i: _sample(rng.normal(0, 3, 3), touching=bool(rng.random() < 0.8))
               for i in range(1, 6)}
        for vf, members in zip(aggregate_virtual_fingers(per, ALL), ALL):
            bound = sum(np.linalg.norm(per[i].force.total) for i in members)
            assert np.linalg.norm(vf.force) <= bound + 1e-12


def test_aggregate_rows_matches_mapping_form():
    rng = np.random.default_rng(2)
    for _ in range(200):
        tips = rng.normal(0, 0.05, (5, 3))
        on = rng.random(5) < 0.7
        normals = rng.normal(size=(5, 3))
        normals /= np.linalg.norm(normals, axis=1)[:, None]
        points = tips + rng.normal(0, 0.001, (5, 3))
        forces = rng.normal(0, 2, (5, 3))
        slip = rng.random(5) < 0.3
        per = {i + 1: FingerSample(tips[i], FingerForce(forces[i], np.zeros(3), forces[i], 0),
                                   bool(on[i]), points[i] if on[i] else None,
                                   normals[i] if on[i] else None, bool(slip[i]))
               for i in range(5)}
        a = aggregate_virtual_fingers(per, ALL)
        b = aggregate_rows(tips, on, points, normals, forces, slip, ALL)
        for x, y in zip(a, b):
            assert (x.in_contact, x.slipping, x.member_fingers) == (
                y.in_contact, y.slipping, y.member_fingers)
            np.testing.assert_array_equal(x.force, y.force)
            np.testing.assert_array_equal(x.position, y.position)
            if x.in_contact:
                np.testing.assert_array_equal(x.normal, y.normal)
                np.testing.assert_array_equal(x.grasp_point, y.grasp_point)


def test_grasp_map_symmetric_tripod():
    g = build_grasp_map(_vfs(_equator()), BALL)
    for p, n, arm in zip(_equator(), g.normals, g.arms):
        np.testing.assert_allclose(n, -p / 0.03)
        assert np.linalg.norm(arm) == pytest.approx(0.03)
    assert g.contact_count == 3
    np.testing.assert_array_equal(g.u, g.normals.T)


def test_grasp_map_single_contact():
    top = np.array([0, 0, 0.03])
    vfs = _vfs([top]) + [VirtualFingerState(2, frozenset(), None, np.zeros(3), False),
                         VirtualFingerState(3, frozenset(), None, np.zeros(3), False)]
    g = build_grasp_map(vfs, BALL)
    np.testing.assert_array_equal(g.arms[0], top)
    np.testing.assert_array_equal(g.normals[0], [0, 0, -1])
    assert g.active == (True, False, False)


def test_grasp_map_needs_a_contact():
    vfs = [VirtualFingerState(i, frozenset(), None, np.zeros(3), False) for i in (1, 2, 3)]
    with pytest.raises(NoGraspError):
        build_grasp_map(vfs, BALL)


def test_symmetric_wrench_cancels():
    vfs = _vfs(_equator())
    g = build_grasp_map(vfs, BALL)
    w = resultant_wrench(g, vfs, [0, 0, 0], BALL)
    np.testing.assert_allclose(w.force, 0, atol=1e-14)
    np.testing.assert_allclose(w.moment, 0, atol=1e-16)


def test_single_force_moment():
    # rendered (finger-side) force -3 N z; the object receives +3 N z
    arm = np.array([0.05, 0, 0])
    vfs = [VirtualFingerState(1, frozenset({1}), arm, np.array([0, 0, -3.0]), True, arm,
                              np.array([1.0, 0, 0])),
           VirtualFingerState(2, frozenset(), None, np.zeros(3), False),
           VirtualFingerState(3, frozenset(), None, np.zeros(3), False)]
    obj = RigidObjectState(Sphere([0, 0, 0], 0.05), 1.0, np.zeros(3))
    w = resultant_wrench(build_grasp_map(vfs, obj), vfs, [0, 0, 0], obj)
    np.testing.assert_allclose(w.moment, [0, -0.15, 0])
    np.testing.assert_allclose(w.force, [0, 0, 3.0])


def _random_vfs(rng):
    pts = rng.normal(0, 0.03, (3, 3))
    forces = rng.normal(0, 3, (3, 3))
    normals = rng.normal(size=(3, 3))
    normals /= np.linalg.norm(normals, axis=1)[:, None]
    return _vfs(list(pts), list(forces), list(normals))


def test_newton_third_law_exact():
    rng = np.random.default_rng(3)
    for _ in range(200):
        vfs = _random_vfs(rng)
        w = resultant_wrench(build_grasp_map(vfs, BALL), vfs, [0, 0, 0], BALL)
        assert np.array_equal(w.force, -(vfs[0].force + vfs[1].force + vfs[2].force))


def test_wrench_equals_per_finger_sum():
    rng = np.random.default_rng(4)
    g3 = np.array([0, 0, -9.81])
    for _ in range(200):
        vfs = _random_vfs(rng)
        w = resultant_wrench(build_grasp_map(vfs, BALL), vfs, g3, BALL)
        f = BALL.mass * g3
        m = np.zeros(3)
        for v in vfs:
            f = f - v.force
            m = m + np.cross(v.grasp_point - BALL.position, -v.force)
        np.testing.assert_allclose(w.force, f, atol=1e-9)
        np.testing.assert_allclose(w.moment, m, atol=1e-9)


def test_wrench_linearity():
    rng = np.random.default_rng(5)
    for _ in range(100):
        a, b = _random_vfs(rng), _random_vfs(rng)
        b = _vfs([v.grasp_point for v in a], [v.force for v in b], [v.normal for v in a])
        s = float(rng.uniform(-3, 3))
        both = _vfs([v.grasp_point for v in a], [x.force + s * y.force for x, y in zip(a, b)],
                    [v.normal for v in a])
        g = build_grasp_map(a, BALL)
        wa, wb, wab = (resultant_wrench(g, v, [0, 0, 0], BALL) for v in (a, b, both))
        for x, y, z in ((wa.force, wb.force, wab.force), (wa.moment, wb.moment, wab.moment)):
            scale = max(np.linalg.norm(z), 1e-12)
            assert np.linalg.norm(x + s * y - z) <= 1e-12 * scale * 10


def _tripod_map(r=0.03):
    return build_grasp_map(_vfs(_equator(r)), BALL)


def test_coplanar_tripod_closure():
    assert not force_closure(_tripod_map(), 0.0)
    assert force_closure(_tripod_map(), 0.5, cone_edges=8)


def test_closure_preconditions():
    vfs = _vfs(_equator())
    vfs[2] = VirtualFingerState(3, frozenset(), None, np.zeros(3), False)
    with pytest.raises(InvalidInputError):
        force_closure(build_grasp_map(vfs, BALL), 0.5)
    with pytest.raises(InvalidInputError):
        force_closure(_tripod_map(), -0.1)
    with pytest.raises(InvalidInputError):
        force_closure(_tripod_map(), 0.5, cone_edges=3)


def _random_map(rng):
    d = rng.normal(size=(3, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    return GraspMap(np.zeros(3), -d, 0.03 * d, (True, True, True))


def test_closure_monotone_in_mu():
    rng = np.random.default_rng(6)
    grid = [0.0, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5]
    for _ in range(40):
        g = _random_map(rng)
        seen = [force_closure(g, mu) for mu in grid]
        assert seen == sorted(seen)


def test_closure_refinement_keeps_closure():
    rng = np.random.default_rng(7)
    for _ in range(60):
        g = _random_map(rng)
        mu = float(rng.uniform(0.1, 1.0))
        for k in (4, 8, 16):
            if force_closure(g, mu, k):
                assert force_closure(g, mu, 2 * k)


def test_closure_agrees_with_oracle_on_clear_cases():
    rng = np.random.default_rng(8)
    for _ in range(40):
        g = _random_map(rng)
        mu = float(rng.uniform(0.1, 1.0))
        want, t = closure_lp_oracle(g.arms, g.normals, np.zeros(3), mu, edges=8)
        if abs(t) > 1e-6:
            assert force_closure(g, mu) == want


def test_closure_tester_matches_and_saves_lps():
    rng = np.random.default_rng(9)
    tester = ClosureTester()
    base = _random_map(rng)
    while not force_closure(base, 0.6):
        base = _random_map(rng)
    n = 300
    for k in range(n):
        jitter = rng.normal(0, 0.002 if k % 50 else 0.5, (3, 3))
        pts = base.arms + 0.03 * jitter
        d = pts / np.linalg.norm(pts, axis=1)[:, None]
        g = GraspMap(np.zeros(3), -d, 0.03 * d, (True, True, True))
        assert tester(g, 0.6) == force_closure(g, 0.6)
    assert tester.lp_calls < n // 2


def test_thresholds_and_closure_gate():
    p = GraspParams()
    vfs = _vfs(_equator(), [n * 1.0 for n in (p / np.linalg.norm(p) for p in _equator())])
    touching = GraspState(Phase.TOUCHING)
    assert step_grasp_state(touching, vfs, True, BALL, p).phase is Phase.GRASPED
    assert step_grasp_state(touching, vfs, False, BALL, p).phase is Phase.TOUCHING


def test_hold_time_five_seconds():
    p = GraspParams()
    vfs = _vfs(_equator())
    s = step_grasp_state(GraspState(), vfs, True, BALL, p)
    assert s.phase is Phase.TOUCHING
    for _ in range(5000):
        s = step_grasp_state(s, vfs, True, BALL, p)
    assert s.phase is Phase.GRASPED
    assert abs(s.hold_time - 5.0) <= p.dt


def test_lift_and_slip_latch():
    p = GraspParams(slip_ticks=2)
    vfs = _vfs(_equator())
    s = step_grasp_state(GraspState(Phase.TOUCHING), vfs, True, BALL, p)
    raised = RigidObjectState(BALL.shape, BALL.mass, np.array([0, 0, 0.025]))
    s = step_grasp_state(s, vfs, True, raised, p)
    assert s.phase is Phase.LIFTED
    slipping = [VirtualFingerState(v.vf_id, v.member_fingers, v.position, v.force, True,
                                   v.grasp_point, v.normal, True) for v in vfs]
    for _ in range(3):
        s = step_grasp_state(s, slipping, True, raised, p)
    assert s.phase is Phase.SLIPPING
    s = step_grasp_state(s, vfs, True, raised, p)
    assert s.phase is Phase.SLIPPING
    gone = [VirtualFingerState(i, frozenset(), None, np.zeros(3), False) for i in (1, 2, 3)]
    assert step_grasp_state(s, gone, False, raised, p).phase is Phase.FREE


def _abstract_inputs():
    """Small alphabet of per-tick observations for the model check."""
    eq = _equator()
    none = VirtualFingerState(3, frozenset(), None, np.zeros(3), False)

    def vf(i, mag, slip):
        n = eq[i] / np.linalg.norm(eq[i])
        return VirtualFingerState(i + 1, frozenset({i + 1}), eq[i], n * mag, True, eq[i], n, slip)

    patterns = {
        "none": [VirtualFingerState(i, frozenset(), None, np.zeros(3), False) for i in (1, 2, 3)],
        "weak": [vf(0, 0.2, False), vf(1, 0.2, False), vf(2, 0.2, False)],
        "two": [vf(0, 1.0, False), vf(1, 1.0, False), none],
        "strong": [vf(0, 1.0, False), vf(1, 1.0, False), vf(2, 1.0, False)],
        "slip": [vf(0, 1.0, True), vf(1, 1.0, True), vf(2, 1.0, True)],
    }
    low = BALL
    high = RigidObjectState(BALL.shape, BALL.mass, np.array([0, 0, 0.05]))
    return [(vfs, c, o) for vfs in patterns.values() for c in (False, True) for o in (low, high)]


def test_state_machine_model_check():
    params = GraspParams(slip_ticks=1)
    inputs = _abstract_inputs()
    allowed = {
        Phase.FREE: {Phase.FREE, Phase.TOUCHING, Phase.SLIPPING},
        Phase.TOUCHING: {Phase.FREE, Phase.TOUCHING, Phase.GRASPED, Phase.SLIPPING},
        Phase.GRASPED: {Phase.FREE, Phase.TOUCHING, Phase.GRASPED, Phase.LIFTED,
                        Phase.SLIPPING},
        Phase.LIFTED: {Phase.FREE, Phase.TOUCHING, Phase.LIFTED, Phase.SLIPPING},
        Phase.SLIPPING: {Phase.SLIPPING, Phase.FREE},
    }
    frontier = {GraspState()}
    seen = set(frontier)
    for _ in range(6):
        nxt = set()
        for s in frontier:
            for vfs, closure, obj in inputs:
                t = step_grasp_state(s, vfs, closure, obj, params)
                assert t.phase in allowed[s.phase], (s.phase, t.phase)
                if t.phase is Phase.LIFTED:
                    assert s.phase in (Phase.GRASPED, Phase.LIFTED)
                if t.phase is Phase.GRASPED:
                    assert s.phase in (Phase.TOUCHING, Phase.GRASPED)
                if t not in seen:
                    seen.add(t)
                    nxt.add(t)
        frontier = nxt
    assert {s.phase for s in seen} == set(Phase)


def test_object_gravity_step():
    obj = RigidObjectState(Sphere([0, 0, 0], 0.03), 0.1, np.zeros(3))
    w = Wrench(np.array([0, 0, -0.981]), np.zeros(3))
    nxt = step_object(obj, w, 0.001)
    assert nxt.velocity[2] == pytest.approx(-0.00981)
    rest = step_object(obj, Wrench(np.zeros(3), np.zeros(3)), 0.001)
    np.testing.assert_array_equal(rest.velocity, 0)


def test_free_fall_one_second():
    obj = RigidObjectState(Sphere([0, 0, 0], 0.03), 0.1, np.zeros(3))
    w = Wrench(np.array([0, 0, -0.981]), np.zeros(3))
    for _ in range(1000):
        obj = step_object(obj, w, 0.001)
    assert -obj.position[2] == pytest.approx(4.905, rel=0.005)


def test_fixed_support_and_attach():
    w = Wrench(np.array([0, 0, -1.0]), np.zeros(3))
    fixed = RigidObjectState(Sphere([0, 0, 0], 0.03), 0.1, np.zeros(3), fixed=True)
    assert step_object(fixed, w, 0.001) is fixed
    held = RigidObjectState(Sphere([0, 0, 0], 0.03), 0.1, np.zeros(3), support_height=0.0)
    held = step_object(held, w, 0.001)
    assert held.position[2] == 0.0 and held.velocity[2] == 0.0
    moved = step_object(held, w, 0.001, attach_to=[0, 0, 0.002])
    np.testing.assert_allclose(moved.velocity, [0, 0, 2.0])
    with pytest.raises(InvalidInputError):
        step_object(held, w, 0.02)


@given(st.tuples(*[st.floats(-1e-3, 1e-3)] * 3))
@settings(max_examples=50)
def test_torque_spins_and_keeps_unit_quaternion(m):
    obj = RigidObjectState(Sphere([0, 0, 0], 0.03), 0.1, np.zeros(3))
    for _ in range(20):
        obj = step_object(obj, Wrench(np.zeros(3), np.array(m)), 0.001)
    assert abs(np.linalg.norm(obj.orientation) - 1.0) < 1e-12
