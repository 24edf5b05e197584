"""Backend parity: the compiled kernels must agree bit for bit with the Python ones."""

import numpy as np
import pytest

from tripod_haptics import _pykernels, kernels
from tripod_haptics.geometry import Box, Cylinder, HalfSpace, Sphere

needs_cython = pytest.mark.skipif("cython" not in kernels.backends(),
                                  reason="compiled kernels not built")


def _shapes():
    q = np.array([0.9, 0.1, -0.3, 0.2])
    return [Sphere([0.01, 0, 0], 0.03), HalfSpace([0, 0, 0.01], [0, 0.6, 0.8]),
            Box([0, 0.01, 0], [0.03, 0.02, 0.015], q / np.linalg.norm(q)),
            Cylinder([0, 0, -0.02], [0.0, 0.6, 0.8], 0.025, 0.04)]


def test_backend_selection():
    assert kernels.BACKEND in ("python", "cython")
    assert "python" in kernels.backends()


@needs_cython
def test_signed_distance_parity():
    c = kernels.backends()["cython"]
    rng = np.random.default_rng(0)
    for s in _shapes():
        for p in rng.uniform(-0.06, 0.06, (2000, 3)).tolist():
            assert c.signed_distance(s.kind, s.packed, *p) == \
                _pykernels.signed_distance(s.kind, s.packed, *p)


@needs_cython
def test_proxy_walk_and_batch_parity():
    c = kernels.backends()["cython"]
    rng = np.random.default_rng(1)
    for s in _shapes():
        for mu in (0.0, 0.3, 1.0):
            hips = np.cumsum(rng.normal(0, 0.002, (500, 3)), axis=0) * 0.3
            a = c.proxy_walk(s.kind, s.packed, 0.008, mu, hips[0], hips)
            b = _pykernels.proxy_walk(s.kind, s.packed, 0.008, mu, hips[0], hips)
            assert np.array_equal(a, b)
            radii = rng.uniform(0.0, 0.01, 500)
            prox = hips + rng.normal(0, 0.003, hips.shape)
            a = c.proxy_batch(s.kind, s.packed, radii, mu, prox, hips)
            b = _pykernels.proxy_batch(s.kind, s.packed, radii, mu, prox, hips)
            assert np.array_equal(a, b)


@needs_cython
def test_cone_wrenches_parity():
    c = kernels.backends()["cython"]
    rng = np.random.default_rng(2)
    for _ in range(500):
        k = int(rng.integers(1, 4))
        n = rng.normal(size=(k, 3))
        n /= np.linalg.norm(n, axis=1)[:, None]
        arms = rng.normal(0, 0.03, (k, 3))
        mu = float(rng.uniform(0, 1.5))
        edges = int(rng.integers(4, 33))
        assert np.array_equal(c.cone_wrenches(n, arms, mu, edges),
                              _pykernels.cone_wrenches(n, arms, mu, edges))


def test_cone_wrenches_shape_and_units(backend):
    n = np.array([[0, 0, -1.0], [0, 0, 1.0]])
    arms = np.array([[0, 0, 0.05], [0, 0, -0.02]])
    w = backend.cone_wrenches(n, arms, 0.5, 8)
    assert w.shape == (6, 16)
    np.testing.assert_allclose(np.linalg.norm(w[:3], axis=0), 1.0)
    # every edge makes the cone half-angle with its normal
    cosines = np.concatenate([w[:3, :8].T @ n[0], w[:3, 8:].T @ n[1]])
    np.testing.assert_allclose(cosines, 1 / np.sqrt(1 + 0.25))
    # moments use arms scaled by the longest one
    np.testing.assert_allclose(w[3:, 0], np.cross(arms[0] / 0.05, w[:3, 0]), atol=1e-15)


def test_proxy_walk_matches_stepwise_update(backend):
    s = _shapes()[0]
    rng = np.random.default_rng(4)
    hips = s.center + rng.normal(0, 0.02, (200, 3))
    rows = backend.proxy_walk(s.kind, s.packed, 0.005, 0.4, hips[0], hips)
    ax, ay, az = hips[0]
    for row, h in zip(rows, hips):
        res = backend.proxy_update(s.kind, s.packed, 0.005, 0.4, ax, ay, az, *h)
        assert tuple(row) == tuple(float(x) for x in res)
        ax, ay, az = res[2:5]
