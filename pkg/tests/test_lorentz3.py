import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maxdisk.errors import DifferentSheets, NotInB0, OnUnitCircle, PreconditionViolated
from maxdisk.lorentz3 import (
    IDENTITY_FRAME, CausalClass, Region, causal_class, complete_frame, coords_in_frame,
    euclid_companion, euclid_norm, from_frame_coords, gauss_maps, hyperbolic_dist, in_region,
    lorentz_norm, lvec, minkowski_inner, minkowski_sq, project_to_h2, reflect, shrink_check,
    stereo, stereo_inv,
)

S1, C1 = np.sinh(1.0), np.cosh(1.0)
finite = st.floats(-5, 5, allow_nan=False)
vec = st.tuples(finite, finite, finite).map(np.array)


def test_inner_examples():
    assert minkowski_inner(lvec(1, 0, 0), lvec(0, 0, 1)) == 0
    assert minkowski_inner(lvec(0, 0, 1), lvec(0, 0, 1)) == -1
    assert minkowski_inner(lvec(1, 2, 2), lvec(1, 2, 2)) == 1


def test_lorentz_norm_examples():
    assert lorentz_norm(lvec(0, 0, 2)) == -2
    assert lorentz_norm(lvec(3, 4, 0)) == 5
    assert lorentz_norm(lvec(1, 0, 1)) == 0


def test_causal_class():
    assert causal_class(lvec(0, 0, 0)) is CausalClass.SPACELIKE
    assert causal_class(lvec(0, 0, 1)) is CausalClass.TIMELIKE
    assert causal_class(lvec(1, 0, 1)) is CausalClass.LIGHTLIKE


def test_region_examples():
    assert in_region(lvec(0, 0, -2), Region(1))
    assert not in_region(lvec(0, 0, -1), Region(1))
    assert not in_region(lvec(1, 0, -2), Region(np.sqrt(3) + 0.01))
    assert in_region(lvec(1, 0, -2), Region(np.sqrt(3) - 0.01))
    with pytest.raises(ValueError):
        Region(-1)


def test_hyperbolic_dist_examples():
    p = lvec(0, 0, 1)
    assert hyperbolic_dist(p, p) == 0
    assert hyperbolic_dist(p, lvec(0, S1, C1)) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DifferentSheets):
        hyperbolic_dist(p, lvec(0, 0, -1))


def test_stereo_examples():
    assert stereo(lvec(0, 0, 1)) == np.inf
    assert stereo(lvec(0, 0, -1)) == 0
    w = stereo(lvec(0, S1, -C1))
    assert w == pytest.approx(1j * S1 / (1 + C1), abs=1e-15)
    assert abs(w.imag - 0.4621) < 1e-4


def test_stereo_inv_examples():
    assert np.array_equal(stereo_inv(0), [0, 0, -1])
    assert np.array_equal(stereo_inv(np.inf), [0, 0, 1])
    assert np.allclose(stereo_inv(0.4621j), [0, 1.1752, -1.5431], atol=1e-3)
    with pytest.raises(OnUnitCircle):
        stereo_inv(1.0)


def test_stereo_sheets():
    rng = np.random.default_rng(1)
    w = rng.normal(size=500) + 1j * rng.normal(size=500)
    w = w[np.abs(np.abs(w) - 1) > 1e-3]
    p = stereo_inv(w)
    assert np.allclose(minkowski_sq(p), -1, atol=1e-9 * np.max(np.abs(p)) ** 2)
    assert np.all((p[:, 2] > 0) == (np.abs(w) > 1))


def test_gauss_maps_examples():
    for p, n, n0 in [
        ((0, 0, -2), (0, 0, 1), (0, 0, 1)),
        ((0, 0, -1), (0, 0, 1), (0, 0, 1)),
        # the outward normal lies on the upper sheet: (-1, 0, sqrt 2), not (1, 0, sqrt 2)
        ((1, 0, -np.sqrt(2)), (-1, 0, np.sqrt(2)), (1 / np.sqrt(3), 0, np.sqrt(2 / 3))),
    ]:
        got_n, got_n0 = gauss_maps(np.array(p, dtype=float))
        assert np.allclose(got_n, n, atol=1e-12)
        assert np.allclose(got_n0, n0, atol=1e-12)
    with pytest.raises(NotInB0):
        gauss_maps(lvec(1, 0, 0))


def test_gauss_relation_random():
    rng = np.random.default_rng(2)
    p = np.column_stack([rng.normal(size=(10_000, 2)), np.zeros(10_000)])
    p[:, 2] = -np.hypot(p[:, 0], p[:, 1]) - rng.uniform(0.01, 5, 10_000)
    n, n0 = gauss_maps(p)
    assert np.allclose(minkowski_sq(n), -1, atol=1e-9)
    assert np.all(n[:, 2] > 0)
    rel = -reflect(n) / euclid_norm(n)[:, None]
    assert np.max(np.abs(rel - n0)) < 1e-12


def test_complete_frame_examples():
    f = complete_frame(lvec(0, 0, 1))
    assert np.allclose(f.matrix, np.eye(3))
    for e3 in (lvec(0, S1, C1), lvec(S1, 0, C1), project_to_h2(lvec(3, -4, 6))):
        fr = complete_frame(e3)
        assert fr.check(1e-12)
        assert np.array_equal(fr.e3, e3)
    with pytest.raises(PreconditionViolated):
        complete_frame(lvec(0, 0, -1))


def test_euclid_companion():
    assert np.allclose(euclid_companion(IDENTITY_FRAME).matrix, np.eye(3))
    fr = complete_frame(lvec(0, S1, C1))
    tri = euclid_companion(fr)
    assert np.allclose(tri.e3, np.array([0, -S1, C1]) / np.hypot(S1, C1), atol=1e-15)
    assert np.allclose(tri.matrix.T @ tri.matrix, np.eye(3), atol=1e-12)
    assert abs(tri.e3 @ fr.e1) < 1e-12 and abs(tri.e3 @ fr.e2) < 1e-12
    assert tri.e3 @ fr.e3 > 0


def test_coords_in_frame_examples():
    assert np.allclose(coords_in_frame(lvec(1, 2, 3), IDENTITY_FRAME), [1, 2, 3])
    fr = complete_frame(lvec(0, S1, C1))
    assert np.allclose(coords_in_frame(fr.e3, fr), [0, 0, 1], atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(vec, vec)
def test_frame_roundtrip_property(v, w):
    e3 = project_to_h2(np.array([w[0], w[1], np.hypot(w[0], w[1]) + abs(w[2]) + 0.1]))
    fr = complete_frame(e3)
    assert fr.check(1e-12 * max(1.0, float(np.max(np.abs(fr.matrix))) ** 2))
    back = from_frame_coords(coords_in_frame(v, fr), fr)
    assert np.allclose(back, v, atol=1e-12 * max(1.0, np.max(np.abs(fr.matrix)) ** 2 * np.max(np.abs(v))))


@given(vec, vec)
def test_reflection_properties(u, v):
    assert np.array_equal(reflect(reflect(u)), u)
    assert minkowski_inner(u, v) == pytest.approx(u @ reflect(v), abs=1e-12)


def test_shrink_examples():
    assert shrink_check(lvec(0, 0, -2.5), lvec(1, 0, 0), 2.0)
    assert shrink_check(lvec(0, 0, -3), lvec(0, 1.5, 0), 2.0)
    with pytest.raises(PreconditionViolated):
        shrink_check(lvec(0, 0, -3), lvec(0, 0, 1), 2.0)


def test_shrink_randomized():
    rng = np.random.default_rng(3)
    total = 0
    for t in rng.uniform(0.1, 3.0, 100):
        n = 1000
        xy = rng.normal(size=(n, 2)) * rng.uniform(0, 3, (n, 1))
        p = np.column_stack([xy, -np.sqrt(np.sum(xy ** 2, 1) + (t + rng.uniform(1e-3, 3, n)) ** 2)])
        _, n0 = gauss_maps(p)
        u = rng.normal(size=(n, 3))
        u -= np.sum(u * n0, 1)[:, None] * n0
        x = rng.uniform(0.01, 0.99, n) * t
        v = u / euclid_norm(u)[:, None] * x[:, None]
        assert np.all(shrink_check(p, v, t))
        total += n
    assert total == 100_000


def test_region_nesting():
    rng = np.random.default_rng(4)
    p = rng.uniform(-4, 4, (20_000, 3))
    for r1, r2 in [(0.5, 1.0), (1.0, 2.5)]:
        inner = in_region(p, Region(r2))
        assert np.all(in_region(p[inner], Region(r1)))
