import numpy as np
import pytest

from maxdisk import holo
from maxdisk.errors import DivisorMayVanish, OutsideDomain, QuadratureNonConvergent
from maxdisk.holo import (
    ONE, Z, ArnoldiPoly, MeroFn, Polyline, certify_zero_free, const, derivative, div_zero_free,
    exp, path_integral, pole, poly, ray_integrals,
)
from maxdisk.polygon import Polygon

UNIT = Polygon.square(1.0, center=0.5 + 0.5j)


def _samples(n=100, seed=0):
    rng = np.random.default_rng(seed)
    return rng.uniform(0.05, 0.95, n) + 1j * rng.uniform(0.05, 0.95, n)


def _arnoldi():
    z = _samples(400, 7)
    H, _ = ArnoldiPoly.fit_basis(z, 6, 0.5 + 0.5j, 0.7)
    coef = np.random.default_rng(8).normal(size=7) * 0.3
    return ArnoldiPoly(H, coef, 0.5 + 0.5j, 0.7)


ZOO = [
    poly([1, -2j, 0.5, 0.25]),
    pole(3.0) + pole(-1 - 1j, [0.5, 2.0]),
    exp(poly([0, 1j, 0.3])),
    poly([0, 1]) * exp(pole(2.5)) - 3,
    div_zero_free(poly([1, 1]), exp(Z)),
    _arnoldi(),
    exp(_arnoldi()) * pole(-2.0),
]


def test_eval_examples():
    assert ONE(0.3 + 2j) == 1
    assert (Z * Z)(1 + 1j) == pytest.approx(2j, abs=1e-15)
    assert pole(3.0)(1.0) == -0.5
    with pytest.raises(OutsideDomain):
        Z.eval(2.0, domain=UNIT)


def test_derivative_examples():
    z = _samples()
    assert np.allclose(derivative(Z * Z)(z), 2 * z, atol=1e-14)
    assert np.allclose(derivative(pole(3.0))(z), -1 / (z - 3) ** 2, atol=1e-14)
    assert np.allclose(derivative(exp(Z))(z), np.exp(z), atol=1e-14)


@pytest.mark.parametrize("f", ZOO)
def test_derivative_vs_finite_differences(f):
    z = _samples(100, 11)
    h = 1e-6
    fd = (f(z + h) - f(z - h)) / (2 * h)
    d = derivative(f)(z)
    assert np.max(np.abs(d - fd) / np.maximum(np.abs(d), 1.0)) < 1e-6


def test_path_integral_examples():
    assert path_integral(ONE, [0, 1 + 1j]) == pytest.approx(1 + 1j, abs=1e-14)
    assert path_integral(Z, [0, 2]) == pytest.approx(2, abs=1e-14)
    a = path_integral(pole(3.0), [0, 1])
    b = path_integral(pole(3.0), [0, 0.5 + 0.9j, 0.2 + 0.3j, 1])
    assert abs(a - b) < 1e-12
    assert a == pytest.approx(np.log(2 / 3), abs=1e-13)


@pytest.mark.parametrize("f", ZOO)
def test_path_independence(f):
    rng = np.random.default_rng(5)
    for _ in range(20):
        a, b = _samples(2, rng.integers(1 << 30))
        mids = _samples(3, rng.integers(1 << 30))
        one = path_integral(f, [a, b])
        two = path_integral(f, [a, *mids, b])
        assert abs(one - two) <= 1e-11 * max(1.0, abs(one))


def test_ray_integrals_match_adaptive():
    f = ZOO[3]
    z = _samples(30, 3)
    fast = ray_integrals(f, z, base=0.5)
    slow = np.array([path_integral(f, [0.5, w]) for w in z])
    assert np.max(np.abs(fast - slow)) < 1e-12


def test_quadrature_non_convergent():
    with pytest.raises(QuadratureNonConvergent):
        path_integral(pole(0.5 + 1e-9j), [0.0, 1.0], max_depth=3)


def test_algebra_examples():
    z = _samples()
    assert np.allclose(holo.algebra(Z, Z, "mul")(z), z * z, atol=1e-15)
    assert holo.algebra(holo.ZERO, None, "exp") is ONE
    q = holo.algebra(ONE, exp(Z), "div_zero_free")
    assert np.max(np.abs(q(z) - np.exp(-z))) < 1e-12
    assert np.allclose(holo.algebra(Z, ONE, "add")(z), z + 1)


def test_div_requires_zero_free():
    with pytest.raises(DivisorMayVanish):
        div_zero_free(ONE, Z - 0.5)
    with pytest.raises(DivisorMayVanish):
        div_zero_free(ONE, Z - (0.3 + 0.6j), domain=UNIT)
    q = div_zero_free(ONE, Z + 2, domain=UNIT)
    assert q(0.5) == pytest.approx(1 / 2.5)


@pytest.mark.parametrize("c", [0.5 + 0.5j, 0.1 + 0.9j, 0.97 + 0.02j, 0.3 + 0.3000001j])
def test_zero_free_rejects_interior_zero(c):
    ok, _ = certify_zero_free(Z - c, UNIT)
    assert not ok


def test_zero_free_accepts_exterior_zero():
    ok, info = certify_zero_free((Z - 1.2) * (Z + 0.3j), UNIT)
    assert ok and info["zero_count"] == 0
    assert certify_zero_free(exp(Z), UNIT)[0]


def test_json_roundtrip():
    z = _samples()
    for f in ZOO:
        g = holo.from_json(f.to_json())
        assert np.array_equal(f(z), g(z))


def test_shared_subexpression_stored_once():
    inner = exp(_arnoldi())
    f = inner * inner + inner
    d = holo.to_dict(f)
    assert sum(n["type"] == "arnoldi" for n in d["nodes"]) == 1


def test_mero_poles():
    g = MeroFn(ONE, (Z - 0.3 - 0.4j) * (Z - 0.7 - 0.6j))
    found = np.sort_complex(g.poles(UNIT))
    assert np.allclose(found, [0.3 + 0.4j, 0.7 + 0.6j], atol=1e-12)
    assert MeroFn.lift(Z).poles(UNIT).size == 0
    assert const(2.0)(0.1) == 2.0
    assert Polyline([0, 3, 3 + 4j]).length == 7
