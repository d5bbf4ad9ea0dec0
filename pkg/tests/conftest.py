import numpy as np
import pytest

from maxdisk import holo
from maxdisk.errors import FitFailed
from maxdisk.deform import DeformConfig, LemmaContext
from maxdisk.polygon import Polygon
from maxdisk.runge import DiskSet, PolygonSet, RungeResult, certify
from maxdisk.weierstrass import flat_disk


def bump_constants(alpha_max, width):
    """Slope ``K`` and disk radius ``r`` that make the edge bump work up to ``alpha_max``."""
    la = np.log(alpha_max)
    K = np.log(alpha_max * la * 10) / width
    r = 1.0 / (K * alpha_max ** 2 * la) / 8
    return K, r


class EdgeBump:
    """Closed-form Runge function ``exp(L exp(K (z - zb)))`` for a disk at a polygon edge.

    The double exponential is ``alpha`` near ``zb`` and within ``1/alpha`` of 1 a
    distance ``width`` to the left, so it stands in for a fitted Runge function
    on sets hugging the right edge.
    """

    def __init__(self, zb, K, r):
        self.zb, self.K, self.r = zb, K, r

    def __call__(self, req):
        L = np.log(req.alpha) * np.exp(2 * self.K * self.r)
        w = holo.lincomb([L], [holo.exp(holo.poly([-self.K * self.zb, self.K]))])
        h = holo.exp(w)
        cert = certify(h, req, 128)
        if not cert.passed:
            err = FitFailed("edge bump misses its targets")
            err.certificate, err.history = cert, []
            raise err
        return RungeResult(h, cert, 0, 0, [])


@pytest.fixture(scope="session")
def bump_context():
    """One-step context on a flat disk: a tiny disk and a strip at the right edge."""
    P = Polygon.square(0.5)
    X = flat_disk(P, (0, 0, -2.2))
    zb, width = 0.25 + 0j, 0.1
    K, r = bump_constants(2.0 ** 14, width)
    omega = DiskSet(zb - 2 * r, r)
    strip = Polygon(np.array([0.25 - width - 0.3j, 0.3 - 0.3j, 0.3 + 0.3j, 0.25 - width + 0.3j]))
    cfg = DeformConfig(grid_resolution=24, set_points=100, immersion_points=64)
    return LemmaContext(8, P, X, [(omega, PolygonSet(strip, closed=False))], cfg,
                        EdgeBump(zb, K, r))
