"""Weierstrass data of conformal maximal immersions and the Lopez-Ros deformation.

Data are stored as the vector 1-form ``Phi = (Phi1, Phi2, Phi3)`` expressed
in a Lorentz frame ``S``.  Writing

    A = f = -(Phi2 + i Phi1),   B = g^2 f = i Phi1 - Phi2,   C = g f = Phi3,

the parametrisation reads ``Phi1 = (i/2)(A - B)``, ``Phi2 = -(A + B)/2`` and
``Phi1^2 + Phi2^2 - Phi3^2 = AB - C^2``, which vanishes identically because
``AB = g^2 f^2 = C^2``.  The Lopez-Ros step ``g -> g/h, f -> f h`` becomes
``A -> A h, B -> B/h`` with ``C`` untouched.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import holo
from .errors import DegenerateData, PoleUncompensated, UncancelledPole
from .holo import HoloFn, MeroFn, as_holo, evaluate, lincomb
from .lorentz3 import IDENTITY_FRAME, Frame, coords_in_frame, stereo_inv

EQ3_TOL = 1e-12


def _frame_change(src, dst):
    """Matrix taking coordinates in ``src`` to coordinates in ``dst``."""
    sig = np.diag([1.0, 1.0, -1.0])
    # coords_in_frame(v, dst) = diag(1,1,-1) M_dst^T sig v  with v = M_src c
    return sig @ dst.matrix.T @ sig @ src.matrix


def _recombine(mat, comps):
    out = []
    for row in mat:
        cs = [c for c in row]
        out.append(lincomb(cs, comps))
    return tuple(out)


@dataclass(frozen=True, eq=False)
class WData:
    """A Weierstrass 1-form triple on a polygonal domain, in Lorentz frame ``frame``."""

    phi: tuple
    domain: object = None
    frame: Frame = IDENTITY_FRAME

    # -- the (A, B, C) view ------------------------------------------------
    @property
    def f(self) -> HoloFn:
        p1, p2, _ = self.phi
        return lincomb([-1.0, -1j], [p2, p1])

    @property
    def g2f(self) -> HoloFn:
        p1, p2, _ = self.phi
        return lincomb([1j, -1.0], [p1, p2])

    @property
    def g(self) -> MeroFn:
        return MeroFn(self.phi[2], self.f)

    def ambient_phi(self):
        """The triple in canonical coordinates of the ambient space."""
        if self.frame is IDENTITY_FRAME:
            return self.phi
        return _recombine(_frame_change(self.frame, IDENTITY_FRAME), self.phi)

    def eval_phi(self, z, ambient=True):
        comps = self.ambient_phi() if ambient else self.phi
        vals = evaluate(comps, z)
        return np.stack(vals, axis=-1)

    def conformality_residual(self, z):
        """``|Phi1^2 + Phi2^2 - Phi3^2| / (|Phi1|^2 + |Phi2|^2 + |Phi3|^2)`` at ``z``."""
        v = self.eval_phi(z)
        num = np.abs(v[..., 0] ** 2 + v[..., 1] ** 2 - v[..., 2] ** 2)
        den = np.sum(np.abs(v) ** 2, axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(den > 0, num / np.where(den > 0, den, 1.0), num)

    def to_dict(self):
        return {
            "frame": self.frame.to_dict(),
            "phi": [holo.to_dict(p) for p in self.phi],
        }


def phi_from_gf(g, f, domain=None, frame=IDENTITY_FRAME, check_resolution=64):
    """Build ``Phi`` from ``(g, f)``.

    ``g`` may be holomorphic or a :class:`MeroFn`; poles of ``g`` must be
    cancelled by zeros of ``f`` (``g^2 f`` stays bounded), which is checked
    on the domain when it is given.
    """
    f = as_holo(f)
    if isinstance(g, MeroFn) and not g.is_holomorphic:
        n, d = g.numerator, g.denominator
        c = holo.Quot(holo.mul(n, f), d)
        b = holo.Quot(holo.mul(n, n, f), holo.mul(d, d))
        if domain is not None:
            _check_cancelled(g, b, domain, check_resolution)
    else:
        if isinstance(g, MeroFn):
            g = holo.div_zero_free(g.numerator, g.denominator)
        g = as_holo(g)
        c = holo.mul(g, f)
        b = holo.mul(g, g, f)
    phi1 = lincomb([0.5j, -0.5j], [f, b])
    phi2 = lincomb([-0.5, -0.5], [f, b])
    return WData((phi1, phi2, c), domain, frame)


def _check_cancelled(g, b, domain, resolution):
    for p in g.poles(domain):
        for rad in (1e-2, 1e-3, 1e-4):
            ring = p + rad * np.exp(2j * np.pi * np.arange(32) / 32)
            vals = np.abs(b(ring))
            if not np.all(np.isfinite(vals)):
                raise UncancelledPole(f"g^2 f is not finite near the pole {p}")
            if rad == 1e-2:
                ref = np.max(vals)
            elif np.max(vals) > 10 * ref + 1e-12:
                raise UncancelledPole(f"g^2 f grows near the pole {p}")


def gf_from_phi(phi, domain=None, frame=IDENTITY_FRAME):
    """Recover ``(g, f)`` from a triple: ``f = -(Phi2 + i Phi1)``, ``g = Phi3 / f``."""
    w = phi if isinstance(phi, WData) else WData(tuple(as_holo(p) for p in phi), domain, frame)
    f = w.f
    if f.is_zero:
        raise DegenerateData("Phi2 + i Phi1 vanishes identically")
    if w.domain is not None:
        pts = holo.grid_points(w.domain, 32)
        if np.max(np.abs(f(pts))) == 0.0:
            raise DegenerateData("Phi2 + i Phi1 vanishes on the domain")
    return w.g, f


def rotate_frame(w: WData, frame: Frame) -> WData:
    """Express the same 1-form in another Lorentz frame."""
    if frame is w.frame:
        return w
    mat = _frame_change(w.frame, frame)
    out = WData(_recombine(mat, w.phi), w.domain, frame)
    if out.f.is_zero:
        raise DegenerateData("rotated Phi2 + i Phi1 vanishes identically")
    return out


def lopez_ros(w: WData, h, frame: Frame | None = None, domain=None) -> WData:
    """``g -> g/h``, ``f -> f h`` in ``frame`` (default: the data's own frame).

    The result is expressed in the data's original frame.  Only ``e1`` and
    ``e2`` components change, so the ``e3`` coordinate is preserved exactly.
    """
    h = as_holo(h)
    if isinstance(h, holo.Exp):
        inv_h = holo.exp(-h.arg)
    else:
        inv_h = holo.div_zero_free(holo.ONE, h, domain if domain is not None else w.domain)
    target = w.frame if frame is None else frame
    ws = rotate_frame(w, target) if target is not w.frame else w
    a, b = ws.f, ws.g2f
    da = holo.mul(a, h - holo.ONE)
    db = holo.mul(b, inv_h - holo.ONE)
    d1 = lincomb([0.5j, -0.5j], [da, db])
    d2 = lincomb([-0.5, -0.5], [da, db])
    if target is w.frame:
        p1, p2, p3 = w.phi
        return WData((p1 + d1, p2 + d2, p3), w.domain, w.frame)
    # add d1 e1 + d2 e2 (coordinates in ``target``) to the original triple
    mat = _frame_change(target, w.frame)
    new = [lincomb([1.0, mat[k, 0], mat[k, 1]], [w.phi[k], d1, d2]) for k in range(3)]
    return WData(tuple(new), w.domain, w.frame)


def min_twin(w_or_phi):
    """The associated minimal-surface triple ``(i Phi1, i Phi2, Phi3)``."""
    p1, p2, p3 = w_or_phi.phi if isinstance(w_or_phi, WData) else w_or_phi
    return (lincomb([1j], [p1]), lincomb([1j], [p2]), p3)


# ---------------------------------------------------------------------------
# metric quantities
# ---------------------------------------------------------------------------

def conformal_factors(w: WData, z):
    """``(lambda, lambda0)``: the induced and the lift conformal factors.

    With ambient ``A = f`` and ``B = g^2 f``: ``lambda = |(|A| - |B|)| / 2`` and
    ``lambda0 = (|A| + |B|) / 2 = |Phi|_E / sqrt(2)``.
    """
    a, b = _ambient_ab(w, z)
    ma, mb = np.abs(a), np.abs(b)
    if not (np.all(np.isfinite(ma)) and np.all(np.isfinite(mb))):
        raise PoleUncompensated("Weierstrass data is singular at a sample point")
    return 0.5 * np.abs(ma - mb), 0.5 * (ma + mb)


def lift_factor(w: WData, z):
    return conformal_factors(w, z)[1]


def abs_g(w: WData, z):
    """``|g|`` in ambient coordinates, i.e. ``sqrt(|B| / |A|)``."""
    a, b = _ambient_ab(w, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.sqrt(np.abs(b) / np.abs(a))


def _ambient_ab(w, z):
    v = w.eval_phi(z)
    a = -(v[..., 1] + 1j * v[..., 0])
    b = 1j * v[..., 0] - v[..., 1]
    return a, b


def g_values(w: WData, z):
    """Ambient ``g = Phi3 / f`` (``inf`` where ``f`` vanishes)."""
    v = w.eval_phi(z)
    a = -(v[..., 1] + 1j * v[..., 0])
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(a != 0, v[..., 2] / np.where(a != 0, a, 1.0), complex(np.inf, 0.0))


def surface_normal(w: WData, z):
    """Unit Lorentz normal of the surface, the inverse stereographic image of ``g``.

    Points with ``|g| = 1`` (lightlike singularities) give ``nan``.
    """
    gv = np.asarray(g_values(w, z))
    out = np.full(gv.shape + (3,), np.nan)
    ok = np.abs(np.abs(gv) - 1.0) > 0
    out[ok] = stereo_inv(gv[ok])
    return out


class PointClass(enum.Enum):
    REGULAR = "regular"
    LIGHTLIKE = "lightlike"
    BRANCH = "branch"


def median_lift(w: WData, resolution=64):
    pts = holo.grid_points(w.domain, resolution)
    return float(np.median(lift_factor(w, pts)))


def classify_points(w: WData, z, tol=1e-10, scale=None):
    """Vectorised point classification; thresholds are relative to ``scale``.

    ``scale`` defaults to the median lift factor over the domain (or over
    the given points when the data carries no domain).
    """
    lam, lam0 = conformal_factors(w, z)
    if scale is None:
        scale = median_lift(w) if w.domain is not None else float(np.median(lam0))
    thr = tol * max(scale, np.finfo(float).tiny)
    out = np.full(np.shape(lam), PointClass.REGULAR.value, dtype=object)
    out[lam <= thr] = PointClass.LIGHTLIKE.value
    out[lam0 <= thr] = PointClass.BRANCH.value
    return out


def classify_point(w: WData, z, tol=1e-10, scale=None):
    return PointClass(classify_points(w, np.atleast_1d(z), tol, scale)[0])


def common_zero_free(w: WData, resolution=256, tol=1e-14):
    """No common zeros of the components: ``lambda0 > 0`` on the validation grid."""
    pts = holo.grid_points(w.domain, resolution)
    lam0 = lift_factor(w, pts)
    return bool(np.min(lam0) > tol * max(np.max(lam0), 1.0))


def check_conformal(w: WData, resolution=256, tol=EQ3_TOL):
    pts = holo.grid_points(w.domain, resolution)
    res = float(np.max(w.conformality_residual(pts)))
    return res <= tol, res


# ---------------------------------------------------------------------------
# immersion
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Immersion:
    """``X(z) = Re int_base^z Phi + V`` with ``Phi`` in ambient coordinates."""

    wdata: WData
    V: np.ndarray = field(default_factory=lambda: np.zeros(3))
    basepoint: complex = 0.0

    def __post_init__(self):
        object.__setattr__(self, "V", np.asarray(self.V, dtype=float))
        object.__setattr__(self, "_phi", self.wdata.ambient_phi())

    @property
    def phi(self):
        return self._phi

    @property
    def domain(self):
        return self.wdata.domain

    def along(self, path, tol=1e-12):
        """X at the end of a polyline that starts at the base point."""
        vals = holo.path_integral(self._phi, path, tol=tol)
        return np.real(vals) + self.V

    def __call__(self, z, panels=4):
        """X at many points by straight rays from the base point (star-shaped domains)."""
        z = np.asarray(z, dtype=complex)
        vals = holo.ray_integrals(self._phi, z, base=self.basepoint, panels=panels)
        return np.moveaxis(np.real(vals), 0, -1) + self.V

    def with_data(self, wdata):
        return Immersion(wdata, self.V, self.basepoint)

    def to_dict(self):
        b = complex(self.basepoint)
        return {"V": self.V.tolist(), "basepoint": [b.real, b.imag], "wdata": self.wdata.to_dict()}


def immerse(I: Immersion, z, path=None):
    """X(z) along ``path`` (default: the straight segment from the base point)."""
    if path is None:
        path = [I.basepoint, z]
    return I.along(path)


def flat_disk(domain, V=(0.0, 0.0, -2.0)):
    """The spacelike plane: ``g = 0``, ``f = 1``."""
    return Immersion(phi_from_gf(holo.ZERO, holo.ONE, domain), np.asarray(V, dtype=float))


def frame_coords_of_immersion(values, frame):
    """Coordinates of immersion values in a Lorentz frame (for third-coordinate checks)."""
    return coords_in_frame(values, frame)


__all__ = [
    "WData", "Immersion", "PointClass", "phi_from_gf", "gf_from_phi", "rotate_frame",
    "lopez_ros", "min_twin", "conformal_factors", "classify_point", "classify_points",
    "immerse", "flat_disk", "check_conformal", "common_zero_free", "abs_g", "g_values",
    "surface_normal",
]
