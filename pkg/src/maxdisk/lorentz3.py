"""Lorentz-Minkowski 3-space primitives.

Points and vectors are plain ``numpy`` arrays whose last axis has length 3,
so every function below works on a single vector or on a stack of them.
The metric is ``dx1^2 + dx2^2 - dx3^2``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DifferentSheets, NotInB0, OnUnitCircle, PreconditionViolated

EXACT_TOL = 1e-12
COMPOSED_TOL = 1e-9

_SIG = np.array([1.0, 1.0, -1.0])


def lvec(x1, x2, x3):
    return np.array([x1, x2, x3], dtype=float)


def reflect(v):
    """The reflection (p1, p2, p3) -> (p1, p2, -p3)."""
    return np.asarray(v) * _SIG


def minkowski_inner(u, v):
    u = np.asarray(u)
    v = np.asarray(v)
    return u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1] - u[..., 2] * v[..., 2]


def minkowski_sq(v):
    return minkowski_inner(v, v)


def euclid_sq(v):
    v = np.asarray(v)
    return np.sum(v * v, axis=-1)


def euclid_norm(v):
    return np.sqrt(euclid_sq(v))


def lorentz_norm(v):
    """Signed norm ``sign(|v|^2) sqrt(||v|^2|)``."""
    sq = minkowski_sq(v)
    return np.sign(sq) * np.sqrt(np.abs(sq))


class CausalClass(enum.Enum):
    SPACELIKE = "spacelike"
    TIMELIKE = "timelike"
    LIGHTLIKE = "lightlike"


def causal_class(v, tol=0.0):
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        return CausalClass.SPACELIKE
    sq = float(minkowski_sq(v))
    if abs(sq) <= tol:
        return CausalClass.LIGHTLIKE
    return CausalClass.SPACELIKE if sq > 0 else CausalClass.TIMELIKE


@dataclass(frozen=True)
class Region:
    """The convex region B(r) lying below the level set ``||x|| = -r``."""

    r: float

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("B(r) needs r >= 0")

    def contains(self, p):
        return in_region(p, self)


def in_region(p, region):
    r = region.r if isinstance(region, Region) else float(region)
    p = np.asarray(p, dtype=float)
    return (lorentz_norm(p) < -r) & (p[..., 2] < -r)


def region_margin(p):
    """Largest r with p in the closure of B(r), i.e. ``-||p||`` for p below the cone."""
    p = np.asarray(p, dtype=float)
    sq = minkowski_sq(p)
    out = np.where((sq < 0) & (p[..., 2] < 0), np.sqrt(np.abs(sq)), -np.inf)
    return out


def hyperbolic_dist(p, q, tol=COMPOSED_TOL):
    """Intrinsic distance ``arccosh(-<p, q>)`` between points on one sheet of H^2."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.any(np.abs(minkowski_sq(p) + 1) > tol) or np.any(np.abs(minkowski_sq(q) + 1) > tol):
        raise PreconditionViolated("points must lie on H^2")
    if np.any(np.sign(p[..., 2]) != np.sign(q[..., 2])):
        raise DifferentSheets("points lie on different sheets of H^2")
    return np.arccosh(np.maximum(-minkowski_inner(p, q), 1.0))


def _hdist_unchecked(p, q):
    return np.arccosh(np.maximum(-minkowski_inner(p, q), 1.0))


def project_to_h2(v):
    """Normalise timelike vectors onto H^2 (keeping the sheet of ``v``)."""
    v = np.asarray(v, dtype=float)
    return v / np.sqrt(-minkowski_sq(v))[..., None]


def stereo(p):
    """Stereographic projection of H^2 from (0, 0, 1); returns complex (inf at the pole)."""
    p = np.asarray(p, dtype=float)
    den = 1.0 - p[..., 2]
    num = p[..., 0] + 1j * p[..., 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        w = num / den
    w = np.where(den == 0, complex(np.inf, 0.0), w)
    return w[()] if np.ndim(w) == 0 else w


def stereo_inv(w):
    """Inverse of :func:`stereo`; ``inf`` maps to (0, 0, 1)."""
    w = np.asarray(w, dtype=complex)
    inf = ~np.isfinite(w)
    m2 = np.where(inf, 0.0, np.abs(w) ** 2)
    if np.any(np.abs(m2[~inf] - 1.0) == 0.0):
        raise OnUnitCircle("|w| = 1 has no preimage on H^2")
    wf = np.where(inf, 0.0, w)
    d = m2 - 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        xy = -2.0 * wf / d
        x3 = (m2 + 1.0) / d
    out = np.stack([xy.real, xy.imag, x3], axis=-1)
    out[inf] = (0.0, 0.0, 1.0)
    return out


def gauss_from_g(g):
    """Point of H^2 whose stereographic image is ``g`` (the Lorentzian Gauss map)."""
    return stereo_inv(g)


def gauss_maps(p):
    """The maps N: B(0) -> H^2_+ and N0: B(0) -> S^2 at ``p``.

    N is the Lorentz normal to the level set ``b(-||p||)`` through ``p``,
    taken on the upper sheet: ``N = p / ||p||`` (the norm is negative here).
    N0 is the outward Euclidean unit normal ``J(p) / |p|``.
    """
    p = np.asarray(p, dtype=float)
    sq = minkowski_sq(p)
    if np.any(sq >= 0) or np.any(p[..., 2] >= 0):
        raise NotInB0("gauss_maps needs p strictly inside B(0)")
    n = p / lorentz_norm(p)[..., None]
    n0 = reflect(p) / euclid_norm(p)[..., None]
    return n, n0


def gauss_N(p):
    p = np.asarray(p, dtype=float)
    return p / lorentz_norm(p)[..., None]


@dataclass(frozen=True)
class Frame:
    """An ordered Lorentz-orthonormal basis: e1, e2 spacelike, e3 timelike."""

    e1: np.ndarray
    e2: np.ndarray
    e3: np.ndarray

    @property
    def matrix(self):
        """Columns are e1, e2, e3."""
        return np.column_stack([self.e1, self.e2, self.e3])

    def check(self, tol=EXACT_TOL):
        e = (self.e1, self.e2, self.e3)
        target = np.diag([1.0, 1.0, -1.0])
        gram = np.array([[minkowski_inner(a, b) for b in e] for a in e])
        return bool(np.all(np.abs(gram - target) <= tol))

    def to_dict(self):
        return {"e1": self.e1.tolist(), "e2": self.e2.tolist(), "e3": self.e3.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(*(np.asarray(d[k], dtype=float) for k in ("e1", "e2", "e3")))


IDENTITY_FRAME = Frame(lvec(1, 0, 0), lvec(0, 1, 0), lvec(0, 0, 1))


def _l_normalize(v):
    return v / np.sqrt(abs(minkowski_sq(v)))


def complete_frame(e3, parallel_threshold=0.9):
    """Deterministic Lorentz-orthonormal frame with prescribed timelike ``e3``.

    e1 is the Minkowski Gram-Schmidt projection of the first canonical axis,
    or of the second one when the first is nearly parallel to ``e3``
    (normalised Euclidean dot product above ``parallel_threshold``).
    """
    e3 = np.asarray(e3, dtype=float)
    if abs(minkowski_sq(e3) + 1) > COMPOSED_TOL or e3[2] <= 0:
        raise PreconditionViolated("e3 must lie on H^2_+")
    axis = lvec(1, 0, 0)
    if abs(axis @ e3) / np.linalg.norm(e3) > parallel_threshold:
        axis = lvec(0, 1, 0)
    e1 = _l_normalize(axis + minkowski_inner(axis, e3) * e3)
    e2 = reflect(np.cross(e3, e1))
    e2 = e2 - minkowski_inner(e2, e1) * e1 + minkowski_inner(e2, e3) * e3
    e2 = _l_normalize(e2)
    return Frame(e1, e2, e3)


def euclid_companion(frame):
    """Euclidean orthonormal triple sharing span(e1, e2), third vector on e3's side."""
    t3 = -reflect(frame.e3) / euclid_norm(frame.e3)
    t1 = frame.e1 / np.linalg.norm(frame.e1)
    t2 = frame.e2 - (frame.e2 @ t1) * t1
    t2 = t2 / np.linalg.norm(t2)
    # e1, e2 are Euclid-orthogonal to J(e3), so this is already orthonormal
    return Frame(t1, t2, t3)


def coords_in_frame(v, frame):
    """Coordinates (c1, c2, c3) with ``v = c1 e1 + c2 e2 + c3 e3``.

    Works for complex ``v`` as well (the pairing is bilinear).
    """
    v = np.asarray(v)
    c1 = minkowski_inner(v, frame.e1)
    c2 = minkowski_inner(v, frame.e2)
    c3 = -minkowski_inner(v, frame.e3)
    return np.stack([c1, c2, c3], axis=-1)


def from_frame_coords(c, frame):
    c = np.asarray(c)
    return c[..., 0:1] * frame.e1 + c[..., 1:2] * frame.e2 + c[..., 2:3] * frame.e3


def euclid_coords(v, triple):
    """Coordinates of ``v`` in a Euclidean orthonormal triple."""
    return np.asarray(v) @ triple.matrix


def shrink_check(p, v, t, tol=COMPOSED_TOL):
    """Return whether ``p + v`` lies in ``B(sqrt(t^2 - |v|^2))``.

    Preconditions: ``0 < |v| < t``, ``p`` in ``B(t)`` and ``v`` Euclid-orthogonal
    to ``N0(p)``.  Vectorised over leading axes of ``p`` and ``v``.
    """
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    x = euclid_norm(v)
    if np.any(x <= 0) or np.any(x >= t):
        raise PreconditionViolated("need 0 < |v| < t")
    if not np.all(in_region(p, Region(t))):
        raise PreconditionViolated("p must lie in B(t)")
    _, n0 = gauss_maps(p)
    if np.any(np.abs(np.sum(n0 * v, axis=-1)) > tol * np.maximum(1.0, x)):
        raise PreconditionViolated("v must be Euclid-orthogonal to N0(p)")
    return _in_region_r(p + v, np.sqrt(t * t - x * x))


def _in_region_r(p, r):
    return (lorentz_norm(p) < -r) & (p[..., 2] < -r)
