"""Zero-free holomorphic functions close to 1 on one set and to alpha on another.

``h = exp(w)`` where ``w`` is a polynomial (stored through its Arnoldi
recurrence) plus simple poles outside the domain, fitted by weighted and
regularised least squares to ``log(alpha)`` on the target set and ``0`` on the
rest of the domain away from a protective neighbourhood.  The fit is never
trusted: every result is certified on an independent, denser point set.

The construction only makes sense when the complement of
``target U (domain minus neighbourhood)`` is connected, i.e. when the
neighbourhood opens to the outside of the domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import holo
from .errors import FitFailed

DEFAULT_LADDER = ((16, 8), (32, 16), (64, 32), (128, 64), (256, 128))


# ---------------------------------------------------------------------------
# point sets
# ---------------------------------------------------------------------------

class PlaneSet:
    """Interface: ``contains(z)``, ``sample(spacing)`` and a ``feature_size``."""

    feature_size = 0.0

    def contains(self, z):
        raise NotImplementedError

    def sample(self, spacing, shift=0.0):
        raise NotImplementedError

    def boundary_sample(self, spacing):
        """Points on the boundary of the set (empty when not available)."""
        return np.zeros(0, dtype=complex)

    def local_lattice(self, spacing, shift=0.0):
        """A lattice around the set, used to resolve its surroundings finely."""
        return np.zeros(0, dtype=complex)

    @property
    def is_empty(self):
        return False


class EmptySet(PlaneSet):
    def contains(self, z):
        return np.zeros(np.shape(z), dtype=bool)

    def sample(self, spacing, shift=0.0):
        return np.zeros(0, dtype=complex)

    @property
    def is_empty(self):
        return True


@dataclass(frozen=True)
class DiskSet(PlaneSet):
    center: complex
    radius: float
    closed: bool = True

    @property
    def feature_size(self):
        return self.radius

    def contains(self, z):
        d = np.abs(np.asarray(z) - self.center)
        return d <= self.radius if self.closed else d < self.radius

    def sample(self, spacing, shift=0.0):
        n = int(np.ceil(2 * self.radius / spacing)) + 1
        g = (np.arange(n) + shift % 1.0) * spacing - self.radius
        z = self.center + (g[None, :] + 1j * g[:, None]).ravel()
        # pulled in by a rounding margin so that closed-set membership holds exactly
        ring = self.center + self.radius * (1 - 1e-12) * np.exp(
            2j * np.pi * (np.arange(max(16, int(2 * np.pi * self.radius / spacing))) + shift)
            / max(16, int(2 * np.pi * self.radius / spacing)))
        z = np.concatenate([z[self.contains(z)], ring])
        return z

    def local_lattice(self, spacing, shift=0.0):
        r = 1.5 * self.radius
        n = int(np.ceil(2 * r / spacing)) + 1
        g = (np.arange(n) + shift) * spacing - r
        return self.center + (g[None, :] + 1j * g[:, None]).ravel()

    def boundary_sample(self, spacing):
        n = max(16, int(np.ceil(2 * np.pi * self.radius / spacing)))
        return self.center + self.radius * np.exp(2j * np.pi * (np.arange(n) + 0.5) / n)


@dataclass(frozen=True, eq=False)
class PolygonSet(PlaneSet):
    """The closed (or open) region bounded by a polygon."""

    polygon: object
    closed: bool = True

    @property
    def feature_size(self):
        p = self.polygon
        return float(2 * p.area / p.perimeter)

    def contains(self, z):
        return self.polygon.contains(np.asarray(z), closed=self.closed)

    def sample(self, spacing, shift=0.0):
        x0, x1, y0, y1 = self.polygon.bbox()
        xs = np.arange(x0 + (shift % 1.0) * spacing, x1 + 1e-15, spacing)
        ys = np.arange(y0 + (shift % 1.0) * spacing, y1 + 1e-15, spacing)
        z = (xs[None, :] + 1j * ys[:, None]).ravel()
        z = np.concatenate([z[self.contains(z)], self.polygon.sample_boundary(spacing)])
        return z[self.contains(z)]

    def boundary_sample(self, spacing):
        return self.polygon.sample_boundary(spacing)


@dataclass(frozen=True)
class LabyrinthOmega(PlaneSet):
    lab: object
    index: int

    @property
    def feature_size(self):
        return self.lab.delta

    def contains(self, z):
        return self.lab.classify(z)["omega"] == self.index

    def sample(self, spacing, shift=0.0, budget=200_000):
        lab = self.lab
        cell_len = lab.P.perimeter / lab.n_walls
        nu = min(64, max(3, int(np.ceil(2 * cell_len / spacing))))
        nt = min(4, max(2, int(np.ceil(lab.step / (2 * spacing)))))
        while nu * nt * lab.N ** 2 > budget and nu > 3:
            nu = max(3, nu // 2)
        n_wall = min(4096, int(lab.depth / spacing) + 2)
        pts = lab.sample_cells(self.index, (nu, nt), include_wall=n_wall)
        if shift:
            pts = pts + shift * spacing * (0.3 + 0.2j)
        return pts[self.contains(pts)]


@dataclass(frozen=True)
class LabyrinthVarpi(PlaneSet):
    lab: object
    index: int

    @property
    def feature_size(self):
        return self.lab.delta

    def contains(self, z):
        return self.lab.classify(z)["varpi"] == self.index

    def sample(self, spacing, shift=0.0, budget=200_000):
        lab = self.lab
        pts = LabyrinthOmega(lab, self.index).sample(spacing, shift, budget)
        a, b = lab.wall(self.index)
        n = min(4096, max(16, int(np.ceil(abs(b - a) / spacing))))
        normal = 1j * (b - a) / abs(b - a)
        line = a + (b - a) * (np.arange(n) + 0.5) / n
        tube = np.concatenate([line + e * lab.delta * normal for e in (-0.9, -0.5, 0.5, 0.9)])
        pts = np.concatenate([pts, tube])
        return pts[self.contains(pts)]

    def boundary_sample(self, spacing):
        """Points just outside the tube around the wall (the narrow part of the boundary)."""
        a, b = self.lab.wall(self.index)
        n = min(8192, max(16, int(np.ceil(abs(b - a) / spacing))))
        normal = 1j * (b - a) / abs(b - a)
        line = a + (b - a) * (np.arange(n) + 0.5) / n
        return np.concatenate([line + e * 1.05 * self.lab.delta * normal for e in (-1, 1)])


# ---------------------------------------------------------------------------
# request / certificate
# ---------------------------------------------------------------------------

@dataclass
class RungeRequest:
    alpha: float
    omega: PlaneSet
    varpi: PlaneSet
    domain: object
    resolution: int = 512
    fit_resolution: int = 128
    ladder: tuple = DEFAULT_LADDER
    regularization: float = 1e-10
    lawson_steps: int = 8
    max_fit_points: int = 40_000

    def __post_init__(self):
        if not self.alpha >= 2:
            raise ValueError("alpha must be at least 2")


@dataclass
class RungeCertificate:
    alpha: float
    sup_err_off: float
    sup_err_on: float
    n_off: int
    n_on: int
    resolution: int
    passed: bool = field(init=False)

    def __post_init__(self):
        bound = 1.0 / self.alpha
        self.passed = bool(self.sup_err_off < bound and self.sup_err_on < bound)

    def to_dict(self):
        return {
            "alpha": self.alpha, "sup_err_off": self.sup_err_off, "sup_err_on": self.sup_err_on,
            "n_off": self.n_off, "n_on": self.n_on, "resolution": self.resolution,
            "bound": 1.0 / self.alpha, "passed": self.passed,
        }


def _lattice(domain, resolution, shift):
    x0, x1, y0, y1 = domain.bbox()
    xs = x0 + (x1 - x0) * (np.arange(resolution) + shift) / (resolution - 1 + 2 * shift)
    ys = y0 + (y1 - y0) * (np.arange(resolution) + shift) / (resolution - 1 + 2 * shift)
    z = (xs[None, :] + 1j * ys[:, None]).ravel()
    return z[domain.contains(z, closed=True)]


def certification_points(req, resolution):
    """Closed-domain lattice plus boundary; split into off-neighbourhood and target points."""
    dom = req.domain
    z = _lattice(dom, resolution, 0.0)
    x0, x1, y0, y1 = dom.bbox()
    h = max(x1 - x0, y1 - y0) / (resolution - 1)
    z = np.concatenate([z, dom.sample_boundary(h / 2)])
    off = z[~req.varpi.contains(z)]
    on = z[req.omega.contains(z)] if not req.omega.is_empty else np.zeros(0, complex)
    if not req.omega.is_empty:
        on = np.concatenate([on, req.omega.sample(h / 2, shift=0.5)])
    return off, on


def fit_points(req):
    """Least-squares points: a coarse lattice plus fine samples where it matters.

    Only the coarse lattice is thinned to honour ``max_fit_points``; the fine
    samples (domain boundary, neighbourhood boundary and its surroundings)
    carry the hard part of the fit and are kept whenever they fit the budget.
    """
    dom = req.domain
    coarse = _lattice(dom, req.fit_resolution, 0.371)
    x0, x1, y0, y1 = dom.bbox()
    h = max(x1 - x0, y1 - y0) / req.fit_resolution
    fine = min(h / 2, req.omega.feature_size / 8) if req.omega.feature_size > 0 else h / 2
    detail = np.concatenate([_midpoint_boundary(dom, max(min(h / 3, fine), dom.perimeter / 8192)),
                             req.varpi.boundary_sample(fine), req.varpi.local_lattice(fine, 0.371)])
    detail = detail[dom.contains(detail, closed=True) & ~req.varpi.contains(detail)]
    coarse = coarse[~req.varpi.contains(coarse)]
    half = req.max_fit_points // 2
    detail = _thin(detail, half - half // 4)
    off = np.concatenate([_thin(coarse, half - detail.size), detail])
    on = np.concatenate([req.omega.sample(fine, shift=0.0), req.omega.boundary_sample(fine)])
    return off, _thin(on, half)


def _thin(z, n):
    """At most ``n`` points, evenly strided (deterministic)."""
    if z.size <= n:
        return z
    return z[np.linspace(0, z.size - 1, n).round().astype(int)]


def _midpoint_boundary(dom, spacing):
    """Boundary samples strictly between the vertices (never the certification points)."""
    pts = []
    a, b = dom.edges
    for p, q in zip(a, b):
        n = max(1, int(np.ceil(abs(q - p) / spacing)))
        pts.append(p + (q - p) * (np.arange(n) + 0.5 + 1e-3) / n)
    return np.concatenate(pts)


def certify(h, req: RungeRequest, resolution=None) -> RungeCertificate:
    resolution = req.resolution if resolution is None else resolution
    off, on = certification_points(req, resolution)
    e_off = float(np.max(np.abs(_eval_chunked(h, off) - 1.0))) if off.size else 0.0
    e_on = float(np.max(np.abs(_eval_chunked(h, on) - req.alpha))) if on.size else 0.0
    return RungeCertificate(req.alpha, e_off, e_on, int(off.size), int(on.size), resolution)


def _eval_chunked(f, z, chunk=1 << 16):
    out = np.empty(z.shape, dtype=complex)
    for s in range(0, z.size, chunk):
        out[s:s + chunk] = f(z[s:s + chunk])
    return out


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------

def pole_locations(req: RungeRequest, n_poles, rng_shift=0.0):
    """Poles outside the domain where the neighbourhood meets the boundary.

    They sit on outward normals at distances from 0.5 to 2 times the
    feature size, spread along the part of the boundary inside ``varpi``
    (widened by a few feature sizes).
    """
    if n_poles <= 0:
        return np.zeros(0, dtype=complex)
    dom = req.domain
    lfs = max(req.omega.feature_size, 1e-12)
    per = dom.perimeter
    bnd = dom.sample_boundary(min(lfs / 4, per / 4096))
    inside = req.varpi.contains(bnd)
    if not np.any(inside):
        # fall back: boundary points nearest to the target samples
        tgt = req.omega.sample(max(lfs, per / 512))
        if tgt.size == 0:
            return np.zeros(0, dtype=complex)
        d = np.min(np.abs(bnd[:, None] - tgt[None, :]), axis=1) if tgt.size < 5000 else \
            np.abs(bnd - tgt.mean())
        inside = d <= d.min() + 2 * lfs
    idx = np.flatnonzero(inside)
    base = bnd[idx]
    # outward normals from the closest edge
    a, b = dom.edges
    from .polygon import segment_distance

    dist = segment_distance(base[:, None], a[None, :], b[None, :])
    k = np.argmin(dist, axis=1)
    normal = -1j * (b[k] - a[k]) / np.abs(b[k] - a[k])
    # a pole must be farther from the unprotected boundary than from its own site,
    # otherwise |h - 1| blows up on the boundary right next to it
    free = bnd[~inside]
    clear = np.min(np.abs(base[:, None] - free[None, :]), axis=1) if free.size else \
        np.full(base.size, np.inf)
    n_sites = max(1, n_poles // 4)
    radii = lfs * np.geomspace(0.5, 2.0, max(1, n_poles // n_sites))
    ok = clear >= 3 * radii[0]
    if not np.any(ok):
        return np.zeros(0, dtype=complex)
    base, normal, clear = base[ok], normal[ok], clear[ok]
    pick = np.linspace(0, len(base) - 1, n_sites).round().astype(int)
    poles = base[pick][:, None] + normal[pick][:, None] * radii[None, :]
    keep = clear[pick][:, None] >= 3 * radii[None, :]
    return poles[keep][:n_poles]


def fit_w(req, degree, n_poles, off, on):
    """Weighted least-squares fit of ``w``; returns the closed form and fit residuals."""
    alpha = req.alpha
    dom = req.domain
    z = np.concatenate([off, on])
    target = np.concatenate([np.zeros(off.size), np.full(on.size, np.log(alpha))]).astype(complex)
    # errors in h are about |dw| off the target and alpha |dw| on it
    scale_rows = np.concatenate([np.ones(off.size), np.full(on.size, alpha)])
    center = dom.centroid
    radius = float(np.max(np.abs(dom.vertices - center)))
    H, Q = holo.ArnoldiPoly.fit_basis(z, degree, center, radius)
    poles = pole_locations(req, n_poles)
    if len(poles):
        pc = 1.0 / (z[:, None] - poles[None, :])
        A = np.concatenate([Q, pc], axis=1)
    else:
        A = Q
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0] = 1.0
    An = A / norms
    weights = np.ones(z.size)
    best = None
    for _ in range(max(1, req.lawson_steps)):
        rw = np.sqrt(weights) * scale_rows
        M = np.concatenate([An * rw[:, None], req.regularization * np.eye(An.shape[1])])
        rhs = np.concatenate([target * rw, np.zeros(An.shape[1])])
        c, *_ = np.linalg.lstsq(M, rhs, rcond=None)
        res = np.abs(An @ c - target) * scale_rows
        err = float(np.max(res))
        if best is None or err < best[0]:
            best = (err, c)
        weights = weights * (res + 1e-300)
        weights = weights / weights.sum()
    c = best[1] / norms
    poly = holo.ArnoldiPoly(H, c[: degree + 1], center, radius)
    w = holo.add(poly, holo.Rational([0.0], [(p, [cp]) for p, cp in zip(poles, c[degree + 1:])]))
    return w, best[0]


@dataclass
class RungeResult:
    h: holo.HoloFn
    certificate: RungeCertificate
    degree: int
    n_poles: int
    history: list

    def to_dict(self):
        return {"degree": self.degree, "n_poles": self.n_poles,
                "certificate": self.certificate.to_dict(), "history": self.history}


def build_runge(req: RungeRequest, quick_resolution=256) -> RungeResult:
    """Fit, certify and escalate along the basis-size ladder.

    Raises :class:`FitFailed` (carrying the best certificate) when even the
    largest basis fails.
    """
    if req.omega.is_empty:
        cert = certify(holo.ONE, req)
        return RungeResult(holo.ONE, cert, 0, 0, [])
    off, on = fit_points(req)
    history = []
    best = None
    for degree, n_poles in req.ladder:
        w, fit_err = fit_w(req, degree, n_poles, off, on)
        h = holo.exp(w)
        quick = certify(h, req, min(quick_resolution, req.resolution))
        entry = {"degree": degree, "n_poles": n_poles, "fit_err": fit_err,
                 "quick": quick.to_dict()}
        history.append(entry)
        score = max(quick.sup_err_off, quick.sup_err_on)
        if best is None or score < best[0]:
            best = (score, h, quick, degree, n_poles)
        if not quick.passed:
            continue
        cert = certify(h, req)
        entry["full"] = cert.to_dict()
        if cert.passed:
            return RungeResult(h, cert, degree, n_poles, history)
    err = FitFailed(f"Runge certificate failed up to degree {req.ladder[-1][0]} with "
                    f"{req.ladder[-1][1]} poles (best sup error {best[0]:.3g} vs bound {1 / req.alpha:.3g})")
    err.certificate = best[2]
    err.history = history
    raise err
