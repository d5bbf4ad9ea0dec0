"""The labyrinth inside a convex polygon.

Notation used throughout (indices are 0-based):

* ``P`` has ``ell`` sides and ``N`` is a multiple of ``ell``; each side is cut
  into ``m = 2N/ell`` equal parts by the points ``v[0..2N-1]``, and the same
  fractions on the parallel polygon ``P^{2/N}`` give ``v'``.  Wall ``i`` is the
  segment from ``v[i]`` to ``v'[i]``.
* ``G_q = P^{q/N^3}`` for ``q = 0..2N^2``.  Strip ``q`` lies between ``G_q`` and
  ``G_{q+1}``; even strips make up ``A``, odd strips make up ``Atilde``.
* Odd walls form ``B`` and are barriers inside even strips; even walls form
  ``Btilde`` and are barriers inside odd strips.  ``H`` is the union of the
  ``G_q`` with these barrier pieces.
* ``Omega`` keeps the points of the annulus at distance at least
  ``mu = 1/(4N^3)`` from ``H``.  Wall ``i`` together with the ``Omega``
  components it crosses is ``omega_i``; ``varpi_i`` is its ``delta``-neighbourhood.

Points are located with *band coordinates*: the depth ``t`` (distance to the
nearest side line, so ``P^t`` is the level set ``t = const``) and the
perimeter position ``sigma`` in units of one subdivision step, so that wall
``i`` is exactly the line ``sigma = i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import NTooSmall, OffsetDegenerate, PartitionFailed, PreconditionViolated
from .polygon import Polygon, segment_distance

TAGS = ("A", "Atilde", "R", "B", "Btilde", "L", "Ltilde", "H", "Omega")


@dataclass(frozen=True, eq=False)
class Labyrinth:
    P: Polygon
    N: int
    zeta0: float
    on_tol: float = 1e-12

    def __post_init__(self):
        P, N = self.P, self.N
        if not P.is_convex():
            raise PreconditionViolated("the labyrinth is built on convex polygons")
        if N <= 0 or N % P.n_sides:
            raise PreconditionViolated(f"N must be a positive multiple of {P.n_sides}")
        if not 2.0 / N < self.zeta0:
            raise NTooSmall(f"need 2/N < zeta0 (N={N}, zeta0={self.zeta0})")
        P.inward_offset(self.zeta0)  # raises OffsetDegenerate
        inner = P.inward_offset(self.depth)
        if not P.contains_polygon(inner, strict=True):
            raise OffsetDegenerate("inner polygon of the labyrinth is not nested")

    # -- basic quantities -----------------------------------------------------
    @property
    def ell(self):
        return self.P.n_sides

    @property
    def parts(self):
        """Subdivision steps per side."""
        return 2 * self.N // self.ell

    @property
    def n_walls(self):
        return 2 * self.N

    @property
    def n_levels(self):
        """Number of polygons ``G_q`` (``2N^2 + 1``)."""
        return 2 * self.N ** 2 + 1

    @property
    def step(self):
        """Offset between consecutive ``G_q``: ``1/N^3``."""
        return 1.0 / self.N ** 3

    @property
    def depth(self):
        """``2/N``: depth of the innermost polygon."""
        return 2.0 / self.N

    @property
    def mu(self):
        return 0.25 / self.N ** 3

    @cached_property
    def delta(self):
        """Neighbourhood radius for the ``varpi``.

        The gap between different ``omega`` is ``mu`` by construction (an
        ``omega`` component stops ``mu`` short of the next wall, and
        components in adjacent strips are ``2 mu`` apart), so a third of it
        keeps the closures disjoint.  The cap ``1/(8N^3)`` never binds.
        """
        return min(self.mu / 3.0, 0.125 / self.N ** 3)

    @cached_property
    def _normals(self):
        a, b = self.P.edges
        d = (b - a) / np.abs(b - a)
        return a, d, 1j * d  # side start, unit direction, inward normal

    @cached_property
    def _velocity(self):
        return self.P.vertex_velocities()

    def level_vertices(self, t):
        """Vertices of ``P^t`` (convex parallel polygon)."""
        return self.P.vertices + t * self._velocity

    def G(self, q):
        if not 0 <= q < self.n_levels:
            raise IndexError(q)
        return Polygon(self.level_vertices(q * self.step))

    @property
    def inner(self):
        return Polygon(self.level_vertices(self.depth))

    @property
    def P_zeta0(self):
        return self.P.inward_offset(self.zeta0)

    @cached_property
    def v(self):
        return self._subdivision(0.0)

    @cached_property
    def v_prime(self):
        return self._subdivision(self.depth)

    def _subdivision(self, t):
        verts = self.level_vertices(t)
        nxt = np.roll(verts, -1)
        frac = np.arange(self.parts) / self.parts
        return (verts[:, None] + frac[None, :] * (nxt - verts)[:, None]).ravel()

    def wall(self, i):
        return self.v[i % self.n_walls], self.v_prime[i % self.n_walls]

    def wall_piece(self, i, q):
        """Part of wall ``i`` inside strip ``q``."""
        a, b = self.wall(i)
        s0, s1 = q / (2 * self.N ** 2), (q + 1) / (2 * self.N ** 2)
        return a + s0 * (b - a), a + s1 * (b - a)

    @staticmethod
    def wall_in_B(i):
        """Odd walls belong to ``B`` (barriers in even strips)."""
        return i % 2 == 1

    # -- band coordinates -----------------------------------------------------
    def band_coords(self, z):
        """``(t, sigma)`` for points ``z``; ``sigma`` in ``[0, 2N)``."""
        z = np.asarray(z, dtype=complex)
        a, d, n = self._normals
        zf = z.reshape(-1, 1)
        dist = ((zf - a[None, :]) * n[None, :].conjugate()).real
        k = np.argmin(dist, axis=1)
        t = dist[np.arange(len(k)), k]
        verts = self.level_vertices(0.0)
        vel = self._velocity
        start = verts[k] + t * vel[k]
        end = verts[(k + 1) % self.ell] + t * vel[(k + 1) % self.ell]
        seg = end - start
        with np.errstate(invalid="ignore", divide="ignore"):
            u = ((zf[:, 0] - start) * seg.conjugate()).real / np.abs(seg) ** 2
        # the level polygon degenerates at the incentre, far outside the annulus
        u = np.clip(np.nan_to_num(u), 0.0, 1.0)
        sigma = (k + u) * self.parts
        return t.reshape(z.shape), np.mod(sigma, self.n_walls).reshape(z.shape)

    def band_to_plane(self, sigma, t):
        sigma = np.mod(np.asarray(sigma, dtype=float), self.n_walls)
        t = np.asarray(t, dtype=float)
        pos = sigma / self.parts
        k = np.minimum(np.floor(pos).astype(int), self.ell - 1)
        u = pos - k
        verts = self.level_vertices(0.0)
        vel = self._velocity
        start = verts[k] + t * vel[k]
        end = verts[(k + 1) % self.ell] + t * vel[(k + 1) % self.ell]
        return start + u * (end - start)

    # -- membership -----------------------------------------------------------
    def classify(self, z):
        """Vectorised membership.

        Returns a dict of boolean arrays keyed by :data:`TAGS` plus integer
        arrays ``omega`` and ``varpi`` holding the wall index of the
        ``omega_i`` / ``varpi_i`` containing each point (``-1`` for none).
        """
        z = np.asarray(z, dtype=complex)
        shape = z.shape
        z = z.ravel()
        N, h = self.N, self.step
        t, sigma = self.band_coords(z)
        tol = self.on_tol
        in_ann = (t >= -tol) & (t <= self.depth + tol)
        qf = t / h
        q = np.clip(np.floor(qf).astype(int), 0, 2 * N ** 2 - 1)
        # closed strips: points on G_q belong to strips q-1 and q
        near_level = np.abs(qf - np.rint(qf)) * h <= tol
        lev = np.rint(qf).astype(int)
        on_R = in_ann & near_level
        # closed strips: a point on G_lev lies in strips lev-1 and lev
        a_mask = in_ann & np.where(on_R, ((lev % 2 == 0) & (lev < 2 * N ** 2)) | (lev % 2 == 1),
                                   q % 2 == 0)
        at_mask = in_ann & np.where(on_R, (lev % 2 == 1) | ((lev % 2 == 0) & (lev > 0)),
                                    q % 2 == 1)
        # walls
        near_wall = np.rint(sigma).astype(int) % self.n_walls
        wall_d = self._wall_distance(z, near_wall)
        on_wall = in_ann & (wall_d <= tol)
        in_B = on_wall & (near_wall % 2 == 1)
        in_Bt = on_wall & (near_wall % 2 == 0)
        in_L = in_B & a_mask
        in_Lt = in_Bt & at_mask
        in_H = on_R | in_L | in_Lt
        # Omega: distance to H at least mu inside the open annulus
        dH = self.distance_to_H(z, t=t, sigma=sigma)
        in_Omega = (t > 0) & (t < self.depth) & (dH >= self.mu)
        # omega_i: wall i plus Omega components in strips where wall i is not a barrier
        omega = np.full(z.shape, -1, dtype=int)
        comp_idx = self._cell_index(sigma, q)
        omega[in_Omega] = comp_idx[in_Omega]
        omega[on_wall] = near_wall[on_wall]
        varpi = self._varpi_index(z, t, sigma, q, dH)
        out = {"A": a_mask, "Atilde": at_mask, "R": on_R, "B": in_B, "Btilde": in_Bt,
               "L": in_L, "Ltilde": in_Lt, "H": in_H, "Omega": in_Omega,
               "omega": omega, "varpi": varpi}
        return {k: v.reshape(shape) for k, v in out.items()}

    def membership(self, z):
        """Tag set for a single point, e.g. ``{"A", "B", "L", "H", "omega:3", "varpi:3"}``."""
        c = self.classify(np.array([z]))
        tags = {k for k in TAGS if c[k][0]}
        if c["omega"][0] >= 0:
            tags.add(f"omega:{c['omega'][0]}")
        if c["varpi"][0] >= 0:
            tags.add(f"varpi:{c['varpi'][0]}")
        return tags

    def _cell_index(self, sigma, q):
        """Index of the non-barrier wall of strip ``q`` closest to ``sigma``.

        Barriers of strip ``q`` have the parity of ``q + 1``, so the cells of
        that strip are the intervals ``(i - 1, i + 1)`` around walls ``i`` with
        the parity of ``q``.
        """
        p = q % 2
        return (2 * np.rint((sigma - p) / 2.0).astype(int) + p) % self.n_walls

    def _wall_distance(self, z, idx):
        a = self.v[idx]
        b = self.v_prime[idx]
        return segment_distance(z, a, b)

    def distance_to_H(self, z, t=None, sigma=None):
        """Euclidean distance to ``H`` for points of the closed annulus.

        Only the two levels bounding the point's strip and the barrier walls
        of that strip can be nearest: every other part of ``H`` lies beyond
        one of those two levels.  Points outside the annulus get 0.
        """
        z = np.asarray(z, dtype=complex).ravel()
        if t is None:
            t, sigma = self.band_coords(z)
        N, h = self.N, self.step
        q = np.clip(np.floor(t / h).astype(int), 0, 2 * N ** 2 - 1)
        d_out = t - q * h  # distance to G_q from inside (convex)
        d_in = self._dist_to_level_from_outside(z, (q + 1) * h)
        d = np.minimum(d_out, d_in)
        # barrier walls of strip q have parity opposite to q's parity... see module doc
        parity = (q + 1) % 2
        lo = np.floor(sigma).astype(int)
        left = np.where(lo % 2 == parity, lo, lo - 1)
        for w in (left, left + 2):
            widx = np.mod(w, self.n_walls)
            s0 = q / (2 * N ** 2)
            s1 = (q + 1) / (2 * N ** 2)
            a, b = self.v[widx], self.v_prime[widx]
            pa, pb = a + s0 * (b - a), a + s1 * (b - a)
            d = np.minimum(d, segment_distance(z, pa, pb))
        outside = (t < 0) | (t > self.depth)
        d = np.where(outside, 0.0, np.maximum(d, 0.0))
        return d

    def _dist_to_level_from_outside(self, z, tq):
        verts = self.P.vertices[None, :] + tq[:, None] * self._velocity[None, :]
        nxt = np.roll(verts, -1, axis=1)
        return np.min(segment_distance(z[:, None], verts, nxt), axis=1)

    def _varpi_index(self, z, t, sigma, q, dH):
        """``varpi_i``: ``delta``-tube of wall ``i`` or the slightly fattened components.

        A component of ``Omega`` is ``{dist_H >= mu}`` restricted to one cell;
        its ``delta``-neighbourhood is contained in ``{dist_H > mu - delta}``
        on the same cell, which is what is used here (it exceeds the exact
        neighbourhood by at most a few ``delta`` near corners and keeps the
        ``2 mu - 2 delta`` separation between different indices).
        """
        out = np.full(z.shape, -1, dtype=int)
        comp = self._cell_index(sigma, q)
        inside = (t > 0) & (t < self.depth)
        fat = inside & (dH > self.mu - self.delta)
        out[fat] = comp[fat]
        near = np.rint(sigma).astype(int) % self.n_walls
        for cand in (near, near - 1, near + 1):
            c = np.mod(cand, self.n_walls)
            tube = self._wall_distance(z, c) < self.delta
            out[tube] = c[tube]
        return out

    # -- sampling helpers -------------------------------------------------------
    def sample_cells(self, i, per_strip=(5, 5), include_wall=64):
        """Points of ``omega_i``: a band-coordinate lattice in each of its cells plus the wall."""
        N, h = self.N, self.step
        nu, nt = per_strip
        qs = np.arange(i % 2, 2 * N ** 2, 2)
        su = np.linspace(-1.0, 1.0, nu + 2)[1:-1] * (1 - 1e-9)
        st = (np.arange(nt) + 0.5) / nt
        S, Q, T = np.meshgrid(su, qs, st, indexing="ij")
        sig = i + S.ravel()
        tt = (Q.ravel() + T.ravel()) * h
        pts = self.band_to_plane(sig, tt)
        a, b = self.wall(i)
        wall = a + (b - a) * np.linspace(0, 1, include_wall)
        return np.concatenate([pts, wall])

    def sample_omega(self, i, per_strip=(5, 5), include_wall=64):
        pts = self.sample_cells(i, per_strip, include_wall)
        return pts[self.classify(pts)["omega"] == i]

    def sample_varpi(self, i, per_strip=(7, 7), include_wall=64):
        pts = self.sample_cells(i, per_strip, include_wall)
        a, b = self.wall(i)
        n = 1j * (b - a) / abs(b - a)
        s = np.linspace(0, 1, include_wall)
        tube = np.concatenate([a + (b - a) * s + e * self.delta * n for e in (-0.9, 0.9)])
        pts = np.concatenate([pts, tube])
        return pts[self.classify(pts)["varpi"] == i]

    # -- diameters ---------------------------------------------------------------
    def omega_hull_points(self, i):
        """Points whose convex hull contains ``omega_i`` (cell corners in band coordinates)."""
        sig = np.array([i - 1, i, i + 1], dtype=float)
        # the band map is bilinear on each side, so cell corners and the corner
        # lines (where sigma crosses a vertex) bound the hull
        verts_sig = np.arange(0, self.n_walls + 1, self.parts)
        extra = verts_sig[(verts_sig > i - 1) & (verts_sig < i + 1)]
        sig = np.concatenate([sig, extra])
        S, T = np.meshgrid(sig, [0.0, self.depth])
        return self.band_to_plane(S.ravel(), T.ravel())

    def diam_varpi(self, i):
        """Upper bound for ``diam(varpi_i)``: hull diameter of ``omega_i`` plus ``2 delta``."""
        p = self.omega_hull_points(i)
        return float(np.max(np.abs(p[:, None] - p[None, :]))) + 2 * self.delta

    def diam_varpi_all(self):
        return np.array([self.diam_varpi(i) for i in range(self.n_walls)])

    # -- exact geometry for small N ------------------------------------------------
    def shapely_sets(self, resolution=16):
        """Shapely geometries of ``H``, ``Omega`` and every ``omega_i`` (small N only)."""
        import shapely
        from shapely.geometry import LineString
        from shapely.ops import unary_union

        lines = []
        for q in range(self.n_levels):
            v = self.level_vertices(q * self.step)
            lines.append(LineString(np.column_stack([np.append(v, v[0]).real, np.append(v, v[0]).imag])))
        for q in range(2 * self.N ** 2):
            for i in range(self.n_walls):
                if i % 2 != q % 2:
                    a, b = self.wall_piece(i, q)
                    lines.append(LineString([(a.real, a.imag), (b.real, b.imag)]))
        H = unary_union(lines)
        annulus = self.P.shapely.difference(self.inner.shapely)
        omega_region = annulus.difference(H.buffer(self.mu, quad_segs=resolution))
        comps = list(getattr(omega_region, "geoms", [omega_region]))
        omegas = []
        for i in range(self.n_walls):
            a, b = self.wall(i)
            seg = LineString([(a.real, a.imag), (b.real, b.imag)])
            mine = [c for c in comps if c.intersects(seg)]
            omegas.append(unary_union([seg] + mine))
        return {"H": H, "Omega": omega_region, "components": comps, "omega": omegas,
                "shapely": shapely}

    def summary(self):
        d = self.diam_varpi_all()
        return {
            "N": self.N,
            "ell": self.ell,
            "zeta0": self.zeta0,
            "n_walls": self.n_walls,
            "n_levels": self.n_levels,
            "n_omega": self.n_walls,
            "mu": self.mu,
            "delta": self.delta,
            "max_diam_varpi": float(d.max()),
            "max_diam_varpi_times_N": float(d.max() * self.N),
        }


def build_labyrinth(P: Polygon, N: int, zeta0: float) -> Labyrinth:
    return Labyrinth(P, N, zeta0)


def inward_offset(P: Polygon, xi: float, reference=None) -> Polygon:
    return P.inward_offset(xi, reference)


# ---------------------------------------------------------------------------
# estimates against an immersion
# ---------------------------------------------------------------------------

@dataclass
class DiamReport:
    diam_euclid: np.ndarray
    diam_gauss: np.ndarray
    I0: list
    J0: list
    abs_g_range: list = field(default_factory=list)

    def to_dict(self):
        return {
            "diam_euclid": self.diam_euclid.tolist(),
            "diam_gauss": self.diam_gauss.tolist(),
            "max_diam_euclid": float(np.max(self.diam_euclid)),
            "max_diam_gauss": float(np.max(self.diam_gauss)),
            "I0": self.I0,
            "J0": self.J0,
        }


def _h2_diameter(pts):
    from .lorentz3 import minkowski_inner

    if len(pts) > 600:
        pts = pts[np.linspace(0, len(pts) - 1, 600).astype(int)]
    g = -minkowski_inner(pts[:, None, :], pts[None, :, :])
    return float(np.max(np.arccosh(np.maximum(g, 1.0))))


def diam_estimates(lab: Labyrinth, X, margin=0.05, per_strip=(3, 3)):
    """Euclidean and Gauss-image diameters of each ``varpi_i`` and the ``I0/J0`` split.

    ``j`` goes to ``I0`` when ``||g| - 1| > margin`` on the samples of
    ``varpi_j``; otherwise to ``J0`` when ``|g| < 1/margin`` there.
    """
    from .lorentz3 import gauss_N, in_region, Region
    from .weierstrass import abs_g

    de, dg, I0, J0, ranges = [], [], [], [], []
    for i in range(lab.n_walls):
        pts = lab.sample_varpi(i, per_strip)
        de.append(lab.diam_varpi(i))
        xs = X(pts)
        if np.all(in_region(xs, Region(0.0))):
            dg.append(_h2_diameter(gauss_N(xs)))
        else:
            dg.append(np.inf)
        ag = abs_g(X.wdata, pts)
        lo, hi = float(np.min(ag)), float(np.max(ag))
        ranges.append([lo, hi])
        if np.all(np.abs(ag - 1.0) > margin):
            I0.append(i)
        elif hi < 1.0 / margin:
            J0.append(i)
        else:
            raise PartitionFailed(f"neither |g| != 1 nor g finite is certifiable on varpi_{i}")
    return DiamReport(np.array(de), np.array(dg), I0, J0, ranges)
