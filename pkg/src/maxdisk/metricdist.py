"""Geodesic distance for conformal metrics ``lambda^2 |dz|^2`` on structured grids.

A grid is a 2-D array of node positions (complex) with a validity mask.
Nodes are joined to their 8 index-neighbours; an edge costs the trapezoid
rule for ``lambda`` times the Euclidean length of the edge.  Two layouts are
provided: a uniform lattice clipped to a polygon, and a periodic band grid
that follows the parallel polygons of a convex polygon (rows are levels
``P^t``, columns are perimeter positions), which allows extremely thin rows
near a labyrinth without paying for them everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
from scipy.interpolate import RegularGridInterpolator
from skimage import measure

from .errors import EmptySource, LevelSetNotSeparating, PathLeavesDomain, QOutsideK
from .polygon import Polygon, convex_hull

_NEIGH = np.array([(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)],
                  dtype=np.int64)


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class UniformGrid:
    """Square lattice of the given spacing clipped to a closed polygon."""

    domain: Polygon
    spacing: float

    def __post_init__(self):
        x0, x1, y0, y1 = self.domain.bbox()
        h = self.spacing
        nx = int(np.floor((x1 - x0) / h + 1e-9)) + 1
        ny = int(np.floor((y1 - y0) / h + 1e-9)) + 1
        self.x = x0 + h * np.arange(nx)
        self.y = y0 + h * np.arange(ny)
        self.pos = self.x[None, :] + 1j * self.y[:, None]
        self.mask = self.domain.contains(self.pos, closed=True, tol=1e-9 * h)
        self.periodic = False

    @property
    def shape(self):
        return self.pos.shape

    def interp(self, values, z, fill=np.nan):
        """Bilinear interpolation of node values (outside nodes must be finite-filled)."""
        f = RegularGridInterpolator((self.y, self.x), values, bounds_error=False, fill_value=fill)
        z = np.asarray(z, dtype=complex)
        return f(np.column_stack([z.imag.ravel(), z.real.ravel()])).reshape(z.shape)

    def to_index(self, z):
        z = np.asarray(z, dtype=complex)
        return (z.imag - self.y[0]) / self.spacing, (z.real - self.x[0]) / self.spacing

    def index_to_plane(self, rows, cols):
        return self.x[0] + self.spacing * np.asarray(cols) + 1j * (self.y[0] + self.spacing * np.asarray(rows))


@dataclass(eq=False)
class BandGrid:
    """Nodes at band coordinates ``(sigma_j, t_i)`` of a labyrinth-like band.

    ``mapper`` must provide ``band_to_plane(sigma, t)`` and ``band_coords(z)``
    and a period ``n_walls`` in ``sigma`` (a :class:`~maxdisk.labyrinth.Labyrinth`
    does).  Columns wrap around periodically.
    """

    mapper: object
    t: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.sigma = np.asarray(self.sigma, dtype=float)
        S, T = np.meshgrid(self.sigma, self.t)
        self.pos = self.mapper.band_to_plane(S, T)
        self.mask = np.ones(self.pos.shape, dtype=bool)
        self.periodic = True
        self.spacing = float(np.min(np.diff(self.t)))

    @property
    def shape(self):
        return self.pos.shape

    def interp(self, values, z, fill=np.nan):
        t, s = self.mapper.band_coords(np.asarray(z, dtype=complex))
        period = self.mapper.n_walls
        sig = np.append(self.sigma, self.sigma[0] + period)
        vals = np.concatenate([values, values[:, :1]], axis=1)
        f = RegularGridInterpolator((self.t, sig), vals, bounds_error=False, fill_value=fill)
        s = np.where(s < self.sigma[0], s + period, s)
        return f(np.column_stack([np.ravel(t), np.ravel(s)])).reshape(np.shape(z))


def refined_sigma(lab, offsets_len, coarse_per_unit=2):
    """Column positions: coarse points per unit plus length offsets around every wall."""
    period = lab.n_walls
    unit_len = lab.P.perimeter / period  # length of one sigma unit on P (upper bound inside)
    cols = [np.arange(period * coarse_per_unit) / coarse_per_unit]
    for off in offsets_len:
        cols.append(np.arange(period) + off / unit_len)
    s = np.mod(np.concatenate(cols), period)
    return np.unique(np.round(s, 15))


def labyrinth_band_grid(lab, t_max, fine=None, coarse_rows=64, offsets_mult=(0.5, 1.0, 2.0)):
    """Band grid with rows every ``fine`` (default ``mu/2``) across the labyrinth.

    Below the labyrinth (``2/N < t <= t_max``) rows are uniform and coarse.
    Columns include every wall exactly and the offsets ``+-k mu`` around it.
    """
    fine = lab.mu / 2 if fine is None else fine
    n_fine = int(round(lab.depth / fine))
    t_lab = np.linspace(0.0, lab.depth, n_fine + 1)
    t_rest = np.linspace(lab.depth, t_max, coarse_rows + 1)[1:] if t_max > lab.depth else []
    t = np.concatenate([t_lab, t_rest])
    offs = [0.0]
    for k in offsets_mult:
        offs += [k * lab.mu, -k * lab.mu]
    return BandGrid(lab, t, refined_sigma(lab, offs))


# ---------------------------------------------------------------------------
# shortest paths
# ---------------------------------------------------------------------------

@numba.njit(cache=True)
def _heap_push(hd, hi, size, d, i):
    k = size
    hd[k] = d
    hi[k] = i
    while k > 0:
        p = (k - 1) >> 1
        if hd[p] < hd[k] or (hd[p] == hd[k] and hi[p] < hi[k]):
            break
        hd[p], hd[k] = hd[k], hd[p]
        hi[p], hi[k] = hi[k], hi[p]
        k = p
    return size + 1


@numba.njit(cache=True)
def _heap_pop(hd, hi, size):
    d = hd[0]
    i = hi[0]
    size -= 1
    hd[0] = hd[size]
    hi[0] = hi[size]
    k = 0
    while True:
        l = 2 * k + 1
        r = l + 1
        m = k
        if l < size and (hd[l] < hd[m] or (hd[l] == hd[m] and hi[l] < hi[m])):
            m = l
        if r < size and (hd[r] < hd[m] or (hd[r] == hd[m] and hi[r] < hi[m])):
            m = r
        if m == k:
            break
        hd[m], hd[k] = hd[k], hd[m]
        hi[m], hi[k] = hi[k], hi[m]
        k = m
    return d, i, size


@numba.njit(cache=True)
def _dijkstra(px, py, lam, mask, init, periodic, neigh, pred):
    ny, nx = lam.shape
    n = ny * nx
    dist = np.full(n, np.inf)
    done = np.zeros(n, dtype=np.bool_)
    cap = 2 * n + 16
    hd = np.empty(cap)
    hi = np.empty(cap, dtype=np.int64)
    size = 0
    for k in range(n):
        r = k // nx
        c = k % nx
        if mask[r, c] and init[r, c] < np.inf:
            dist[k] = init[r, c]
            size = _heap_push(hd, hi, size, init[r, c], k)
    while size > 0:
        d, k, size = _heap_pop(hd, hi, size)
        if done[k] or d > dist[k]:
            continue
        done[k] = True
        r = k // nx
        c = k % nx
        for e in range(8):
            rr = r + neigh[e, 0]
            cc = c + neigh[e, 1]
            if rr < 0 or rr >= ny:
                continue
            if cc < 0 or cc >= nx:
                if not periodic:
                    continue
                cc = cc % nx
            if not mask[rr, cc]:
                continue
            kk = rr * nx + cc
            if done[kk]:
                continue
            dx = px[rr, cc] - px[r, c]
            dy = py[rr, cc] - py[r, c]
            w = 0.5 * (lam[r, c] + lam[rr, cc]) * np.sqrt(dx * dx + dy * dy)
            nd = d + w
            if nd < dist[kk] or (nd == dist[kk] and pred[kk] > k):
                dist[kk] = nd
                pred[kk] = k
                if size >= cap:
                    cap *= 2
                    hd2 = np.empty(cap)
                    hi2 = np.empty(cap, dtype=np.int64)
                    hd2[:size] = hd[:size]
                    hi2[:size] = hi[:size]
                    hd = hd2
                    hi = hi2
                size = _heap_push(hd, hi, size, nd, kk)
    return dist.reshape(ny, nx)


@dataclass(eq=False)
class MetricField:
    """``lambda`` sampled on a grid; ``lam_fn`` (optional) gives exact values for path lengths."""

    grid: object
    lam: np.ndarray
    lam_fn: object = None

    def __post_init__(self):
        self.lam = np.where(self.grid.mask, np.asarray(self.lam, dtype=float), 0.0)
        if np.any(self.lam < 0):
            raise ValueError("conformal factor must be nonnegative")

    @classmethod
    def from_function(cls, grid, fn, keep_fn=True):
        lam = np.zeros(grid.shape)
        lam[grid.mask] = fn(grid.pos[grid.mask])
        return cls(grid, lam, fn if keep_fn else None)

    @property
    def domain(self):
        return getattr(self.grid, "domain", None)

    def scaled(self, c):
        fn = None if self.lam_fn is None else (lambda z, f=self.lam_fn: c * f(z))
        return MetricField(self.grid, c * self.lam, fn)

    def value(self, z):
        if self.lam_fn is not None:
            return np.asarray(self.lam_fn(z), dtype=float)
        return self.grid.interp(self.lam, z)


@dataclass(eq=False)
class DistanceField:
    metric: MetricField
    values: np.ndarray
    pred: np.ndarray
    source: np.ndarray

    @property
    def grid(self):
        return self.metric.grid

    def interp(self, z):
        vals = np.where(np.isfinite(self.values), self.values, np.nan)
        return self.grid.interp(vals, z)

    def path_to(self, r, c):
        """Node positions of the shortest path from the source to node ``(r, c)``."""
        nx = self.values.shape[1]
        k = r * nx + c
        out = []
        while k >= 0:
            out.append(self.grid.pos.flat[k])
            k = self.pred[k]
        return np.array(out[::-1])


def source_mask(grid, source):
    """Boolean node mask for a source given as mask, polygon (closed region) or point list."""
    if isinstance(source, np.ndarray) and source.dtype == bool:
        m = source.copy()
    elif isinstance(source, Polygon):
        m = source.contains(grid.pos, closed=True, tol=1e-9 * grid.spacing)
    else:
        pts = np.atleast_1d(np.asarray(source, dtype=complex))
        m = np.zeros(grid.shape, dtype=bool)
        flat = grid.pos[grid.mask]
        idx = np.flatnonzero(grid.mask)
        for p in pts:
            m.flat[idx[np.argmin(np.abs(flat - p))]] = True
    return m & grid.mask


def distance_field(mf: MetricField, source) -> DistanceField:
    m = source_mask(mf.grid, source)
    if not np.any(m):
        raise EmptySource("source does not meet the grid")
    init = np.where(m, 0.0, np.inf)
    pos = mf.grid.pos
    pred = np.full(pos.size, -1, dtype=np.int64)
    vals = _dijkstra(np.ascontiguousarray(pos.real), np.ascontiguousarray(pos.imag),
                     np.ascontiguousarray(mf.lam), np.ascontiguousarray(mf.grid.mask),
                     init, bool(mf.grid.periodic), _NEIGH, pred)
    return DistanceField(mf, vals, pred, m)


def dist_sets(mf: MetricField, U, V) -> float:
    df = distance_field(mf, U)
    mv = source_mask(mf.grid, V)
    if not np.any(mv):
        raise EmptySource("target set does not meet the grid")
    return float(np.min(df.values[mv]))


def path_length(mf: MetricField, path, rtol=1e-7, max_pieces=1 << 16) -> float:
    """``int lambda |dz|`` along a polyline by composite Simpson with doubling."""
    v = np.asarray(path.vertices if hasattr(path, "vertices") else path, dtype=complex)
    dom = mf.domain
    total = 0.0
    for a, b in zip(v[:-1], v[1:]):
        if a == b:
            continue
        n = 64
        prev = None
        while True:
            s = np.linspace(0.0, 1.0, n + 1)
            z = a + s * (b - a)
            if dom is not None and not np.all(dom.contains(z, closed=True, tol=1e-12)):
                raise PathLeavesDomain("path leaves the metric's domain")
            f = mf.value(z)
            if np.any(~np.isfinite(f)):
                raise PathLeavesDomain("metric undefined along the path")
            w = np.ones(n + 1)
            w[1:-1:2] = 4
            w[2:-1:2] = 2
            val = abs(b - a) / (3 * n) * float(w @ f)
            if prev is not None and abs(val - prev) <= rtol * max(abs(val), 1e-300):
                break
            if n >= max_pieces:
                break
            prev = val
            n *= 2
        total += val
    return total


# ---------------------------------------------------------------------------
# the polygon Q inside the band s < dist < 2s
# ---------------------------------------------------------------------------

def _contours(df, level):
    vals = np.where(np.isfinite(df.values), df.values, np.nanmax(df.values[np.isfinite(df.values)]) * 10)
    vals = np.where(df.grid.mask, vals, np.max(vals))
    if df.grid.periodic:
        vals = np.concatenate([vals, vals[:, :1]], axis=1)
    out = []
    for c in measure.find_contours(vals, level):
        out.append(_index_to_plane(df.grid, c[:, 0], c[:, 1]))
    return out


def _index_to_plane(grid, rows, cols):
    if isinstance(grid, UniformGrid):
        return grid.index_to_plane(rows, cols)
    r0 = np.clip(np.floor(rows).astype(int), 0, len(grid.t) - 2)
    t = grid.t[r0] + (rows - r0) * (grid.t[r0 + 1] - grid.t[r0])
    sig = np.append(grid.sigma, grid.sigma[0] + grid.mapper.n_walls)
    c0 = np.clip(np.floor(cols).astype(int), 0, len(sig) - 2)
    s = sig[c0] + (cols - c0) * (sig[c0 + 1] - sig[c0])
    return grid.mapper.band_to_plane(s, t)


def _in_band(df, z, s):
    d = df.interp(z)
    return np.isfinite(d) & (d > s) & (d < 2 * s)


def extract_Q(df: DistanceField, s: float, Peps: Polygon, P: Polygon | None = None,
              check_spacing=None) -> Polygon:
    """Polygon on the level ``1.5 s`` of the distance from ``Peps``, verified inside the band."""
    P = df.metric.domain if P is None else P
    level = 1.5 * s
    finite = df.values[np.isfinite(df.values) & df.grid.mask]
    if finite.size == 0 or finite.max() <= 2 * s:
        raise LevelSetNotSeparating("the distance never exceeds 2s inside P")
    ref = Peps.centroid
    best = None
    for c in _contours(df, level):
        if len(c) < 4 or abs(c[0] - c[-1]) > 1e-9 * max(1.0, np.max(np.abs(c))):
            continue
        try:
            poly = Polygon(c[:-1])
        except ValueError:
            continue
        if poly.winding(np.array([ref]))[0] != 0 and (best is None or poly.area > best.area):
            best = poly
    if best is None:
        raise LevelSetNotSeparating("no closed level curve surrounds P^eps")
    h = df.grid.spacing
    simple = best.shapely.simplify(0.25 * h, preserve_topology=True)
    xy = np.asarray(simple.exterior.coords)[:-1]
    Q = Polygon(xy[:, 0] + 1j * xy[:, 1])
    hull = convex_hull(Q.vertices)
    spacing = 0.25 * h if check_spacing is None else check_spacing
    if _polygon_in_band(df, hull, s, spacing):
        Q = hull
    if not np.all(_in_band(df, Q.vertices, s)):
        raise QOutsideK("a vertex of Q is not in s < dist < 2s")
    if not (Q.contains_polygon(Peps, strict=True) and (P is None or P.contains_polygon(Q, strict=True))):
        raise QOutsideK("Q is not nested between P^eps and P")
    return Q


def _polygon_in_band(df, poly, s, spacing):
    pts = poly.sample_boundary(spacing)
    return bool(np.all(_in_band(df, pts, s)))


def certify_Q(df, Q, s, Peps, P, spacing=None):
    """Both Q conditions, checked on vertices and on a boundary sample."""
    spacing = df.grid.spacing if spacing is None else spacing
    return {
        "vertices_in_band": bool(np.all(_in_band(df, Q.vertices, s))),
        "boundary_in_band": _polygon_in_band(df, Q, s, spacing),
        "Peps_inside_Q": bool(Q.contains_polygon(Peps, strict=True)),
        "Q_inside_P": bool(P.contains_polygon(Q, strict=True)),
    }


def synthetic_labyrinth_metric(lab, c=1.0):
    """``lambda = c`` off ``Omega`` and ``c N^4`` on it (as a function of position)."""
    def fn(z):
        return np.where(lab.classify(z)["Omega"], c * lab.N ** 4, c)
    return fn


def labyrinth_crossing_distance(lab, c=1.0, t_max=None, **grid_kw):
    """``dist(P, P^{t_max})`` for the synthetic labyrinth metric on a band grid."""
    t_max = lab.zeta0 if t_max is None else t_max
    grid = labyrinth_band_grid(lab, t_max, **grid_kw)
    lam = _synthetic_on_band(lab, grid, c)
    mf = MetricField(grid, lam)
    src = np.zeros(grid.shape, dtype=bool)
    src[0, :] = True
    df = distance_field(mf, src)
    return float(np.min(df.values[-1, :])), df


def _synthetic_on_band(lab, grid, c, chunk=1 << 20):
    flat = grid.pos.ravel()
    lam = np.empty(flat.size)
    for s in range(0, flat.size, chunk):
        lam[s:s + chunk] = np.where(lab.classify(flat[s:s + chunk])["Omega"], c * lab.N ** 4, c)
    return lam.reshape(grid.shape)


__all__ = [
    "UniformGrid", "BandGrid", "MetricField", "DistanceField", "distance_field", "dist_sets",
    "path_length", "extract_Q", "certify_Q", "labyrinth_band_grid", "labyrinth_crossing_distance",
    "synthetic_labyrinth_metric",
]
