"""Simple closed polygons in the complex plane and their inward parallels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import shapely
from shapely.geometry import Polygon as _ShPolygon

from .errors import OffsetDegenerate


def _as_complex(vertices):
    v = np.asarray(vertices)
    if v.ndim == 2 and v.shape[1] == 2 and not np.iscomplexobj(v):
        v = v[:, 0] + 1j * v[:, 1]
    return np.asarray(v, dtype=complex).ravel()


def segment_distance(z, a, b):
    """Euclidean distance from points ``z`` to segments ``[a, b]`` (broadcasting)."""
    d = b - a
    dd = (d.real * d.real + d.imag * d.imag)
    w = z - a
    with np.errstate(invalid="ignore", divide="ignore"):
        t = (w.real * d.real + w.imag * d.imag) / dd
    t = np.where(dd > 0, np.clip(t, 0.0, 1.0), 0.0)
    return np.abs(w - t * d)


@dataclass(frozen=True, eq=False)
class Polygon:
    """Counterclockwise simple polygon stored as complex vertices (no repeat)."""

    vertices: np.ndarray

    def __post_init__(self):
        v = _as_complex(self.vertices)
        if len(v) > 1 and v[0] == v[-1]:
            v = v[:-1]
        if len(v) < 3:
            raise ValueError("a polygon needs at least 3 vertices")
        if _signed_area(v) < 0:
            v = v[::-1]
        object.__setattr__(self, "vertices", v)

    @classmethod
    def square(cls, side=1.0, center=0.0):
        h = side / 2
        return cls(center + np.array([-h - 1j * h, h - 1j * h, h + 1j * h, -h + 1j * h]))

    @classmethod
    def regular(cls, n, side=1.0, center=0.0, phase=0.0):
        circum = side / (2 * np.sin(np.pi / n))
        ang = phase + 2 * np.pi * np.arange(n) / n
        return cls(center + circum * np.exp(1j * ang))

    @property
    def n_sides(self):
        return len(self.vertices)

    @property
    def edges(self):
        v = self.vertices
        return v, np.roll(v, -1)

    @property
    def area(self):
        return _signed_area(self.vertices)

    @property
    def perimeter(self):
        a, b = self.edges
        return float(np.sum(np.abs(b - a)))

    @property
    def centroid(self):
        return complex(self.shapely.centroid.x + 1j * self.shapely.centroid.y)

    @property
    def diameter(self):
        v = self.vertices
        return float(np.max(np.abs(v[:, None] - v[None, :])))

    @property
    def shapely(self):
        v = self.vertices
        return _ShPolygon(np.column_stack([v.real, v.imag]))

    def is_simple(self):
        return bool(self.shapely.is_valid) and self.area > 0

    def is_convex(self, tol=1e-14):
        a = np.roll(self.vertices, 1)
        b = self.vertices
        c = np.roll(self.vertices, -1)
        cross = ((b - a).conjugate() * (c - b)).imag
        return bool(np.all(cross >= -tol))

    def bbox(self):
        v = self.vertices
        return v.real.min(), v.real.max(), v.imag.min(), v.imag.max()

    def winding(self, z):
        """Winding number of the boundary around each point of ``z``."""
        z = np.asarray(z, dtype=complex)
        a, b = self.edges
        za = a[None, :] - z.reshape(-1, 1)
        zb = b[None, :] - z.reshape(-1, 1)
        ang = np.angle(zb / np.where(za == 0, 1, za))
        return np.rint(np.sum(ang, axis=1) / (2 * np.pi)).astype(int).reshape(z.shape)

    def boundary_distance(self, z):
        z = np.asarray(z, dtype=complex)
        a, b = self.edges
        zf = z.reshape(-1, 1)
        return np.min(segment_distance(zf, a[None, :], b[None, :]), axis=1).reshape(z.shape)

    def contains(self, z, closed=True, tol=1e-12):
        """Point-in-polygon; boundary points count as inside when ``closed``."""
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=bool)
        flat = z.ravel()
        res = out.ravel()
        for s in range(0, flat.size, 65536):
            chunk = flat[s:s + 65536]
            inside = self.winding(chunk) != 0
            on = self.boundary_distance(chunk) <= tol
            res[s:s + 65536] = (inside | on) if closed else (inside & ~on)
        return res.reshape(z.shape) if z.shape else bool(res[0])

    def contains_polygon(self, other, strict=True, tol=1e-12):
        """``other`` (closure) inside Int self; checked on vertices and boundary crossings."""
        if not np.all(self.contains(other.vertices, closed=not strict, tol=tol)):
            return False
        if strict and np.min(self.boundary_distance(other.vertices)) <= tol:
            return False
        return not self.shapely.boundary.intersects(other.shapely.boundary) if strict else \
            self.shapely.buffer(tol).contains(other.shapely)

    def sample_boundary(self, spacing):
        pts = []
        a, b = self.edges
        for p, q in zip(a, b):
            n = max(1, int(np.ceil(abs(q - p) / spacing)))
            pts.append(p + (q - p) * np.arange(n) / n)
        return np.concatenate(pts)

    def point_at(self, side, fraction):
        a, b = self.edges
        return a[side] + fraction * (b[side] - a[side])

    def inward_offset(self, xi, reference=None):
        """The parallel polygon at distance ``xi`` inside.

        Convex polygons use exact edge translation; other polygons use a
        mitred erosion and keep the component containing ``reference``
        (default: the centroid).
        """
        if xi <= 0:
            raise ValueError("offset distance must be positive")
        if self.is_convex():
            return self._convex_offset(xi)
        return self._erosion_offset(xi, reference)

    def _convex_offset(self, xi):
        verts = self.vertices + xi * self.vertex_velocities()
        a, b = np.roll(self.vertices, 0), np.roll(self.vertices, -1)
        na, nb = verts, np.roll(verts, -1)
        # every side must keep its direction and positive length
        d_old = b - a
        d_new = nb - na
        if np.any((d_new * d_old.conjugate()).real <= 1e-14 * np.abs(d_old) ** 2):
            raise OffsetDegenerate(f"offset {xi} collapses a side")
        return Polygon(verts)

    def vertex_velocities(self):
        """d(vertex)/d(xi) of the exact inward parallel (convex corners)."""
        v = self.vertices
        prev_dir = v - np.roll(v, 1)
        next_dir = np.roll(v, -1) - v
        n_prev = 1j * prev_dir / np.abs(prev_dir)   # inward normals for CCW
        n_next = 1j * next_dir / np.abs(next_dir)
        # point p with <p, n_prev> = 1 and <p, n_next> = 1
        m = np.array([[n_prev.real, n_prev.imag], [n_next.real, n_next.imag]])
        m = np.moveaxis(m, -1, 0)
        sol = np.linalg.solve(m, np.ones((len(v), 2, 1)))[..., 0]
        return sol[:, 0] + 1j * sol[:, 1]

    def _erosion_offset(self, xi, reference):
        ref = self.centroid if reference is None else reference
        er = self.shapely.buffer(-xi, join_style="mitre", mitre_limit=1e6)
        if er.is_empty:
            raise OffsetDegenerate(f"erosion by {xi} is empty")
        parts = list(er.geoms) if hasattr(er, "geoms") else [er]
        pt = shapely.geometry.Point(ref.real, ref.imag)
        for part in parts:
            if part.contains(pt):
                xy = np.asarray(part.exterior.coords)[:-1]
                return Polygon(xy[:, 0] + 1j * xy[:, 1])
        raise OffsetDegenerate("no erosion component contains the reference point")

    def to_list(self):
        return [[float(z.real), float(z.imag)] for z in self.vertices]

    @classmethod
    def from_list(cls, pts):
        return cls(np.asarray(pts, dtype=float))

    def __repr__(self):
        return f"Polygon({self.n_sides} sides, area={self.area:.6g})"


def _signed_area(v):
    x, y = v.real, v.imag
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def convex_hull(points):
    pts = np.asarray(points, dtype=complex)
    hull = shapely.geometry.MultiPoint(np.column_stack([pts.real, pts.imag])).convex_hull
    xy = np.asarray(hull.exterior.coords)[:-1]
    return Polygon(xy[:, 0] + 1j * xy[:, 1])


def nested_strictly(outer, inner, tol=1e-12):
    """Closure of Int ``inner`` contained in Int ``outer``."""
    return outer.contains_polygon(inner, strict=True, tol=tol)
