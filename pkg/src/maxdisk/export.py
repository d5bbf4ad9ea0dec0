"""Writers for run artifacts: JSON reports, OBJ meshes, CSV grids and ledgers, SVG overlays."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .weierstrass import classify_points, conformal_factors


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    if hasattr(o, "to_dict"):
        return o.to_dict()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def to_json(obj):
    return json.dumps(obj, default=_default, indent=2, sort_keys=True, allow_nan=True)


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json(obj))
    return path


def lattice_mesh(domain, resolution):
    """Vertices (complex) and triangles of a square lattice clipped to ``domain``."""
    x0, x1, y0, y1 = domain.bbox()
    xs = np.linspace(x0, x1, resolution)
    ys = np.linspace(y0, y1, resolution)
    pos = xs[None, :] + 1j * ys[:, None]
    inside = domain.contains(pos, closed=True, tol=1e-12)
    index = np.full(pos.shape, -1)
    index[inside] = np.arange(int(inside.sum()))
    a, b = index[:-1, :-1], index[:-1, 1:]
    c, d = index[1:, :-1], index[1:, 1:]
    tris = np.concatenate([np.stack([a, b, d], -1).reshape(-1, 3),
                           np.stack([a, d, c], -1).reshape(-1, 3)])
    tris = tris[np.all(tris >= 0, axis=1)]
    return pos[inside], tris


def write_obj(path, immersion, domain=None, resolution=64):
    """OBJ mesh of the immersion plus a CSV sidecar of per-vertex diagnostics.

    The sidecar (same stem, ``.csv``) holds the parameter point, both
    conformal factors and the point class of every vertex.
    """
    domain = immersion.domain if domain is None else domain
    z, tris = lattice_mesh(domain, resolution)
    xyz = immersion(z)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        fh.write(f"# {len(xyz)} vertices, {len(tris)} faces\n")
        for p in xyz:
            fh.write(f"v {p[0]:.12g} {p[1]:.12g} {p[2]:.12g}\n")
        for t in tris + 1:
            fh.write(f"f {t[0]} {t[1]} {t[2]}\n")
    lam, lam0 = conformal_factors(immersion.wdata, z)
    cls = classify_points(immersion.wdata, z)
    rows = [{"u": float(w.real), "v": float(w.imag), "lambda": float(a), "lambda0": float(b),
             "class": c} for w, a, b, c in zip(z, lam, lam0, cls)]
    write_csv(path.with_suffix(".csv"), rows)
    return path


def write_csv(path, rows, fields=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = list(rows)
    fields = fields or (list(rows[0].keys()) if rows else [])
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        w.writerows(rows)
    return path


def write_grid_csv(path, grid, values):
    """One row per valid node: position and value."""
    pos = grid.pos[grid.mask]
    vals = np.asarray(values)[grid.mask]
    rows = ({"x": float(p.real), "y": float(p.imag), "value": float(v)} for p, v in zip(pos, vals))
    return write_csv(path, rows, ["x", "y", "value"])


def svg_document(polygons, size=512, margin=0.05, segments=()):
    """SVG with one closed path per ``(polygon, stroke colour)`` pair, y axis pointing up.

    ``segments`` holds extra ``(a, b, colour)`` line segments.
    """
    pts = np.concatenate([p.vertices for p, _ in polygons])
    x0, x1 = pts.real.min(), pts.real.max()
    y0, y1 = pts.imag.min(), pts.imag.max()
    span = max(x1 - x0, y1 - y0) * (1 + 2 * margin)
    cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)

    def tr(z):
        return (z.real - cx) / span * size + size / 2, size / 2 - (z.imag - cy) / span * size

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">']
    for poly, colour in polygons:
        coords = " ".join("{:.3f},{:.3f}".format(*tr(v)) for v in poly.vertices)
        parts.append(f'<polygon points="{coords}" fill="none" stroke="{colour}" stroke-width="1"/>')
    for a, b, colour in segments:
        (x1, y1), (x2, y2) = tr(a), tr(b)
        parts.append(f'<line x1="{x1:.3f}" y1="{y1:.3f}" x2="{x2:.3f}" y2="{y2:.3f}" '
                     f'stroke="{colour}" stroke-width="0.5"/>')
    parts.append("</svg>")
    return "\n".join(parts)


def write_svg(path, polygons, size=512, segments=()):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(svg_document(polygons, size, segments=segments))
    return path


__all__ = ["to_json", "write_json", "write_obj", "write_csv", "write_grid_csv", "write_svg",
           "svg_document", "lattice_mesh"]
