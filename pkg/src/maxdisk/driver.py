"""The outer recursion: repeated lemma applications with shrinking tolerances.

Each stage ``n`` applies the deformation lemma to ``(r_{n-1}, P_{n-1},
psi_{n-1})`` with ``s = 1/n`` and a trial ``eps``, then certifies five
properties:

* (A) the chain of inward offsets is strictly nested;
* (B) the lift-metric distance between consecutive cores exceeds ``1/n``;
* (C) ``psi_n`` maps ``P_n`` into ``B(r_n)``;
* (D) ``psi_n`` stays ``eps_n``-close to ``psi_{n-1}`` on the old core;
* (E) the lift factor drops at most by the factor ``alpha_n``.

The ledgers of (B), (D) and (E) are the numerical stand-ins for the limit
(weak completeness, uniform convergence, absence of branch points).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import holo
from .deform import DeformConfig, LemmaInput, lemma_step
from .errors import NExhausted, OffsetDegenerate, SearchExhausted, TrialLadderExhausted
from .lorentz3 import Region, in_region, region_margin
from .metricdist import MetricField, UniformGrid, distance_field, source_mask
from .polygon import Polygon
from .weierstrass import Immersion, classify_points, flat_disk, lift_factor


def make_alpha_seq(k_max):
    """``alpha_k = 2^(-2^(-k))``: each in (0, 1) and the infinite product is 1/2."""
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    k = np.arange(1, k_max + 1, dtype=float)
    return 2.0 ** (-(2.0 ** -k))


def radius_sequence(r1, n_max):
    """``r'_1 = r1``, ``r'_n = sqrt(r'_{n-1}^2 - (2/n)^2) - 1/n^2`` (``nan`` once undefined)."""
    out = np.full(n_max, np.nan)
    out[0] = r1
    for n in range(2, n_max + 1):
        rad = out[n - 2] ** 2 - (2.0 / n) ** 2
        if not rad > 0:
            break
        out[n - 1] = np.sqrt(rad) - 1.0 / n ** 2
    return out


def radius_tail(n_max):
    """Upper bound for the decrease after ``n_max`` while the radius stays above 1.

    ``sqrt(a^2 - b^2) >= a - b^2 / 2`` for ``a >= 1``, so each later stage
    loses at most ``(2/n)^2 / 2 + 1/n^2 = 3/n^2``.
    """
    head = np.sum(1.0 / np.arange(1, n_max + 1, dtype=float) ** 2)
    return 3.0 * (np.pi ** 2 / 6 - head)


def radius_ok(r1, n_max, floor=1.05):
    seq = radius_sequence(r1, n_max)
    return bool(np.all(seq > floor) and seq[-1] - radius_tail(n_max) > 1.0)


def make_radius_seq(n_max, floor=1.05, start=2.0, step=0.25, max_r=50.0):
    """Smallest ``r1`` on the grid ``start, start + step, ...`` passing :func:`radius_ok`."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    r1 = start
    while r1 <= max_r:
        if radius_ok(r1, n_max, floor):
            return r1, radius_sequence(r1, n_max)
        r1 += step
    raise SearchExhausted(f"no r1 <= {max_r} keeps the radii above {floor}")


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class IterationState:
    n: int
    P: Polygon
    psi: Immersion
    eps: float
    xi: float
    r: float
    dist_B: float | None = None
    sup_D: float | None = None
    ratio_E: float | None = None
    certificates: dict = field(default_factory=dict)
    lemma_report: dict | None = None

    @property
    def core(self):
        return self.P.inward_offset(self.xi)

    def to_dict(self):
        return {"n": self.n, "P": self.P.to_list(), "eps": self.eps, "xi": self.xi, "r": self.r,
                "dist_B": self.dist_B, "sup_D": self.sup_D, "ratio_E": self.ratio_E,
                "certificates": self.certificates}


def seed(r1, side=0.5, xi=0.2, eps=0.5):
    """Flat spacelike square with ``V = (0, 0, -(r1 + 0.2))``; (C_1) is checked."""
    if not r1 > 1:
        raise ValueError("r1 must exceed 1")
    P = Polygon.square(side)
    psi = flat_disk(P, (0.0, 0.0, -(r1 + 0.2)))
    pts = holo.grid_points(P, 32)
    inside = bool(np.all(in_region(psi(pts), Region(r1))))
    margin = float(np.min(region_margin(psi(pts)))) - r1
    st = IterationState(1, P, psi, eps, xi, r1)
    st.certificates["C"] = {"value": margin, "passed": inside}
    return st


# ---------------------------------------------------------------------------
# the five properties
# ---------------------------------------------------------------------------

def _lift_metric(psi, domain, resolution):
    grid = UniformGrid(domain, domain.diameter / resolution)
    lam = np.zeros(grid.shape)
    lam[grid.mask] = lift_factor(psi.wdata, grid.pos[grid.mask])
    return MetricField(grid, lam)


def core_distance(psi, domain, inner, outer_boundary, resolution=128):
    """Lift-metric distance (inside ``domain``) from region ``inner`` to the polygon ``outer_boundary``."""
    mf = _lift_metric(psi, domain, resolution)
    df = distance_field(mf, inner)
    ring = outer_boundary.sample_boundary(mf.grid.spacing)
    vals = df.interp(ring)
    if not np.all(np.isfinite(vals)):
        tgt = source_mask(mf.grid, ring)
        return float(np.min(df.values[tgt]))
    return float(np.min(vals))


def lift_ratio(new, old, region, resolution=32):
    z = holo.grid_points(region, resolution)
    return float(np.min(lift_factor(new.wdata, z) / lift_factor(old.wdata, z)))


def sup_difference(new, old, region, resolution=32):
    z = holo.grid_points(region, resolution)
    return float(np.max(np.linalg.norm(new(z) - old(z), axis=-1)))


def _nested(a, b):
    """``closure(Int b) inside Int a``."""
    return bool(a.contains_polygon(b, strict=True))


def choose_xi(prev, Q, eps, psi, s, steps=8, resolution=128):
    """Half the largest ``xi`` (by bisection) keeping (A) and (B) for ``Q^xi``.

    Returns ``(xi, dist_B)`` or ``(None, None)`` when even tiny ``xi`` fails.
    """
    old_eps = prev.P.inward_offset(eps)
    core = prev.core

    def ok(xi):
        try:
            inner = Q.inward_offset(xi)
        except (OffsetDegenerate, ValueError):
            return False, None
        if not _nested(inner, old_eps):
            return False, None
        d = core_distance(psi, inner, core, inner, resolution)
        return d > s, d

    lo, hi = 0.0, min(prev.xi, 0.5 * Q.diameter)
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if ok(mid)[0]:
            lo = mid
        else:
            hi = mid
    if lo == 0.0:
        return None, None
    xi = 0.5 * lo
    passed, d = ok(xi)
    return (xi, d) if passed else (None, None)


@dataclass
class DriverConfig:
    n_target: int = 4
    ladder_depth: int = 12
    xi_steps: int = 8
    metric_resolution: int = 128
    check_resolution: int = 32
    radius_floor: float = 1.05
    early_exit: bool = True
    lemma: DeformConfig = field(default_factory=DeformConfig)


def trial_eps(n, prev_eps, depth=12):
    start = 0.5 * min(1.0 / n ** 2, prev_eps)
    return start * 0.5 ** np.arange(depth)


def advance(prev: IterationState, n, alpha_n, config=None, lemma_fn=None) -> IterationState:
    """One stage: trial ``eps`` ladder, lemma, then the five certificates."""
    cfg = config or DriverConfig()
    lemma_fn = lemma_step if lemma_fn is None else lemma_fn
    s = 1.0 / n
    failures = []
    for eps in trial_eps(n, prev.eps, cfg.ladder_depth):
        try:
            inp = LemmaInput(prev.r, prev.P, prev.psi, float(eps), s)
        except ValueError as exc:
            failures.append({"eps": float(eps), "failing": "input", "message": str(exc)})
            continue
        try:
            res = lemma_fn(inp, cfg.lemma)
        except NExhausted as exc:
            failures.append({"eps": float(eps), "failing": exc.failing})
            if exc.failing == "runge" and cfg.early_exit:
                raise
            continue
        Q, Y = res.Q, res.Y
        certs = {}
        old_eps = prev.P.inward_offset(eps)
        certs["A"] = _nested(old_eps, prev.core) and _nested(Q, old_eps)
        ratio = lift_ratio(Y, prev.psi, prev.core, cfg.check_resolution)
        certs["E"] = ratio >= alpha_n
        sup_d = sup_difference(Y, prev.psi, old_eps, cfg.check_resolution)
        certs["D"] = sup_d < eps
        r_n = np.sqrt(prev.r ** 2 - (2.0 / n) ** 2) - eps
        zq = holo.grid_points(Q, cfg.check_resolution)
        margin = float(np.min(region_margin(Y(zq))))
        certs["C"] = bool(margin > r_n)
        if not all(certs.values()):
            failures.append({"eps": float(eps), "failing": [k for k, v in certs.items() if not v][0]})
            continue
        xi, d = choose_xi(prev, Q, eps, Y, s, cfg.xi_steps, cfg.metric_resolution)
        if xi is None:
            failures.append({"eps": float(eps), "failing": "B"})
            continue
        certs["B"] = True
        out = IterationState(n, Q, Y, float(eps), float(xi), float(r_n), d, sup_d, ratio,
                             {k: {"passed": bool(v)} for k, v in certs.items()}, res.report)
        out.certificates["C"]["value"] = margin - r_n
        out.certificates["D"]["value"] = sup_d
        out.certificates["E"]["value"] = ratio
        out.certificates["B"]["value"] = d
        return out
    raise TrialLadderExhausted(f"stage {n}: no trial eps passes ({failures[-1] if failures else ''})")


def iterate(states, n_target=None, config=None, lemma_fn=None):
    """Extend ``states`` (a list starting with the seed) up to ``n_target``."""
    cfg = config or DriverConfig()
    n_target = cfg.n_target if n_target is None else n_target
    states = list(states)
    alphas = make_alpha_seq(n_target)
    while states[-1].n < n_target:
        n = states[-1].n + 1
        states.append(advance(states[-1], n, alphas[n - 1], cfg, lemma_fn))
    return states


# ---------------------------------------------------------------------------
# limit diagnostics
# ---------------------------------------------------------------------------

def check_chain(states):
    """(A) for the whole sequence: ``core_{n-1}`` inside ``P_{n-1}^{eps_n}`` inside ``core_n`` inside ``P_n``."""
    out = []
    for a, b in zip(states[:-1], states[1:]):
        mid = a.P.inward_offset(b.eps)
        out.append(_nested(mid, a.core) and _nested(b.core, mid) and _nested(b.P, b.core)
                   and _nested(a.P, b.P))
    return out


def limit_report(states, resolution=32):
    """Ledgers for the limit: Cauchy steps, containment, distances, lift factors, singularities."""
    if len(states) < 2:
        raise ValueError("need at least two states")
    alphas = make_alpha_seq(states[-1].n)
    last = states[-1]
    z = holo.grid_points(last.P, resolution)
    containment = float(np.min(region_margin(last.psi(z)))) - 1.0
    core = states[0].core
    zc = holo.grid_points(core, resolution)
    lam1 = lift_factor(states[0].psi.wdata, zc)
    product_ratio = [float(np.min(lift_factor(s.psi.wdata, zc) / lam1)) for s in states]
    census = []
    for s in states:
        cls = classify_points(s.psi.wdata, holo.grid_points(s.P, resolution))
        census.append({"n": s.n, "branch": int(np.sum(cls == "branch")),
                       "lightlike": int(np.sum(cls == "lightlike"))})
    dist = [s.dist_B for s in states[1:]]
    return {
        "cauchy": [{"n": s.n, "sup": s.sup_D, "eps": s.eps} for s in states[1:]],
        "cauchy_ok": all(s.sup_D < s.eps for s in states[1:]),
        "containment_margin": containment,
        "radii": [s.r for s in states],
        "r_min": float(min(s.r for s in states)),
        "distance_ledger": dist,
        "distance_sum": float(np.sum(dist)),
        "distance_target": float(np.sum(1.0 / np.arange(2, last.n + 1))),
        "lift_product_ratio": product_ratio,
        "alpha_product": [float(np.prod(alphas[1:k])) for k in range(1, last.n + 1)],
        "chain": check_chain(states),
        "singularities": census,
        "branch_points": int(sum(c["branch"] for c in census)),
    }


__all__ = [
    "make_alpha_seq", "make_radius_seq", "radius_sequence", "radius_ok", "radius_tail",
    "IterationState", "DriverConfig", "seed", "advance", "iterate", "limit_report",
    "check_chain", "choose_xi", "trial_eps", "core_distance",
]
