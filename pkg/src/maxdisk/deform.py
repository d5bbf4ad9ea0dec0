"""The deformation lemma: push a maximal disk's boundary far away in the lift metric.

Given a conformal maximal immersion ``X`` of a closed convex polygon ``P``
with ``X(P) inside B(r)``, a chain ``F_0 = X, F_1, ..., F_2N`` is built by
Lopez-Ros steps.  Step ``j`` picks a Lorentz frame adapted to the ``j``-th
labyrinth piece, builds a Runge function ``h`` close to ``alpha`` on
``omega_j`` and to 1 away from ``varpi_j``, and applies ``g -> g / h``,
``f -> f h`` in that frame.  Every stated bound is certified on sample
points at two densities; nothing is assumed.

The final immersion is then cut down to a polygon ``Q`` on the level
``1.5 s`` of the lift-metric distance from ``P^eps``.

Pieces that are expensive or fragile are pluggable: the family of
``(omega_j, varpi_j)`` pairs (``sets_fn``) and the Runge builder
(``runge_fn``).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import holo
from .errors import (AlphaSearchFailed, FitFailed, LevelSetNotSeparating, NExhausted,
                     NoFrameFound, NTooSmall, OffsetDegenerate, PreconditionViolated,
                     QOutsideK)
from .labyrinth import build_labyrinth
from .lorentz3 import (Frame, Region, complete_frame, coords_in_frame, euclid_companion,
                       euclid_coords, gauss_maps, gauss_N, in_region, minkowski_inner,
                       project_to_h2, region_margin, shrink_check)
from .metricdist import (MetricField, UniformGrid, distance_field, extract_Q,
                         labyrinth_band_grid)
from .polygon import Polygon
from .runge import (DEFAULT_LADDER, LabyrinthOmega, LabyrinthVarpi, RungeRequest,
                    build_runge)
from .weierstrass import (Immersion, WData, classify_points, g_values, lift_factor,
                          lopez_ros, surface_normal)


@dataclass
class DeformConfig:
    """Named constants of the construction plus sampling sizes."""

    c4: float = 0.1              # (a4): |phi| >= c4 / sqrt(N) on varpi_j
    c7: float = 1.0              # (a7): |F_j - F_{j-1}| <= c7 / N^2 off varpi_j
    m_close: float = 3.0         # frame: dist(e3, normals of X) <= m_close / sqrt(N)
    m_far: float = 0.5           # frame: dist(e3, Gauss image) >= m_far / sqrt(N)
    a3_power: float = 3.5        # (a3): |phi| >= N^a3_power on omega_j
    zeta_factor: float = 0.9     # labyrinth depth zeta0 = zeta_factor * eps
    n_multipliers: tuple = (4, 8, 16)
    alpha_cap: float = 2.0 ** 40
    third_coord_tol: float = 1e-11
    grid_resolution: int = 32
    set_points: int = 400
    immersion_points: int = 256
    validation_resolution: int = 32
    metric_resolution: int = 128
    band_coarse_rows: int = 64
    cap_rings: int = 8
    cap_directions: int = 16
    runge_resolution: int = 512
    runge_fit_resolution: int = 128
    runge_ladder: tuple = DEFAULT_LADDER
    early_exit: bool = True      # a Runge failure ends the N ladder

    def to_dict(self):
        d = asdict(self)
        d["n_multipliers"] = list(self.n_multipliers)
        d["runge_ladder"] = [list(x) for x in self.runge_ladder]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "n_multipliers" in d:
            d["n_multipliers"] = tuple(d["n_multipliers"])
        if "runge_ladder" in d:
            d["runge_ladder"] = tuple(tuple(x) for x in d["runge_ladder"])
        return cls(**d)


# ---------------------------------------------------------------------------
# input
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class LemmaInput:
    r: float
    P: Polygon
    X: Immersion
    eps: float
    s: float
    validation_resolution: int = 24

    def __post_init__(self):
        if not (self.r > 0 and self.eps > 0 and self.s > 0):
            raise PreconditionViolated("r, eps and s must be positive")
        if not self.r * self.r - 4 * self.s * self.s > 0 or not self.R > 0:
            raise PreconditionViolated("need sqrt(r^2 - 4 s^2) - eps > 0")
        pts = holo.grid_points(self.P, self.validation_resolution)
        if not np.all(in_region(self.X(pts), Region(self.r))):
            raise PreconditionViolated("X(P) is not contained in B(r)")

    @property
    def R(self):
        rad = self.r * self.r - 4 * self.s * self.s
        return float(np.sqrt(rad) - self.eps) if rad > 0 else -np.inf

    @property
    def Peps(self):
        return self.P.inward_offset(self.eps)


# ---------------------------------------------------------------------------
# frame selection
# ---------------------------------------------------------------------------

def _hdist(a, b):
    return np.arccosh(np.maximum(-minkowski_inner(a, b), 1.0))


def _angle(a, b):
    a = a / np.linalg.norm(a, axis=-1, keepdims=True)
    b = b / np.linalg.norm(b, axis=-1, keepdims=True)
    return np.arccos(np.clip(np.sum(a * b, axis=-1), -1.0, 1.0))


def _upper(q):
    return q * np.sign(q[..., 2])[..., None]


def hyperbolic_centroid(points):
    return project_to_h2(np.mean(points, axis=0))


def cap_candidates(center, radius, rings=8, directions=16):
    """``1 + rings * directions`` points of H^2_+ on geodesic circles around ``center``."""
    fr = complete_frame(center)
    out = [np.asarray(center, dtype=float)]
    for k in range(1, rings + 1):
        rho = radius * k / rings
        for d in range(directions):
            th = 2 * np.pi * d / directions
            u = np.cos(th) * fr.e1 + np.sin(th) * fr.e2
            out.append(np.cosh(rho) * center + np.sinh(rho) * u)
    return np.array(out)


def split_kind(g, tol=1e-9):
    """``"I0"`` when ``|g| != 1`` on the sample, else ``"J0"`` when ``g`` stays finite."""
    g = np.asarray(g)
    finite = np.isfinite(g)
    lightlike = finite & (np.abs(np.abs(np.where(finite, g, 0)) - 1.0) <= tol)
    if not np.any(lightlike):
        return "I0"
    if np.all(finite):
        return "J0"
    raise NoFrameFound("the Gauss map hits both |g| = 1 and g = inf on one piece")


@dataclass
class FrameChoice:
    frame: Frame
    kind: str
    close: float
    far: float
    n_feasible: int

    def to_dict(self):
        return {"frame": self.frame.to_dict(), "kind": self.kind, "close": self.close,
                "far": self.far, "n_feasible": self.n_feasible}


def frame_margins(e3, normals, gauss, kind):
    """``(close, far)``: farthest normal from ``e3`` and nearest Gauss value to it.

    For ``"I0"`` pieces distances are hyperbolic; for ``"J0"`` pieces both sets
    are projected radially to the unit sphere and compared by angle.
    Gauss values on the lower sheet are compared with ``-e3`` (equivalently,
    flipped to the upper sheet); lightlike points (``nan``) are skipped.
    """
    e3 = np.atleast_2d(e3)
    q = _upper(gauss[np.all(np.isfinite(gauss), axis=-1)])
    dist = _hdist if kind == "I0" else _angle
    close = np.max(dist(e3[:, None, :], normals[None, :, :]), axis=1)
    if q.size:
        far = np.min(dist(e3[:, None, :], q[None, :, :]), axis=1)
    else:
        far = np.full(len(e3), np.inf)
    return close, far


def select_frame(normals, gauss, g, N, config: DeformConfig | None = None) -> FrameChoice:
    """Pick ``e3`` near the normals of ``X`` and away from the current Gauss image.

    Scans a geodesic cap of radius ``m_close / sqrt(N)`` around the hyperbolic
    centroid of ``normals`` and keeps the admissible candidate with the
    largest distance to the Gauss image.
    """
    cfg = config or DeformConfig()
    kind = split_kind(g)
    close_max = cfg.m_close / np.sqrt(N)
    far_min = cfg.m_far / np.sqrt(N)
    center = hyperbolic_centroid(normals)
    cands = cap_candidates(center, close_max, cfg.cap_rings, cfg.cap_directions)
    close, far = frame_margins(cands, normals, gauss, kind)
    ok = (close <= close_max) & (far >= far_min)
    if not np.any(ok):
        raise NoFrameFound(
            f"no admissible e3 among {len(cands)} candidates (best far margin "
            f"{float(np.max(far)):.3g} vs {far_min:.3g})")
    idx = np.flatnonzero(ok)
    k = idx[np.argmax(far[idx])]
    return FrameChoice(complete_frame(cands[k]), kind, float(close[k]), float(far[k]), int(ok.sum()))


def verify_frame(choice: FrameChoice, normals, gauss, N, config=None):
    """Both frame margins on a (denser) sample."""
    cfg = config or DeformConfig()
    close, far = frame_margins(choice.frame.e3, normals, gauss, choice.kind)
    return bool(close[0] <= cfg.m_close / np.sqrt(N) and far[0] >= cfg.m_far / np.sqrt(N))


# ---------------------------------------------------------------------------
# context: the sets, cached samples and the reference immersion
# ---------------------------------------------------------------------------

def labyrinth_sets(lab):
    return [(LabyrinthOmega(lab, i), LabyrinthVarpi(lab, i)) for i in range(lab.n_walls)]


def _thin(z, n):
    if z.size <= n:
        return z
    return z[np.linspace(0, z.size - 1, n).round().astype(int)]


def _norm(v):
    return np.sqrt(np.sum(np.abs(v) ** 2, axis=-1))


@dataclass(eq=False)
class LemmaContext:
    """Everything a step needs besides the previous immersion."""

    N: int
    P: Polygon
    X0: Immersion
    sets: list
    config: DeformConfig = field(default_factory=DeformConfig)
    runge_fn: object = None
    labyrinth: object = None

    def __post_init__(self):
        self._cache = {}
        self.runge_fn = build_runge if self.runge_fn is None else self.runge_fn
        self.kinds = [split_kind(g_values(self.X0.wdata, self.points(k, "varpi", 1)))
                      for k in range(len(self.sets))]

    def points(self, k, which, density):
        key = (k, which, density)
        if key not in self._cache:
            s = self.sets[k][0 if which == "omega" else 1]
            spacing = max(s.feature_size, 1e-12) / (2 * density)
            z = s.sample(spacing)
            self._cache[key] = _thin(z, self.config.set_points * density)
        return self._cache[key]

    def grid(self, density):
        key = ("grid", density)
        if key not in self._cache:
            self._cache[key] = holo.grid_points(self.P, self.config.grid_resolution * density)
        return self._cache[key]

    def normals(self, k, density):
        key = ("normals", k, density)
        if key not in self._cache:
            self._cache[key] = gauss_N(self.X0(self.points(k, "varpi", density)))
        return self._cache[key]


# ---------------------------------------------------------------------------
# one step
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class StepState:
    index: int
    F: Immersion
    frame: Frame | None = None
    kind: str | None = None
    alpha: float | None = None
    certificates: dict = field(default_factory=dict)
    runge: dict | None = None
    history: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    frame_choice: dict | None = None

    @property
    def phi(self):
        return self.F.wdata.phi

    def to_dict(self):
        return {"index": self.index, "alpha": self.alpha, "kind": self.kind,
                "frame": None if self.frame is None else self.frame.to_dict(),
                "certificates": self.certificates, "diagnostics": self.diagnostics,
                "frame_choice": self.frame_choice, "runge": self.runge}


def diagnostics(ctx: LemmaContext, j, prev: Immersion, density=1):
    """The (b1)-(b4) quantities before step ``j``."""
    grid = ctx.grid(density)
    covered = np.zeros(grid.shape, dtype=bool)
    for k in range(j):
        covered |= ctx.sets[k][1].contains(grid)
    off = grid[~covered]
    nphi = _norm(prev.wdata.eval_phi(off)) if off.size else np.zeros(1)
    vp = ctx.points(j, "varpi", density)
    vals = prev(_thin(vp, ctx.config.immersion_points))
    diam = float(np.max(np.linalg.norm(vals[:, None] - vals[None, :], axis=-1))) if len(vals) > 1 else 0.0
    G = surface_normal(prev.wdata, vp)
    Gf = _upper(G[np.all(np.isfinite(G), axis=-1)])
    gdiam = float(np.max(_hdist(Gf[:, None], Gf[None, :]))) if len(Gf) > 1 else 0.0
    return {"b1_sup_phi": float(np.max(nphi)), "b2_inf_phi": float(np.min(nphi)),
            "b3_diam_F": diam, "b4_diam_gauss": gdiam}


def step_certificates(ctx: LemmaContext, j, prev: Immersion, new: Immersion, frame: Frame,
                      density=1):
    """Values and verdicts for (a2)-(a7) of step ``j`` at one sampling density."""
    cfg, N = ctx.config, ctx.N
    omega, varpi = ctx.sets[j]
    wp, wn = prev.wdata, new.wdata
    grid = ctx.grid(density)
    off = grid[~varpi.contains(grid)]
    out = {}

    d_off = _norm(wn.eval_phi(off) - wp.eval_phi(off)) if off.size else np.zeros(1)
    out["a2"] = (float(np.max(d_off)), float(np.max(d_off)) <= 1.0 / N ** 2)

    on = ctx.points(j, "omega", density)
    a3 = float(np.min(_norm(wn.eval_phi(on)))) if on.size else np.inf
    out["a3"] = (a3, a3 >= N ** cfg.a3_power)

    vp = ctx.points(j, "varpi", density)
    a4 = float(np.min(_norm(wn.eval_phi(vp)))) if vp.size else np.inf
    out["a4"] = (a4, a4 >= cfg.c4 / np.sqrt(N))

    a5 = 0.0
    for k in range(j + 1, len(ctx.sets)):
        z = ctx.points(k, "varpi", density)
        if ctx.kinds[k] == "I0":
            Gn, Gp = surface_normal(wn, z), surface_normal(wp, z)
            bad = ~(np.all(np.isfinite(Gn), axis=-1) & np.all(np.isfinite(Gp), axis=-1))
            bad |= np.sign(Gn[..., 2]) != np.sign(Gp[..., 2])
            if np.any(bad):
                a5 = np.inf
                break
            a5 = max(a5, float(np.max(_hdist(Gn, Gp))))
        else:
            gn, gp = g_values(wn, z), g_values(wp, z)
            diff = np.abs(gn - gp)
            a5 = max(a5, float(np.max(np.where(np.isfinite(diff), diff, np.inf))))
    out["a5"] = (a5, a5 < 1.0 / N ** 2)

    nrm = ctx.normals(j, density)
    a61 = float(np.max(_hdist(frame.e3[None, :], nrm)))
    out["a6.1"] = (a61, a61 <= cfg.m_close / np.sqrt(N))

    sample = _thin(grid, cfg.immersion_points * density)
    Fn, Fp = new(sample), prev(sample)
    third = float(np.max(np.abs(coords_in_frame(Fn - Fp, frame)[..., 2])))
    dphi = wn.eval_phi(sample) - wp.eval_phi(sample)
    closed = float(np.max(np.abs(coords_in_frame(dphi, frame)[..., 2])))
    scale = max(1.0, float(np.max(np.abs(Fn))))
    out["a6.2"] = (max(third, closed) / scale, max(third, closed) <= cfg.third_coord_tol * scale)

    keep = ~varpi.contains(sample)
    a7 = float(np.max(np.linalg.norm(Fn[keep] - Fp[keep], axis=-1))) if np.any(keep) else 0.0
    out["a7"] = (a7, a7 <= cfg.c7 / N ** 2)

    cls = classify_points(wn, sample)
    out["no_branch"] = (int(np.sum(cls == "branch")), bool(np.all(cls != "branch")))
    return {k: {"value": v, "passed": bool(p)} for k, (v, p) in out.items()}


def _all_passed(certs):
    return all(c["passed"] for c in certs.values())


def _first_failing(certs):
    for k, c in certs.items():
        if not c["passed"]:
            return k
    return None


def choose_frame(ctx: LemmaContext, j, prev: Immersion):
    """Frame selection for step ``j`` plus the denser re-check."""
    vp = ctx.points(j, "varpi", 1)
    choice = select_frame(ctx.normals(j, 1), surface_normal(prev.wdata, vp),
                          g_values(prev.wdata, vp), ctx.N, ctx.config)
    vp2 = ctx.points(j, "varpi", 4)
    if not verify_frame(choice, ctx.normals(j, 4), surface_normal(prev.wdata, vp2), ctx.N, ctx.config):
        raise NoFrameFound("chosen frame fails on the denser sample")
    return choice


def step(ctx: LemmaContext, j, prev_state: StepState) -> StepState:
    """López-Ros step ``j`` (0-based) with the alpha doubling search."""
    cfg, N = ctx.config, ctx.N
    prev = prev_state.F
    diag = diagnostics(ctx, j, prev)
    choice = choose_frame(ctx, j, prev)
    omega, varpi = ctx.sets[j]
    on = ctx.points(j, "omega", 1)
    base = float(np.min(_norm(prev.wdata.eval_phi(on)))) if on.size else 1.0
    alpha = max(2.0, 2.0 * N ** cfg.a3_power / max(base, 1e-300))
    history = []
    while alpha <= cfg.alpha_cap:
        req = RungeRequest(alpha, omega, varpi, ctx.P, resolution=cfg.runge_resolution,
                           fit_resolution=cfg.runge_fit_resolution, ladder=cfg.runge_ladder)
        try:
            rr = ctx.runge_fn(req)
        except FitFailed as exc:
            history.append({"alpha": alpha, "failing": "runge",
                            "runge": exc.certificate.to_dict()})
            raise AlphaSearchFailed(f"step {j}: Runge fit failed at alpha={alpha:.4g}",
                                    failing="runge", history=history,
                                    certificate=exc.certificate) from exc
        new = prev.with_data(lopez_ros(prev.wdata, rr.h, frame=choice.frame))
        certs = step_certificates(ctx, j, prev, new, choice.frame, 1)
        entry = {"alpha": alpha, "certificates": certs}
        history.append(entry)
        if _all_passed(certs):
            dense = step_certificates(ctx, j, prev, new, choice.frame, 2)
            entry["dense"] = dense
            if _all_passed(dense):
                certs = {k: {**v, "dense_value": dense[k]["value"]} for k, v in certs.items()}
                return StepState(j + 1, new, choice.frame, choice.kind, alpha, certs,
                                 rr.to_dict() if hasattr(rr, "to_dict") else None, history,
                                 diag, choice.to_dict())
        alpha *= 2.0
    last = history[-1]["certificates"] if history else {}
    raise AlphaSearchFailed(f"step {j}: no alpha up to {cfg.alpha_cap:.3g} passes",
                            failing=_first_failing(last), history=history)


# ---------------------------------------------------------------------------
# the lemma
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class LemmaResult:
    Q: Polygon
    Y: Immersion
    report: dict
    states: list

    @property
    def passed(self):
        return bool(self.report.get("passed"))


def _metric_grid(ctx, inp, density):
    cfg = ctx.config
    if ctx.labyrinth is not None and isinstance(ctx.sets[0][0], LabyrinthOmega):
        lab = ctx.labyrinth
        grid = labyrinth_band_grid(lab, inp.eps, fine=lab.mu / (2 * density),
                                   coarse_rows=cfg.band_coarse_rows * density)
        src = np.zeros(grid.shape, dtype=bool)
        src[-1, :] = True
        return grid, src
    grid = UniformGrid(inp.P, inp.P.diameter / (cfg.metric_resolution * density))
    return grid, inp.Peps


def _lift_on_grid(w, grid, chunk=1 << 16):
    lam = np.zeros(grid.shape)
    idx = np.flatnonzero(grid.mask)
    pos = grid.pos.ravel()
    for a in range(0, idx.size, chunk):
        sl = idx[a:a + chunk]
        lam.flat[sl] = lift_factor(w, pos[sl])
    return lam


def lift_distance(ctx, inp, Y: Immersion, density=1):
    """Distance from ``P^eps`` in the lift metric of ``Y``."""
    grid, src = _metric_grid(ctx, inp, density)
    mf = MetricField(grid, _lift_on_grid(Y.wdata, grid))
    return distance_field(mf, src)


def certify_lemma(ctx, inp: LemmaInput, Y: Immersion, Q: Polygon | None = None, density=1):
    """(L.1)-(L.4) plus the (c1)/(c2) diagnostics; extracts ``Q`` when not given."""
    P, Peps, s, R = inp.P, inp.Peps, inp.s, inp.R
    cfg = ctx.config
    rep = {}
    df = lift_distance(ctx, inp, Y, density)
    boundary_nodes = df.values[0, :] if df.grid.periodic else \
        df.values[df.grid.mask & (P.boundary_distance(df.grid.pos) <= 0.75 * df.grid.spacing)]
    c1 = float(np.min(boundary_nodes))
    rep["c1"] = {"value": c1, "passed": c1 > 2 * s}
    if Q is None:
        try:
            Q = extract_Q(df, s, Peps, P)
        except (LevelSetNotSeparating, QOutsideK) as exc:
            rep["L.1"] = {"value": str(exc), "passed": False}
            rep["L.2"] = {"value": None, "passed": False}
            return None, rep
    nest = bool(Q.contains_polygon(Peps, strict=True) and P.contains_polygon(Q, strict=True))
    rep["L.1"] = {"value": nest, "passed": nest}
    ring = Q.sample_boundary(df.grid.spacing)
    dq = df.interp(ring)
    l2 = float(np.nanmin(dq)) if np.any(np.isfinite(dq)) else -np.inf
    rep["L.2"] = {"value": l2, "passed": bool(np.all(np.isfinite(dq)) and l2 > s)}
    res = cfg.validation_resolution * density
    zq = holo.grid_points(Q, res)
    margin = float(np.min(region_margin(Y(zq))))
    rep["L.3"] = {"value": margin, "R": R, "passed": margin > R}
    ze = holo.grid_points(Peps, res)
    diff = float(np.max(np.linalg.norm(Y(ze) - inp.X(ze), axis=-1)))
    rep["L.4"] = {"value": diff, "passed": diff < inp.eps}
    zo = holo.grid_points(P, res)
    covered = np.zeros(zo.shape, dtype=bool)
    for _, va in ctx.sets:
        covered |= va.contains(zo)
    if np.any(~covered):
        c2 = float(np.max(np.linalg.norm(Y(zo[~covered]) - inp.X(zo[~covered]), axis=-1)))
        rep["c2"] = {"value": c2, "passed": True}
    return Q, rep


def c33_decomposition(Y: Immersion, X: Immersion, frame: Frame, z):
    """Planar and vertical parts of ``Y(z) - X(z)`` in the Euclidean companion of ``frame``."""
    d = Y(np.atleast_1d(z)) - X(np.atleast_1d(z))
    c = euclid_coords(d, euclid_companion(frame))
    return np.linalg.norm(c[..., :2], axis=-1), np.abs(c[..., 2])


def c33_spot_check(Y: Immersion, X: Immersion, z, r, R):
    """Per-point chain: split ``Y - X`` into a part orthogonal to ``N0(X)`` and a rest.

    The orthogonal part is handled by :func:`shrink_check`; the rest is small
    when the frame of the piece is adapted.  Returns the verdict of each link.
    """
    p = X(np.atleast_1d(z))[0]
    d = Y(np.atleast_1d(z))[0] - p
    _, n0 = gauss_maps(p)
    v = d - (d @ n0) * n0
    x = float(np.linalg.norm(v))
    out = {"planar": x, "normal": float(abs(d @ n0))}
    if 0 < x < r:
        out["shrink"] = bool(shrink_check(p, v, r))
    out["in_B_R"] = bool(in_region(p + d, Region(R)))
    return out


def run_chain(ctx: LemmaContext, X: Immersion):
    states = [StepState(0, X)]
    for j in range(len(ctx.sets)):
        states.append(step(ctx, j, states[-1]))
    return states


def lemma_for_N(inp: LemmaInput, N, config=None, sets_fn=None, runge_fn=None) -> LemmaResult:
    """The whole construction at one ``N``; raises on step failures."""
    cfg = config or DeformConfig()
    lab = build_labyrinth(inp.P, N, cfg.zeta_factor * inp.eps)
    sets = (sets_fn or labyrinth_sets)(lab)
    ctx = LemmaContext(N, inp.P, inp.X, sets, cfg, runge_fn, lab)
    states = run_chain(ctx, inp.X)
    F = states[-1].F
    Q, rep1 = certify_lemma(ctx, inp, F, None, 1)
    report = {"N": N, "alphas": [s.alpha for s in states[1:]],
              "steps": [s.to_dict() for s in states[1:]], "coarse": rep1}
    if Q is not None:
        _, rep2 = certify_lemma(ctx, inp, F, Q, 2)
        report["dense"] = rep2
        keys = ("L.1", "L.2", "L.3", "L.4")
        report["passed"] = all(rep1[k]["passed"] and rep2[k]["passed"] for k in keys)
        failing = [k for k in keys if not (rep1[k]["passed"] and rep2[k]["passed"])]
        report["failing"] = failing[0] if failing else None
        Y = Immersion(WData(F.wdata.phi, Q, F.wdata.frame), F.V, F.basepoint)
    else:
        report["passed"] = False
        report["failing"] = "L.1"
        Y = F
    return LemmaResult(Q, Y, report, states)


def lemma_step(inp: LemmaInput, config=None, sets_fn=None, runge_fn=None) -> LemmaResult:
    """Try ``N = m * (number of sides)`` along the configured ladder.

    Returns the first result whose four certificates pass at both densities.
    A failing Runge fit ends the search early when ``early_exit`` is set:
    larger ``N`` only makes the pieces thinner and the fit harder.
    """
    cfg = config or DeformConfig()
    attempts = []
    for m in cfg.n_multipliers:
        N = m * inp.P.n_sides
        try:
            res = lemma_for_N(inp, N, cfg, sets_fn, runge_fn)
        except (NTooSmall, OffsetDegenerate) as exc:
            attempts.append({"N": N, "failing": "labyrinth", "message": str(exc)})
            continue
        except NoFrameFound as exc:
            attempts.append({"N": N, "failing": "frame", "message": str(exc)})
            continue
        except AlphaSearchFailed as exc:
            attempts.append({"N": N, "failing": exc.failing, "message": str(exc),
                             "runge": None if exc.certificate is None else exc.certificate.to_dict()})
            if exc.failing == "runge" and cfg.early_exit:
                break
            continue
        if res.passed:
            res.report["attempts"] = attempts
            return res
        attempts.append({"N": N, "failing": res.report["failing"], "report": res.report})
    failing = attempts[-1]["failing"] if attempts else None
    raise NExhausted(f"no N in the ladder passes; last failing certificate: {failing}",
                     failing=failing, attempts=attempts)


__all__ = [
    "DeformConfig", "LemmaInput", "LemmaContext", "StepState", "FrameChoice", "LemmaResult",
    "select_frame", "verify_frame", "choose_frame", "cap_candidates", "split_kind", "step", "step_certificates",
    "diagnostics", "lemma_step", "lemma_for_N", "certify_lemma", "labyrinth_sets",
    "c33_decomposition", "c33_spot_check", "run_chain",
]
