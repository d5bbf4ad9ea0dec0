"""Command-line front end: ``maxdisk <stage> [options]``.

Every stage writes a JSON report into ``--out`` and exits with status 0 only
when all of its certificates pass.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import export, holo
from .config import RunConfig, load_config
from .errors import AlphaSearchFailed, FitFailed, MaxDiskError, NExhausted
from .labyrinth import build_labyrinth, diam_estimates
from .polygon import Polygon
from .weierstrass import flat_disk

log = logging.getLogger("maxdisk")


def _seed_immersion(cfg: RunConfig):
    P = Polygon.square(cfg.seed.side)
    return P, flat_disk(P, (0.0, 0.0, cfg.seed.height))


def _lab(cfg):
    return build_labyrinth(Polygon.square(cfg.labyrinth.side), cfg.labyrinth.N, cfg.labyrinth.zeta0)


def cmd_labyrinth(cfg, out):
    lab = _lab(cfg)
    report = {"summary": lab.summary()}
    walls = [(*lab.wall(i), "red") for i in range(lab.n_walls)]
    export.write_svg(out / "labyrinth.svg", [(lab.P, "black"), (lab.P_zeta0, "blue")],
                     segments=walls)
    try:
        X = flat_disk(lab.P, (0.0, 0.0, -2.0 - lab.P.diameter))
        report["diameters"] = diam_estimates(lab, X).to_dict()
    except MaxDiskError as exc:
        report["diameters"] = {"error": str(exc)}
    export.write_json(out / "labyrinth.json", report)
    return True, report


def cmd_runge(cfg, out):
    from .runge import LabyrinthOmega, LabyrinthVarpi, RungeRequest, build_runge

    lab = _lab(cfg)
    i = cfg.runge.index
    req = RungeRequest(cfg.runge.alpha, LabyrinthOmega(lab, i), LabyrinthVarpi(lab, i), lab.P,
                       resolution=cfg.runge.resolution, fit_resolution=cfg.runge.fit_resolution)
    try:
        res = build_runge(req)
    except FitFailed as exc:
        report = {"passed": False, "failing": "runge", "certificate": exc.certificate.to_dict(),
                  "history": exc.history, "message": str(exc)}
        export.write_json(out / "runge.json", report)
        return False, report
    report = {"passed": res.certificate.passed, **res.to_dict()}
    export.write_json(out / "runge.json", report)
    return res.certificate.passed, report


def cmd_lemma(cfg, out):
    from .deform import LemmaInput, lemma_step

    P, X = _seed_immersion(cfg)
    inp = LemmaInput(cfg.seed.r, P, X, cfg.seed.eps, cfg.seed.s)
    try:
        res = lemma_step(inp, cfg.lemma)
    except NExhausted as exc:
        report = {"passed": False, "failing": exc.failing, "attempts": exc.attempts,
                  "R": inp.R, "message": str(exc)}
        export.write_json(out / "lemma.json", report)
        return False, report
    export.write_json(out / "lemma.json", {"R": inp.R, "Q": res.Q.to_list(), **res.report})
    export.write_obj(out / "lemma_Y.obj", res.Y, res.Q, cfg.export_resolution)
    return res.passed, res.report


def cmd_iterate(cfg, out):
    from .driver import iterate, limit_report, make_radius_seq, seed

    n_target = cfg.driver.n_target
    r1, radii = make_radius_seq(n_target, cfg.driver.radius_floor)
    states = [seed(r1)]
    report = {"r1": r1, "radius_sequence": radii}
    try:
        states = iterate(states, n_target, cfg.driver)
    except (NExhausted, AlphaSearchFailed, MaxDiskError) as exc:
        report.update({"passed": False, "failing": getattr(exc, "failing", type(exc).__name__),
                       "message": str(exc), "states": [s.to_dict() for s in states]})
        export.write_json(out / "iterate.json", report)
        return False, report
    rep = limit_report(states)
    report.update({"states": [s.to_dict() for s in states], "limit": rep})
    report["passed"] = bool(rep["containment_margin"] > 0 and rep["branch_points"] == 0)
    export.write_json(out / "iterate.json", report)
    export.write_csv(out / "ledger.csv", [
        {"n": s.n, "eps": s.eps, "xi": s.xi, "r": s.r, "dist_B": s.dist_B, "sup_D": s.sup_D,
         "ratio_E": s.ratio_E} for s in states])
    for s in states:
        export.write_obj(out / f"psi_{s.n}.obj", s.psi, s.P, cfg.export_resolution)
    return report["passed"], report


def verify_checks(rng=None):
    """Quick invariant suite: (name, passed, measured value)."""
    from .lorentz3 import (Region, complete_frame, euclid_norm, gauss_maps, in_region,
                           project_to_h2, shrink_check, stereo, stereo_inv)
    from .metricdist import MetricField, UniformGrid, distance_field
    from .weierstrass import check_conformal, gf_from_phi, lopez_ros, phi_from_gf, rotate_frame

    rng = np.random.default_rng(0) if rng is None else rng
    out = []
    w = rng.uniform(-0.9, 0.9, 200) + 1j * rng.uniform(-0.9, 0.9, 200)
    w = w[np.abs(w) < 0.95]
    err = float(np.max(np.abs(stereo(stereo_inv(w)) - w)))
    out.append(("stereo roundtrip", err < 1e-12, err))

    P = Polygon.square(1.0)
    g = holo.poly([0.1, 0.3])
    f = holo.exp(holo.poly([0.0, 0.5]))
    wd = phi_from_gf(g, f, P)
    ok, res = check_conformal(wd, 64)
    out.append(("conformality", ok, res))
    g2, f2 = gf_from_phi(wd.phi, P)
    z = holo.grid_points(P, 16)
    err = float(np.max(np.abs(f2(z) - f(z))))
    out.append(("gf roundtrip", err < 1e-12, err))

    v = project_to_h2(np.array([0.3, -0.2, 1.5]))
    fr = complete_frame(v)
    back = rotate_frame(rotate_frame(wd, fr), wd.frame)
    err = float(np.max(np.abs(back.eval_phi(z) - wd.eval_phi(z))))
    out.append(("frame roundtrip", err < 1e-9, err))

    h = holo.exp(holo.poly([0.2, 0.4j]))
    lr = lopez_ros(wd, h, fr)
    from .lorentz3 import coords_in_frame
    d3 = float(np.max(np.abs(coords_in_frame(lr.eval_phi(z) - wd.eval_phi(z), fr)[..., 2])))
    out.append(("lopez-ros third coordinate", d3 < 1e-12, d3))

    fails = 0
    for _ in range(2000):
        t = rng.uniform(1.0, 3.0)
        p = np.array([*rng.uniform(-0.5, 0.5, 2), -rng.uniform(t + 0.6, t + 2.0)])
        if not in_region(p, Region(t)):
            continue
        _, n0 = gauss_maps(p)
        u = rng.normal(size=3)
        u -= (u @ n0) * n0
        x = rng.uniform(0.01, 0.99) * t
        vv = u / euclid_norm(u) * x
        fails += int(not shrink_check(p, vv, t))
    out.append(("shrink oracle", fails == 0, fails))

    grid = UniformGrid(P, 1.0 / 64)
    mf = MetricField.from_function(grid, lambda q: 1.0 + np.abs(q))
    src = np.zeros(grid.shape, dtype=bool)
    src[:, 0] = True
    a = distance_field(mf, src).values
    b = distance_field(mf.scaled(3.0), src).values
    err = float(np.max(np.abs(b - 3.0 * a)))
    out.append(("distance homogeneity", err <= 1e-12 * np.max(b), err))
    return out


def cmd_verify(cfg, out):
    checks = verify_checks()
    report = {"checks": [{"name": n, "passed": bool(p), "value": v} for n, p, v in checks]}
    report["passed"] = all(c["passed"] for c in report["checks"])
    for c in report["checks"]:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}: {c['value']:.3g}")
    export.write_json(out / "verify.json", report)
    return report["passed"], report


def cmd_export(cfg, out):
    P, X = _seed_immersion(cfg)
    export.write_obj(out / "seed.obj", X, P, cfg.export_resolution)
    from .metricdist import MetricField, UniformGrid, distance_field
    from .weierstrass import lift_factor

    grid = UniformGrid(P, P.diameter / cfg.export_resolution)
    mf = MetricField.from_function(grid, lambda z: lift_factor(X.wdata, z))
    Peps = P.inward_offset(cfg.seed.eps)
    df = distance_field(mf, Peps)
    export.write_grid_csv(out / "seed_distance.csv", grid, np.where(np.isfinite(df.values), df.values, np.nan))
    export.write_svg(out / "seed.svg", [(P, "black"), (Peps, "blue")])
    return True, {"files": ["seed.obj", "seed.csv", "seed_distance.csv", "seed.svg"]}


COMMANDS = {
    "labyrinth": cmd_labyrinth,
    "runge": cmd_runge,
    "lemma": cmd_lemma,
    "iterate": cmd_iterate,
    "verify": cmd_verify,
    "export": cmd_export,
}


def demo_config(cfg: RunConfig) -> RunConfig:
    """Smaller grids and ladders so every stage finishes in seconds to minutes."""
    cfg.runge.resolution = 256
    cfg.lemma.runge_resolution = 256
    cfg.lemma.runge_ladder = ((16, 8), (32, 16), (64, 32))
    cfg.lemma.grid_resolution = 16
    cfg.driver.n_target = min(cfg.driver.n_target, 2)
    return cfg


def build_parser():
    p = argparse.ArgumentParser(prog="maxdisk", description=__doc__.splitlines()[0])
    p.add_argument("command", nargs="?", choices=sorted(COMMANDS))
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--n", type=int, help="labyrinth N (labyrinth, runge) or target stage (iterate)")
    p.add_argument("--resolution", type=int, help="certification / export resolution")
    p.add_argument("--print-config", action="store_true", help="print the effective configuration")
    p.add_argument("--seed-demo", action="store_true", help="reduced sizes for a quick demonstration")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
    except (OSError, ValueError, TypeError) as exc:
        print(f"error: cannot read configuration: {exc}", file=sys.stderr)
        return 2
    if args.seed_demo:
        cfg = demo_config(cfg)
    if args.n is not None:
        cfg.labyrinth.N = args.n
        cfg.driver.n_target = args.n
    if args.resolution is not None:
        cfg.runge.resolution = args.resolution
        cfg.export_resolution = args.resolution
    if args.out is not None:
        cfg.out = str(args.out)
    try:
        cfg.validate()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.print_config:
        print(cfg.to_json())
        if args.command is None:
            return 0
    if args.command is None:
        build_parser().print_usage(sys.stderr)
        return 2
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        passed, report = COMMANDS[args.command](cfg, out)
    except MaxDiskError as exc:
        print(f"{args.command}: failed ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 1
    elapsed = time.perf_counter() - t0
    if passed:
        print(f"{args.command}: all certificates passed ({elapsed:.1f} s); reports in {out}")
        return 0
    failing = report.get("failing") if isinstance(report, dict) else None
    print(f"{args.command}: certificate failed: {failing} ({elapsed:.1f} s); reports in {out}",
          file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
