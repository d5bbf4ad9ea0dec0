from dataclasses import replace

import numpy as np
import pytest

from maxdisk import holo
from maxdisk.deform import (
    DeformConfig, LemmaContext, LemmaInput, StepState, cap_candidates, choose_frame,
    hyperbolic_centroid, lemma_step, select_frame,
    split_kind, step,
)
from maxdisk.errors import AlphaSearchFailed, FitFailed, NExhausted, NoFrameFound, PreconditionViolated
from maxdisk.lorentz3 import coords_in_frame, gauss_N
from maxdisk.polygon import Polygon
from maxdisk.runge import RungeResult, certify
from maxdisk.weierstrass import flat_disk, surface_normal


def _with_runge(ctx, runge_fn, **cfg):
    return LemmaContext(ctx.N, ctx.P, ctx.X0, ctx.sets, replace(ctx.config, **cfg), runge_fn)


def test_config_roundtrip():
    cfg = DeformConfig(a3_power=3.0, n_multipliers=(2, 4))
    assert DeformConfig.from_dict(cfg.to_dict()) == cfg


def test_split_kind():
    assert split_kind(np.array([0.2, 0.5j])) == "I0"
    assert split_kind(np.array([1.0, np.exp(0.3j)])) == "J0"
    with pytest.raises(NoFrameFound):
        split_kind(np.array([1.0, np.inf]))


def test_select_frame_on_flat_seed(bump_context):
    ctx = bump_context
    choice = choose_frame(ctx, 0, ctx.X0)
    assert choice.kind == "I0"
    assert choice.close <= ctx.config.m_close / np.sqrt(ctx.N)
    assert choice.far >= ctx.config.m_far / np.sqrt(ctx.N)
    # a Gauss image covering every candidate leaves no room for a frame
    cfg = ctx.config
    nrm = gauss_N(ctx.X0(ctx.points(0, "varpi", 1)))
    cover = cap_candidates(hyperbolic_centroid(nrm), cfg.m_close / np.sqrt(ctx.N),
                           cfg.cap_rings, cfg.cap_directions)
    with pytest.raises(NoFrameFound):
        select_frame(nrm, cover, np.zeros(len(cover)), ctx.N, cfg)


def test_step_with_edge_bump(bump_context):
    ctx = bump_context
    st = step(ctx, 0, StepState(0, ctx.X0))
    assert st.index == 1 and st.alpha >= ctx.N ** ctx.config.a3_power
    assert all(c["passed"] for c in st.certificates.values())
    assert st.history[-1]["alpha"] == st.alpha
    # the third coordinate in the chosen frame does not move
    z = holo.grid_points(ctx.P, 16)
    d = coords_in_frame(st.F(z) - ctx.X0(z), st.frame)[:, 2]
    assert np.max(np.abs(d)) <= 1e-11 * max(1.0, np.max(np.abs(st.F(z))))
    # the flat seed's normals stay put away from the strip
    far = z[z.real < 0.1]
    assert np.allclose(surface_normal(st.F.wdata, far), surface_normal(ctx.X0.wdata, far), atol=1e-3)


def test_constant_runge_function_fails_a3(bump_context):
    def one(req):
        return RungeResult(holo.ONE, certify(holo.ONE, req, 32), 0, 0, [])

    ctx = _with_runge(bump_context, one, alpha_cap=2.0 ** 12)
    with pytest.raises(AlphaSearchFailed) as info:
        step(ctx, 0, StepState(0, ctx.X0))
    assert info.value.failing == "a3"
    assert len(info.value.history) >= 1


def test_runge_failure_is_reported(bump_context):
    def fail(req):
        err = FitFailed("no fit")
        err.certificate, err.history = certify(holo.ONE, req, 32), []
        raise err

    ctx = _with_runge(bump_context, fail)
    with pytest.raises(AlphaSearchFailed) as info:
        step(ctx, 0, StepState(0, ctx.X0))
    assert info.value.failing == "runge" and info.value.certificate is not None


def test_lemma_input_preconditions():
    P = Polygon.square(0.5)
    X = flat_disk(P, (0, 0, -2.2))
    inp = LemmaInput(2.0, P, X, 0.1, 0.25)
    assert inp.R == pytest.approx(np.sqrt(4 - 0.25) - 0.1)
    assert inp.Peps.area == pytest.approx(0.3 ** 2)
    with pytest.raises(PreconditionViolated):
        LemmaInput(2.0, P, X, 0.1, 1.0)       # r^2 - 4 s^2 <= 0
    with pytest.raises(PreconditionViolated):
        LemmaInput(2.0, P, X, -0.1, 0.25)
    with pytest.raises(PreconditionViolated):
        LemmaInput(2.5, P, X, 0.1, 0.25)      # V = (0, 0, -2.2) lies inside B(2.5)


def test_lemma_step_exhausts_with_early_exit():
    P = Polygon.square(2.0)
    inp = LemmaInput(4.0, P, flat_disk(P, (0, 0, -4.5)), 0.6, 0.25)
    calls = []

    def fail(req):
        calls.append(req.alpha)
        err = FitFailed("no fit")
        err.certificate, err.history = certify(holo.ONE, req, 16), []
        raise err

    cfg = DeformConfig(n_multipliers=(1, 2), set_points=50, grid_resolution=16)
    with pytest.raises(NExhausted) as info:
        lemma_step(inp, cfg, runge_fn=fail)
    err = info.value
    assert err.failing == "runge"
    assert [a["N"] for a in err.attempts] == [4]
    assert len(calls) == 1
