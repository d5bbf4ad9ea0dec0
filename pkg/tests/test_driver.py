import numpy as np
import pytest

from maxdisk.driver import (
    DriverConfig, advance, make_alpha_seq, make_radius_seq, radius_ok, radius_sequence,
    radius_tail, seed, trial_eps,
)
from maxdisk.errors import NExhausted, SearchExhausted, TrialLadderExhausted


def test_alpha_sequence():
    a = make_alpha_seq(4)
    assert np.allclose(a, [2 ** -0.5, 2 ** -0.25, 2 ** -0.125, 2 ** -0.0625])
    assert np.all((a > 0) & (a < 1))
    assert np.prod(make_alpha_seq(60)) == pytest.approx(0.5, rel=1e-12)
    with pytest.raises(ValueError):
        make_alpha_seq(0)


def test_radius_sequence_examples():
    r1, seq = make_radius_seq(4)
    assert r1 == 2.5
    assert np.allclose(seq, [2.5, 2.0413, 1.8182, 1.6856], atol=1e-4)
    assert not radius_ok(1.2, 4)
    assert np.isnan(radius_sequence(1.2, 4)[-1])
    with pytest.raises(SearchExhausted):
        make_radius_seq(4, max_r=2.2)


def test_radius_tail_bounds_the_later_stages():
    seq = radius_sequence(2.5, 400)
    assert seq[3] - seq[-1] <= radius_tail(4)


def test_seed_containment():
    st = seed(2.5)
    assert st.n == 1 and st.certificates["C"]["passed"]
    assert st.certificates["C"]["value"] > 0
    assert st.core.area == pytest.approx(0.1 ** 2)
    with pytest.raises(ValueError):
        seed(1.0)


def test_trial_eps():
    e = trial_eps(2, 0.5, depth=4)
    assert np.allclose(e, [0.125, 0.0625, 0.03125, 0.015625])
    assert trial_eps(3, 0.01, depth=1)[0] == 0.005


def test_advance_ladder_exhausted():
    def never(inp, cfg):
        raise NExhausted("stub", failing="L.2")

    with pytest.raises(TrialLadderExhausted):
        advance(seed(2.5), 2, make_alpha_seq(2)[1], DriverConfig(ladder_depth=3), never)


def test_advance_runge_failure_ends_early():
    calls = []

    def runge_fails(inp, cfg):
        calls.append(inp.eps)
        raise NExhausted("stub", failing="runge")

    with pytest.raises(NExhausted):
        advance(seed(2.5), 2, make_alpha_seq(2)[1], DriverConfig(ladder_depth=3), runge_fails)
    assert len(calls) == 1
