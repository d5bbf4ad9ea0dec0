import numpy as np
import pytest

from maxdisk.errors import EmptySource, LevelSetNotSeparating, PathLeavesDomain
from maxdisk.labyrinth import build_labyrinth
from maxdisk.metricdist import (
    MetricField, UniformGrid, certify_Q, dist_sets, distance_field, extract_Q,
    labyrinth_band_grid, labyrinth_crossing_distance, path_length,
)
from maxdisk.polygon import Polygon

UNIT = Polygon.square(1.0, center=0.5 + 0.5j)


def _flat(domain, h, c=1.0):
    return MetricField.from_function(UniformGrid(domain, h), lambda z: np.full(z.shape, c))


def _left(grid):
    m = np.zeros(grid.shape, dtype=bool)
    m[:, 0] = True
    return m & grid.mask


def test_path_length_examples():
    mf = _flat(UNIT, 1 / 16)
    assert path_length(mf, [0.2, 0.2 + 1j * 0.6, 0.6 + 0.9j]) == pytest.approx(1.1, abs=1e-12)
    assert path_length(_flat(UNIT, 1 / 16, 2.0), [0, 1]) == pytest.approx(2.0, abs=1e-12)
    mf = MetricField.from_function(UniformGrid(UNIT, 1 / 16), np.abs)
    assert path_length(mf, [0, 1]) == pytest.approx(0.5, abs=1e-6)
    with pytest.raises(PathLeavesDomain):
        path_length(mf, [0.5, 1.5])


def test_flat_crossing():
    mf = _flat(UNIT, 1 / 256)
    df = distance_field(mf, _left(mf.grid))
    right = df.values[:, -1][mf.grid.mask[:, -1]]
    assert np.all(np.abs(right - 1) < 0.03)
    assert dist_sets(mf, _left(mf.grid), np.fliplr(_left(mf.grid))) == pytest.approx(1, rel=0.03)


def test_whole_domain_source():
    mf = _flat(UNIT, 1 / 32)
    df = distance_field(mf, mf.grid.mask)
    assert np.all(df.values[mf.grid.mask] == 0)
    assert dist_sets(mf, UNIT, UNIT) == 0


def test_homogeneity_exact():
    mf = MetricField.from_function(UniformGrid(UNIT, 1 / 64), lambda z: 1 + np.abs(z) ** 2)
    src = _left(mf.grid)
    a = distance_field(mf, src).values
    b = distance_field(mf.scaled(2.0), src).values
    assert np.array_equal(b, 2 * a)


def test_symmetry():
    mf = MetricField.from_function(UniformGrid(UNIT, 1 / 64), lambda z: 1 + z.real * z.imag)
    u, v = [0.1 + 0.1j], [0.8 + 0.7j]
    assert dist_sets(mf, u, v) == pytest.approx(dist_sets(mf, v, u), rel=1e-12)


def test_refinement_order():
    # lambda depends on x only, so horizontal paths are optimal and the error is the
    # trapezoid rule's; the exact distance to x = 1 is e - 1
    errs = []
    for h in (1 / 16, 1 / 32, 1 / 64):
        mf = MetricField.from_function(UniformGrid(UNIT, h), lambda z: np.exp(z.real))
        df = distance_field(mf, _left(mf.grid))
        errs.append(abs(np.min(df.values[:, -1]) - (np.e - 1)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.0)


def test_empty_source():
    mf = _flat(UNIT, 1 / 16)
    with pytest.raises(EmptySource):
        distance_field(mf, np.zeros(mf.grid.shape, dtype=bool))


def test_extract_Q_flat_offset():
    P = Polygon.square(2.0)
    Peps = Polygon.square(0.5)
    h = 2 / 256
    s = 0.1
    mf = _flat(P, h)
    df = distance_field(mf, Peps)
    Q = extract_Q(df, s, Peps, P)
    cert = certify_Q(df, Q, s, Peps, P)
    assert all(cert.values())
    # the 8-neighbour graph distance lies between the Euclidean one and 1.083 times it
    ref = Peps.shapely.buffer(1.5 * s)
    assert Q.shapely.hausdorff_distance(ref) < 0.083 * 1.5 * s + 2 * h


def test_extract_Q_not_separating():
    P = Polygon.square(2.0)
    Peps = Polygon.square(1.0)
    df = distance_field(_flat(P, 1 / 64), Peps)
    with pytest.raises(LevelSetNotSeparating):
        extract_Q(df, 0.4, Peps, P)


def test_band_grid_rows_resolve_labyrinth():
    lab = build_labyrinth(Polygon.square(2.0), 4, 0.6)
    grid = labyrinth_band_grid(lab, 0.6)
    assert np.max(np.diff(grid.t[grid.t <= lab.depth])) <= lab.mu / 2 + 1e-15
    # every wall is a grid column
    assert np.all(np.min(np.abs(grid.sigma[:, None] - np.arange(lab.n_walls)[None, :]), 0) < 1e-12)


def test_labyrinth_crossing_flat_part():
    lab = build_labyrinth(Polygon.square(2.0), 4, 0.6)
    d, _ = labyrinth_crossing_distance(lab, c=1.0)
    # paths must wind around the barriers instead of crossing the expensive Omega
    assert d / (1.0 * lab.N) > 1.0
    assert d == pytest.approx(23.53354100924211, rel=1e-9)
