import numpy as np
import pytest
from hypothesis import given, strategies as st

from varweights.lattice import (
    Cube, LatticeError, PositivityError, SampledField, build_lattice, check_positive,
    cube_geomean, cube_mean, dyadic_family,
)


def test_midpoints_four_points():
    lat = build_lattice(1, 1.0, 4)
    np.testing.assert_allclose(lat.axis, [-0.75, -0.25, 0.25, 0.75])


def test_two_dim_counts():
    lat = build_lattice(2, 2.0, 8)
    assert lat.size == 64
    assert lat.spacing == 0.5


def test_q0_fits_on_2e_box():
    lat = build_lattice(1, 2 * np.e, 1024)
    assert lat.spacing == pytest.approx(4 * np.e / 1024)
    assert lat.contains(Cube((0.0,), 2 * np.e))


@pytest.mark.parametrize("args", [(4, 1.0, 8), (1, -1.0, 8), (1, 1.0, 6), (1, 1.0, 2)])
def test_bad_lattice_rejected(args):
    with pytest.raises(LatticeError):
        build_lattice(*args)


def test_dyadic_levels_zero_one():
    lat = build_lattice(1, 1.0, 16)
    fam = dyadic_family(lat, 0, 1)
    bounds = sorted((c.lower[0], c.upper[0]) for c in fam)
    assert bounds == [(-1.0, 0.0), (-1.0, 1.0), (0.0, 1.0)]


def test_dyadic_count():
    assert len(dyadic_family(build_lattice(1, 1.0, 16), 0, 2)) == 7


def test_half_shifted_translates():
    fam = dyadic_family(build_lattice(1, 1.0, 16), 1, 1, include_translates=True)
    bounds = sorted((c.lower[0], c.upper[0]) for c in fam)
    assert bounds == [(-1.0, 0.0), (-0.5, 0.5), (0.0, 1.0)]
    assert sum(fam.shifted) == 1


def test_cube_mean_constant_and_linear():
    lat = build_lattice(1, 1.0, 1024)
    Q = Cube((0.5,), 1.0)
    assert cube_mean(SampledField(lat, np.full(lat.shape, 3.0)), Q) == pytest.approx(3.0)
    x = lat.coords()[0]
    assert abs(cube_mean(SampledField(lat, x), Q) - 0.5) <= lat.spacing


def test_cube_mean_exp_against_closed_form():
    lat = build_lattice(1, 1.0, 2**14)
    f = SampledField(lat, np.exp(lat.coords()[0]))
    assert cube_mean(f, Cube((0.5,), 1.0)) == pytest.approx(np.e - 1, abs=1e-6)


def test_geomean_exp():
    lat = build_lattice(1, 1.0, 2**14)
    f = SampledField(lat, np.exp(lat.coords()[0]))
    assert cube_geomean(f, Cube((0.5,), 1.0)) == pytest.approx(np.exp(0.5), abs=1e-6)


def test_geomean_tent_weight():
    lat = build_lattice(1, 1.0, 2**14)
    x = lat.coords()[0]
    k = 10.0
    winv = k ** (-1 / (3 - 2 * np.abs(x)))
    g = cube_geomean(SampledField(lat, winv), Cube((0.5,), 1.0))
    assert g == pytest.approx(k ** (-np.log(3) / 2), abs=1e-9)


def test_positivity_floor():
    with pytest.raises(PositivityError):
        check_positive(np.array([1.0, 0.0]))
    with pytest.raises(PositivityError):
        check_positive(np.array([1.0, -2.0]))


def test_misaligned_cube_rejected():
    lat = build_lattice(1, 1.0, 16)
    with pytest.raises(LatticeError):
        lat.region(Cube((0.01,), 0.5))
    assert not lat.contains(Cube((0.0,), 4.0))


def test_gather_matches_region():
    lat = build_lattice(2, 1.0, 16)
    v = np.arange(lat.size, dtype=float).reshape(lat.shape)
    cubes = [Cube((-0.5, 0.5), 1.0), Cube((0.5, -0.5), 1.0)]
    G = lat.gather(v, cubes)
    for row, c in zip(G, cubes):
        np.testing.assert_array_equal(row, v[lat.region(c)].ravel())


@given(st.integers(1, 3), st.integers(0, 3))
def test_level_partitions_box(dim, level):
    lat = build_lattice(dim, 1.0, 8 if dim == 3 else 16)
    fam = dyadic_family(lat, level, level)
    assert sum(c.volume for c in fam) == pytest.approx(2.0**dim, rel=1e-15)


_pos = st.floats(1e-3, 1e3, allow_nan=False)


@given(st.lists(_pos, min_size=16, max_size=16), st.integers(0, 3))
def test_geomean_below_mean(vals, level):
    lat = build_lattice(1, 1.0, 16)
    f = SampledField(lat, np.array(vals))
    for c in dyadic_family(lat, level, level):
        assert cube_geomean(f, c) <= cube_mean(f, c) * (1 + 1e-12)


@given(st.lists(st.floats(-1e3, 1e3), min_size=16, max_size=16),
       st.lists(st.floats(-1e3, 1e3), min_size=16, max_size=16),
       st.floats(-10, 10), st.floats(-10, 10))
def test_cube_mean_linear(f, g, a, b):
    lat = build_lattice(1, 1.0, 16)
    F, G = SampledField(lat, np.array(f)), SampledField(lat, np.array(g))
    Q = Cube((0.5,), 1.0)
    lhs = cube_mean(SampledField(lat, a * F.values + b * G.values), Q)
    rhs = a * cube_mean(F, Q) + b * cube_mean(G, Q)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-9)
