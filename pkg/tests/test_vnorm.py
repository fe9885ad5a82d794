import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad
from scipy.optimize import brentq

from varweights import catalog
from varweights.exponents import constant_profile, from_spec, scale
from varweights.lattice import Cube, build_lattice
from varweights.vnorm import (
    C_H, convexify_check, holder_pairing, indicator_norm, indicator_norm_check, modular, norm,
    weighted_norm,
)

LOG3 = np.log(3)


def brent_norm(f, p, h):
    """Independent Luxemburg norm: plain-space root of rho(f/lam) = 1."""
    f = np.abs(np.ravel(f))
    p = np.ravel(p)
    if not f.any():
        return 0.0
    rho = lambda lam: np.sum((f / lam) ** p) * h - 1.0
    lo, hi = 1e-6, 1e6
    return brentq(rho, lo, hi, xtol=1e-14, rtol=1e-13)


@pytest.fixture(scope="module")
def lat_big():
    return build_lattice(1, 1.0, 2**14)


def test_cube_of_constant(lat_big):
    p = constant_profile(lat_big, 3.0)
    x = lat_big.coords()[0]
    assert modular(np.where(x > 0, 2.0, 0.0), p) == pytest.approx(8.0)


def test_indicator_modular_is_volume(lat_big):
    p = from_spec({"kind": "expr", "expr": "3 - 2*abs(x)"}, lat_big)
    x = lat_big.coords()[0]
    assert modular((x > 0).astype(float), p) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("k", [2, 10, 100])
def test_tent_modular_against_quad(lat_big, k):
    p = from_spec({"kind": "expr", "expr": "3 - 2*abs(x)"}, lat_big)
    x = lat_big.coords()[0]
    f = np.where(x > 0, k ** (1 / p.values - LOG3 / 2), 0.0)
    oracle = quad(lambda t: k ** (1 - (LOG3 / 2) * (3 - 2 * t)), 0, 1, epsabs=1e-14)[0]
    assert modular(f, p) == pytest.approx(oracle, rel=1e-6)


def test_l2_norms():
    lat = build_lattice(1, 4.0, 1024)
    p = constant_profile(lat, 2.0)
    x = lat.coords()[0]
    assert norm(((x > 0) & (x < 4)).astype(float), p).value == pytest.approx(2.0, rel=1e-9)
    lat = build_lattice(1, 1.0, 2**14)
    x = lat.coords()[0]
    val = norm(np.where(x > 0, x, 0.0), constant_profile(lat, 2.0)).value
    assert val == pytest.approx(1 / np.sqrt(3), rel=1e-6)


def test_weighted_root_k2():
    lat = build_lattice(1, 1.0, 2**14)
    p = from_spec(catalog.P_VEE, lat)
    w = 2.0 ** (1 / p.values)
    lam = weighted_norm(np.ones(lat.shape), w, p, Cube((0.5,), 1.0))
    oracle = brentq(lambda t: t * t * np.log(t) / (t - 1) - 2, 1.01, 10)
    assert lam == pytest.approx(oracle, abs=1e-6)
    assert lam == pytest.approx(1.597, abs=1e-3)


def test_norm_matches_brent_oracle(p_var, rng):
    f = rng.lognormal(size=p_var.lattice.shape)
    ours = norm(f, p_var).value
    assert ours == pytest.approx(brent_norm(f, p_var.values, p_var.lattice.cell_volume), rel=1e-9)


def test_zero_field(p_var):
    assert norm(np.zeros(p_var.lattice.shape), p_var).value == 0.0


def test_indicator_norm_examples():
    lat = build_lattice(1, 4.0, 1024)
    p = constant_profile(lat, 2.0)
    chk = indicator_norm_check(p, Cube((2.0,), 4.0))
    assert chk["norm"] == pytest.approx(2.0) and chk["ratio_p_Q"] == pytest.approx(1.0)
    chk = indicator_norm_check(p, Cube((0.125,), 0.25))
    assert chk["norm"] == pytest.approx(0.5) and chk["lower_bound_ok"]
    lat = build_lattice(1, 1.0, 2**14)
    q = from_spec({"kind": "expr", "expr": "3 - 2*abs(x)"}, lat)
    chk = indicator_norm_check(q, Cube((0.5,), 1.0))
    assert chk["norm"] == pytest.approx(1.0, abs=1e-9)
    assert chk["by_p_Q"] == pytest.approx(1.0)


def test_holder_examples():
    lat = build_lattice(1, 1.0, 2**12)
    p = constant_profile(lat, 2.0)
    x = lat.coords()[0]
    one = (x > 0).astype(float)
    assert holder_pairing(one, one, p).ratio == pytest.approx(1.0)
    half = ((x > 0) & (x < 0.5)).astype(float)
    hp = holder_pairing(one, half, p)
    assert hp.integral == pytest.approx(0.5) and hp.ratio == pytest.approx(2**-0.5)
    hp = holder_pairing(np.where(x > 0, x, 0), np.where(x > 0, 1 - x, 0), p)
    assert hp.integral == pytest.approx(1 / 6, rel=1e-5)
    assert hp.ratio == pytest.approx(0.5, rel=1e-5)


def test_convexify_examples():
    lat = build_lattice(1, 4.0, 1024)
    p = constant_profile(lat, 2.0)
    x = lat.coords()[0]
    one = ((x > 0) & (x < 4)).astype(float)
    chk = convexify_check(one, p, 2.0)
    assert chk.lhs == pytest.approx(4**0.25) and chk.rhs == pytest.approx(4**0.25)
    assert convexify_check(one, p, 1.0).gap == 0.0
    lat = build_lattice(1, 1.0, 1024)
    x = lat.coords()[0]
    assert convexify_check(np.where(x > 0, x, 0), constant_profile(lat, 2.0), 1.5).gap <= 1e-8


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_convexify_catalog(r):
    for e in catalog.scalar_entries():
        p, w = catalog.instantiate(e, catalog.default_lattice(e, 256))
        assert convexify_check(w, p, r).gap <= 1e-8, e.name


_fields = st.lists(st.floats(0.0, 1e3), min_size=64, max_size=64).filter(lambda v: max(v) > 1e-6)


def _profile64():
    return from_spec({"kind": "expr", "expr": "1.3 + 1.2*x*x"}, build_lattice(1, 1.0, 64))


@given(_fields)
def test_modular_of_normalized_is_one(vals):
    p = _profile64()
    f = np.array(vals)
    assert abs(modular(f / norm(f, p).value, p) - 1) <= 1e-8


@given(_fields)
def test_sandwich(vals):
    p = _profile64()
    f = np.array(vals)
    n, rho = norm(f, p).value, modular(f, p)
    a, b = rho ** (1 / p.p_plus), rho ** (1 / p.p_minus)
    lo, hi = (a, b) if n > 1 else (b, a)
    assert lo * (1 - 1e-10) <= n <= hi * (1 + 1e-10)


@given(_fields, st.sampled_from([1e-3, 1.0, 1e3]))
def test_homogeneity(vals, c):
    p = _profile64()
    f = np.array(vals)
    assert norm(c * f, p).value == pytest.approx(c * norm(f, p).value, rel=1e-10)


@given(_fields, st.lists(st.floats(0.0, 1.0), min_size=64, max_size=64))
def test_monotone(vals, shrink):
    p = _profile64()
    g = np.array(vals)
    f = g * np.array(shrink)
    assert norm(f, p).value <= norm(g, p).value + 1e-12


@given(_fields, _fields)
def test_holder_bound(f, g):
    p = _profile64()
    assert holder_pairing(np.array(f), np.array(g), p).ratio <= C_H
