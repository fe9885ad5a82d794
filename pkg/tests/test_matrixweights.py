import numpy as np
import pytest
from hypothesis import given, strategies as st

from varweights import catalog
from varweights.exponents import constant_profile, from_spec
from varweights.lattice import Cube, SampledField, build_lattice, dyadic_family
from varweights.matrixweights import (
    MatrixField, MatrixSpecError, ReducingOperatorError, SingularWeightError, fit_budget,
    gram_agreement, inverse_reducing_check, matrix_a1inf_cube_value, matrix_apinfty_cube_value,
    matrix_family_constant, matrix_rh_verify, mvee_oracle, op_norm, probe_directions,
    reducing_operator, rho_ball_points, rho_q, scalar_projection, wm_reverse_check,
)
from varweights.scalarweights import apinfty_cube_value, family_constant, verify_reverse_holder
from varweights.vnorm import C_H, indicator_norm, norm


@pytest.fixture(scope="module")
def setting():
    lat = build_lattice(1, 1.0, 128)
    return lat, from_spec(catalog.P_MILD, lat)


def diag_weight(lat, angle=0.0):
    x = lat.coords()[0]
    return MatrixField.diag(lat, [np.abs(x) ** 0.3, np.exp(0.5 * x)], angle)


def random_spd(rng, m):
    A = rng.standard_normal((m, m))
    return A @ A.T + 0.1 * np.eye(m)


def test_op_norm_examples():
    assert op_norm(np.eye(3)) == pytest.approx(1.0)
    assert op_norm(np.diag([2.0, 5.0])) == pytest.approx(5.0)


@given(st.integers(0, 10**6), st.integers(2, 4))
def test_op_norm_commutes_for_psd(seed, m):
    rng = np.random.default_rng(seed)
    A, B = random_spd(rng, m), random_spd(rng, m)
    assert op_norm(A @ B) == pytest.approx(op_norm(B @ A), rel=1e-10)


def test_ingestion_rejects_singular(lat1):
    vals = np.tile(np.diag([1.0, 0.0]), (lat1.size, 1, 1))
    with pytest.raises(SingularWeightError):
        MatrixField(lat1, vals)
    with pytest.raises(MatrixSpecError):
        MatrixField(lat1, np.tile(np.array([[1.0, 2.0], [0.0, 1.0]]), (lat1.size, 1, 1)))


def test_rho_examples(setting):
    lat, p = setting
    I = MatrixField.constant(lat, np.eye(2))
    Q = Cube((0.25,), 0.5)
    z = np.array([0.6, -0.8]) * 3
    assert rho_q(I, p, Q, z) == pytest.approx(3.0, rel=1e-9)
    D = MatrixField.constant(lat, np.diag([2.0, 5.0]))
    assert rho_q(D, p, Q, [1, 0]) == pytest.approx(2.0, rel=1e-9)
    W = diag_weight(lat)
    w1 = SampledField(lat, W.values[:, 0, 0])
    assert rho_q(W, p, Q, [1, 0]) == pytest.approx(norm(w1, p, Q).value / indicator_norm(p, Q),
                                                   rel=1e-9)


def test_reducing_constant(setting):
    lat, p = setting
    ro = reducing_operator(MatrixField.constant(lat, np.eye(2)), p, lat.box)
    np.testing.assert_allclose(ro.matrix, np.eye(2), atol=1e-8)
    assert ro.fit_ratio == pytest.approx(1.0)
    ro = reducing_operator(MatrixField.constant(lat, np.diag([2.0, 5.0])), p, Cube((0.5,), 1.0))
    np.testing.assert_allclose(ro.matrix, np.diag([2.0, 5.0]), atol=1e-8)


def test_reducing_diag_axes(setting):
    lat, p = setting
    W = diag_weight(lat)
    for Q in dyadic_family(lat, 0, 3):
        ro = reducing_operator(W, p, Q)
        for i in range(2):
            scal = rho_q(W, p, Q, np.eye(2)[i])
            r = np.linalg.norm(ro.matrix[:, i]) / scal
            assert 1 / ro.budget <= r <= ro.budget


def test_fit_budget():
    assert fit_budget(2, 2.0) == 2.0
    assert fit_budget(2, 0.5) == pytest.approx(2 * 5.0)


def test_reducing_rejects_small_probe_set(setting):
    lat, p = setting
    with pytest.raises(ValueError):
        reducing_operator(diag_weight(lat), p, lat.box, num_directions=8)


def test_reducing_error_carries_direction(setting):
    lat, p = setting
    with pytest.raises(ReducingOperatorError) as info:
        reducing_operator(diag_weight(lat, 0.4), p, lat.box, slack=1.0 + 1e-9)
    assert info.value.worst_direction.shape == (2,)


def test_mvee_examples():
    np.testing.assert_allclose(mvee_oracle(np.eye(2)), np.eye(2), atol=1e-6)
    pts = np.array([[2.0, 0.0], [0.0, 5.0]])
    np.testing.assert_allclose(mvee_oracle(pts), np.diag([1 / 4, 1 / 25]), atol=1e-6)


def test_mvee_round_trip(rng):
    G0 = random_spd(rng, 2)
    t = np.linspace(0, np.pi, 200, endpoint=False)
    Z = np.stack([np.cos(t), np.sin(t)], 1)
    pts = Z / np.sqrt(np.einsum("ki,ij,kj->k", Z, G0, Z))[:, None]
    assert gram_agreement(mvee_oracle(pts), G0) <= 1.05


def test_fit_vs_mvee_on_catalog():
    for e in catalog.matrix_entries():
        p, W = catalog.instantiate(e, catalog.default_lattice(e, 256))
        for Q in dyadic_family(W.lattice, 0, 2):
            ro = reducing_operator(W, p, Q)
            assert gram_agreement(ro.gram, mvee_oracle(rho_ball_points(W, p, Q))) <= 4, e.name


def test_inverse_reducing(setting):
    lat, p = setting
    I = MatrixField.constant(lat, np.eye(2))
    lo, hi = inverse_reducing_check(I, p, lat.box, np.eye(2))
    assert lo == pytest.approx(1.0) and hi == pytest.approx(1.0)
    D = MatrixField.constant(lat, np.diag([2.0, 5.0]))
    lo, hi = inverse_reducing_check(D, p, lat.box, np.diag([2.0, 5.0]), directions=[[0.0, 1.0]])
    assert lo == pytest.approx(1.0) and hi == pytest.approx(1.0)
    W = diag_weight(lat)
    for Q in dyadic_family(lat, 0, 3):
        ro = reducing_operator(W, p, Q)
        lo, hi = inverse_reducing_check(W, p, Q, ro.matrix)
        assert hi / lo <= ro.budget


def test_scalar_projection(setting):
    lat, _ = setting
    I = MatrixField.constant(lat, np.eye(2))
    np.testing.assert_allclose(scalar_projection(I, [3.0, 4.0]).values, 5.0)
    W = diag_weight(lat)
    np.testing.assert_allclose(scalar_projection(W, [1.0, 0.0]).values, W.values[:, 0, 0])


def test_projection_below_matrix_estimate():
    z = np.array([1.0, 1.0]) / np.sqrt(2)
    for e in catalog.matrix_entries():
        p, W = catalog.instantiate(e, catalog.default_lattice(e, 128))
        fam = dyadic_family(W.lattice, 0, 4)
        est = matrix_family_constant("apinfty", W, p, fam).estimate
        vals = family_constant("apinfty", scalar_projection(W, z), p, fam).values
        assert np.all(vals <= est * (1 + 1e-8)), e.name


def test_matrix_apinfty_constant_and_m1(setting):
    lat, p = setting
    D = MatrixField.constant(lat, np.diag([2.0, 5.0]))
    fam = dyadic_family(lat, 0, 3)
    for kind in ("apinfty", "a1inf"):
        np.testing.assert_allclose(matrix_family_constant(kind, D, p, fam).values, 1.0, rtol=1e-9)
    # for a constant weight apvar is |Q|^-1 ||1_Q||_p ||1_Q||_p', which is 1 only for constant p
    p2 = constant_profile(lat, 2.0)
    np.testing.assert_allclose(matrix_family_constant("apvar", D, p2, fam).values, 1.0, rtol=1e-9)
    dual = matrix_family_constant("apvar", D, p, fam).values
    assert np.all(np.abs(dual - 1) < 0.01)
    w = SampledField(lat, np.exp(np.sin(4 * lat.coords()[0])))
    W1 = MatrixField.from_scalar(w)
    for Q in fam:
        assert matrix_apinfty_cube_value(W1, p, Q) == pytest.approx(apinfty_cube_value(w, p, Q),
                                                                    rel=1e-9)


def test_matrix_apinfty_diag_bruteforce(setting):
    lat, p = setting
    x = lat.coords()[0]
    w1, w2 = np.abs(x) ** 0.3, np.exp(0.5 * x)
    W = MatrixField.diag(lat, [w1, w2])
    Q = Cube((0.5,), 1.0)
    reg = lat.region(Q)
    a, b = w1[reg], w2[reg]
    inner = []
    for ya, yb in zip(a, b):
        f = np.zeros(lat.shape)
        f[reg] = np.maximum(a / ya, b / yb)
        inner.append(np.log(norm(f, p, Q).value / indicator_norm(p, Q)))
    assert matrix_apinfty_cube_value(W, p, Q) == pytest.approx(np.exp(np.mean(inner)), rel=1e-9)


def test_a1inf_below_ch_times_apinfty():
    for e in catalog.matrix_entries():
        p, W = catalog.instantiate(e, catalog.default_lattice(e, 128))
        fam = dyadic_family(W.lattice, 0, 4)
        a = matrix_family_constant("a1inf", W, p, fam).values
        b = matrix_family_constant("apinfty", W, p, fam).values
        assert np.all(a <= C_H * b), e.name


def test_scale_invariance_and_reducing_homogeneity(setting):
    lat, p = setting
    W = diag_weight(lat, 0.3)
    Q = Cube((-0.5,), 1.0)
    fam = dyadic_family(lat, 0, 2)
    for kind in ("apinfty", "a1inf"):
        np.testing.assert_allclose(matrix_family_constant(kind, W.scaled(7.0), p, fam).values,
                                   matrix_family_constant(kind, W, p, fam).values, rtol=1e-9)
    A1 = reducing_operator(W, p, Q).matrix
    A7 = reducing_operator(W.scaled(7.0), p, Q).matrix
    np.testing.assert_allclose(A7, 7.0 * A1, rtol=1e-6)


@given(st.integers(0, 10**6))
def test_rho_quasi_triangle(seed):
    lat = build_lattice(1, 1.0, 64)
    p = from_spec({"kind": "expr", "expr": "0.6 + 0.8*x*x"}, lat)
    W = diag_weight(lat, 0.7)
    Q = Cube((0.0,), 2.0)
    rng = np.random.default_rng(seed)
    x, z = rng.standard_normal(2), rng.standard_normal(2)
    c = rng.uniform(-5, 5)
    assert rho_q(W, p, Q, c * x) == pytest.approx(abs(c) * rho_q(W, p, Q, x), rel=1e-9)
    e = p.p_minus
    assert rho_q(W, p, Q, x + z) ** e <= (rho_q(W, p, Q, x) ** e + rho_q(W, p, Q, z) ** e) * (1 + 1e-9)


def test_probe_directions():
    for m in (1, 2, 3, 4):
        Z = probe_directions(m, 64)
        np.testing.assert_allclose(np.linalg.norm(Z, axis=1), 1.0)
        assert np.array_equal(Z, probe_directions(m, 64))


def test_matrix_rh_reduces_to_scalar(setting):
    lat, p = setting
    w = SampledField(lat, np.exp(np.sin(4 * lat.coords()[0])))
    fam = dyadic_family(lat, 0, 4)
    a = matrix_rh_verify(MatrixField.from_scalar(w), p, 1.2, fam, M_list=[np.eye(1)], C=2.0)
    b = verify_reverse_holder(w, p, 1.2, fam, C=2.0)
    np.testing.assert_allclose(a.values, b.values, rtol=1e-9)
    assert a.passed == b.passed


def test_matrix_rh_constant_and_diag(setting):
    lat, p = setting
    D = MatrixField.constant(lat, np.diag([2.0, 5.0]))
    fam = dyadic_family(lat, 0, 4)
    rep = matrix_rh_verify(D, p, 1.5, fam)
    np.testing.assert_allclose(rep.values, 1.0, rtol=1e-9)
    for e in catalog.matrix_entries():
        pe, W = catalog.instantiate(e, catalog.default_lattice(e, 256))
        f = dyadic_family(W.lattice, 0, 5)
        est = matrix_family_constant("apinfty", W, pe, f).estimate
        from varweights.scalarweights import rw_exponent
        rep = matrix_rh_verify(W, pe, rw_exponent(est), f, apinfty_estimate=est)
        assert rep.passed and np.isfinite(rep.meta["smallest_C"])


def test_wm_reverse():
    lat = build_lattice(1, 0.5, 2**12)
    p = constant_profile(lat, 2.0)
    W = MatrixField.from_scalar(SampledField(lat, np.exp(lat.coords()[0] + 0.5)))
    rep = wm_reverse_check(W, p, dyadic_family(lat, 0, 0), M_list=[np.eye(1)])
    assert rep.values[0] == pytest.approx(np.sqrt((np.e**2 - 1) / 2) / (np.e - 1), rel=1e-6)
    D = MatrixField.constant(lat, np.diag([2.0, 5.0]))
    np.testing.assert_allclose(wm_reverse_check(D, p, dyadic_family(lat, 0, 3)).values, 1.0,
                               rtol=1e-9)


def test_wm_reverse_stable_on_diag():
    ests = []
    for j in (4, 5, 6):
        lat = build_lattice(1, 1.0, 2 ** (j + 4))
        p, W = catalog.instantiate("mdiag_pow03", lat)
        ests.append(wm_reverse_check(W, p, dyadic_family(lat, 0, j)).estimate)
    assert ests[-1] / ests[0] < 1.2
