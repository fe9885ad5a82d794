import numpy as np
import pytest

from varweights import catalog
from varweights.lattice import LatticeError, build_lattice, dyadic_family
from varweights.matrixweights import MatrixField, matrix_refinement_sweep
from varweights.scalarweights import refinement_sweep

SWEEP_KIND = {"A_inf": "ainfty", "A_p_var_inf": "apinfty", "A_p_var": "apvar"}


def test_minimum_corpus_present():
    names = {e.name for e in catalog.list_entries()}
    need = {"unit", "const_k2", "const_k10", "const_k100", "exp_linear", "power_0.5",
            "power_-0.5", "power_gap", "mdiag_pow03", "mdiag_pow03_rot30"}
    need |= {f"{s}_k{k}" for s in ("tent", "vee") for k in (2, 10, 100)}
    assert need <= names


def test_unit_entry():
    p, w = catalog.instantiate("unit")
    np.testing.assert_allclose(w.values, 1.0)
    np.testing.assert_allclose(p.values, 2.0)
    assert all(catalog.get("unit").flags[c] for c in catalog.CLASSES)


def test_tent_entry_values():
    lat = build_lattice(1, 2.0, 1024)
    p, w = catalog.instantiate("tent_k10", lat)
    x = lat.coords()[0]
    inside = np.abs(x) <= 1
    np.testing.assert_allclose(p.values[inside], 3 - 2 * np.abs(x[inside]), atol=1e-12)
    np.testing.assert_allclose(w.values, 10.0 ** (1 / p.values))


def test_power_gap_entry():
    e = catalog.get("power_gap")
    assert e.flag("A_inf") is True and e.flag("A_p_var_inf") is False
    p, w = catalog.instantiate(e)
    assert p.p_minus == pytest.approx(2.0, abs=1e-2)
    x = w.lattice.coords()[0]
    np.testing.assert_allclose(w.values, np.abs(x) ** -0.9)


def test_tent_vee_need_wide_box():
    with pytest.raises(LatticeError):
        catalog.instantiate("vee_k2", build_lattice(1, 0.5, 64))


def test_unknown_entry():
    with pytest.raises(catalog.CatalogError):
        catalog.get("nope")


def test_embedding_and_matrix_kinds():
    _, W = catalog.instantiate("power_0.5", as_matrix=True)
    assert isinstance(W, MatrixField) and W.dim_m == 1
    assert all(e.is_matrix for e in catalog.matrix_entries())
    assert not catalog.is_matrix_spec({"kind": "constant", "value": 2.0})


def test_log_gaussian_seeded():
    lat = build_lattice(2, 1.0, 16)
    a = catalog.log_gaussian(lat, 7)
    np.testing.assert_array_equal(a, catalog.log_gaussian(lat, 7))
    assert not np.array_equal(a, catalog.log_gaussian(lat, 8))


def _cases():
    for e in catalog.list_entries():
        for cls, flag in e.flags.items():
            if flag is None or (e.is_matrix and cls == "A_inf"):
                continue
            yield pytest.param(e.name, cls, flag, id=f"{e.name}-{cls}")


@pytest.mark.parametrize("name,cls,flag", list(_cases()))
def test_flags_rederived_by_sweep(name, cls, flag):
    e = catalog.get(name)
    kind = SWEEP_KIND[cls]
    extra, js = (4, (4, 5, 6)) if e.is_matrix else (5, (5, 6, 7))

    def build(j):
        lat = catalog.default_lattice(e, 2 ** (j + extra))
        p, w = catalog.instantiate(e, lat)
        return w, p, dyadic_family(lat, 0, j)

    if e.is_matrix:
        s = matrix_refinement_sweep(kind, build, js)
    else:
        s = refinement_sweep(kind, build, js).to_dict()
    if flag:
        assert s["stable"], s
    else:
        assert s["growing"] or s["diverging"], s
