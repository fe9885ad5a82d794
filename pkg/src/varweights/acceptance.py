"""Exit criteria of the toolkit, runnable from tests and from ``varweights selftest``."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import catalog
from .dims import (
    default_base_cubes,
    dim_value,
    estimate_dimensions,
    nested_pairs,
    qp3_bound_check,
    scalar_dim_value,
)
from .exponents import from_spec, scale
from .lattice import Cube, SampledField, build_lattice, cube_geomean, dyadic_family
from .matrixweights import (
    MatrixField,
    fit_budget,
    gram_agreement,
    inverse_reducing_check,
    matrix_apinfty_cube_value,
    matrix_family_constant,
    matrix_rh_verify,
    mvee_oracle,
    reducing_operator,
    rho_ball_points,
)
from .scalarweights import (
    classical_rh_verify,
    cube_values,
    family_constant,
    power_map,
    refinement_sweep,
    verify_reverse_holder,
)
from .vnorm import indicator_norm, modular, norm

LOG3 = np.log(3.0)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    runtime: float
    limit: float
    details: dict = field(default_factory=dict)

    @property
    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number}. {self.title} ({self.runtime:.2f} s, limit {self.limit:g} s)"


@dataclass
class Criterion:
    number: int
    title: str
    limit: float
    check: Callable[..., tuple[bool, dict]]

    def run(self, **kw) -> CriterionResult:
        t0 = time.perf_counter()
        ok, details = self.check(**kw)
        dt = time.perf_counter() - t0
        if dt >= self.limit:
            details["runtime_exceeded"] = True
        return CriterionResult(self.number, self.title, bool(ok) and dt < self.limit, dt,
                               self.limit, details)


def _rel(a, b) -> float:
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


# ------------------------------------------------------------------ 1, 2

def tent_integral_oracle(k: float) -> float:
    return k ** (1 - 1.5 * LOG3) * (k**LOG3 - 1) / (LOG3 * np.log(k))


def tent_integral_alt_form(k: float) -> float:
    return (k ** (1 + LOG3) - 1) / (3 * LOG3 * k ** (1.5 * LOG3) * np.log(k))


def check_tent_integral() -> tuple[bool, dict]:
    lat = build_lattice(1, 1.0, 2**14)
    p = from_spec(catalog.P_TENT3, lat)
    Q = Cube((0.5,), 1.0)
    x = lat.coords()[0]
    inside = (x > 0) & (x <= 1)
    d = {"indicator_norm": indicator_norm(p, Q), "cases": []}
    ok = abs(d["indicator_norm"] - 1) <= 1e-9
    for k in (2, 10, 100):
        f = np.where(inside, k ** (1 / p.values - LOG3 / 2), 0.0)
        m = modular(f, p)
        oracle = tent_integral_oracle(k)
        w = SampledField(lat, k ** (1 / p.values))
        geo = cube_geomean(w.map(np.reciprocal), Q)
        case = {
            "k": k,
            "modular": m,
            "oracle": oracle,
            "rel_err": abs(m - oracle) / oracle,
            "alternative_form": tent_integral_alt_form(k),
            "geomean_inv": geo,
            "geomean_err": abs(geo - k ** (-LOG3 / 2)),
        }
        ok &= case["rel_err"] <= 1e-6 and case["geomean_err"] <= 1e-9
        d["cases"].append(case)
    return ok, d


def vee_root_residual(lam: float, k: float) -> float:
    return lam * lam * np.log(lam) / (lam - 1) / k - 1


def check_vee_root() -> tuple[bool, dict]:
    lat = build_lattice(1, 1.0, 2**18)
    p = from_spec(catalog.P_VEE, lat)
    Q = Cube((0.5,), 1.0)
    ok, cases = True, []
    for k in (2, 10, 100):
        w = k ** (1 / p.values)
        lam = norm(w, p, Q).value
        res = vee_root_residual(lam, k)
        cases.append({"k": k, "lambda": lam, "rel_residual": res, "lower": k ** (1 / p.p_plus)})
        ok &= abs(res) <= 1e-8 and lam >= k ** 0.5
    return ok, {"cases": cases}


# ------------------------------------------------------------------ 3, 4

def _scalar_catalog(points: Optional[int] = None):
    for e in catalog.scalar_entries():
        lat = catalog.default_lattice(e, points)
        p, w = catalog.instantiate(e, lat)
        yield e, p, w


def check_jensen_floor() -> tuple[bool, dict]:
    ok, rows = True, []
    for e, p, w in _scalar_catalog():
        fam = dyadic_family(w.lattice, 0, 6)
        a = family_constant("ainfty", w, None, fam)
        b = family_constant("apinfty", w, p, fam)
        star = cube_values("apinfty_star", w, p, list(fam))
        min_a = float(a.values.min())
        gap = float(np.min(b.values - star))
        rows.append({"entry": e.name, "min_ainfty": min_a, "min_apinfty_minus_star": gap})
        ok &= min_a >= 1 - 1e-10 and gap >= -1e-10
    return ok, {"entries": rows}


def check_convexification() -> tuple[bool, dict]:
    ok, rows = True, []
    for e, p, w in _scalar_catalog():
        cubes = list(dyadic_family(w.lattice, 0, 6))
        base = cube_values("apinfty", w, p, cubes)
        worst = 0.0
        for r in (0.5, 2.0):
            other = cube_values("apinfty", w**r, scale(p, 1 / r), cubes) ** (1 / r)
            worst = max(worst, _rel(other, base))
        rows.append({"entry": e.name, "max_rel_gap": worst})
        ok &= worst <= 1e-8
    return ok, {"entries": rows}


# ------------------------------------------------------------------ 5

SWEEP_J = (5, 6, 7)
SWEEP_EXTRA = 5


def sweep_builder(name: str, power: bool = False, extra: int = SWEEP_EXTRA):
    """``build(j)`` for a catalog entry: N = 2^(j + extra) points, levels 0..j."""
    entry = catalog.get(name)

    def build(j):
        lat = catalog.default_lattice(entry, 2 ** (j + extra))
        p, w = catalog.instantiate(entry, lat)
        return (power_map(w, p) if power else w), p, dyadic_family(lat, 0, j)

    return build


def check_dichotomy() -> tuple[bool, dict]:
    good = "power_0.5"
    bad = "power_gap"
    s_good_pow = refinement_sweep("ainfty", sweep_builder(good, power=True), SWEEP_J)
    s_good_apinf = refinement_sweep("apinfty", sweep_builder(good), SWEEP_J)
    s_bad_apinf = refinement_sweep("apinfty", sweep_builder(bad), SWEEP_J)
    s_bad_ainf = refinement_sweep("ainfty", sweep_builder(bad), SWEEP_J)

    def total(s):
        return s.estimates[-1] / s.estimates[0]

    d = {
        good: {"ainfty_of_w_p": s_good_pow.to_dict(), "apinfty": s_good_apinf.to_dict()},
        bad: {"apinfty": s_bad_apinf.to_dict(), "ainfty": s_bad_ainf.to_dict()},
        "bad_apinfty_total_growth": total(s_bad_apinf),
    }
    ok = (
        total(s_good_pow) < 1.2
        and total(s_good_apinf) < 1.2
        and total(s_bad_apinf) >= 10
        and total(s_bad_ainf) < 1.2
    )
    return ok, d


# ------------------------------------------------------------------ 6

def check_classical_rh(tau_n: Optional[float] = None) -> tuple[bool, dict]:
    ok, rows = True, []
    for e, p, w in _scalar_catalog():
        if e.flag("A_inf") is not True:
            continue
        fam = dyadic_family(w.lattice, 0, 6)
        rep = classical_rh_verify(w, fam, tau_n)
        rows.append({"entry": e.name, "r": rep.meta["r"], "max_ratio": rep.estimate,
                     "passed": rep.passed})
        ok &= rep.passed
    return ok, {"tau_n": tau_n, "entries": rows}


# ------------------------------------------------------------------ 7

def _matrix_catalog(points: int = 512):
    for e in catalog.matrix_entries():
        lat = catalog.default_lattice(e, points)
        p, W = catalog.instantiate(e, lat)
        yield e, p, W


def check_reducing_operators() -> tuple[bool, dict]:
    d = {}
    ok = True
    p, W = catalog.instantiate("mconst_diag25", catalog.default_lattice(catalog.get("mconst_diag25"), 512))
    cubes = list(dyadic_family(W.lattice, 0, 2))
    err = max(float(np.max(np.abs(reducing_operator(W, p, c).matrix - np.diag([2.0, 5.0]))))
              for c in cubes)
    d["constant_diag_max_err"] = err
    ok &= err <= 1e-6

    p, W = catalog.instantiate("mdiag_pow03", catalog.default_lattice(catalog.get("mdiag_pow03"), 512))
    budget = fit_budget(W.dim_m, p.p_minus)
    worst_axis = 1.0
    for c in dyadic_family(W.lattice, 0, 3):
        A = reducing_operator(W, p, c).matrix
        for i in range(W.dim_m):
            wi = SampledField(W.lattice, W.values[..., i, i])
            scal = norm(wi, p, c).value / indicator_norm(p, c)
            ratio = float(np.linalg.norm(A[:, i])) / scal
            worst_axis = max(worst_axis, ratio, 1 / ratio)
    d["diag_axis_worst_ratio"] = worst_axis
    d["budget"] = budget
    ok &= worst_axis <= budget

    rows = []
    for e, p, W in _matrix_catalog():
        budget = fit_budget(W.dim_m, p.p_minus)
        worst_gram, worst_inv = 1.0, 1.0
        for c in dyadic_family(W.lattice, 0, 3):
            ro = reducing_operator(W, p, c)
            E = mvee_oracle(rho_ball_points(W, p, c))
            worst_gram = max(worst_gram, gram_agreement(ro.gram, E))
            lo, hi = inverse_reducing_check(W, p, c, ro.matrix)
            worst_inv = max(worst_inv, hi / lo)
        rows.append({"entry": e.name, "gram_factor": worst_gram, "inverse_hi_lo": worst_inv,
                     "budget": budget})
        ok &= worst_gram <= 4 and worst_inv <= budget
    d["entries"] = rows
    return ok, d


# ------------------------------------------------------------------ 8

def check_m1_reduction() -> tuple[bool, dict]:
    ok, rows = True, []
    for e in catalog.scalar_entries():
        lat = catalog.default_lattice(e, 512)
        p, w = catalog.instantiate(e, lat)
        W1 = MatrixField.from_scalar(w)
        fam = dyadic_family(lat, 0, 5)
        cubes = list(fam)
        mat = matrix_family_constant("apinfty", W1, p, fam)
        sca = family_constant("apinfty", w, p, fam)
        e_apinf = _rel(mat.values, sca.values)
        ind = np.array([indicator_norm(p, c) for c in cubes])
        red_s = np.array([norm(w, p, c).value for c in cubes]) / ind
        red_m = np.array([reducing_operator(W1, p, c).matrix[0, 0] for c in cubes])
        e_red = _rel(red_m, red_s)
        rh_m = matrix_rh_verify(W1, p, 1.1, fam, M_list=[np.eye(1)], C=2.0,
                                apinfty_estimate=mat.estimate)
        rh_s = verify_reverse_holder(w, p, 1.1, fam, C=2.0, apinfty_estimate=sca.estimate)
        e_rh = _rel(rh_m.values, rh_s.values)
        e_dim = 0.0
        for q in default_base_cubes(lat, 4):
            for lam in (1.0, 2.0, 4.0, 8.0):
                for which in ("lower", "upper"):
                    e_dim = max(e_dim, _rel(dim_value(W1, p, q, lam, which),
                                            scalar_dim_value(w, p, q, lam, which)))
        row = {"entry": e.name, "apinfty": e_apinf, "reducing": e_red, "rh": e_rh, "dims": e_dim}
        rows.append(row)
        ok &= max(e_apinf, e_red, e_rh, e_dim) <= 1e-9 and rh_m.passed == rh_s.passed
    return ok, {"entries": rows}


# ------------------------------------------------------------------ 9

def check_dimensions() -> tuple[bool, dict]:
    ok = True
    d = {"constant": [], "identity_pair": [], "diag": []}
    consts = [n for n in ("unit", "const_k2", "const_k10", "const_k100", "mconst_diag25")]
    for name in consts:
        e = catalog.get(name)
        lat = catalog.default_lattice(e, 512)
        p, W = catalog.instantiate(e, lat, as_matrix=True)
        est = estimate_dimensions(W, p, default_base_cubes(lat, 4))
        slopes = est.lower.slopes + est.upper.slopes
        worst = float(np.max(np.abs(slopes)))
        d["constant"].append({"entry": name, "max_abs_slope": worst})
        ok &= worst <= 0.05
    for e, p, W in _matrix_catalog():
        fam = dyadic_family(W.lattice, 0, 3)
        rep = qp3_bound_check(W, p, [(c, c) for c in fam], 0.0, 0.0)
        err = float(np.max(np.abs(rep.extra["lhs"] - 1)))
        d["identity_pair"].append({"entry": e.name, "max_abs_lhs_minus_1": err})
        ok &= err <= 1e-10
    for name in ("mdiag_pow03", "mdiag_pow03_rot30"):
        e = catalog.get(name)
        lat = catalog.default_lattice(e, 512)
        p, W = catalog.instantiate(e, lat)
        base = default_base_cubes(lat, 4)
        pairs = nested_pairs(dyadic_family(lat, 0, 4))
        cache: dict = {}
        Cs = []
        for lams in ((1.0, 2.0, 4.0), (1.0, 2.0, 4.0, 8.0)):
            est = estimate_dimensions(W, p, base, lams)
            rep = qp3_bound_check(W, p, pairs, est.d_lower + 0.1, est.d_upper + 0.1,
                                  reducers=cache)
            Cs.append(rep.estimate)
        change = max(Cs) / min(Cs)
        d["diag"].append({"entry": name, "smallest_C": Cs, "change": change})
        ok &= bool(np.all(np.isfinite(Cs))) and change < 1.5
    return ok, d


CRITERIA = [
    Criterion(1, "Tent exponent integral oracle", 5.0, check_tent_integral),
    Criterion(2, "Vee exponent weighted root", 5.0, check_vee_root),
    Criterion(3, "Per-cube Jensen floor", 30.0, check_jensen_floor),
    Criterion(4, "Convexification identity", 30.0, check_convexification),
    Criterion(5, "Inclusion/divergence dichotomy", 60.0, check_dichotomy),
    Criterion(6, "Classical reverse Hoelder", 30.0, check_classical_rh),
    Criterion(7, "Reducing operators", 60.0, check_reducing_operators),
    Criterion(8, "m = 1 reduction", 30.0, check_m1_reduction),
    Criterion(9, "Dimensions", 60.0, check_dimensions),
]


def run_all(tau_n: Optional[float] = None) -> list[CriterionResult]:
    out = []
    for c in CRITERIA:
        kw = {"tau_n": tau_n} if c.number == 6 else {}
        out.append(c.run(**kw))
    return out
