"""Matrix weights: operator norms, matrix weight functionals, reducing operators.

A :class:`MatrixField` stores one real symmetric positive definite matrix per
grid point.  Inner norms of ``x -> ||W(x) W^{-1}(y)||`` are evaluated for all
``(x, y)`` pairs of a cube in chunks, then fed row-wise to the batched
Luxemburg solver.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import least_squares

from ._expr import eval_on_lattice
from .exponents import ExponentProfile, conjugate
from .lattice import Cube, CubeFamily, Lattice, SampledField, check_positive
from .scalarweights.constants import CubeReport, NumericError, classify_growth
from .scalarweights.reverse_holder import verify_reverse_holder
from .vnorm import log_norm_rows

LAMBDA_FLOOR = 1e-10
SLACK_FIT = 2.0
DEFAULT_Y_CAP = 4096
_PAIR_CHUNK = 1 << 18


class SingularWeightError(NumericError):
    pass


class ReducingOperatorError(NumericError):
    def __init__(self, msg, worst_direction=None):
        super().__init__(msg)
        self.worst_direction = worst_direction


class MatrixSpecError(ValueError):
    pass


# ---------------------------------------------------------------- norms

def op_norm(M: np.ndarray) -> np.ndarray | float:
    """Largest singular value; accepts a single matrix or a stack ``(..., m, m)``."""
    M = np.asarray(M, dtype=float)
    out = op_norm_batch(M[None] if M.ndim == 2 else M)
    return float(out[0]) if M.ndim == 2 else out


def op_norm_batch(M: np.ndarray) -> np.ndarray:
    m = M.shape[-1]
    if m == 1:
        return np.abs(M[..., 0, 0])
    if m == 2:
        a, b, c, d = M[..., 0, 0], M[..., 0, 1], M[..., 1, 0], M[..., 1, 1]
        s = a * a + b * b + c * c + d * d
        det = a * d - b * c
        disc = np.sqrt(np.maximum(s * s - 4 * det * det, 0.0))
        return np.sqrt(0.5 * (s + disc))
    return np.linalg.svd(M, compute_uv=False)[..., 0]


# ---------------------------------------------------------------- fields

@dataclass
class MatrixField:
    lattice: Lattice
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        shp = self.lattice.shape
        if v.ndim != len(shp) + 2 or v.shape[: len(shp)] != shp or v.shape[-1] != v.shape[-2]:
            raise MatrixSpecError(f"matrix field shape {v.shape} does not fit lattice {shp}")
        if not np.all(np.isfinite(v)):
            raise NumericError("matrix field has non-finite entries")
        asym = np.max(np.abs(v - np.swapaxes(v, -1, -2)))
        if asym > 1e-12 * max(1.0, float(np.max(np.abs(v)))):
            raise MatrixSpecError("matrix samples must be symmetric")
        v = 0.5 * (v + np.swapaxes(v, -1, -2))
        evals, evecs = np.linalg.eigh(v)
        if evals.min() < LAMBDA_FLOOR:
            n_bad = int(np.count_nonzero(evals.min(axis=-1) < LAMBDA_FLOOR))
            raise SingularWeightError(
                f"{n_bad} matrix sample(s) have an eigenvalue below {LAMBDA_FLOOR:g}"
            )
        self.values = v
        self._inv = np.einsum("...ik,...k,...jk->...ij", evecs, 1.0 / evals, evecs)

    @property
    def dim_m(self) -> int:
        return self.values.shape[-1]

    @property
    def inverse(self) -> np.ndarray:
        return self._inv

    def scaled(self, c: float) -> "MatrixField":
        return MatrixField(self.lattice, c * self.values)

    @classmethod
    def from_scalar(cls, w: SampledField) -> "MatrixField":
        """The ``m = 1`` embedding of a scalar weight."""
        return cls(w.lattice, check_positive(w.values)[..., None, None])

    @classmethod
    def constant(cls, lattice: Lattice, M) -> "MatrixField":
        M = np.asarray(M, dtype=float)
        return cls(lattice, np.broadcast_to(M, lattice.shape + M.shape).copy())

    @classmethod
    def diag(cls, lattice: Lattice, entries: Sequence[np.ndarray], angle: float = 0.0):
        """``R diag(entries) R^T`` with ``R`` a rotation by ``angle`` radians in the first plane."""
        d = np.stack([np.broadcast_to(np.asarray(e, dtype=float), lattice.shape)
                      for e in entries], axis=-1)
        m = d.shape[-1]
        vals = d[..., :, None] * np.eye(m)
        if angle:
            if m < 2:
                raise MatrixSpecError("rotation needs m >= 2")
            R = np.eye(m)
            c, s = np.cos(angle), np.sin(angle)
            R[:2, :2] = [[c, -s], [s, c]]
            vals = R @ vals @ R.T
        return cls(lattice, vals)


def from_spec(spec: dict, lattice: Lattice) -> MatrixField:
    """``constant`` {entries: matrix}; ``diag`` / ``rotated_diag`` {entries: [number|expr],
    rotation_angle (degrees)}."""
    kind = spec.get("kind")
    if kind == "constant":
        return MatrixField.constant(lattice, spec["entries"])
    if kind in ("diag", "rotated_diag"):
        ents = [
            np.full(lattice.shape, float(e)) if isinstance(e, (int, float))
            else eval_on_lattice(str(e), lattice)
            for e in spec["entries"]
        ]
        angle = np.deg2rad(float(spec.get("rotation_angle", 0.0))) if kind == "rotated_diag" else 0.0
        return MatrixField.diag(lattice, ents, angle)
    raise MatrixSpecError(f"unknown matrix weight kind {kind!r}")


def scalar_projection(W: MatrixField, z_or_M) -> SampledField:
    """``x -> |W(x) z|`` for a vector, ``x -> ||W(x) M||`` for a matrix."""
    a = np.asarray(z_or_M, dtype=float)
    if not np.any(a):
        raise ValueError("projection direction must be nonzero")
    if a.ndim == 1:
        vals = np.linalg.norm(W.values @ a, axis=-1)
    else:
        vals = op_norm_batch(W.values @ a)
    return SampledField(W.lattice, vals)


# ---------------------------------------------------------------- directions

def probe_directions(m: int, count: Optional[int] = None, seed: int = 20240601) -> np.ndarray:
    """Deterministic unit probe directions, ``(D, m)``.

    m = 1: the single direction 1 (the functionals are even in z).
    m = 2: equally spaced angles on a half circle.
    m = 3: Fibonacci sphere.  m > 3: orbit of {e_i, (e_i +- e_j)/sqrt 2} under
    seeded random rotations.
    """
    if count is None:
        count = max(64, 8 * m * m)
    if m == 1:
        return np.ones((1, 1))
    if m == 2:
        th = np.pi * (np.arange(count) + 0.5) / count
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    if m == 3:
        k = np.arange(count) + 0.5
        phi = np.arccos(1 - 2 * k / count)
        theta = np.pi * (1 + 5**0.5) * k
        return np.stack([np.cos(theta) * np.sin(phi), np.sin(theta) * np.sin(phi), np.cos(phi)], 1)
    base = [np.eye(m)[i] for i in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            for s in (1.0, -1.0):
                v = np.zeros(m)
                v[i], v[j] = 1.0, s
                base.append(v / np.sqrt(2))
    base = np.array(base)
    out = [base]
    rng = np.random.default_rng(seed)
    while sum(len(b) for b in out) < count:
        Q, R = np.linalg.qr(rng.standard_normal((m, m)))
        out.append(base @ (Q * np.sign(np.diag(R))).T)
    return np.concatenate(out)[:count]


# ---------------------------------------------------------------- rho and reducing operators

def _logcell(lat: Lattice) -> float:
    return lat.dim * np.log(lat.spacing)


def _log_rho_many(W: MatrixField, profile: ExponentProfile, cube: Cube, Z: np.ndarray) -> np.ndarray:
    lat = W.lattice
    Wq = lat.gather(W.values, [cube])[0]  # (K, m, m)
    P = lat.gather(profile.values, [cube])  # (1, K)
    vecs = np.einsum("kij,dj->dki", Wq, Z)
    with np.errstate(divide="ignore"):
        L = np.log(np.linalg.norm(vecs, axis=-1))
    lc = _logcell(lat)
    top = log_norm_rows(L, np.broadcast_to(P, L.shape), lc)[0]
    one = log_norm_rows(np.zeros_like(P), P, lc)[0][0]
    return top - one


def rho_q(W: MatrixField, profile: ExponentProfile, cube: Cube, z) -> float:
    """``(1/||1_Q||) || |W(.) z| 1_Q ||``."""
    z = np.asarray(z, dtype=float)
    if not np.any(z):
        raise ValueError("rho_q needs a nonzero direction")
    return float(np.exp(_log_rho_many(W, profile, cube, z[None])[0]))


@dataclass
class ReducingOperator:
    matrix: np.ndarray
    cube: Cube
    fit_lo: float
    fit_hi: float
    budget: float
    gram: np.ndarray = field(repr=False, default=None)

    @property
    def fit_ratio(self) -> float:
        return self.fit_hi / self.fit_lo


def fit_budget(m: int, p_minus: float, slack: float = SLACK_FIT) -> float:
    return slack * (2 * m + 1) ** max(0.0, 1.0 / p_minus - 1.0)


def _sym_from_vec(v: np.ndarray, m: int) -> np.ndarray:
    G = np.zeros((m, m))
    G[np.triu_indices(m)] = v
    return G + np.triu(G, 1).T


def _psd_sqrt(G: np.ndarray, floor_rel: float = 1e-12):
    evals, evecs = np.linalg.eigh(0.5 * (G + G.T))
    evals = np.maximum(evals, floor_rel * max(float(evals.max()), np.finfo(float).tiny))
    Gc = (evecs * evals) @ evecs.T
    return Gc, (evecs * np.sqrt(evals)) @ evecs.T


def fit_gram(Z: np.ndarray, log_rho: np.ndarray, refine: bool = True) -> np.ndarray:
    """Symmetric PSD ``G`` with ``z^T G z ~ rho(z)^2`` in the log least-squares sense."""
    # fit at unit scale so that scaling the weight scales G exactly
    shift = float(np.mean(log_rho))
    return np.exp(2 * shift) * _fit_gram_unit(Z, log_rho - shift, refine)


def _fit_gram_unit(Z: np.ndarray, log_rho: np.ndarray, refine: bool) -> np.ndarray:
    m = Z.shape[1]
    iu = np.triu_indices(m)
    # z^T G z is linear in the upper-triangular entries
    X = np.stack([Z[:, i] * Z[:, j] * (1.0 if i == j else 2.0) for i, j in zip(*iu)], axis=1)
    target = np.exp(2 * log_rho)
    coef, *_ = np.linalg.lstsq(X / target[:, None], np.ones_like(target), rcond=None)
    G0, _ = _psd_sqrt(_sym_from_vec(coef, m))
    if not refine or m == 1:
        return G0
    il = np.tril_indices(m)
    L0 = np.linalg.cholesky(G0)

    def resid(theta):
        L = np.zeros((m, m))
        L[il] = theta
        q = np.sum((Z @ L) ** 2, axis=1)
        return np.log(np.maximum(q, 1e-300)) - 2 * log_rho

    sol = least_squares(resid, L0[il], method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    L = np.zeros((m, m))
    L[il] = sol.x
    G1 = L @ L.T
    if np.sum(resid(sol.x) ** 2) <= np.sum(resid(L0[il]) ** 2):
        return G1
    return G0


def reducing_operator(W: MatrixField, profile: ExponentProfile, cube: Cube,
                      num_directions: Optional[int] = None, slack: float = SLACK_FIT,
                      check: bool = True) -> ReducingOperator:
    m = W.dim_m
    need = max(64, 8 * m * m)
    if num_directions is not None and num_directions < need:
        raise ValueError(f"need at least {need} probe directions for m={m}")
    Z = probe_directions(m, num_directions or need)
    lr = _log_rho_many(W, profile, cube, Z)
    G = fit_gram(Z, lr)
    G, A = _psd_sqrt(G)
    ratios = np.linalg.norm(Z @ A, axis=1) / np.exp(lr)
    lo, hi = float(ratios.min()), float(ratios.max())
    budget = fit_budget(m, profile.p_minus, slack)
    if check and hi / lo > budget:
        raise ReducingOperatorError(
            f"reducing-operator fit ratio {hi / lo:.4g} exceeds budget {budget:.4g} on {cube!r}",
            worst_direction=Z[int(np.argmax(np.abs(np.log(ratios))))],
        )
    return ReducingOperator(A, cube, lo, hi, budget, G)


def mvee_oracle(points: np.ndarray, tol: float = 1e-7, max_iter: int = 200000) -> np.ndarray:
    """Gram ``E`` of the origin-centred minimum-volume ellipsoid ``{x: x^T E x <= 1}``
    enclosing the symmetrized point set (Khachiyan iteration)."""
    P = np.asarray(points, dtype=float)
    P = np.concatenate([P, -P])
    M_pts, m = P.shape
    if np.linalg.matrix_rank(P) < m:
        raise ValueError("points do not span the space")
    u = np.full(M_pts, 1.0 / M_pts)
    for _ in range(max_iter):
        S = (P * u[:, None]).T @ P
        g = np.einsum("ij,jk,ik->i", P, np.linalg.inv(S), P)
        j = int(np.argmax(g))
        if g[j] - m <= tol * m:
            break
        step = (g[j] - m) / (m * (g[j] - 1.0))
        u *= 1.0 - step
        u[j] += step
    S = (P * u[:, None]).T @ P
    E = np.linalg.inv(S) / m
    return 0.5 * (E + E.T)


def rho_ball_points(W: MatrixField, profile: ExponentProfile, cube: Cube,
                    num_directions: Optional[int] = None) -> np.ndarray:
    """Boundary points ``z / rho(z)`` of the unit ball of ``rho``."""
    Z = probe_directions(W.dim_m, num_directions)
    lr = _log_rho_many(W, profile, cube, Z)
    return Z / np.exp(lr)[:, None]


def gram_agreement(G1: np.ndarray, G2: np.ndarray) -> float:
    """Smallest ``c`` with ``G1 <= c G2`` and ``G2 <= c G1``."""
    ev = np.linalg.eigvals(np.linalg.solve(G2, G1)).real
    return float(max(ev.max(), 1.0 / ev.min()))


def inverse_reducing_check(W: MatrixField, profile: ExponentProfile, cube: Cube,
                           A_Q: np.ndarray, directions: Optional[np.ndarray] = None):
    """Min and max over probes of ``|A_Q^{-1} z| / exp(avg_Q log |W^{-1} z|)``."""
    Z = probe_directions(W.dim_m) if directions is None else np.asarray(directions, float)
    Winv = W.lattice.gather(W.inverse, [cube])[0]
    geo = np.exp(np.mean(np.log(np.linalg.norm(np.einsum("kij,dj->dki", Winv, Z), axis=-1)), 1))
    lhs = np.linalg.norm(Z @ np.linalg.inv(A_Q).T, axis=1)
    r = lhs / geo
    return float(r.min()), float(r.max())


# ---------------------------------------------------------------- cube functionals

def _pair_log_opnorms(W: MatrixField, xs: np.ndarray, yinv: np.ndarray) -> np.ndarray:
    """``log ||W(x) W^{-1}(y)||`` as a ``(len(y), len(x))`` array."""
    Ky = yinv.shape[0]
    out = np.empty((Ky, xs.shape[0]))
    step = max(1, _PAIR_CHUNK // max(1, xs.shape[0]))
    for s in range(0, Ky, step):
        prod = np.einsum("xij,yjk->yxik", xs, yinv[s:s + step])
        out[s:s + step] = np.log(op_norm_batch(prod))
    return out


def _y_stride(K: int, y_cap: Optional[int]) -> int:
    if y_cap is None or K <= y_cap:
        return 1
    return int(np.ceil(K / y_cap))


def log_inner_values(W: MatrixField, profile: ExponentProfile, x_cube: Cube, y_cube: Cube,
                     y_cap: Optional[int] = DEFAULT_Y_CAP):
    """Per sampled y in ``y_cube``: ``log[(1/||1_X||) || ||W(.)W^{-1}(y)|| 1_X ||]``.

    Returns ``(values, stride)``.
    """
    lat = W.lattice
    xs = lat.gather(W.values, [x_cube])[0]
    yinv = lat.gather(W.inverse, [y_cube])[0]
    stride = _y_stride(yinv.shape[0], y_cap)
    yinv = yinv[::stride]
    L = _pair_log_opnorms(W, xs, yinv)
    P = lat.gather(profile.values, [x_cube])
    lc = _logcell(lat)
    top = log_norm_rows(L, np.broadcast_to(P, L.shape), lc)[0]
    one = log_norm_rows(np.zeros_like(P), P, lc)[0][0]
    return top - one, stride


def matrix_apinfty_cube_value(W: MatrixField, profile: ExponentProfile, cube: Cube,
                              y_cap: Optional[int] = DEFAULT_Y_CAP) -> float:
    vals, _ = log_inner_values(W, profile, cube, cube, y_cap)
    return float(np.exp(np.mean(vals)))


def matrix_a1inf_cube_value(W: MatrixField, cube: Cube, y_cap: Optional[int] = DEFAULT_Y_CAP) -> float:
    lat = W.lattice
    xs = lat.gather(W.values, [cube])[0]
    yinv = lat.gather(W.inverse, [cube])[0]
    yinv = yinv[:: _y_stride(yinv.shape[0], y_cap)]
    L = _pair_log_opnorms(W, xs, yinv)
    m = L.max(axis=1, keepdims=True)
    inner = m[:, 0] + np.log(np.mean(np.exp(L - m), axis=1))
    return float(np.exp(np.mean(inner)))


def matrix_apvar_cube_value(W: MatrixField, profile: ExponentProfile, cube: Cube) -> float:
    """``|Q|^{-1} || || ||W(x)W^{-1}(x')|| 1_Q(x') ||_{p'} 1_Q(x) ||_p``."""
    dual = conjugate(profile)
    lat = W.lattice
    xs = lat.gather(W.values, [cube])[0]
    xinv = lat.gather(W.inverse, [cube])[0]
    L = _pair_log_opnorms(W, xinv, xs)  # rows: x, columns: x'
    lc = _logcell(lat)
    Pd = lat.gather(dual.values, [cube])
    inner = log_norm_rows(L, np.broadcast_to(Pd, L.shape), lc)[0]
    P = lat.gather(profile.values, [cube])
    outer = log_norm_rows(inner[None], P, lc)[0][0]
    return float(np.exp(outer - lat.dim * np.log(cube.edge)))


MATRIX_KINDS = ("apinfty", "apvar", "a1inf")


def matrix_family_constant(kind: str, W: MatrixField, profile: ExponentProfile,
                           family: CubeFamily, y_cap: Optional[int] = DEFAULT_Y_CAP) -> CubeReport:
    if kind == "apinfty":
        vals = [matrix_apinfty_cube_value(W, profile, c, y_cap) for c in family]
    elif kind == "a1inf":
        vals = [matrix_a1inf_cube_value(W, c, y_cap) for c in family]
    elif kind == "apvar":
        if profile.p_minus <= 1:
            raise ValueError("matrix apvar needs p_minus > 1")
        vals = [matrix_apvar_cube_value(W, profile, c) for c in family]
    else:
        raise ValueError(f"unknown matrix constant kind {kind!r}; expected {MATRIX_KINDS}")
    rep = CubeReport("matrix_" + kind, list(family), np.asarray(vals), list(family.levels))
    lat = W.lattice
    strides = [_y_stride(int(round(c.edge / lat.spacing)) ** lat.dim, y_cap) for c in family]
    rep.meta["max_y_stride"] = int(max(strides)) if strides else 1
    return rep


def matrix_refinement_sweep(kind: str, build, j_max_list: Sequence[int], **kw) -> dict:
    ests = []
    for j in j_max_list:
        W, profile, family = build(j)
        ests.append(matrix_family_constant(kind, W, profile, family, **kw).estimate)
    growth, stable, growing, diverging = classify_growth(ests)
    return {"kind": kind, "j_max": list(j_max_list), "estimates": ests, "growth": growth,
            "stable": stable, "growing": growing, "diverging": diverging}


# ---------------------------------------------------------------- reverse Hoelder for w_M

def default_probe_matrices(W: MatrixField, count_rot: int = 2, seed: int = 7) -> list[np.ndarray]:
    """Identity, ``W^{-1}`` at the box centre and a few seeded rotations."""
    m = W.dim_m
    lat = W.lattice
    centre = lat.nearest_index((0.0,) * lat.dim)
    mats = [np.eye(m), W.inverse[centre]]
    rng = np.random.default_rng(seed)
    for _ in range(count_rot if m > 1 else 0):
        Q, R = np.linalg.qr(rng.standard_normal((m, m)))
        mats.append(Q * np.sign(np.diag(R)))
    return mats


def _merge(kind: str, reports: list[CubeReport]) -> CubeReport:
    cubes, levels, vals, probe = [], [], [], []
    for k, r in enumerate(reports):
        cubes += r.cubes
        levels += r.levels
        vals.append(r.values)
        probe += [k] * len(r.cubes)
    rep = CubeReport(kind, cubes, np.concatenate(vals), levels)
    rep.extra["probe"] = np.asarray(probe)
    for key in reports[0].extra:
        rep.extra[key] = np.concatenate([r.extra[key] for r in reports])
    if all(r.passed is not None for r in reports):
        rep.passed = all(r.passed for r in reports)
    return rep


def matrix_rh_verify(W: MatrixField, profile: ExponentProfile, r: float, family: CubeFamily,
                     M_list: Optional[Sequence[np.ndarray]] = None, C: float = 1.0,
                     A: float = 1.0, apinfty_estimate: Optional[float] = None) -> CubeReport:
    """Scalar reverse Hoelder check on ``w_M = ||W(.) M||`` for each probe ``M``."""
    if M_list is None:
        M_list = default_probe_matrices(W)
    if apinfty_estimate is None:
        apinfty_estimate = matrix_family_constant("apinfty", W, profile, family).estimate
    reps = [verify_reverse_holder(scalar_projection(W, M), profile, r, family, C, A,
                                  apinfty_estimate) for M in M_list]
    rep = _merge("matrix_reverse_holder", reps)
    rep.meta.update(r=float(r), C=float(C), A=float(A), apinfty_estimate=float(apinfty_estimate),
                    smallest_C=rep.estimate)
    return rep


def wm_reverse_check(W: MatrixField, profile: ExponentProfile, family: CubeFamily,
                     M_list: Optional[Sequence[np.ndarray]] = None) -> CubeReport:
    """Per (Q, M): ``(1/||1_Q||) || ||W M|| 1_Q || / avg_Q ||W M||``."""
    if profile.p_minus <= 1:
        raise ValueError("wm_reverse_check needs p_minus > 1")
    if M_list is None:
        M_list = default_probe_matrices(W)
    lat = W.lattice
    lc = _logcell(lat)
    reps = []
    cubes = list(family)
    for M in M_list:
        wM = scalar_projection(W, M).values
        logw = np.log(wM)
        vals = np.empty(len(cubes))
        for _, pos in lat.group_by_size(cubes).items():
            sub = [cubes[i] for i in pos]
            LW = lat.gather(logw, sub)
            P = lat.gather(profile.values, sub)
            top = log_norm_rows(LW, P, lc)[0] - log_norm_rows(np.zeros_like(LW), P, lc)[0]
            mean = np.log(lat.gather(wM, sub).mean(axis=1))
            vals[pos] = np.exp(top - mean)
        reps.append(CubeReport("wm_reverse", cubes, vals, list(family.levels)))
    rep = _merge("wm_reverse", reps)
    rep.meta["max_ratio"] = rep.estimate
    return rep
