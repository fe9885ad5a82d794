"""Variable Lebesgue modular and Luxemburg norm on lattice samples.

The norm solves ``rho(f / lam) = 1`` by bisection in ``t = log lam``.  Working
in log space keeps weights such as ``|x|^-0.9`` or ``100^(1/p)`` far from
overflow, and the batched solver handles many equally sized cubes at once.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

import numpy as np

from .exponents import ExponentProfile, conjugate, scale
from .lattice import Cube, Lattice, SampledField

TOL_LAMBDA = 1e-10
MAX_ITER = 200
C_H = 4.0

ArrayOrField = Union[np.ndarray, SampledField]


class BracketError(ArithmeticError):
    pass


@dataclass(frozen=True)
class NormResult:
    value: float
    modular_at_value: float
    iterations: int
    bracket: tuple[float, float]


class HolderPairing(NamedTuple):
    integral: float
    ratio: float


class ConvexifyCheck(NamedTuple):
    lhs: float
    rhs: float
    gap: float


def _row_logsumexp(z: np.ndarray) -> np.ndarray:
    m = np.max(z, axis=1)
    safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        s = np.log(np.sum(np.exp(z - safe[:, None]), axis=1))
    return np.where(np.isfinite(m), safe + s, m)


def log_norm_rows(logabs: np.ndarray, p: np.ndarray, logcell: float,
                  tol: float = TOL_LAMBDA, max_iter: int = MAX_ITER):
    """Row-wise ``log ||f||`` from ``log|f|`` samples (``-inf`` marks zeros).

    Returns ``(t, log_modular_at_t, iterations, lo, hi)``; rows with no
    support get ``t = -inf``.
    """
    logabs = np.atleast_2d(np.asarray(logabs, dtype=float))
    p = np.broadcast_to(np.asarray(p, dtype=float), logabs.shape)
    support = logabs > -np.inf
    nz = support.any(axis=1)

    def g(t):
        with np.errstate(invalid="ignore"):
            z = np.where(support, p * (logabs - t[:, None]), -np.inf)
        return _row_logsumexp(z) + logcell

    B = logabs.shape[0]
    zero = np.zeros(B)
    log_rho = g(zero)
    pp = np.where(support, p, np.nan)
    with np.errstate(all="ignore"):
        p_hi = np.where(nz, np.nanmax(np.where(nz[:, None], pp, 1.0), axis=1), 1.0)
        p_lo = np.where(nz, np.nanmin(np.where(nz[:, None], pp, 1.0), axis=1), 1.0)
    # rho^(1/p+) and rho^(1/p-) sandwich the norm (in log form)
    a, b = log_rho / p_hi, log_rho / p_lo
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    const = nz & (p_hi == p_lo)
    active = nz & ~const

    step = 1e-9 * (1.0 + np.abs(lo))
    for _ in range(MAX_ITER):
        bad = active & (g(lo) < 0)
        if not bad.any():
            break
        lo = np.where(bad, lo - step, lo)
        step = np.where(bad, 2 * step, step)
    step = 1e-9 * (1.0 + np.abs(hi))
    for _ in range(MAX_ITER):
        bad = active & (g(hi) > 0)
        if not bad.any():
            break
        hi = np.where(bad, hi + step, hi)
        step = np.where(bad, 2 * step, step)
    if np.any(active & ((g(lo) < 0) | (g(hi) > 0))):
        raise BracketError("could not bracket the Luxemburg norm")
    bracket_lo, bracket_hi = lo.copy(), hi.copy()

    iters = 0
    width = float(np.max(np.where(active, hi - lo, 0.0), initial=0.0))
    if width > tol:
        iters = min(max_iter, int(np.ceil(np.log2(width / tol))))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        above = g(mid) > 0
        lo = np.where(active & above, mid, lo)
        hi = np.where(active & ~above, mid, hi)
    t = np.where(const, a, 0.5 * (lo + hi))
    t = np.where(nz, t, -np.inf)
    glast = np.where(nz, g(np.where(nz, t, 0.0)), -np.inf)
    return t, glast, iters, bracket_lo, bracket_hi


def _flat(f: ArrayOrField, lattice: Lattice, region: Optional[Cube]) -> np.ndarray:
    vals = f.values if isinstance(f, SampledField) else np.asarray(f, dtype=float)
    vals = vals.reshape(lattice.shape)
    if region is None:
        return vals.ravel()
    return vals[lattice.region(region)].ravel()


def _log_abs(a: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.abs(a))


def modular(f: ArrayOrField, profile: ExponentProfile, region: Optional[Cube] = None) -> float:
    lat = profile.lattice
    a = np.abs(_flat(f, lat, region))
    p = _flat(profile.field, lat, region)
    return float(np.sum(a**p) * lat.cell_volume)


def norm(f: ArrayOrField, profile: ExponentProfile, region: Optional[Cube] = None,
         tol: float = TOL_LAMBDA) -> NormResult:
    lat = profile.lattice
    la = _log_abs(_flat(f, lat, region))
    p = _flat(profile.field, lat, region)
    if not np.any(la > -np.inf):
        return NormResult(0.0, 0.0, 0, (0.0, 0.0))
    t, g, iters, lo, hi = log_norm_rows(la[None], p[None], lat.dim * np.log(lat.spacing), tol)
    return NormResult(float(np.exp(t[0])), float(np.exp(g[0])), iters,
                      (float(np.exp(lo[0])), float(np.exp(hi[0]))))


def log_norm(logabs: np.ndarray, profile: ExponentProfile, region: Optional[Cube] = None) -> float:
    """``log ||f 1_Q||`` given ``log|f|`` on the whole grid."""
    lat = profile.lattice
    la = _flat(logabs, lat, region)
    p = _flat(profile.field, lat, region)
    t = log_norm_rows(la[None], p[None], lat.dim * np.log(lat.spacing))[0]
    return float(t[0])


def weighted_norm(f: ArrayOrField, w: ArrayOrField, profile: ExponentProfile,
                  region: Optional[Cube] = None) -> float:
    """``||f||_{L^p_w} = ||f w||_{L^p}``."""
    fv = f.values if isinstance(f, SampledField) else np.asarray(f, dtype=float)
    wv = w.values if isinstance(w, SampledField) else np.asarray(w, dtype=float)
    return norm(fv * wv, profile, region).value


def indicator_norm(profile: ExponentProfile, cube: Cube) -> float:
    return norm(np.ones(profile.lattice.shape), profile, cube).value


def indicator_norm_check(profile: ExponentProfile, cube: Cube) -> dict:
    """``||1_Q||`` against ``|Q|^{1/p_Q}`` and ``|Q|^{1/p_infty}``."""
    from .exponents import harmonic_mean_exponent

    nrm = indicator_norm(profile, cube)
    pq = harmonic_mean_exponent(profile, cube)
    by_pq = cube.volume ** (1.0 / pq)
    by_pinf = cube.volume ** (1.0 / profile.p_infty)
    return {
        "norm": nrm,
        "by_p_Q": by_pq,
        "by_p_infty": by_pinf,
        "ratio_p_Q": nrm / by_pq,
        "ratio_p_infty": nrm / by_pinf,
        "lower_bound_ok": nrm >= by_pq / 6.0,
    }


def holder_pairing(f: ArrayOrField, g: ArrayOrField, profile: ExponentProfile,
                   region: Optional[Cube] = None) -> HolderPairing:
    """``int |fg|`` and its ratio to ``||f||_p ||g||_p'`` (bounded by ``C_H``)."""
    lat = profile.lattice
    dual = conjugate(profile)
    fv = _flat(f, lat, region)
    gv = _flat(g, lat, region)
    integral = float(np.sum(np.abs(fv * gv)) * lat.cell_volume)
    denom = norm(f, profile, region).value * norm(g, dual, region).value
    ratio = integral / denom if denom > 0 else 0.0
    return HolderPairing(integral, ratio)


def convexify_check(f: ArrayOrField, profile: ExponentProfile, r: float,
                    region: Optional[Cube] = None) -> ConvexifyCheck:
    """``||f||_{rp}`` against ``|| |f|^r ||_p^{1/r}``, two separate bisections."""
    fv = f.values if isinstance(f, SampledField) else np.asarray(f, dtype=float)
    lhs = norm(fv, scale(profile, r), region).value
    rhs = norm(np.abs(fv) ** r, profile, region).value ** (1.0 / r)
    gap = abs(lhs - rhs) / max(abs(lhs), abs(rhs)) if max(lhs, rhs) > 0 else 0.0
    return ConvexifyCheck(lhs, rhs, gap)
