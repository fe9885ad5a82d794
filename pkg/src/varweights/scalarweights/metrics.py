"""L_w, BMO oscillation of log w, the dual functional, and doubling."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..exponents import ExponentProfile
from ..lattice import Cube, CubeFamily, LatticeError, SampledField, check_positive
from ..vnorm import norm
from .constants import CubeReport, _row_logsumexp, as_log_weight, family_constant

Q0_EDGE = 2 * np.e


@dataclass(frozen=True)
class LwFactor:
    value: float
    q0_norm: float


def q0_cube(dim: int) -> Cube:
    return Cube((0.0,) * dim, Q0_EDGE)


def lw_factor(w: SampledField, profile: ExponentProfile) -> LwFactor:
    lat = w.lattice
    q0 = q0_cube(lat.dim)
    if not lat.contains(q0):
        raise LatticeError(
            "domain must contain the cube of edge 2e at the origin on cell boundaries"
        )
    q = norm(w, profile, q0).value
    spread = profile.p_plus - profile.p_minus
    return LwFactor(max(q**-spread, q**spread), q)


def bmo_seminorm(w: SampledField, family: CubeFamily) -> float:
    """Max over the family of the mean oscillation of ``log w``."""
    logw = as_log_weight(w)
    lat = w.lattice
    cubes = list(family)
    best = 0.0
    for _, pos in lat.group_by_size(cubes).items():
        L = lat.gather(logw, [cubes[i] for i in pos])
        osc = np.mean(np.abs(L - L.mean(axis=1, keepdims=True)), axis=1)
        best = max(best, float(osc.max()))
    return best


def dual_value(w: SampledField, profile: ExponentProfile, cube: Cube, H: SampledField) -> float:
    """``||w1_Q|| / ||wH1_Q|| * exp(avg_Q log H)``."""
    hv = check_positive(H.values, "H")
    denom = norm(w.values * hv, profile, cube).value
    if not denom > 0:
        raise ValueError("degenerate H: ||w H 1_Q|| vanishes")
    geo = np.exp(np.mean(np.log(hv[w.lattice.region(cube)])))
    return norm(w, profile, cube).value / denom * float(geo)


def doubling_check(w: SampledField, family: CubeFamily, lambda_list: Sequence[float],
                   ainfty_estimate: Optional[float] = None) -> CubeReport:
    """``w(lam Q) <= (2 lam)^{2^n (1 + log2 est)} w(Q)`` for every usable (Q, lam).

    Dilations leaving the box or off the cell boundaries are skipped and counted.
    """
    lat = w.lattice
    n = lat.dim
    if any(lam < 1 for lam in lambda_list):
        raise ValueError("dilation factors must be >= 1")
    if ainfty_estimate is None:
        ainfty_estimate = family_constant("ainfty", w, None, family).estimate
    logw = as_log_weight(w)
    expo = 2**n * (1 + np.log2(ainfty_estimate))
    cubes, levels, lams, ratios = [], [], [], []
    skipped = 0
    for c, lv in zip(family.cubes, family.levels):
        for lam in lambda_list:
            big = c.dilate(lam)
            if not lat.contains(big):
                skipped += 1
                continue
            cubes.append(c)
            levels.append(lv)
            lams.append(float(lam))
            lw_big = _row_logsumexp(lat.gather(logw, [big]))[0]
            lw_q = _row_logsumexp(lat.gather(logw, [c]))[0]
            ratios.append(lw_big - lw_q - expo * np.log(2 * lam))
    ratio = np.exp(np.asarray(ratios, dtype=float))
    rep = CubeReport("doubling", cubes, ratio, levels, skipped=skipped)
    rep.extra.update(lam=np.asarray(lams), ok=ratio <= 1 + 1e-12)
    rep.passed = bool(np.all(rep.extra["ok"]))
    rep.meta.update(ainfty_estimate=float(ainfty_estimate), exponent=float(expo))
    return rep
