"""Reverse Hoelder exponents and their cube-by-cube verification."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..exponents import ExponentProfile, scale
from ..lattice import CubeFamily, SampledField
from .constants import CubeReport, _row_log_mean, as_log_weight, family_constant
from ..vnorm import log_norm_rows

_REL_SLACK = 1e-12


def default_tau(n: int) -> float:
    return 2.0 ** (11 + n)


@dataclass(frozen=True)
class RHParameters:
    """Unspecified constants of the reverse Hoelder statements (all default 1)."""

    C1: float = 1.0
    C2: float = 1.0
    A1: float = 1.0
    A: float = 1.0
    C: float = 1.0
    tau_n: Optional[float] = None

    def tau(self, n: int) -> float:
        return default_tau(n) if self.tau_n is None else float(self.tau_n)

    def r_w(self, estimate: float) -> float:
        return rw_exponent(estimate, self)

    def delta(self, estimate: float, n: int, C_pn: float = 1.0) -> float:
        return 1.0 + 1.0 / (self.tau(n) * C_pn * estimate)


def rw_exponent(apinfty_estimate: float, params: RHParameters = RHParameters()) -> float:
    if apinfty_estimate < 1 - 1e-10:
        raise ValueError(f"constant estimates are >= 1, got {apinfty_estimate}")
    est = apinfty_estimate
    return 1.0 + 1.0 / (params.C1 * est**params.A1 * 2.0 ** (params.C2 * est))


def _normalized_log_norms(logw: np.ndarray, profile: ExponentProfile, cubes) -> np.ndarray:
    """``log( ||w 1_Q|| / ||1_Q|| )`` for each cube."""
    lat = profile.lattice
    lc = lat.dim * np.log(lat.spacing)
    out = np.empty(len(cubes))
    for _, pos in lat.group_by_size(cubes).items():
        sub = [cubes[i] for i in pos]
        LW = lat.gather(logw, sub)
        P = lat.gather(profile.values, sub)
        out[pos] = log_norm_rows(LW, P, lc)[0] - log_norm_rows(np.zeros_like(LW), P, lc)[0]
    return out


def verify_reverse_holder(w: SampledField, profile: ExponentProfile, r: float,
                          family: CubeFamily, C: float = 1.0, A: float = 1.0,
                          apinfty_estimate: Optional[float] = None) -> CubeReport:
    """Check ``||w1_Q||_{rp}/||1_Q||_{rp} <= C est^A ||w1_Q||_p/||1_Q||_p`` per cube.

    ``values`` holds lhs / (est^A * normalized p-norm), so the report's
    estimate is the smallest ``C`` that makes the whole family pass.
    """
    if not r > 1:
        raise ValueError("reverse Hoelder needs r > 1")
    cubes = list(family)
    logw = as_log_weight(w)
    if apinfty_estimate is None:
        apinfty_estimate = family_constant("apinfty", w, profile, family).estimate
    lhs = _normalized_log_norms(logw, scale(profile, r), cubes)
    base = _normalized_log_norms(logw, profile, cubes)
    log_factor = A * np.log(apinfty_estimate)
    ratio = np.exp(lhs - base - log_factor)
    ok = ratio <= C * (1 + _REL_SLACK)
    rep = CubeReport("reverse_holder", cubes, ratio, list(family.levels))
    rep.extra.update(lhs=np.exp(lhs), rhs=C * np.exp(base + log_factor), ok=ok)
    rep.passed = bool(np.all(ok))
    rep.meta.update(r=float(r), C=float(C), A=float(A), apinfty_estimate=float(apinfty_estimate),
                    smallest_C=rep.estimate)
    return rep


def classical_rh_verify(w: SampledField, family: CubeFamily, tau_n: Optional[float] = None,
                        ainfty_estimate: Optional[float] = None) -> CubeReport:
    """``(avg w^r)^{1/r} <= 2 avg w`` with ``r = 1 + 1/(tau_n est)``."""
    n = w.lattice.dim
    tau = default_tau(n) if tau_n is None else float(tau_n)
    if ainfty_estimate is None:
        ainfty_estimate = family_constant("ainfty", w, None, family).estimate
    r = 1.0 + 1.0 / (tau * ainfty_estimate)
    logw = as_log_weight(w)
    cubes = list(family)
    lat = w.lattice
    lhs = np.empty(len(cubes))
    mean = np.empty(len(cubes))
    for _, pos in lat.group_by_size(cubes).items():
        LW = lat.gather(logw, [cubes[i] for i in pos])
        lhs[pos] = _row_log_mean(r * LW) / r
        mean[pos] = _row_log_mean(LW)
    ratio = np.exp(lhs - mean - np.log(2.0))
    ok = ratio <= 1 + _REL_SLACK
    rep = CubeReport("classical_rh", cubes, ratio, list(family.levels))
    rep.extra.update(lhs=np.exp(lhs), rhs=2 * np.exp(mean), ok=ok)
    rep.passed = bool(np.all(ok))
    rep.meta.update(r=r, tau_n=tau, ainfty_estimate=float(ainfty_estimate))
    return rep


def max_empirical_rh(w: SampledField, profile: ExponentProfile, family: CubeFamily,
                     r_span: float = 1.0, k_max: int = 30) -> float:
    """Largest ``r = 1 + 2^-k r_span`` passing the check with ``C = 2, A = 0``.

    Returns 1.0 when no scanned ``r`` passes.
    """
    for k in range(k_max + 1):
        r = 1.0 + 2.0**-k * r_span
        if verify_reverse_holder(w, profile, r, family, C=2.0, A=0.0,
                                 apinfty_estimate=1.0).passed:
            return r
    return 1.0
