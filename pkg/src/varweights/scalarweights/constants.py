"""Cube functionals behind the scalar weight constants and their family maxima."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..exponents import ExponentProfile
from ..lattice import Cube, CubeFamily, Lattice, SampledField, check_positive
from ..vnorm import _row_logsumexp, log_norm_rows

KINDS = ("ainfty", "a1", "ap", "apvar", "dagger", "apinfty", "apinfty_star")

#: growth factor between consecutive refinements treated as "stable"
STABLE_GROWTH = 1.2
#: growth over two refinements that raises the divergence flag
DIVERGENCE_GROWTH = 10.0


class KindError(ValueError):
    pass


class NumericError(ArithmeticError):
    pass


@dataclass
class CubeReport:
    """Per-cube values of one functional plus the family-level estimate.

    ``estimate`` is the max over ``values`` (first index wins ties), a lower
    bound for the supremum over all cubes.
    """

    kind: str
    cubes: list
    values: np.ndarray
    levels: list = field(default_factory=list)
    skipped: int = 0
    extra: dict = field(default_factory=dict)
    passed: Optional[bool] = None
    meta: dict = field(default_factory=dict)

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.values)) if len(self.values) else -1

    @property
    def estimate(self) -> float:
        return float(self.values[self.argmax]) if len(self.values) else float("nan")

    @property
    def argmax_cube(self) -> Optional[Cube]:
        return self.cubes[self.argmax] if len(self.values) else None

    def rows(self):
        """One dict per cube; used for the CSV tables."""
        for i, c in enumerate(self.cubes):
            row = {
                "index": i,
                "level": self.levels[i] if self.levels else "",
                "center": c.center,
                "edge": c.edge,
                "value": float(self.values[i]),
            }
            for k, arr in self.extra.items():
                row[k] = arr[i]
            yield row


def as_log_weight(w) -> np.ndarray:
    vals = w.values if isinstance(w, SampledField) else np.asarray(w, dtype=float)
    return np.log(check_positive(vals))


def _logcell(lat: Lattice) -> float:
    return lat.dim * np.log(lat.spacing)


def _row_log_mean(z: np.ndarray) -> np.ndarray:
    return _row_logsumexp(z) - np.log(z.shape[1])


def _p_array(profile: Optional[ExponentProfile], lat: Lattice, p: Optional[float]):
    if p is not None:
        return np.full(lat.shape, float(p))
    if profile is None:
        raise KindError("this kind needs an exponent profile or a constant p")
    return profile.values


def log_cube_values(kind: str, logw: np.ndarray, profile: Optional[ExponentProfile],
                    cubes: Sequence[Cube], lattice: Lattice, *, p: Optional[float] = None,
                    dagger_sign: int = 1) -> np.ndarray:
    """``log`` of the cube functional ``kind`` for each cube, same order."""
    if kind not in KINDS:
        raise KindError(f"unknown constant kind {kind!r}; expected one of {KINDS}")
    out = np.empty(len(cubes))
    lc = _logcell(lattice)
    need_p = kind in ("apvar", "dagger", "apinfty", "apinfty_star", "ap")
    P_full = _p_array(profile, lattice, p) if need_p else None
    if kind in ("apvar", "dagger"):
        if P_full.min() <= 1:
            raise KindError(f"{kind} needs p_minus > 1")
        Pc_full = P_full / (P_full - 1.0)
    if kind == "ap":
        pc = float(P_full.flat[0])
        if not np.all(P_full == pc):
            raise KindError("classical A_p needs a constant exponent (pass p=...)")
    for size, pos in lattice.group_by_size(cubes).items():
        sub = [cubes[i] for i in pos]
        LW = lattice.gather(logw, sub)
        log_vol = lattice.dim * np.log(size * lattice.spacing)
        if kind == "ainfty":
            val = _row_log_mean(LW) - LW.mean(axis=1)
        elif kind == "a1":
            val = _row_log_mean(LW) - LW.min(axis=1)
        elif kind == "ap":
            if pc == 1:
                val = _row_log_mean(LW) - LW.min(axis=1)
            else:
                val = _row_log_mean(LW) + (pc - 1) * _row_log_mean(LW / (1 - pc))
        else:
            P = lattice.gather(P_full, sub)
            if kind in ("apinfty", "apinfty_star"):
                lw_norm = log_norm_rows(LW, P, lc)[0]
                l1_norm = log_norm_rows(np.zeros_like(LW), P, lc)[0]
                second = -LW.mean(axis=1) if kind == "apinfty" else -_row_log_mean(LW)
                val = lw_norm - l1_norm + second
            elif kind == "apvar":
                Pc = lattice.gather(Pc_full, sub)
                val = log_norm_rows(LW, P, lc)[0] + log_norm_rows(-LW, Pc, lc)[0] - log_vol
            else:  # dagger
                q = 1.0 / (P - 1.0)
                p_Q = 1.0 / np.mean(1.0 / P, axis=1)
                l1 = _row_logsumexp(LW) + lc
                val = dagger_sign * p_Q * log_vol + l1 + log_norm_rows(-LW, q, lc)[0]
        out[pos] = val
    return out


def cube_values(kind: str, w, profile: Optional[ExponentProfile], cubes: Sequence[Cube],
                **kw) -> np.ndarray:
    lat = w.lattice if isinstance(w, SampledField) else profile.lattice
    return np.exp(log_cube_values(kind, as_log_weight(w), profile, cubes, lat, **kw))


def ainfty_cube_value(w: SampledField, cube: Cube) -> float:
    return float(cube_values("ainfty", w, None, [cube])[0])


def a1_cube_value(w: SampledField, cube: Cube) -> float:
    return float(cube_values("a1", w, None, [cube])[0])


def ap_cube_value(w: SampledField, p: float, cube: Cube) -> float:
    return float(cube_values("ap", w, None, [cube], p=p)[0])


def apinfty_cube_value(w: SampledField, profile: ExponentProfile, cube: Cube) -> float:
    return float(cube_values("apinfty", w, profile, [cube])[0])


def apinfty_star_cube_value(w: SampledField, profile: ExponentProfile, cube: Cube) -> float:
    return float(cube_values("apinfty_star", w, profile, [cube])[0])


def apvar_cube_value(w: SampledField, profile: ExponentProfile, cube: Cube) -> float:
    return float(cube_values("apvar", w, profile, [cube])[0])


def dagger_cube_value(w: SampledField, profile: ExponentProfile, cube: Cube,
                      sign: int = 1) -> float:
    return float(cube_values("dagger", w, profile, [cube], dagger_sign=sign)[0])


def family_constant(kind: str, w: SampledField, profile: Optional[ExponentProfile],
                    family: CubeFamily, *, p: Optional[float] = None,
                    dagger_sign: int = 1) -> CubeReport:
    """Per-cube values and the family estimate of one weight constant.

    For ``ainfty`` the Jensen floor (value >= 1) is recorded per cube; for the
    ``apinfty`` kinds the ordering against the starred variant is recorded.
    """
    if kind in ("apvar", "dagger") and profile is not None and profile.p_minus <= 1:
        raise KindError(f"{kind} needs p_minus > 1, profile has {profile.p_minus:g}")
    if dagger_sign not in (1, -1):
        raise KindError("dagger_sign must be +1 or -1")
    cubes = list(family)
    logw = as_log_weight(w)
    lat = w.lattice
    logv = log_cube_values(kind, logw, profile, cubes, lat, p=p, dagger_sign=dagger_sign)
    rep = CubeReport(kind, cubes, np.exp(logv), list(family.levels))
    if kind == "ainfty":
        rep.extra["jensen_ok"] = logv >= np.log1p(-1e-10)
        rep.passed = bool(np.all(rep.extra["jensen_ok"]))
    elif kind in ("apinfty", "apinfty_star"):
        other = "apinfty_star" if kind == "apinfty" else "apinfty"
        ov = np.exp(log_cube_values(other, logw, profile, cubes, lat))
        full, star = (rep.values, ov) if kind == "apinfty" else (ov, rep.values)
        rep.extra["star_ok"] = full >= star - 1e-10
        rep.passed = bool(np.all(rep.extra["star_ok"]))
    return rep


@dataclass
class RefinementSweep:
    kind: str
    j_max: list
    estimates: list
    growth: list
    stable: bool
    growing: bool
    diverging: bool

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "j_max": list(self.j_max),
            "estimates": [float(v) for v in self.estimates],
            "growth": [float(g) for g in self.growth],
            "stable": self.stable,
            "growing": self.growing,
            "diverging": self.diverging,
        }


def classify_growth(estimates: Sequence[float]) -> tuple[list, bool, bool, bool]:
    """Step growth factors and the (stable, growing, diverging) flags."""
    est = np.asarray(estimates, dtype=float)
    growth = list(est[1:] / est[:-1])
    stable = bool(est[-1] / est[0] < STABLE_GROWTH) if len(est) > 1 else True
    growing = bool(len(growth) > 0 and all(g >= STABLE_GROWTH for g in growth))
    diverging = bool(any(est[i + 2] / est[i] > DIVERGENCE_GROWTH for i in range(len(est) - 2)))
    return growth, stable, growing, diverging


def refinement_sweep(kind: str, build: Callable[[int], tuple], j_max_list: Sequence[int],
                     **kw) -> RefinementSweep:
    """Family estimates for each ``j_max``; ``build(j)`` returns (w, profile, family)."""
    ests = []
    for j in j_max_list:
        w, profile, family = build(j)
        ests.append(family_constant(kind, w, profile, family, **kw).estimate)
    growth, stable, growing, diverging = classify_growth(ests)
    return RefinementSweep(kind, list(j_max_list), ests, growth, stable, growing, diverging)


def power_map(w: SampledField, profile: ExponentProfile) -> SampledField:
    """The pointwise power ``w(x)^{p(x)}``."""
    logW = as_log_weight(w) * profile.values
    over = logW > np.log(np.finfo(float).max)
    if np.any(over):
        raise NumericError(f"w^p overflows at {int(over.sum())} grid point(s)")
    return SampledField(w.lattice, np.exp(logW))

