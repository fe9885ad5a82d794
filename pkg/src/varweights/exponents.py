"""Variable exponents p(.) on a lattice: summaries, conjugates, rescaling, p_Q."""
from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import product
from typing import Optional

import numpy as np

from ._expr import eval_on_lattice
from .lattice import Cube, Lattice, SampledField, cube_mean

DEFAULT_LH_CAP = 100.0


class ExponentError(ValueError):
    pass


@dataclass(frozen=True)
class ExponentProfile:
    field: SampledField
    p_minus: float
    p_plus: float
    p_infty: float
    C0: float
    C_infty: float
    p_infty_estimated: bool = False

    @property
    def lattice(self) -> Lattice:
        return self.field.lattice

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    @property
    def is_constant(self) -> bool:
        return self.p_minus == self.p_plus

    def summary(self) -> dict:
        return {
            "p_minus": self.p_minus,
            "p_plus": self.p_plus,
            "p_infty": self.p_infty,
            "p_infty_estimated": self.p_infty_estimated,
            "C0": self.C0,
            "C_infty": self.C_infty,
        }


def _shell_mean(values: np.ndarray) -> float:
    n = values.ndim
    N = values.shape[0]
    mask = np.zeros(values.shape, dtype=bool)
    for ax in range(n):
        idx = [slice(None)] * n
        idx[ax] = 0
        mask[tuple(idx)] = True
        idx[ax] = N - 1
        mask[tuple(idx)] = True
    return float(np.mean(values[mask]))


def _offset_set(lattice: Lattice, max_per_direction: int = 48) -> list[tuple[int, ...]]:
    """Integer offsets d with h <= |d| h < 1/2 along a few lattice directions."""
    n, h = lattice.dim, lattice.spacing
    dirs = []
    for e in product((-1, 0, 1), repeat=n):
        nz = [c for c in e if c != 0]
        if nz and nz[0] > 0:
            dirs.append(e)
    out = []
    for e in dirs:
        length = h * np.sqrt(sum(c * c for c in e))
        kmax = int(np.ceil(0.5 / length)) - 1
        if kmax < 1 or kmax >= lattice.points_per_axis:
            kmax = min(kmax, lattice.points_per_axis - 1)
        if kmax < 1:
            continue
        ks = np.unique(np.round(np.geomspace(1, kmax, max_per_direction)).astype(int))
        out.extend(tuple(int(k) * c for c in e) for k in ks)
    return out


def _shifted_pair(values: np.ndarray, d: tuple[int, ...]):
    N = values.shape[0]
    s1, s2 = [], []
    for di in d:
        if di >= 0:
            s1.append(slice(di, N))
            s2.append(slice(0, N - di))
        else:
            s1.append(slice(0, N + di))
            s2.append(slice(-di, N))
    return values[tuple(s1)], values[tuple(s2)]


def estimate_C0(values: np.ndarray, lattice: Lattice) -> float:
    best = 0.0
    h = lattice.spacing
    for d in _offset_set(lattice):
        dist = h * float(np.sqrt(sum(c * c for c in d)))
        if not (h * (1 - 1e-12) <= dist < 0.5):
            continue
        a, b = _shifted_pair(values, d)
        if a.size == 0:
            continue
        best = max(best, float(np.max(np.abs(a - b)) * -np.log(dist)))
    return best


def estimate_C_infty(values: np.ndarray, lattice: Lattice, p_infty: float) -> float:
    return float(np.max(np.abs(values - p_infty) * np.log(np.e + lattice.radius())))


def summarize(p_field: SampledField, declared_p_infty: Optional[float] = None) -> ExponentProfile:
    vals = p_field.values
    if not np.all(vals > 0):
        raise ExponentError("exponent samples must be positive")
    estimated = declared_p_infty is None
    p_inf = _shell_mean(vals) if estimated else float(declared_p_infty)
    lat = p_field.lattice
    return ExponentProfile(
        field=p_field,
        p_minus=float(vals.min()),
        p_plus=float(vals.max()),
        p_infty=p_inf,
        C0=estimate_C0(vals, lat),
        C_infty=estimate_C_infty(vals, lat, p_inf),
        p_infty_estimated=estimated,
    )


def constant_profile(lattice: Lattice, value: float) -> ExponentProfile:
    return summarize(SampledField(lattice, np.full(lattice.shape, float(value))), value)


def _declared(profile: ExponentProfile, fn) -> Optional[float]:
    return None if profile.p_infty_estimated else fn(profile.p_infty)


def conjugate(profile: ExponentProfile) -> ExponentProfile:
    if profile.p_minus <= 1:
        raise ExponentError(f"conjugate needs p_minus > 1, got {profile.p_minus}")
    vals = profile.values
    field = SampledField(profile.lattice, vals / (vals - 1.0))
    return summarize(field, _declared(profile, lambda q: q / (q - 1.0) if q > 1 else np.inf))


def reciprocal(profile: ExponentProfile) -> ExponentProfile:
    field = SampledField(profile.lattice, 1.0 / profile.values)
    return summarize(field, _declared(profile, lambda q: 1.0 / q))


def scale(profile: ExponentProfile, r: float) -> ExponentProfile:
    if not r > 0:
        raise ExponentError("scale factor must be positive")
    r = float(r)
    return replace(
        profile,
        field=SampledField(profile.lattice, r * profile.values),
        p_minus=r * profile.p_minus,
        p_plus=r * profile.p_plus,
        p_infty=r * profile.p_infty,
        C0=r * profile.C0,
        C_infty=r * profile.C_infty,
    )


def harmonic_mean_exponent(profile: ExponentProfile, cube: Cube) -> float:
    """p_Q: the reciprocal of the cube average of 1/p."""
    return 1.0 / cube_mean(profile.field.map(np.reciprocal), cube)


def lh_check(profile: ExponentProfile, C0_cap: float = DEFAULT_LH_CAP,
             C_infty_cap: float = DEFAULT_LH_CAP) -> tuple[bool, list[str]]:
    """Compare log-Hoelder estimates with caps; failures are warnings only."""
    warnings = []
    if profile.C0 > C0_cap:
        warnings.append(f"C0 estimate {profile.C0:.4g} exceeds cap {C0_cap:g}")
    if profile.C_infty > C_infty_cap:
        warnings.append(f"C_infty estimate {profile.C_infty:.4g} exceeds cap {C_infty_cap:g}")
    return not warnings, warnings


def from_spec(spec: dict, lattice: Lattice) -> ExponentProfile:
    """Build a profile from a config dict.

    kinds: ``constant`` {value}; ``piecewise_linear`` {breakpoints: [[x, p], ...],
    outside?, radial?}; ``expr`` {expr} over x, y, z, r.  Optional ``p_infty``.
    """
    kind = spec.get("kind")
    declared = spec.get("p_infty")
    if kind == "constant":
        vals = np.full(lattice.shape, float(spec["value"]))
        if declared is None:
            declared = float(spec["value"])
    elif kind == "piecewise_linear":
        bp = np.asarray(spec["breakpoints"], dtype=float)
        if bp.ndim != 2 or bp.shape[1] != 2 or len(bp) < 2 or np.any(np.diff(bp[:, 0]) <= 0):
            raise ExponentError("breakpoints must be >= 2 pairs [x, p] with increasing x")
        t = lattice.radius() if spec.get("radial", False) else lattice.coords()[0]
        outside = spec.get("outside")
        left = bp[0, 1] if outside is None else float(outside)
        right = bp[-1, 1] if outside is None else float(outside)
        vals = np.interp(t, bp[:, 0], bp[:, 1], left=left, right=right)
        if outside is not None:
            vals = np.where((t < bp[0, 0]) | (t > bp[-1, 0]), float(outside), vals)
    elif kind == "expr":
        vals = eval_on_lattice(spec["expr"], lattice)
    else:
        raise ExponentError(f"unknown exponent kind {kind!r}")
    if not np.all(np.isfinite(vals)) or not np.all(vals > 0):
        raise ExponentError("exponent must be finite and positive on the grid")
    return summarize(SampledField(lattice, vals), declared)
