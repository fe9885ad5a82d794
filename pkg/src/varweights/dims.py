"""Lower and upper dimensions of matrix weights, and the reducing-operator growth bound."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exponents import ExponentProfile
from .lattice import Cube, CubeFamily, Lattice, SampledField, dyadic_family
from .matrixweights import DEFAULT_Y_CAP, MatrixField, log_inner_values, op_norm, reducing_operator
from .scalarweights.constants import CubeReport, as_log_weight
from .vnorm import indicator_norm, norm

DEFAULT_LAMBDAS = (1.0, 2.0, 4.0, 8.0)
TOL_SLOPE = 0.05
RESIDUAL_FLAG = 0.1
D_MARGIN = 0.1


@dataclass
class DimensionPart:
    """Slope fits of ``log v(Q, lam)`` against ``log lam`` for one dimension."""

    which: str
    d: float
    slopes: list
    intercepts: list
    residuals: list
    table: list = field(default_factory=list)
    skipped: int = 0

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.slopes))

    @property
    def residual(self) -> float:
        return float(self.residuals[self.argmax])

    @property
    def nonpower_flag(self) -> bool:
        return self.residual > RESIDUAL_FLAG


@dataclass
class DimensionEstimate:
    lower: DimensionPart
    upper: DimensionPart

    @property
    def d_lower(self) -> float:
        return self.lower.d

    @property
    def d_upper(self) -> float:
        return self.upper.d


def dim_value(W: MatrixField, profile: ExponentProfile, cube: Cube, lam: float, which: str,
              y_cap: Optional[int] = DEFAULT_Y_CAP) -> float:
    """``v(Q, lam)``; lower: y over lam Q, norms on Q; upper: y over Q, norms on lam Q."""
    big = cube.dilate(lam)
    if which == "lower":
        vals, _ = log_inner_values(W, profile, cube, big, y_cap)
    elif which == "upper":
        vals, _ = log_inner_values(W, profile, big, cube, y_cap)
    else:
        raise ValueError("which must be 'lower' or 'upper'")
    return float(np.exp(np.mean(vals)))


def scalar_dim_value(w: SampledField, profile: ExponentProfile, cube: Cube, lam: float,
                     which: str) -> float:
    """``m = 1`` closed route: the inner norm factors as ``||w 1_X|| / ||1_X|| / w(y)``."""
    big = cube.dilate(lam)
    x_cube, y_cube = (cube, big) if which == "lower" else (big, cube)
    logw = as_log_weight(w)
    top = norm(w, profile, x_cube).value / indicator_norm(profile, x_cube)
    return float(top * np.exp(-np.mean(logw[w.lattice.region(y_cube)])))


def _fit(log_lam: np.ndarray, log_v: np.ndarray):
    slope, intercept = np.polyfit(log_lam, log_v, 1)
    resid = log_v - (slope * log_lam + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid**2)))


def _dim_part(W, profile, base_cubes, lambda_list, which, y_cap) -> DimensionPart:
    lat = W.lattice
    if any(lam < 1 for lam in lambda_list):
        raise ValueError("dilation factors must be >= 1")
    slopes, inters, resids, table = [], [], [], []
    skipped = 0
    for q in base_cubes:
        lams, vals = [], []
        for lam in lambda_list:
            if not lat.contains(q.dilate(lam)):
                skipped += 1
                continue
            lams.append(float(lam))
            vals.append(dim_value(W, profile, q, lam, which, y_cap))
        if len(lams) < 2:
            continue
        s, b, r = _fit(np.log(lams), np.log(vals))
        slopes.append(s)
        inters.append(b)
        resids.append(r)
        table.append({"cube": q, "lambdas": lams, "values": vals, "slope": s})
    if not slopes:
        raise ValueError("no usable (cube, lambda) pairs inside the domain")
    return DimensionPart(which, max(0.0, max(slopes)), slopes, inters, resids, table, skipped)


def lower_dim_estimate(W: MatrixField, profile: ExponentProfile, base_cubes: Sequence[Cube],
                       lambda_list: Sequence[float] = DEFAULT_LAMBDAS,
                       y_cap: Optional[int] = DEFAULT_Y_CAP) -> DimensionPart:
    return _dim_part(W, profile, base_cubes, lambda_list, "lower", y_cap)


def upper_dim_estimate(W: MatrixField, profile: ExponentProfile, base_cubes: Sequence[Cube],
                       lambda_list: Sequence[float] = DEFAULT_LAMBDAS,
                       y_cap: Optional[int] = DEFAULT_Y_CAP) -> DimensionPart:
    return _dim_part(W, profile, base_cubes, lambda_list, "upper", y_cap)


def estimate_dimensions(W: MatrixField, profile: ExponentProfile, base_cubes: Sequence[Cube],
                        lambda_list: Sequence[float] = DEFAULT_LAMBDAS,
                        y_cap: Optional[int] = DEFAULT_Y_CAP) -> DimensionEstimate:
    return DimensionEstimate(
        lower_dim_estimate(W, profile, base_cubes, lambda_list, y_cap),
        upper_dim_estimate(W, profile, base_cubes, lambda_list, y_cap),
    )


def default_base_cubes(lattice: Lattice, level: int, lam_max: float = 8.0) -> list[Cube]:
    """Dyadic cubes at ``level`` whose ``lam_max`` dilation stays in the box."""
    fam = dyadic_family(lattice, level, level)
    return [c for c in fam if lattice.contains(c.dilate(lam_max))]


def nested_pairs(family: CubeFamily) -> list[tuple[Cube, Cube]]:
    """``(Q, Q)``, parent/child and same-level neighbour pairs, deterministic order."""
    pairs = []
    by_level: dict[int, list[Cube]] = {}
    for c, lv, sh in zip(family.cubes, family.levels, family.shifted):
        if not sh:
            by_level.setdefault(lv, []).append(c)
    levels = sorted(by_level)
    for lv in levels:
        cubes = by_level[lv]
        pairs.append((cubes[0], cubes[0]))
        for a, b in zip(cubes, cubes[1:]):
            pairs.append((a, b))
        if lv + 1 in by_level:
            for parent in cubes:
                for child in by_level[lv + 1]:
                    if all(abs(pc - cc) <= (parent.edge - child.edge) / 2 + 1e-12
                           for pc, cc in zip(parent.center, child.center)):
                        pairs.append((parent, child))
    return pairs


def qp3_bound_check(W: MatrixField, profile: ExponentProfile,
                    cube_pairs: Sequence[tuple[Cube, Cube]], d1: float, d2: float,
                    C: Optional[float] = None, reducers: Optional[dict] = None) -> CubeReport:
    """``||A_Q A_R^{-1}||`` against the two-dimension growth bound.

    ``values`` are lhs / (bound without ``C``), so the estimate is the smallest
    passing ``C``.
    """
    cache = {} if reducers is None else reducers

    def A(c):
        if c not in cache:
            cache[c] = reducing_operator(W, profile, c).matrix
        return cache[c]

    delta = d1 + d2
    lhs, base, cubes = [], [], []
    for q, r in cube_pairs:
        lq, lr = q.edge, r.edge
        dist = float(np.linalg.norm(np.subtract(q.center, r.center)))
        b = max((lr / lq) ** d1, (lq / lr) ** d2) * (1 + dist / max(lq, lr)) ** delta
        lhs.append(op_norm(A(q) @ np.linalg.inv(A(r))))
        base.append(b)
        cubes.append(q)
    lhs_a, base_a = np.asarray(lhs), np.asarray(base)
    ratio = lhs_a / base_a
    rep = CubeReport("qp3", cubes, ratio)
    rep.extra.update(lhs=lhs_a, bound=base_a, partner=[r for _, r in cube_pairs])
    rep.meta.update(d1=float(d1), d2=float(d2), smallest_C=rep.estimate)
    if C is not None:
        rep.passed = bool(np.all(lhs_a <= C * base_a * (1 + 1e-12)))
    return rep


def nested_indicator_check(profile: ExponentProfile, Q: Cube, R: Cube,
                           c: float = 1 / 36, c_prime: float = 36.0) -> dict:
    """For ``R`` inside ``Q``: ``||1_Q|| / ||1_R||`` against ``(|Q|/|R|)^{1/p+}``, ``^{1/p-}``."""
    ratio = indicator_norm(profile, Q) / indicator_norm(profile, R)
    vol = Q.volume / R.volume
    lo = c * vol ** (1 / profile.p_plus)
    hi = c_prime * vol ** (1 / profile.p_minus)
    return {"ratio": ratio, "lower": lo, "upper": hi, "ok": lo <= ratio <= hi}
