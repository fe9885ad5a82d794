"""Grid evaluation of minimal and maximal operators, and CZ stopping cubes."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from ..exponents import ExponentProfile
from ..lattice import Cube, CubeFamily, SampledField, check_positive
from ..vnorm import norm


def _cube_means(values: np.ndarray, lattice, cubes: Sequence[Cube]) -> np.ndarray:
    out = np.empty(len(cubes))
    for _, pos in lattice.group_by_size(cubes).items():
        out[pos] = lattice.gather(values, [cubes[i] for i in pos]).mean(axis=1)
    return out


def _extremal(f, family: CubeFamily, pick) -> SampledField:
    lat = f.lattice
    a = np.abs(f.values)
    cubes = list(family)
    means = _cube_means(a, lat, cubes)
    fill = np.inf if pick is np.minimum else -np.inf
    out = np.full(lat.shape, fill)
    for c, m in zip(cubes, means):
        sl = lat.region(c)
        out[sl] = pick(out[sl], m)
    if np.any(~np.isfinite(out)):
        raise ValueError("family does not cover every grid point")
    return SampledField(lat, out)


def minimal_operator(f: SampledField, family: CubeFamily) -> SampledField:
    """Per grid point, the smallest average of ``|f|`` over family cubes containing it."""
    return _extremal(f, family, np.minimum)


def hl_maximal(f: SampledField, family: CubeFamily) -> SampledField:
    return _extremal(f, family, np.maximum)


def dyadic_maximal(f: SampledField, family: CubeFamily) -> SampledField:
    return _extremal(f, family.dyadic(), np.maximum)


def minimal_ratio_report(w: SampledField, profile: ExponentProfile,
                         f_list: Sequence[SampledField], family: CubeFamily) -> list[float]:
    """``||w / m(f)|| / ||w / f||`` for each positive ``f`` (no hard bound)."""
    ratios = []
    for f in f_list:
        fv = check_positive(f.values, "f")
        mf = minimal_operator(f, family).values
        ratios.append(norm(w.values / mf, profile).value / norm(w.values / fv, profile).value)
    return ratios


def _pyramid(block: np.ndarray) -> list[np.ndarray]:
    """Block means of a ``(M,)*n`` array at every dyadic level, coarse first."""
    n = block.ndim
    levels = [block]
    cur = block
    while cur.shape[0] > 1:
        m = cur.shape[0] // 2
        cur = cur.reshape(sum(((m, 2) for _ in range(n)), ())).mean(axis=tuple(range(1, 2 * n, 2)))
        levels.append(cur)
    return levels[::-1]


def cz_stopping_cubes(field: SampledField, root: Cube, a: float,
                      k_max: int = 64) -> list[tuple[Cube, int]]:
    """Maximal dyadic subcubes of ``root`` with average above ``a^k``.

    Only heights ``k >= 0`` with ``a^k >= avg_root`` are used, so the parent of
    each selected cube has average at most ``a^k`` and every returned cube
    satisfies ``a^k < avg <= 2^n a^k``.
    """
    if not a > 1:
        raise ValueError("stopping height base must exceed 1")
    lat = field.lattice
    block = field.values[lat.region(root)]
    pyr = _pyramid(block)
    root_mean = float(pyr[0].ravel()[0])
    top = float(block.max())
    n = lat.dim
    lo_root = lat._index_span(root)[0]
    M = block.shape[0]
    out = []
    for k in range(k_max + 1):
        thr = a**k
        if thr < root_mean:
            continue
        if thr >= top:
            break
        taken = np.zeros((1,) * n, dtype=bool)
        for j in range(1, len(pyr)):
            taken = np.kron(taken, np.ones((2,) * n, dtype=bool)).astype(bool)
            hit = (pyr[j] > thr) & ~taken
            size = M >> j
            for idx in zip(*np.nonzero(hit)):
                lo = [lo_root[d] + int(idx[d]) * size for d in range(n)]
                out.append((lat.cube_from_index(lo, size), k))
            taken |= hit
    return out
