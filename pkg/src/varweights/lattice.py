"""Uniform midpoint grids over ``[-L, L]^n``, aligned cubes and dyadic cube families.

Every other module computes on a :class:`Lattice`: samples sit at cell
midpoints, integrals are midpoint sums, and cubes must have their faces on
cell boundaries so that "the points inside a cube" is unambiguous.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterator, Sequence

import numpy as np

#: Weight samples below this are rejected rather than clamped.
POSITIVITY_FLOOR = 1e-300

_ALIGN_TOL = 1e-7


class LatticeError(ValueError):
    """Bad grid parameters, or a cube that is misaligned / outside the box."""


class PositivityError(ArithmeticError):
    """A weight sample fell below :data:`POSITIVITY_FLOOR`."""


@dataclass(frozen=True)
class Cube:
    """Axis-parallel cube given by its center and edge length."""

    center: tuple[float, ...]
    edge: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.edge > 0:
            raise LatticeError(f"cube edge must be positive, got {self.edge}")

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def volume(self) -> float:
        return self.edge**self.dim

    @property
    def lower(self) -> tuple[float, ...]:
        return tuple(c - self.edge / 2 for c in self.center)

    @property
    def upper(self) -> tuple[float, ...]:
        return tuple(c + self.edge / 2 for c in self.center)

    def dilate(self, lam: float) -> "Cube":
        """The concentric cube ``lam * Q``."""
        return Cube(self.center, lam * self.edge)

    @classmethod
    def from_bounds(cls, lower: Sequence[float], edge: float) -> "Cube":
        return cls(tuple(lo + edge / 2 for lo in lower), edge)

    def __repr__(self):
        lo = ", ".join(f"{v:.6g}" for v in self.lower)
        return f"Cube(lower=({lo}), edge={self.edge:.6g})"


@dataclass(frozen=True)
class Lattice:
    dim: int
    halfwidth: float
    points_per_axis: int

    @property
    def spacing(self) -> float:
        return 2.0 * self.halfwidth / self.points_per_axis

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    @property
    def size(self) -> int:
        return self.points_per_axis**self.dim

    @property
    def axis(self) -> np.ndarray:
        """Midpoint coordinates along one axis."""
        i = np.arange(self.points_per_axis)
        return -self.halfwidth + (i + 0.5) * self.spacing

    @property
    def box(self) -> Cube:
        return Cube((0.0,) * self.dim, 2.0 * self.halfwidth)

    def coords(self) -> list[np.ndarray]:
        """One array per axis, each of shape :attr:`shape` (``ij`` indexing)."""
        return np.meshgrid(*([self.axis] * self.dim), indexing="ij")

    def radius(self) -> np.ndarray:
        return np.sqrt(sum(c**2 for c in self.coords()))

    def _index_span(self, cube: Cube) -> tuple[tuple[int, ...], int]:
        if cube.dim != self.dim:
            raise LatticeError(f"cube dimension {cube.dim} != lattice dimension {self.dim}")
        h = self.spacing
        ncells_f = cube.edge / h
        ncells = int(round(ncells_f))
        if ncells < 1 or abs(ncells_f - ncells) > _ALIGN_TOL * max(1.0, ncells_f):
            raise LatticeError(f"{cube!r} edge is not a multiple of the spacing {h:g}")
        lo_idx = []
        for lo in cube.lower:
            t = (lo + self.halfwidth) / h
            k = int(round(t))
            if abs(t - k) > _ALIGN_TOL * max(1.0, abs(t)):
                raise LatticeError(f"{cube!r} is not aligned with the cell boundaries")
            lo_idx.append(k)
        return tuple(lo_idx), ncells

    def contains(self, cube: Cube) -> bool:
        """True iff ``cube`` is lattice-aligned and inside the domain box."""
        try:
            self.region(cube)
        except LatticeError:
            return False
        return True

    def region(self, cube: Cube) -> tuple[slice, ...]:
        """Index slices selecting the grid points inside ``cube``."""
        lo_idx, ncells = self._index_span(cube)
        N = self.points_per_axis
        if any(k < 0 or k + ncells > N for k in lo_idx):
            raise LatticeError(f"{cube!r} extends outside the domain box")
        return tuple(slice(k, k + ncells) for k in lo_idx)

    def cube_from_index(self, lo_idx: Sequence[int], ncells: int) -> Cube:
        h = self.spacing
        lower = [-self.halfwidth + k * h for k in lo_idx]
        return Cube.from_bounds(lower, ncells * h)

    def gather(self, values: np.ndarray, cubes: Sequence[Cube]) -> np.ndarray:
        """Stack the samples of equally sized cubes into a ``(B, K, ...)`` array.

        Row ``b`` equals ``values[region(cubes[b])]`` flattened in C order;
        trailing axes of ``values`` beyond the grid axes are kept.
        """
        if not cubes:
            raise LatticeError("gather needs at least one cube")
        los, sizes = [], set()
        N = self.points_per_axis
        for c in cubes:
            lo, nc = self._index_span(c)
            if any(k < 0 or k + nc > N for k in lo):
                raise LatticeError(f"{c!r} extends outside the domain box")
            los.append(lo)
            sizes.add(nc)
        if len(sizes) != 1:
            raise LatticeError("gather needs cubes of one common size")
        nc = sizes.pop()
        n = self.dim
        offs = np.stack(np.meshgrid(*([np.arange(nc)] * n), indexing="ij"), -1).reshape(-1, n)
        idx = np.asarray(los)[:, None, :] + offs[None, :, :]
        return values[tuple(idx[..., d] for d in range(n))]

    def group_by_size(self, cubes: Sequence[Cube]) -> dict[int, list[int]]:
        """Positions of ``cubes`` bucketed by edge length in cells (sorted keys)."""
        groups: dict[int, list[int]] = {}
        for i, c in enumerate(cubes):
            groups.setdefault(self._index_span(c)[1], []).append(i)
        return dict(sorted(groups.items(), reverse=True))

    def nearest_index(self, point: Sequence[float]) -> tuple[int, ...]:
        h = self.spacing
        N = self.points_per_axis
        return tuple(
            int(np.clip(np.floor((x + self.halfwidth) / h), 0, N - 1)) for x in point
        )


@dataclass
class CubeFamily:
    """Finite, deterministically ordered stand-in for "all cubes"."""

    cubes: list[Cube]
    levels: list[int]
    shifted: list[bool]
    j_min: int = 0
    j_max: int = 0

    def __iter__(self) -> Iterator[Cube]:
        return iter(self.cubes)

    def __len__(self) -> int:
        return len(self.cubes)

    def __getitem__(self, i):
        return self.cubes[i]

    def dyadic(self) -> "CubeFamily":
        """The sub-family without half-shifted translates."""
        keep = [i for i, s in enumerate(self.shifted) if not s]
        return CubeFamily(
            [self.cubes[i] for i in keep],
            [self.levels[i] for i in keep],
            [False] * len(keep),
            self.j_min,
            self.j_max,
        )

    def at_level(self, j: int) -> list[Cube]:
        return [c for c, lv in zip(self.cubes, self.levels) if lv == j]


@dataclass
class SampledField:
    """Real values, one per grid point of ``lattice``."""

    lattice: Lattice
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.lattice.shape:
            vals = vals.reshape(self.lattice.shape)
        if not np.all(np.isfinite(vals)):
            raise ValueError("sampled field contains non-finite values")
        self.values = vals

    def restrict(self, cube: Cube) -> np.ndarray:
        """Flat array of the samples inside ``cube``."""
        return self.values[self.lattice.region(cube)].ravel()

    def map(self, fn) -> "SampledField":
        return SampledField(self.lattice, fn(self.values))

    def __mul__(self, other):
        if isinstance(other, SampledField):
            other = other.values
        return SampledField(self.lattice, self.values * other)

    __rmul__ = __mul__

    def __pow__(self, r):
        if isinstance(r, SampledField):
            r = r.values
        return SampledField(self.lattice, self.values**r)


def build_lattice(dim: int, halfwidth: float, points_per_axis: int) -> Lattice:
    if dim not in (1, 2, 3):
        raise LatticeError(f"dim must be 1, 2 or 3, got {dim}")
    if not halfwidth > 0:
        raise LatticeError("halfwidth must be positive")
    N = int(points_per_axis)
    if N < 4 or N & (N - 1):
        raise LatticeError(f"points_per_axis must be a power of two >= 4, got {points_per_axis}")
    return Lattice(int(dim), float(halfwidth), N)


def dyadic_family(
    lattice: Lattice, j_min: int, j_max: int, include_translates: bool = False
) -> CubeFamily:
    """All dyadic subdivisions of the box at levels ``j_min..j_max``.

    With ``include_translates`` each level also gets the copies shifted by half
    an edge along every axis that still fit in the box.
    """
    N = lattice.points_per_axis
    if not 0 <= j_min <= j_max:
        raise LatticeError("need 0 <= j_min <= j_max")
    if 2**j_max > N:
        raise LatticeError(f"level {j_max} exceeds grid resolution N={N}")
    entries = []
    for j in range(j_min, j_max + 1):
        k = 2**j
        ncells = N // k
        for idx in product(range(k), repeat=lattice.dim):
            entries.append((j, tuple(i * ncells for i in idx), False))
        if include_translates and ncells >= 2:
            half = ncells // 2
            for idx in product(range(k - 1), repeat=lattice.dim):
                entries.append((j, tuple(i * ncells + half for i in idx), True))
    entries.sort(key=lambda e: (e[0], e[1]))
    cubes = [lattice.cube_from_index(lo, N // 2 ** j) for j, lo, _ in entries]
    return CubeFamily(cubes, [e[0] for e in entries], [e[2] for e in entries], j_min, j_max)


def check_positive(values: np.ndarray, what: str = "weight") -> np.ndarray:
    values = np.asarray(values, dtype=float)
    bad = values < POSITIVITY_FLOOR
    if np.any(bad):
        n = int(np.count_nonzero(bad))
        raise PositivityError(
            f"{what} has {n} sample(s) below the positivity floor {POSITIVITY_FLOOR:g}"
        )
    return values


def cube_mean(field: SampledField, cube: Cube) -> float:
    """Midpoint-rule average of ``field`` over ``cube``."""
    return float(np.mean(field.restrict(cube)))


def cube_geomean(field: SampledField, cube: Cube) -> float:
    """``exp`` of the midpoint-rule average of ``log field`` over ``cube``."""
    vals = check_positive(field.restrict(cube))
    return float(np.exp(np.mean(np.log(vals))))
