"""Built-in exponents and weights with known membership or closed forms.

Every entry is plain data (exponent spec + weight spec) so that the same
dicts can appear in a run config.  Class flags are ``True``/``False`` when
backed by a known result or an oracle, ``None`` when unknown.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._expr import compile_expr, coordinate_env
from .exponents import ExponentProfile, from_spec as exponent_from_spec
from .lattice import Lattice, LatticeError, SampledField, build_lattice, check_positive
from .matrixweights import MatrixField, from_spec as matrix_from_spec

CLASSES = ("A_inf", "A_p_var", "A_p_var_inf")

# exponent profiles shared by several entries
P2 = {"kind": "constant", "value": 2.0}
P_MILD = {"kind": "expr", "expr": "1.5 + 0.5*abs(x)/(1 + abs(x))", "p_infty": 2.0}
P_GAP = {"kind": "expr", "expr": "2 + abs(x)/(1 + abs(x))", "p_infty": 3.0}
P_TENT3 = {"kind": "piecewise_linear", "breakpoints": [[-1, 1], [0, 3], [1, 1]],
           "outside": 1.0, "p_infty": 1.0}
P_VEE = {"kind": "piecewise_linear", "breakpoints": [[-1, 2], [0, 1], [1, 2]],
         "outside": 2.0, "p_infty": 2.0}

MATRIX_KINDS = ("constant", "diag", "rotated_diag")


class CatalogError(ValueError):
    pass


def is_matrix_spec(spec: dict) -> bool:
    """Matrix specs carry ``entries``; scalar ``constant`` specs carry ``value``."""
    return spec.get("kind") in MATRIX_KINDS and "entries" in spec


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    description: str
    exponent: dict
    weight: dict
    flags: dict = field(default_factory=dict)
    basis: dict = field(default_factory=dict)
    domain: tuple = (1, 1.0, 1024)
    min_halfwidth: float = 0.0

    @property
    def is_matrix(self) -> bool:
        return is_matrix_spec(self.weight)

    def flag(self, cls: str) -> Optional[bool]:
        return self.flags.get(cls)

    def summary(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "matrix": self.is_matrix,
            "flags": {c: self.flags.get(c) for c in CLASSES},
        }


def _power_entry(a: float, p_spec: dict, tag: str, flags: dict, basis: dict) -> CatalogEntry:
    return CatalogEntry(
        name=f"power_{tag}",
        description=f"|x|^{a:g}",
        exponent=p_spec,
        weight={"kind": "expr", "expr": f"abs(x)**({a!r})"},
        flags=flags,
        basis=basis,
    )


def _build() -> dict[str, CatalogEntry]:
    power_basis = "power weights |x|^a lie in A_inf iff a > -n"
    entries = [
        CatalogEntry("unit", "w = 1, p = 2", P2, {"kind": "constant", "value": 1.0},
                     {"A_inf": True, "A_p_var": True, "A_p_var_inf": True},
                     {"*": "trivial: constant weight"}),
    ]
    for k in (2, 10, 100):
        entries.append(CatalogEntry(
            f"const_k{k}", f"w = {k}, p = 2", P2, {"kind": "constant", "value": float(k)},
            {"A_inf": True, "A_p_var": True, "A_p_var_inf": True},
            {"*": "trivial: constant weight"}))
    entries.append(CatalogEntry(
        "exp_linear", "w = e^x, p = 2", P2, {"kind": "expr", "expr": "exp(x)"},
        {"A_inf": None, "A_p_var": None, "A_p_var_inf": None},
        {"*": "bounded above and below on the box; not classified globally"}))
    entries.append(_power_entry(
        0.5, P_MILD, "0.5",
        {"A_inf": True, "A_p_var": None, "A_p_var_inf": True},
        {"A_inf": power_basis, "A_p_var_inf": "oracle: refinement sweep stable"}))
    entries.append(_power_entry(
        -0.5, {"kind": "constant", "value": 1.5}, "-0.5",
        {"A_inf": True, "A_p_var": True, "A_p_var_inf": True},
        {"A_inf": power_basis,
         "A_p_var": "constant p: classical A_p of w^p, exponent -0.75 in (-1, p-1)",
         "A_p_var_inf": "w^p = |x|^-0.75 in A_inf"}))
    entries.append(_power_entry(
        -0.9, P_GAP, "gap",
        {"A_inf": True, "A_p_var": False, "A_p_var_inf": False},
        {"A_inf": power_basis,
         "A_p_var_inf": "a0 = -0.9 lies in (-n, -n/p_-) with p_- = 2",
         "A_p_var": "contained in A_p_var_inf"}))
    for k in (2, 10, 100):
        entries.append(CatalogEntry(
            f"tent_k{k}", f"p = 3 -+ 2x on [-1,1], 1 outside; w = {k}^(1/p)",
            P_TENT3, {"kind": "expr", "expr": f"{k}.0**(1/p)"},
            {"A_inf": True, "A_p_var": None, "A_p_var_inf": True},
            {"A_inf": "w bounded above and below",
             "A_p_var_inf": "w^p is constant, hence in A_inf"},
            domain=(1, 2.0, 1024), min_halfwidth=1.0))
        entries.append(CatalogEntry(
            f"vee_k{k}", f"p = 1 + |x| on [-1,1], 2 outside; w = {k}^(1/p)",
            P_VEE, {"kind": "expr", "expr": f"{k}.0**(1/p)"},
            {"A_inf": True, "A_p_var": None, "A_p_var_inf": True},
            {"A_inf": "w bounded above and below",
             "A_p_var_inf": "w^p is constant, hence in A_inf"},
            domain=(1, 2.0, 1024), min_halfwidth=1.0))
    entries.append(CatalogEntry(
        "log_gaussian", "seeded smooth log-Gaussian field, p = 2", P2,
        {"kind": "log_gaussian", "seed": 1234, "modes": 8, "amplitude": 0.5}))
    entries.append(CatalogEntry(
        "mconst_diag25", "W = diag(2, 5), p = 2", P2,
        {"kind": "constant", "entries": [[2.0, 0.0], [0.0, 5.0]]},
        {"A_inf": True, "A_p_var": True, "A_p_var_inf": True},
        {"*": "trivial: constant matrix weight"}))
    entries.append(CatalogEntry(
        "mdiag_pow03", "W = diag(|x|^0.3, 1), p = 2", P2,
        {"kind": "diag", "entries": ["abs(x)**0.3", 1.0]},
        {"A_inf": None, "A_p_var": True, "A_p_var_inf": True},
        {"*": "diagonal of scalar power weights inside the classes"}))
    entries.append(CatalogEntry(
        "mdiag_pow03_rot30", "R diag(|x|^0.3, 1) R^T, R rotation by 30 degrees, p = 2", P2,
        {"kind": "rotated_diag", "entries": ["abs(x)**0.3", 1.0], "rotation_angle": 30.0},
        {"A_inf": None, "A_p_var": True, "A_p_var_inf": True},
        {"*": "constant rotation of a diagonal weight"}))
    return {e.name: e for e in entries}


_ENTRIES = _build()


def list_entries() -> list[CatalogEntry]:
    return list(_ENTRIES.values())


def get(name: str) -> CatalogEntry:
    try:
        return _ENTRIES[name]
    except KeyError:
        raise CatalogError(f"unknown catalog entry {name!r}") from None


def scalar_entries() -> list[CatalogEntry]:
    return [e for e in _ENTRIES.values() if not e.is_matrix]


def matrix_entries() -> list[CatalogEntry]:
    return [e for e in _ENTRIES.values() if e.is_matrix]


def log_gaussian(lattice: Lattice, seed: int, modes: int = 8, amplitude: float = 0.5) -> np.ndarray:
    """Smooth random log-weight: a seeded sum of cosine modes."""
    rng = np.random.default_rng(seed)
    coords = lattice.coords()
    g = np.zeros(lattice.shape)
    for _ in range(modes):
        freq = rng.normal(size=lattice.dim) * 2.0
        phase = rng.uniform(0, 2 * np.pi)
        coef = rng.normal()
        g += coef * np.cos(sum(f * c for f, c in zip(freq, coords)) + phase)
    return amplitude * g / np.sqrt(modes)


def scalar_weight_from_spec(spec: dict, lattice: Lattice,
                            profile: Optional[ExponentProfile] = None) -> SampledField:
    """``constant`` {value}; ``expr`` {expr} over x, y, z, r and p; ``log_gaussian``."""
    kind = spec.get("kind")
    if kind == "constant":
        vals = np.full(lattice.shape, float(spec["value"]))
    elif kind == "expr":
        env = coordinate_env(lattice.coords())
        if profile is not None:
            env["p"] = profile.values
        fn = compile_expr(spec["expr"], tuple(env))
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            vals = np.broadcast_to(np.asarray(fn(**env), dtype=float), lattice.shape).copy()
    elif kind == "log_gaussian":
        vals = np.exp(log_gaussian(lattice, int(spec.get("seed", 0)), int(spec.get("modes", 8)),
                                   float(spec.get("amplitude", 0.5))))
    else:
        raise CatalogError(f"unknown scalar weight kind {kind!r}")
    if not np.all(np.isfinite(vals)):
        raise ArithmeticError("weight expression produced non-finite samples")
    return SampledField(lattice, check_positive(vals))


def default_lattice(entry: CatalogEntry, points_per_axis: Optional[int] = None) -> Lattice:
    dim, L, N = entry.domain
    return build_lattice(dim, L, points_per_axis or N)


def instantiate(name_or_entry, lattice: Optional[Lattice] = None, as_matrix: bool = False):
    """``(profile, weight)`` sampled on ``lattice`` (the entry default when omitted).

    ``as_matrix`` returns scalar weights through their ``m = 1`` embedding.
    """
    entry = name_or_entry if isinstance(name_or_entry, CatalogEntry) else get(name_or_entry)
    lattice = lattice or default_lattice(entry)
    if lattice.halfwidth < entry.min_halfwidth:
        raise LatticeError(
            f"{entry.name} needs halfwidth >= {entry.min_halfwidth}, got {lattice.halfwidth}"
        )
    profile = exponent_from_spec(entry.exponent, lattice)
    if entry.is_matrix:
        return profile, matrix_from_spec(entry.weight, lattice)
    w = scalar_weight_from_spec(entry.weight, lattice, profile)
    return profile, (MatrixField.from_scalar(w) if as_matrix else w)
