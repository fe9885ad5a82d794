"""Command-line driver: ``run``, ``selftest`` and ``catalog list``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from . import __version__, catalog
from .dims import D_MARGIN, DEFAULT_LAMBDAS, default_base_cubes, estimate_dimensions, nested_pairs, qp3_bound_check
from .exponents import from_spec as exponent_from_spec, lh_check
from .lattice import Cube, build_lattice, dyadic_family
from .matrixweights import (
    MatrixField,
    fit_budget,
    gram_agreement,
    inverse_reducing_check,
    matrix_family_constant,
    matrix_refinement_sweep,
    matrix_rh_verify,
    mvee_oracle,
    reducing_operator,
    rho_ball_points,
    wm_reverse_check,
)
from .matrixweights import from_spec as matrix_from_spec
from .scalarweights import (
    CubeReport,
    RHParameters,
    bmo_seminorm,
    classical_rh_verify,
    cz_stopping_cubes,
    doubling_check,
    family_constant,
    lw_factor,
    max_empirical_rh,
    power_map,
    refinement_sweep,
    verify_reverse_holder,
)
from .vnorm import indicator_norm_check

EXIT_OK, EXIT_ASSERT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

SCALAR_CONSTANTS = ("ainfty", "a1", "ap", "apvar", "dagger", "apinfty", "apinfty_star",
                    "power_ainfty")
MATRIX_CONSTANTS = ("matrix_apinfty", "matrix_apvar", "matrix_a1inf")

# allowed params per analysis kind
ANALYSES = {
    **{k: ("sweep", "sweep_extra", "expect", "p") for k in SCALAR_CONSTANTS},
    **{k: ("sweep", "sweep_extra", "expect") for k in MATRIX_CONSTANTS},
    "reverse_holder": ("r",),
    "classical_rh": (),
    "max_empirical_rh": (),
    "doubling": ("lambdas",),
    "bmo": (),
    "lw": (),
    "indicator_norms": (),
    "cz": ("a",),
    "reducing_operators": ("num_directions",),
    "matrix_rh": ("r",),
    "wm_reverse": (),
    "dimensions": ("level", "lambdas"),
    "qp3": ("level", "lambdas", "d1", "d2"),
}
MATRIX_ANALYSES = MATRIX_CONSTANTS + ("reducing_operators", "matrix_rh", "wm_reverse",
                                      "dimensions", "qp3")

# which catalog class flag a refinement sweep re-derives
SWEEP_FLAG = {"ainfty": "A_inf", "apinfty": "A_p_var_inf", "apinfty_star": "A_p_var_inf",
              "power_ainfty": "A_p_var_inf", "apvar": "A_p_var",
              "matrix_apinfty": "A_p_var_inf", "matrix_apvar": "A_p_var"}

_NUM = {"type": "number"}
_EXPONENT_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["constant", "piecewise_linear", "expr"]},
        "value": _NUM, "outside": _NUM, "p_infty": _NUM,
        "radial": {"type": "boolean"},
        "expr": {"type": "string"},
        "breakpoints": {"type": "array", "items": {"type": "array", "items": _NUM,
                                                   "minItems": 2, "maxItems": 2}},
    },
}
_WEIGHT_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["constant", "expr", "log_gaussian", "diag", "rotated_diag"]},
        "value": _NUM,
        "expr": {"type": "string"},
        "seed": {"type": "integer"}, "modes": {"type": "integer", "minimum": 1},
        "amplitude": _NUM,
        "entries": {"type": "array"},
        "rotation_angle": _NUM,
    },
}
CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["analyses"],
    "properties": {
        "domain": {
            "type": "object", "additionalProperties": False,
            "properties": {"dim": {"type": "integer", "minimum": 1, "maximum": 3},
                           "halfwidth": {"type": "number", "exclusiveMinimum": 0},
                           "points_per_axis": {"type": "integer", "minimum": 4}},
        },
        "catalog": {"type": "string"},
        "exponent": _EXPONENT_SCHEMA,
        "weight": _WEIGHT_SCHEMA,
        "cubes": {
            "type": "object", "additionalProperties": False,
            "properties": {"j_min": {"type": "integer", "minimum": 0},
                           "j_max": {"type": "integer", "minimum": 0},
                           "translates": {"type": "boolean"}},
        },
        "analyses": {
            "type": "array", "minItems": 1,
            "items": {
                "type": "object", "additionalProperties": False, "required": ["kind"],
                "properties": {"kind": {"enum": sorted(ANALYSES)},
                               "params": {"type": "object"}},
            },
        },
        "constants": {
            "type": "object", "additionalProperties": False,
            "properties": {**{k: {"type": "number", "exclusiveMinimum": 0}
                              for k in ("C1", "C2", "A1", "C", "tau_n", "C_H",
                                        "C0_cap", "C_infty_cap")},
                           "A": {"type": "number", "minimum": 0},
                           "dagger_exponent_sign": {"enum": [1, -1]}},
        },
        "output": {
            "type": "object", "additionalProperties": False,
            "properties": {"dir": {"type": "string"}, "report": {"type": "string"},
                           "cubes_csv": {"type": "string"}},
        },
    },
    "oneOf": [
        {"required": ["catalog"], "not": {"anyOf": [{"required": ["exponent"]},
                                                     {"required": ["weight"]}]}},
        {"required": ["exponent", "weight"], "not": {"required": ["catalog"]}},
    ],
}

CSV_HEADER = ["analysis_index", "analysis", "probe", "cube_index", "level", "center", "edge",
              "value", "ok"]


class ConfigError(ValueError):
    pass


class AssertionFailure(Exception):
    pass


# ---------------------------------------------------------------- config

def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None
    for a in cfg["analyses"]:
        extra = set(a.get("params", {})) - set(ANALYSES[a["kind"]])
        if extra:
            raise ConfigError(f"unknown params for {a['kind']}: {sorted(extra)}")
    cubes = cfg.get("cubes", {})
    if cubes.get("j_min", 0) > cubes.get("j_max", 6):
        raise ConfigError("cubes.j_min exceeds cubes.j_max")


@dataclass
class Problem:
    cfg: dict
    entry: Optional[catalog.CatalogEntry]
    exponent_spec: dict
    weight_spec: dict
    dim: int
    halfwidth: float
    points: int

    @property
    def is_matrix(self) -> bool:
        return catalog.is_matrix_spec(self.weight_spec)

    def build(self, points: Optional[int] = None):
        lat = build_lattice(self.dim, self.halfwidth, points or self.points)
        profile = exponent_from_spec(self.exponent_spec, lat)
        if self.is_matrix:
            return lat, profile, matrix_from_spec(self.weight_spec, lat)
        return lat, profile, catalog.scalar_weight_from_spec(self.weight_spec, lat, profile)


def make_problem(cfg: dict) -> Problem:
    entry = catalog.get(cfg["catalog"]) if "catalog" in cfg else None
    dom = cfg.get("domain", {})
    d_dim, d_L, d_N = entry.domain if entry else (1, 1.0, 1024)
    prob = Problem(
        cfg, entry,
        entry.exponent if entry else cfg["exponent"],
        entry.weight if entry else cfg["weight"],
        dom.get("dim", d_dim), float(dom.get("halfwidth", d_L)),
        dom.get("points_per_axis", d_N),
    )
    if entry and prob.halfwidth < entry.min_halfwidth:
        raise ConfigError(f"{entry.name} needs halfwidth >= {entry.min_halfwidth}")
    if not prob.is_matrix:
        return prob
    bad = [a["kind"] for a in cfg["analyses"] if a["kind"] not in MATRIX_ANALYSES]
    if bad:
        raise ConfigError(f"scalar analyses requested for a matrix weight: {bad}")
    return prob


# ---------------------------------------------------------------- analyses

@dataclass
class Context:
    problem: Problem
    lattice: object
    profile: object
    weight: object
    family: object
    constants: dict

    @property
    def rh(self) -> RHParameters:
        c = self.constants
        return RHParameters(**{k: c[k] for k in ("C1", "C2", "A1", "A", "C", "tau_n") if k in c})

    @property
    def matrix(self) -> MatrixField:
        w = self.weight
        return w if isinstance(w, MatrixField) else MatrixField.from_scalar(w)


def _cube_json(c: Optional[Cube]):
    return None if c is None else {"center": list(c.center), "edge": c.edge}


def _summary(rep: CubeReport) -> dict:
    out = {"estimate": rep.estimate, "argmax_cube": _cube_json(rep.argmax_cube),
           "cubes": len(rep.cubes), "skipped": rep.skipped}
    if rep.passed is not None:
        out["passed"] = rep.passed
    if rep.meta:
        out["meta"] = rep.meta
    return out


def _expected(problem: Problem, kind: str, params: dict) -> Optional[str]:
    if "expect" in params:
        exp = params["expect"]
        if exp not in ("stable", "unbounded", "none"):
            raise ConfigError("expect must be 'stable', 'unbounded' or 'none'")
        return None if exp == "none" else exp
    if problem.entry is None or kind not in SWEEP_FLAG:
        return None
    flag = problem.entry.flag(SWEEP_FLAG[kind])
    return None if flag is None else ("stable" if flag else "unbounded")


def _sweep(ctx: Context, kind: str, params: dict) -> dict:
    prob = ctx.problem
    j_list = [int(j) for j in params["sweep"]]
    extra = int(params.get("sweep_extra", 5))
    j_min = ctx.problem.cfg.get("cubes", {}).get("j_min", 0)
    translates = ctx.problem.cfg.get("cubes", {}).get("translates", False)

    def build(j):
        lat, profile, w = prob.build(2 ** (j + extra))
        fam = dyadic_family(lat, j_min, j, translates)
        if kind in MATRIX_CONSTANTS:
            return (w if isinstance(w, MatrixField) else MatrixField.from_scalar(w)), profile, fam
        if kind == "power_ainfty":
            return power_map(w, profile), profile, fam
        return w, profile, fam

    if kind in MATRIX_CONSTANTS:
        res = matrix_refinement_sweep(kind[len("matrix_"):], build, j_list)
    else:
        base = "ainfty" if kind == "power_ainfty" else kind
        kw = {"p": params.get("p")} if base == "ap" else {}
        if base == "dagger":
            kw["dagger_sign"] = ctx.constants.get("dagger_exponent_sign", 1)
        res = refinement_sweep(base, build, j_list, **kw).to_dict()
    res["points_per_axis"] = [2 ** (j + extra) for j in j_list]
    exp = _expected(prob, kind, params)
    res["expected"] = exp
    if exp == "stable":
        res["passed"] = res["stable"]
    elif exp == "unbounded":
        res["passed"] = res["growing"] or res["diverging"]
    return res


def _constant(ctx: Context, kind: str, params: dict) -> tuple[dict, list]:
    if kind in MATRIX_CONSTANTS:
        rep = matrix_family_constant(kind[len("matrix_"):], ctx.matrix, ctx.profile, ctx.family)
    elif kind == "power_ainfty":
        rep = family_constant("ainfty", power_map(ctx.weight, ctx.profile), None, ctx.family)
    else:
        if kind == "ap" and "p" not in params:
            raise ConfigError("analysis 'ap' needs params.p")
        rep = family_constant(kind, ctx.weight, ctx.profile, ctx.family, p=params.get("p"),
                              dagger_sign=ctx.constants.get("dagger_exponent_sign", 1))
    out = _summary(rep)
    if "sweep" in params:
        out["sweep"] = _sweep(ctx, kind, params)
    return out, [(0, rep)]


def _run_analysis(ctx: Context, spec: dict) -> tuple[dict, list]:
    kind = spec["kind"]
    params = spec.get("params", {})
    if kind in SCALAR_CONSTANTS or kind in MATRIX_CONSTANTS:
        return _constant(ctx, kind, params)
    w, p, fam = ctx.weight, ctx.profile, ctx.family
    if kind == "reverse_holder":
        est = family_constant("apinfty", w, p, fam).estimate
        r = float(params.get("r", ctx.rh.r_w(est)))
        rep = verify_reverse_holder(w, p, r, fam, ctx.rh.C, ctx.rh.A, est)
        return _summary(rep), [(0, rep)]
    if kind == "classical_rh":
        rep = classical_rh_verify(w, fam, ctx.constants.get("tau_n"))
        return _summary(rep), [(0, rep)]
    if kind == "max_empirical_rh":
        return {"r": max_empirical_rh(w, p, fam)}, []
    if kind == "doubling":
        rep = doubling_check(w, fam, [float(x) for x in params.get("lambdas", [2.0, 4.0])])
        return _summary(rep), [(0, rep)]
    if kind == "bmo":
        return {"seminorm": bmo_seminorm(w, fam)}, []
    if kind == "lw":
        f = lw_factor(w, p)
        return {"factor": f.value, "q0_norm": f.q0_norm}, []
    if kind == "indicator_norms":
        checks = [indicator_norm_check(p, c) for c in fam]
        rep = CubeReport("indicator_norms", list(fam), np.array([c["norm"] for c in checks]),
                         list(fam.levels))
        rep.extra["ok"] = np.array([c["lower_bound_ok"] for c in checks])
        rep.passed = bool(rep.extra["ok"].all())
        out = _summary(rep)
        out["max_ratio_p_Q"] = max(c["ratio_p_Q"] for c in checks)
        out["min_ratio_p_Q"] = min(c["ratio_p_Q"] for c in checks)
        return out, [(0, rep)]
    if kind == "cz":
        a = float(params.get("a", 2.0))
        sel = cz_stopping_cubes(w, ctx.lattice.box, a)
        return {"a": a, "stopping_cubes": [dict(_cube_json(c), k=k) for c, k in sel]}, []

    W = ctx.matrix
    if kind == "reducing_operators":
        rows, worst_gram, worst_inv = [], 1.0, 1.0
        cubes = list(fam)
        vals = np.empty(len(cubes))
        for i, c in enumerate(cubes):
            ro = reducing_operator(W, p, c, params.get("num_directions"))
            g = gram_agreement(ro.gram, mvee_oracle(rho_ball_points(W, p, c)))
            lo, hi = inverse_reducing_check(W, p, c, ro.matrix)
            worst_gram, worst_inv = max(worst_gram, g), max(worst_inv, hi / lo)
            vals[i] = ro.fit_ratio
            rows.append({"cube": _cube_json(c), "matrix": ro.matrix.tolist(),
                         "fit_ratio": ro.fit_ratio, "gram_factor": g})
        rep = CubeReport("reducing_operators", cubes, vals, list(fam.levels))
        budget = fit_budget(W.dim_m, p.p_minus)
        rep.passed = worst_gram <= 4 and worst_inv <= budget
        out = _summary(rep)
        out.update(budget=budget, worst_gram_factor=worst_gram, worst_inverse_hi_lo=worst_inv,
                   operators=rows)
        return out, [(0, rep)]
    if kind == "matrix_rh":
        est = matrix_family_constant("apinfty", W, p, fam).estimate
        r = float(params.get("r", ctx.rh.r_w(est)))
        rep = matrix_rh_verify(W, p, r, fam, C=ctx.rh.C, A=ctx.rh.A, apinfty_estimate=est)
        return _summary(rep), _by_probe(rep)
    if kind == "wm_reverse":
        rep = wm_reverse_check(W, p, fam)
        return _summary(rep), _by_probe(rep)
    if kind in ("dimensions", "qp3"):
        level = int(params.get("level", min(4, ctx.family.j_max)))
        lams = tuple(float(x) for x in params.get("lambdas", DEFAULT_LAMBDAS))
        base = default_base_cubes(ctx.lattice, level, max(lams))
        est = estimate_dimensions(W, p, base, lams)
        dims = {"d_lower": est.d_lower, "d_upper": est.d_upper,
                "lower_slopes": est.lower.slopes, "upper_slopes": est.upper.slopes,
                "lower_nonpower": est.lower.nonpower_flag,
                "upper_nonpower": est.upper.nonpower_flag,
                "skipped": est.lower.skipped + est.upper.skipped}
        if kind == "dimensions":
            return dims, []
        d1 = float(params.get("d1", est.d_lower + D_MARGIN))
        d2 = float(params.get("d2", est.d_upper + D_MARGIN))
        rep = qp3_bound_check(W, p, nested_pairs(fam.dyadic()), d1, d2,
                              C=ctx.constants.get("C"))
        out = _summary(rep)
        out["dimensions"] = dims
        return out, [(0, rep)]
    raise ConfigError(f"unhandled analysis kind {kind!r}")


def _by_probe(rep: CubeReport) -> list:
    probe = rep.extra.get("probe")
    if probe is None:
        return [(0, rep)]
    out = []
    for k in np.unique(probe):
        idx = np.nonzero(probe == k)[0]
        sub = CubeReport(rep.kind, [rep.cubes[i] for i in idx], rep.values[idx],
                         [rep.levels[i] for i in idx] if rep.levels else [])
        sub.extra = {key: np.asarray(v)[idx] for key, v in rep.extra.items() if key != "probe"}
        out.append((int(k), sub))
    return out


def _analysis_passed(res: dict) -> bool:
    ok = res.get("passed", True) is not False
    sweep = res.get("sweep")
    if sweep is not None:
        ok &= sweep.get("passed", True) is not False
    return ok


# ---------------------------------------------------------------- serialization

def _plain(x):
    """JSON-ready copy: numpy scalars and arrays become Python values."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, Cube):
        return _cube_json(x)
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return v if math.isfinite(v) else repr(v)
    return x


def dumps_report(report: dict) -> str:
    return json.dumps(_plain(report), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _g17(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    return format(float(v), ".17g")


def cubes_csv(tables: list) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_HEADER)
    for a_idx, kind, probe, rep in tables:
        ok = rep.extra.get("ok", rep.extra.get("jensen_ok", rep.extra.get("star_ok")))
        for i, c in enumerate(rep.cubes):
            wr.writerow([a_idx, kind, probe, i, rep.levels[i] if rep.levels else "",
                         " ".join(_g17(x) for x in c.center), _g17(c.edge),
                         _g17(rep.values[i]), "" if ok is None else _g17(ok[i])])
    return buf.getvalue()


# ---------------------------------------------------------------- commands

def execute(cfg: dict, threads: int = 1) -> tuple[dict, str, bool]:
    """Run every analysis of a validated config; returns (report, csv text, all passed)."""
    prob = make_problem(cfg)
    lat, profile, weight = prob.build()
    cubes = cfg.get("cubes", {})
    fam = dyadic_family(lat, cubes.get("j_min", 0), cubes.get("j_max", 6),
                        cubes.get("translates", False))
    consts = cfg.get("constants", {})
    ctx = Context(prob, lat, profile, weight, fam, consts)
    lh_ok, lh_warn = lh_check(profile, consts.get("C0_cap", 100.0),
                              consts.get("C_infty_cap", 100.0))

    specs = cfg["analyses"]
    workers = threads if threads > 0 else (os.cpu_count() or 1)
    if workers > 1 and len(specs) > 1:
        with ThreadPoolExecutor(max_workers=min(workers, len(specs))) as pool:
            results = list(pool.map(lambda s: _run_analysis(ctx, s), specs))
    else:
        results = [_run_analysis(ctx, s) for s in specs]

    analyses, tables = [], []
    for i, (spec, (res, reps)) in enumerate(zip(specs, results)):
        res = dict(res, kind=spec["kind"], params=spec.get("params", {}))
        res["passed_all"] = _analysis_passed(res)
        analyses.append(res)
        tables += [(i, spec["kind"], probe, rep) for probe, rep in reps]
    passed = all(a["passed_all"] for a in analyses)
    report = {
        "version": __version__,
        "config": cfg,
        "domain": {"dim": lat.dim, "halfwidth": lat.halfwidth,
                   "points_per_axis": lat.points_per_axis, "spacing": lat.spacing},
        "family": {"j_min": fam.j_min, "j_max": fam.j_max, "cubes": len(fam)},
        "exponent": dict(profile.summary(), lh_ok=lh_ok, lh_warnings=lh_warn),
        "weight": {"catalog": prob.entry.summary() if prob.entry else None,
                   "matrix": prob.is_matrix},
        "analyses": analyses,
        "passed": passed,
    }
    return report, cubes_csv(tables), passed


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        out_cfg = cfg.get("output", {})
        out_dir = Path(args.out or out_cfg.get("dir", "."))
        report, table, passed = execute(cfg, args.threads)
    except ArithmeticError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / out_cfg.get("report", "report.json")).write_text(dumps_report(report))
    (out_dir / out_cfg.get("cubes_csv", "cubes.csv")).write_text(table)
    for a in report["analyses"]:
        status = "ok" if a["passed_all"] else "FAILED"
        est = a.get("estimate")
        tail = f" estimate={est:.6g}" if isinstance(est, float) else ""
        print(f"{a['kind']}: {status}{tail}")
    return EXIT_OK if passed else EXIT_ASSERT


def cmd_selftest(args) -> int:
    from . import acceptance

    if args.list:
        for c in acceptance.CRITERIA:
            print(f"{c.number}. {c.title} (limit {c.limit:g} s)")
        return EXIT_OK
    try:
        results = acceptance.run_all(tau_n=args.tau_n)
    except ArithmeticError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for r in results:
        print(r.line)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        rows = [{"number": r.number, "title": r.title, "passed": r.passed,
                 "limit": r.limit, "details": r.details} for r in results]
        (out / "selftest.json").write_text(dumps_report({"criteria": rows}))
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} criteria passed")
    return EXIT_OK if failed == 0 else EXIT_ASSERT


def cmd_catalog(args) -> int:
    for e in catalog.list_entries():
        flags = " ".join(f"{c}={'?' if v is None else ('yes' if v else 'no')}"
                         for c, v in e.summary()["flags"].items())
        kind = "matrix" if e.is_matrix else "scalar"
        print(f"{e.name:20s} {kind:6s} {flags}  {e.description}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="varweights", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=1, help="worker threads (0 = auto)")
    common.add_argument("--out", default=None, help="output directory")
    sub = ap.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", parents=[common], help="run the analyses of a JSON config")
    p_run.add_argument("config")
    p_run.set_defaults(fn=cmd_run)
    p_self = sub.add_parser("selftest", parents=[common], help="run the acceptance criteria")
    p_self.add_argument("--list", action="store_true", help="list criteria without running")
    p_self.add_argument("--tau-n", type=float, default=None,
                        help="override tau_n of the classical reverse Hoelder check")
    p_self.set_defaults(fn=cmd_selftest)
    p_cat = sub.add_parser("catalog", parents=[common], help="catalog commands")
    p_cat.add_argument("action", choices=["list"])
    p_cat.set_defaults(fn=cmd_catalog)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 0:
        print("config error: --threads must be >= 0", file=sys.stderr)
        return EXIT_CONFIG
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
