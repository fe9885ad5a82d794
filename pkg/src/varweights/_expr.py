"""Tiny whitelisted arithmetic evaluator for config-supplied formulas."""
from __future__ import annotations

import ast

import numpy as np

_FUNCS = {
    "abs": np.abs,
    "sqrt": np.sqrt,
    "exp": np.exp,
    "log": np.log,
    "log2": np.log2,
    "sin": np.sin,
    "cos": np.cos,
    "tanh": np.tanh,
    "minimum": np.minimum,
    "maximum": np.maximum,
    "where": np.where,
}
_CONSTS = {"pi": np.pi, "e": np.e}
_ALLOWED = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Compare, ast.Call, ast.Name,
    ast.Load, ast.Constant, ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow,
    ast.USub, ast.UAdd, ast.Lt, ast.LtE, ast.Gt, ast.GtE, ast.Mod,
)


class ExprError(ValueError):
    pass


def compile_expr(source: str, variables: tuple[str, ...]):
    try:
        tree = ast.parse(source, mode="eval")
    except SyntaxError as exc:
        raise ExprError(f"cannot parse expression {source!r}: {exc.msg}") from None
    allowed_names = set(_FUNCS) | set(_CONSTS) | set(variables)
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED):
            raise ExprError(f"disallowed syntax {type(node).__name__} in {source!r}")
        if isinstance(node, ast.Name) and node.id not in allowed_names:
            raise ExprError(f"unknown name {node.id!r} in {source!r}")
        if isinstance(node, ast.Call) and not (
            isinstance(node.func, ast.Name) and node.func.id in _FUNCS
        ):
            raise ExprError(f"only whitelisted functions may be called in {source!r}")
    code = compile(tree, "<expr>", "eval")

    def fn(**env):
        ns = {"__builtins__": {}, **_FUNCS, **_CONSTS, **env}
        return eval(code, ns)  # noqa: S307 - AST checked above

    return fn


def coordinate_env(coords: list[np.ndarray]) -> dict[str, np.ndarray]:
    """Names available to expressions: x, y, z (axes present) and r = |x|."""
    env = {name: c for name, c in zip(("x", "y", "z"), coords)}
    env["r"] = np.sqrt(sum(c**2 for c in coords))
    return env


def eval_on_lattice(source: str, lattice) -> np.ndarray:
    coords = lattice.coords()
    env = coordinate_env(coords)
    fn = compile_expr(source, tuple(env))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = fn(**env)
    return np.broadcast_to(np.asarray(out, dtype=float), lattice.shape).copy()
