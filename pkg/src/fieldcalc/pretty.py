"""Pretty-printer emitting the surface syntax; parse(pretty(p)) round-trips."""

from __future__ import annotations

import math

from .ast import (Call, Expr, FieldLit, FunctionDecl, If, Let, Lit, Nbr,
                  Program, Rep, Var)

_INFIX = {"||": 1, "&&": 2, "<": 3, "<=": 3, "=": 3, ">=": 3, ">": 3,
          "+": 4, "-": 4, "*": 5, "/": 5}
_NONASSOC = {"<", "<=", "=", ">=", ">"}
_PREC_UNARY = 6
_PREC_ATOM = 7


def render_number(x: float) -> str:
    if math.isinf(x):
        return "infinity" if x > 0 else "-infinity"
    if math.isnan(x):
        return "nan"
    if isinstance(x, float) and x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def _lit(v) -> str:
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, (int, float)):
        return render_number(float(v))
    raise ValueError(f"value {v!r} has no source form")


def pp_expr(e: Expr, prec: int = 0) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Lit):
        s = _lit(e.value)
        if s.startswith("-") and prec >= _PREC_ATOM:
            return f"({s})"
        return s
    if isinstance(e, FieldLit):
        inner = ", ".join(f"{d} -> {_lit(v)}" for d, v in e.entries)
        return "{" + inner + "}"
    if isinstance(e, Let):
        s = f"let {e.name} = {pp_expr(e.bound)} in {pp_expr(e.body)}"
        return f"({s})" if prec > 0 else s
    if isinstance(e, If):
        return f"if ({pp_expr(e.guard)}) {{ {pp_expr(e.then)} }} {{ {pp_expr(e.orelse)} }}"
    if isinstance(e, Nbr):
        return f"nbr{{{pp_expr(e.body)}}}"
    if isinstance(e, Rep):
        return f"rep ({pp_expr(e.init)}) {{ ({e.var}) => {pp_expr(e.update)} }}"
    if isinstance(e, Call):
        if e.fn in _INFIX and len(e.args) == 2 and not e.fn_args:
            p = _INFIX[e.fn]
            lp = p + 1 if e.fn in _NONASSOC else p
            s = f"{pp_expr(e.args[0], lp)} {e.fn} {pp_expr(e.args[1], p + 1)}"
            return f"({s})" if prec > p else s
        if e.fn == "neg" and len(e.args) == 1 and not e.fn_args:
            s = f"-{pp_expr(e.args[0], _PREC_UNARY)}"
            return f"({s})" if prec > _PREC_UNARY else s
        args = ", ".join(pp_expr(a) for a in e.args)
        s = f"{e.fn}({args})"
        if e.fn_args:
            s += "(" + ", ".join(e.fn_args) + ")"
        return s
    raise TypeError(f"not an expression: {e!r}")


def pp_function(f: FunctionDecl) -> str:
    head = f"def {f.name}({', '.join(f.params)})"
    if f.fn_params:
        head += f"({', '.join(f.fn_params)})"
    return head + " {\n  " + pp_expr(f.body) + "\n}"


def pp_program(p: Program) -> str:
    parts = [pp_function(f) for f in p.functions]
    if p.main is not None:
        parts.append(pp_expr(p.main))
    return "\n\n".join(parts) + "\n"
