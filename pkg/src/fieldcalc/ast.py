"""Abstract syntax of the field calculus.

Expressions form an immutable tree.  Neighbouring-field literals (`FieldLit`)
never appear in parsed source programs; they exist for intermediate values and
for the `eval` command's environment files.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

from .errors import MissingMain

Value = Union[float, int, bool, tuple, "Constructor"]


@dataclass(frozen=True)
class Constructor:
    """A data-constructor value ``c(v̄)``; only user-registered builtins give
    these semantics."""

    name: str
    args: Tuple[Value, ...] = ()

    def __repr__(self):
        if not self.args:
            return self.name
        return f"{self.name}({', '.join(map(repr, self.args))})"


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Lit:
    value: Value


@dataclass(frozen=True)
class FieldLit:
    """Neighbouring field literal: sorted tuple of (device id, local value)."""

    entries: Tuple[Tuple[int, Value], ...]


@dataclass(frozen=True)
class Let:
    name: str
    bound: "Expr"
    body: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    args: Tuple["Expr", ...] = ()
    fn_args: Tuple[str, ...] = ()


@dataclass(frozen=True)
class If:
    guard: "Expr"
    then: "Expr"
    orelse: "Expr"


@dataclass(frozen=True)
class Nbr:
    body: "Expr"


@dataclass(frozen=True)
class Rep:
    init: "Expr"
    var: str
    update: "Expr"


Expr = Union[Var, Lit, FieldLit, Let, Call, If, Nbr, Rep]


@dataclass(frozen=True)
class FunctionDecl:
    name: str
    params: Tuple[str, ...]
    fn_params: Tuple[str, ...]
    body: Expr


@dataclass(frozen=True)
class Program:
    functions: Tuple[FunctionDecl, ...]
    main: Optional[Expr] = None

    def function(self, name: str) -> Optional[FunctionDecl]:
        for f in self.functions:
            if f.name == name:
                return f
        return None

    def require_main(self) -> Expr:
        if self.main is None:
            raise MissingMain("program has no main expression")
        return self.main

    def with_main(self, main: Expr) -> "Program":
        return Program(self.functions, main)


def children(e: Expr) -> Tuple[Expr, ...]:
    if isinstance(e, Let):
        return (e.bound, e.body)
    if isinstance(e, Call):
        return e.args
    if isinstance(e, If):
        return (e.guard, e.then, e.orelse)
    if isinstance(e, Nbr):
        return (e.body,)
    if isinstance(e, Rep):
        return (e.init, e.update)
    return ()


def free_vars(e: Expr) -> frozenset:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Let):
        return free_vars(e.bound) | (free_vars(e.body) - {e.name})
    if isinstance(e, Rep):
        return free_vars(e.init) | (free_vars(e.update) - {e.var})
    out = frozenset()
    for c in children(e):
        out |= free_vars(c)
    return out


def subst_vars(e: Expr, mapping: dict) -> Expr:
    """Capture-avoiding substitution of variables by expressions."""
    if not mapping:
        return e
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, (Lit, FieldLit)):
        return e
    if isinstance(e, Let):
        inner = {k: v for k, v in mapping.items() if k != e.name}
        return Let(e.name, subst_vars(e.bound, mapping), subst_vars(e.body, inner))
    if isinstance(e, Rep):
        inner = {k: v for k, v in mapping.items() if k != e.var}
        return Rep(subst_vars(e.init, mapping), e.var, subst_vars(e.update, inner))
    if isinstance(e, Call):
        return Call(e.fn, tuple(subst_vars(a, mapping) for a in e.args), e.fn_args)
    if isinstance(e, If):
        return If(subst_vars(e.guard, mapping), subst_vars(e.then, mapping),
                  subst_vars(e.orelse, mapping))
    if isinstance(e, Nbr):
        return Nbr(subst_vars(e.body, mapping))
    raise TypeError(f"not an expression: {e!r}")


def transform(e: Expr, fn) -> Expr:
    """Bottom-up rewrite: ``fn`` is applied to every node after its children."""
    if isinstance(e, Let):
        e = Let(e.name, transform(e.bound, fn), transform(e.body, fn))
    elif isinstance(e, Rep):
        e = Rep(transform(e.init, fn), e.var, transform(e.update, fn))
    elif isinstance(e, Call):
        e = Call(e.fn, tuple(transform(a, fn) for a in e.args), e.fn_args)
    elif isinstance(e, If):
        e = If(transform(e.guard, fn), transform(e.then, fn), transform(e.orelse, fn))
    elif isinstance(e, Nbr):
        e = Nbr(transform(e.body, fn))
    return fn(e)


def walk(e: Expr):
    """Yield every node of the expression tree, preorder."""
    yield e
    for c in children(e):
        yield from walk(c)
