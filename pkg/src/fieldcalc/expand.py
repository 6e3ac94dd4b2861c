"""Functional-parameter elimination (macro expansion).

Extended functions ``def d(x̄)(z̄) { e }`` are instantiated once per distinct
tuple of plain function arguments, producing ``d__f1__f2(x̄)`` with the
functional parameters substituted as macro parameters.  Builtins that take a
functional slot (``foldHood``) keep their concrete function argument in place.
"""

from __future__ import annotations

from typing import Dict, Tuple

from .ast import Call, Expr, FunctionDecl, Program, transform, walk
from .errors import ExpansionError, IllegalFunctionalArgument

FN_SLOT_BUILTINS = {"foldHood": 1}


def _subst_fn_names(e: Expr, mapping: Dict[str, str]) -> Expr:
    def rewrite(node: Expr) -> Expr:
        if isinstance(node, Call):
            fn = mapping.get(node.fn, node.fn)
            fn_args = tuple(mapping.get(z, z) for z in node.fn_args)
            if fn != node.fn or fn_args != node.fn_args:
                return Call(fn, node.args, fn_args)
        return node

    return transform(e, rewrite)


_OP_NAMES = {"+": "add", "-": "sub", "*": "mul", "/": "div",
             "&&": "and", "||": "or", "<": "lt", "<=": "le",
             "=": "eq", ">=": "ge", ">": "gt"}


def mangle(name: str, fn_args: Tuple[str, ...]) -> str:
    return name + "".join(f"__{_OP_NAMES.get(a, a)}" for a in fn_args)


def expand_functional_params(p: Program) -> Program:
    extended = {f.name: f for f in p.functions if f.fn_params}
    plain = [f for f in p.functions if not f.fn_params]
    plain_names = {f.name for f in p.functions}

    # instance bound: n^k per extended function (n = distinct plain fn names
    # passed as functional arguments anywhere in the program)
    arg_names = set()
    for f in p.functions:
        for node in walk(f.body):
            if isinstance(node, Call):
                arg_names.update(a for a in node.fn_args if a not in f.fn_params)
    if p.main is not None:
        for node in walk(p.main):
            if isinstance(node, Call):
                arg_names.update(node.fn_args)
    n_plain = len(arg_names)

    instances: Dict[str, FunctionDecl] = {}
    instance_order = []
    counts: Dict[str, int] = {f: 0 for f in extended}

    def instantiate(name: str, fn_args: Tuple[str, ...]) -> str:
        decl = extended[name]
        for a in fn_args:
            if a in extended:
                raise IllegalFunctionalArgument(
                    f"extended function {a!r} passed as functional argument")
        if len(fn_args) != len(decl.fn_params):
            raise ExpansionError(
                f"{name} expects {len(decl.fn_params)} functional arguments, "
                f"got {len(fn_args)}")
        inst_name = mangle(name, fn_args)
        if inst_name in instances:
            return inst_name
        if inst_name in plain_names:
            raise ExpansionError(
                f"expansion name {inst_name!r} collides with a declared function")
        counts[name] += 1
        bound = max(n_plain, 1) ** len(decl.fn_params)
        assert counts[name] <= bound, "instance bound exceeded"
        body = _subst_fn_names(decl.body, dict(zip(decl.fn_params, fn_args)))
        inst = FunctionDecl(inst_name, decl.params, (), expand_expr(body))
        instances[inst_name] = inst
        instance_order.append(inst)
        return inst_name

    def expand_expr(e: Expr) -> Expr:
        def rewrite(node: Expr) -> Expr:
            if not isinstance(node, Call):
                return node
            if node.fn in extended:
                inst_name = instantiate(node.fn, node.fn_args)
                return Call(inst_name, node.args, ())
            if node.fn_args and node.fn not in FN_SLOT_BUILTINS:
                raise IllegalFunctionalArgument(
                    f"{node.fn!r} takes no functional arguments")
            return node

        return transform(e, rewrite)

    new_plain = [FunctionDecl(f.name, f.params, (), expand_expr(f.body))
                 for f in plain]
    new_main = expand_expr(p.main) if p.main is not None else None
    return Program(tuple(new_plain + instance_order), new_main)
