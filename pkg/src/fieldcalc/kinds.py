"""Local/field kind checking with a light base lattice.

Every expression is assigned a :class:`Kind`: ``local`` or ``field`` of a base
(``num``, ``bool``, ``any`` or a tuple of bases).  Fields of fields are
rejected, guards must be local booleans, builtins are checked against their
signatures with pointwise field promotion, and order comparisons reject
cross-base operands (numbers compare with numbers, tuples with same-arity
tuples).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from .ast import (Call, Constructor, Expr, FieldLit, If, Let, Lit, Nbr,
                  Program, Rep, Var)
from .errors import KindError

NUM = "num"
BOOL = "bool"
ANY = "any"
# tuple bases are represented as ("tuple", (base, ...))


@dataclass(frozen=True)
class Kind:
    level: str  # "local" | "field"
    base: object

    def is_field(self) -> bool:
        return self.level == "field"

    def __str__(self):
        b = _base_str(self.base)
        return b if self.level == "local" else f"field({b})"


def _base_str(b) -> str:
    if isinstance(b, tuple):
        return "tuple(" + ", ".join(_base_str(x) for x in b[1]) + ")"
    return b


def local(base) -> Kind:
    return Kind("local", base)


def field(base) -> Kind:
    return Kind("field", base)


def unify_base(a, b):
    if a == ANY:
        return b
    if b == ANY:
        return a
    if a == b:
        return a
    if isinstance(a, tuple) and isinstance(b, tuple) and len(a[1]) == len(b[1]):
        elems = tuple(unify_base(x, y) for x, y in zip(a[1], b[1]))
        if all(e is not None for e in elems):
            return ("tuple", elems)
        return None
    return None


def _value_base(v):
    if isinstance(v, bool):
        return BOOL
    if isinstance(v, (int, float)):
        return NUM
    if isinstance(v, tuple):
        return ("tuple", tuple(_value_base(x) for x in v))
    if isinstance(v, Constructor):
        return ANY
    raise KindError(f"value {v!r} has no kind")


_ORDERABLE_ERR = "order comparison requires numbers, booleans or same-arity tuples"


def _check_orderable(b):
    # bool is orderable (false < true) but never comparable with num: the
    # cross-kind case is rejected by unify_base before this check runs
    if b in (NUM, BOOL, ANY):
        return
    if isinstance(b, tuple):
        for x in b[1]:
            _check_orderable(x)
        return
    raise KindError(_ORDERABLE_ERR + f" (got {_base_str(b)})")


class KindResult:
    """Kinds of every subexpression (first instantiation wins for shared
    function bodies)."""

    def __init__(self):
        self._by_id: Dict[int, Kind] = {}
        self._refs = []

    def record(self, e: Expr, k: Kind) -> Kind:
        if id(e) not in self._by_id:
            self._by_id[id(e)] = k
            self._refs.append(e)
        return k

    def of(self, e: Expr) -> Kind:
        return self._by_id[id(e)]


class _Checker:
    def __init__(self, program: Program, extra_sensors=()):
        self.program = program
        self.result = KindResult()
        self.memo: Dict[Tuple[str, Tuple[Kind, ...]], Kind] = {}
        self.active = set()
        self.extra_sensors = set(extra_sensors)

    # -- helpers -------------------------------------------------------------

    def promote(self, kinds, bases) -> Optional[str]:
        """Unify arg bases against required bases with pointwise promotion.

        Returns "field" if any argument was a field (result is promoted).
        """
        if len(kinds) != len(bases):
            raise KindError("arity mismatch")
        promoted = any(k.is_field() for k in kinds)
        for k, want in zip(kinds, bases):
            if unify_base(k.base, want) is None:
                raise KindError(
                    f"argument kind {k} does not match expected {_base_str(want)}")
        return "field" if promoted else "local"

    def require_field(self, k: Kind, what: str) -> None:
        if not k.is_field():
            raise KindError(f"{what} requires a neighbouring field argument")

    # -- expression checking ---------------------------------------------------

    def check(self, e: Expr, env: Dict[str, Kind]) -> Kind:
        k = self._check(e, env)
        return self.result.record(e, k)

    def _check(self, e: Expr, env: Dict[str, Kind]) -> Kind:
        if isinstance(e, Var):
            if e.name not in env:
                raise KindError(f"unbound variable {e.name!r}")
            return env[e.name]
        if isinstance(e, Lit):
            return local(_value_base(e.value))
        if isinstance(e, FieldLit):
            base = ANY
            for _, v in e.entries:
                u = unify_base(base, _value_base(v))
                if u is None:
                    raise KindError("field literal mixes value kinds")
                base = u
            return field(base)
        if isinstance(e, Let):
            bk = self.check(e.bound, env)
            return self.check(e.body, {**env, e.name: bk})
        if isinstance(e, Nbr):
            bk = self.check(e.body, env)
            if bk.is_field():
                raise KindError("nested field: nbr of a field expression")
            return field(bk.base)
        if isinstance(e, Rep):
            ik = self.check(e.init, env)
            if ik.is_field():
                raise KindError("rep state must be a local value")
            uk = self.check(e.update, {**env, e.var: local(ik.base)})
            if uk.is_field():
                raise KindError("rep update must produce a local value")
            base = unify_base(ik.base, uk.base)
            if base is None:
                raise KindError("rep init and update kinds disagree")
            return local(base)
        if isinstance(e, If):
            gk = self.check(e.guard, env)
            if gk.is_field() or unify_base(gk.base, BOOL) is None:
                raise KindError("if guard must be a local boolean")
            tk = self.check(e.then, env)
            ek = self.check(e.orelse, env)
            if tk.level != ek.level:
                raise KindError("branch mismatch: if branches disagree on kind")
            base = unify_base(tk.base, ek.base)
            if base is None:
                raise KindError("branch mismatch: if branches disagree on base")
            return Kind(tk.level, base)
        if isinstance(e, Call):
            return self.check_call(e, env)
        raise KindError(f"cannot kind-check {e!r}")

    def check_call(self, e: Call, env: Dict[str, Kind]) -> Kind:
        decl = self.program.function(e.fn)
        if decl is not None:
            if decl.fn_params:
                raise KindError(
                    f"call to unexpanded extended function {e.fn!r}")
            if e.fn_args:
                raise KindError(f"{e.fn!r} takes no functional arguments")
            if len(e.args) != len(decl.params):
                raise KindError(
                    f"{e.fn} expects {len(decl.params)} arguments, got {len(e.args)}")
            arg_kinds = tuple(self.check(a, env) for a in e.args)
            key = (e.fn, arg_kinds)
            if key in self.memo:
                return self.memo[key]
            if key in self.active:
                return local(ANY)  # recursive call: assume a local result
            self.active.add(key)
            try:
                res = self.check(decl.body, dict(zip(decl.params, arg_kinds)))
            finally:
                self.active.discard(key)
            self.memo[key] = res
            return res
        return self.check_builtin(e, env)

    def check_builtin(self, e: Call, env: Dict[str, Kind]) -> Kind:
        name = e.fn
        ks = tuple(self.check(a, env) for a in e.args)
        if e.fn_args and name != "foldHood":
            raise KindError(f"builtin {name!r} takes no functional arguments")

        if name in ("+", "-", "*", "/"):
            lvl = self.promote(ks, (NUM, NUM))
            return Kind(lvl, NUM)
        if name == "neg":
            lvl = self.promote(ks, (NUM,))
            return Kind(lvl, NUM)
        if name in ("<", "<=", ">=", ">"):
            if len(ks) != 2:
                raise KindError(f"{name} is binary")
            base = unify_base(ks[0].base, ks[1].base)
            if base is None:
                raise KindError(
                    f"cross-kind comparison {_base_str(ks[0].base)} {name} "
                    f"{_base_str(ks[1].base)}")
            _check_orderable(base)
            lvl = "field" if (ks[0].is_field() or ks[1].is_field()) else "local"
            return Kind(lvl, BOOL)
        if name == "=":
            if len(ks) != 2:
                raise KindError("= is binary")
            if unify_base(ks[0].base, ks[1].base) is None:
                raise KindError("cross-kind equality")
            lvl = "field" if (ks[0].is_field() or ks[1].is_field()) else "local"
            return Kind(lvl, BOOL)
        if name in ("&&", "||"):
            lvl = self.promote(ks, (BOOL, BOOL))
            return Kind(lvl, BOOL)
        if name in ("min", "max"):
            if len(ks) != 2:
                raise KindError(f"{name} is binary")
            base = unify_base(ks[0].base, ks[1].base)
            if base is None:
                raise KindError(f"cross-kind {name}")
            _check_orderable(base)
            lvl = "field" if (ks[0].is_field() or ks[1].is_field()) else "local"
            return Kind(lvl, base)
        if name == "mux":
            if len(ks) != 3:
                raise KindError("mux takes 3 arguments")
            if unify_base(ks[0].base, BOOL) is None:
                raise KindError("mux selector must be boolean")
            base = unify_base(ks[1].base, ks[2].base)
            if base is None:
                raise KindError("mux branches disagree")
            lvl = "field" if any(k.is_field() for k in ks) else "local"
            return Kind(lvl, base)
        if name in ("pair", "triple", "tuple"):
            want = {"pair": 2, "triple": 3}.get(name)
            if want is not None and len(ks) != want:
                raise KindError(f"{name} takes {want} arguments")
            lvl = "field" if any(k.is_field() for k in ks) else "local"
            return Kind(lvl, ("tuple", tuple(k.base for k in ks)))
        if name in ("1st", "2nd", "3rd"):
            if len(ks) != 1:
                raise KindError(f"{name} takes 1 argument")
            idx = {"1st": 0, "2nd": 1, "3rd": 2}[name]
            b = ks[0].base
            if b == ANY:
                return Kind(ks[0].level, ANY)
            if not isinstance(b, tuple) or len(b[1]) <= idx:
                raise KindError(f"{name} applied to non-tuple or short tuple")
            return Kind(ks[0].level, b[1][idx])
        if name == "pickHood":
            if len(ks) != 1:
                raise KindError("pickHood takes 1 argument")
            self.require_field(ks[0], "pickHood")
            return local(ks[0].base)
        if name in ("minHood", "maxHood", "minHood+", "maxHood+"):
            if len(ks) != 1:
                raise KindError(f"{name} takes 1 argument")
            self.require_field(ks[0], name)
            _check_orderable(ks[0].base)
            return local(ks[0].base)
        if name == "minHoodLoc":
            if len(ks) != 2:
                raise KindError("minHoodLoc takes 2 arguments")
            self.require_field(ks[0], "minHoodLoc")
            if ks[1].is_field():
                raise KindError("minHoodLoc local argument must be local")
            base = unify_base(ks[0].base, ks[1].base)
            if base is None:
                raise KindError("minHoodLoc arguments disagree")
            _check_orderable(base)
            return local(base)
        if name == "meanHood":
            if len(ks) != 1:
                raise KindError("meanHood takes 1 argument")
            self.require_field(ks[0], "meanHood")
            if unify_base(ks[0].base, NUM) is None:
                raise KindError("meanHood requires a numeric field")
            return local(NUM)
        if name == "sumhood":
            if len(ks) != 1:
                raise KindError("sumhood takes 1 argument")
            self.require_field(ks[0], "sumhood")
            if unify_base(ks[0].base, NUM) is None:
                raise KindError("sumhood requires a numeric field")
            return local(NUM)
        if name == "anyhood":
            if len(ks) != 1:
                raise KindError("anyhood takes 1 argument")
            self.require_field(ks[0], "anyhood")
            if unify_base(ks[0].base, BOOL) is None:
                raise KindError("anyhood requires a boolean field")
            return local(BOOL)
        if name == "counthood":
            if len(ks) != 1:
                raise KindError("counthood takes 1 argument")
            self.require_field(ks[0], "counthood")
            if unify_base(ks[0].base, BOOL) is None:
                raise KindError("counthood requires a boolean field")
            return local(NUM)
        if name == "foldHood":
            if len(ks) != 2 or len(e.fn_args) != 1:
                raise KindError("foldHood takes (field, initial)(fn)")
            self.require_field(ks[0], "foldHood")
            base = unify_base(ks[0].base, ks[1].base)
            if base is None:
                raise KindError("foldHood field and initial disagree")
            self._check_fold_fn(e.fn_args[0], base)
            return local(base)
        if name in ("nbrlt", "nbrgt"):
            if len(ks) != 1:
                raise KindError(f"{name} takes 1 argument")
            if ks[0].is_field():
                raise KindError(f"{name} argument must be local")
            _check_orderable(ks[0].base)
            return field(BOOL)
        if name in ("nbrRange", "nbrLag"):
            if ks:
                raise KindError(f"{name} takes no arguments")
            return field(NUM)
        if name in ("snsNum", "sns_interval"):
            if ks:
                raise KindError(f"{name} takes no arguments")
            return local(NUM)
        if name == "uid":
            if ks:
                raise KindError("uid takes no arguments")
            return local(NUM)
        if not e.args and not e.fn_args:
            # unknown 0-ary call: named sensor read, resolved at runtime
            return local(ANY)
        raise KindError(f"unknown function {name!r}")

    def _check_fold_fn(self, fn_name: str, base) -> None:
        """The functional slot of foldHood must be applicable as plain math."""
        decl = self.program.function(fn_name)
        if decl is None:
            if fn_name in ("+", "-", "*", "/", "min", "max", "&&", "||"):
                return
            raise KindError(
                f"foldHood function {fn_name!r} is not a binary builtin "
                f"or declared function")
        if len(decl.params) != 2 or decl.fn_params:
            raise KindError(f"foldHood function {fn_name!r} must be binary")
        from .ast import walk as _walk
        for node in _walk(decl.body):
            if isinstance(node, (Nbr, Rep, If)):
                raise KindError(
                    f"foldHood function {fn_name!r} must be local-pure")
            if isinstance(node, Call) and (
                    "Hood" in node.fn or "hood" in node.fn or
                    node.fn in ("nbrRange", "nbrLag", "nbrlt", "nbrgt")):
                raise KindError(
                    f"foldHood function {fn_name!r} must be local-pure")
        self.check(decl.body, {decl.params[0]: local(base),
                               decl.params[1]: local(base)})


def kind_check(p: Program, main_env: Optional[Dict[str, Kind]] = None) -> KindResult:
    """Check an expanded program; returns the kind of every subexpression.

    Raises :class:`KindError` on any violation.  The main expression must be
    of local kind for a runnable program (a field-valued main would have no
    per-device output)."""
    checker = _Checker(p)
    if p.main is not None:
        checker.check(p.main, dict(main_env or {}))
    else:
        # library check: every function body with all-local 'any' params
        for f in p.functions:
            if f.fn_params:
                raise KindError(f"unexpanded extended function {f.name!r}")
            checker.check(f.body, {name: local(ANY) for name in f.params})
    return checker.result
