"""Evaluation kernel: big-step device semantics over compiled programs.

This module is the hot path of the whole toolchain.  It is written in a
Cython-compilable subset of Python; ``setup.py`` copies it verbatim to
``_ckernel.py`` and compiles that copy, and ``fieldcalc.runtime`` picks the
compiled twin when it imports.  Keep it free of package imports other than
``fieldcalc.errors`` so both twins stay self-contained.

Data representation (shared with the rest of the package):

* value tree  ``(root, (child, ...))``
* neighbouring field  ``dict {device_id: local value}``
* local values  ``float | int | bool | tuple | Constructor-like``

Evaluation of one firing is a pure function of ``(device, value-tree
environment, sensors, program)``; the environment is a list of
``(device_id, tree)`` pairs sorted by device id, and alignment walks the
stored trees positionally (π_i) or by branch guard (π^ℓ).
"""

import math

from fieldcalc.errors import (ArityError, DomainMismatch, EmptyFieldError,
                              EvalError, MissingBuiltin, StuckError)

INF = math.inf

# --- opcodes -----------------------------------------------------------------

OP_LIT = 0
OP_VAR = 1
OP_LET = 2
OP_BCALL = 3
OP_DCALL = 4
OP_NBR = 5
OP_REP = 6
OP_IF = 7
OP_FLD = 8

# --- builtin ids -------------------------------------------------------------

B_ADD = 1
B_SUB = 2
B_MUL = 3
B_DIV = 4
B_NEG = 5
B_LT = 10
B_LE = 11
B_EQ = 12
B_GE = 13
B_GT = 14
B_AND = 20
B_OR = 21
B_MUX = 25
B_PAIR = 30
B_TRIPLE = 31
B_TUPLE = 32
B_FST = 33
B_SND = 34
B_TRD = 35
B_PICKHOOD = 40
B_FOLDHOOD = 41
B_MEANHOOD = 42
B_MINHOOD = 43
B_MINHOODP = 44
B_MAXHOOD = 45
B_MAXHOODP = 46
B_MINHOODLOC = 47
B_SUMHOOD = 48
B_ANYHOOD = 49
B_COUNTHOOD = 50
B_MIN = 55
B_MAX = 56
B_UID = 60
B_SNSNUM = 61
B_INTERVAL = 62
B_NBRRANGE = 63
B_NBRLAG = 64
B_NBRLT = 65
B_NBRGT = 66
B_SENSOR = 99
B_REGISTERED = 100

BUILTIN_IDS = {
    "+": B_ADD, "-": B_SUB, "*": B_MUL, "/": B_DIV, "neg": B_NEG,
    "<": B_LT, "<=": B_LE, "=": B_EQ, ">=": B_GE, ">": B_GT,
    "&&": B_AND, "||": B_OR, "mux": B_MUX,
    "pair": B_PAIR, "triple": B_TRIPLE, "tuple": B_TUPLE,
    "1st": B_FST, "2nd": B_SND, "3rd": B_TRD,
    "pickHood": B_PICKHOOD, "foldHood": B_FOLDHOOD, "meanHood": B_MEANHOOD,
    "minHood": B_MINHOOD, "minHood+": B_MINHOODP,
    "maxHood": B_MAXHOOD, "maxHood+": B_MAXHOODP,
    "minHoodLoc": B_MINHOODLOC,
    "sumhood": B_SUMHOOD, "anyhood": B_ANYHOOD, "counthood": B_COUNTHOOD,
    "min": B_MIN, "max": B_MAX,
    "uid": B_UID, "snsNum": B_SNSNUM, "sns_interval": B_INTERVAL,
    "nbrRange": B_NBRRANGE, "nbrLag": B_NBRLAG,
    "nbrlt": B_NBRLT, "nbrgt": B_NBRGT,
}

POINTWISE_ARITY = {
    B_ADD: 2, B_SUB: 2, B_MUL: 2, B_DIV: 2, B_NEG: 1,
    B_LT: 2, B_LE: 2, B_EQ: 2, B_GE: 2, B_GT: 2,
    B_AND: 2, B_OR: 2, B_MUX: 3,
    B_PAIR: 2, B_TRIPLE: 3,
    B_FST: 1, B_SND: 1, B_TRD: 1,
    B_MIN: 2, B_MAX: 2,
}


class SensorSnapshot(object):
    """Sensor readings offered to one firing of one device."""

    __slots__ = ("sns_num", "interval", "nbr_range", "nbr_lag", "extras")

    def __init__(self, sns_num=0.0, interval=1.0, nbr_range=None,
                 nbr_lag=None, extras=None):
        if interval <= 0:
            raise ValueError("sns_interval must be positive")
        self.sns_num = sns_num
        self.interval = interval
        self.nbr_range = {} if nbr_range is None else nbr_range
        self.nbr_lag = {} if nbr_lag is None else nbr_lag
        self.extras = {} if extras is None else extras


class Code(object):
    """A compiled program: main node, slot count and rep-site count."""

    __slots__ = ("main", "nslots", "nreps", "source")

    def __init__(self, main, nslots, nreps, source):
        self.main = main
        self.nslots = nslots
        self.nreps = nreps
        self.source = source


class _Ctx(object):
    __slots__ = ("self_id", "sensors", "slots", "rep_seed")

    def __init__(self, self_id, sensors, nslots, rep_seed):
        self.self_id = self_id
        self.sensors = sensors
        self.slots = [None] * nslots
        self.rep_seed = rep_seed


# --- value helpers -----------------------------------------------------------

def is_field(v):
    return type(v) is dict


def lex_cmp(a, b):
    """Total-order comparison: numbers, booleans, same-arity tuples.

    Raises StuckError on NaN or incomparable kinds."""
    ta = type(a) is bool
    tb = type(b) is bool
    if ta or tb:
        if ta and tb:
            return (1 if a else 0) - (1 if b else 0)
        raise StuckError("boolean compared with non-boolean")
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        if a != a or b != b:
            raise StuckError("NaN in comparison")
        if a < b:
            return -1
        if a > b:
            return 1
        return 0
    if type(a) is tuple and type(b) is tuple:
        if len(a) != len(b):
            raise StuckError("tuples of different arity compared")
        i = 0
        n = len(a)
        while i < n:
            c = lex_cmp(a[i], b[i])
            if c != 0:
                return c
            i += 1
        return 0
    raise StuckError(
        "incomparable values %r and %r" % (a, b))


def values_equal(a, b):
    fa = type(a) is dict
    fb = type(b) is dict
    if fa or fb:
        raise StuckError("field compared for equality outside promotion")
    ba = type(a) is bool
    bb = type(b) is bool
    if ba != bb:
        return False
    if type(a) is tuple or type(b) is tuple:
        if type(a) is not tuple or type(b) is not tuple or len(a) != len(b):
            return False
        for x, y in zip(a, b):
            if not values_equal(x, y):
                return False
        return True
    return a == b


def _num2(name, a, b):
    if type(a) is bool or type(b) is bool or not isinstance(a, (int, float)) \
            or not isinstance(b, (int, float)):
        raise StuckError("%s applied to non-numbers" % name)


def _scalar_apply(bid, args, self_id, sensors):
    """Apply a promotable builtin to local (non-field) argument values."""
    if bid == B_ADD:
        a = args[0]
        b = args[1]
        _num2("+", a, b)
        return a + b
    if bid == B_SUB:
        a = args[0]
        b = args[1]
        _num2("-", a, b)
        return a - b
    if bid == B_MUL:
        a = args[0]
        b = args[1]
        _num2("*", a, b)
        return a * b
    if bid == B_DIV:
        a = args[0]
        b = args[1]
        _num2("/", a, b)
        if b == 0:
            # IEEE semantics: finite/0 gives signed infinity, 0/0 gives NaN
            if a == 0:
                return math.nan
            s = math.copysign(1.0, a) * math.copysign(1.0, b)
            return INF if s > 0 else -INF
        return a / b
    if bid == B_NEG:
        a = args[0]
        if type(a) is bool or not isinstance(a, (int, float)):
            raise StuckError("neg applied to non-number")
        return -a
    if bid == B_LT:
        return lex_cmp(args[0], args[1]) < 0
    if bid == B_LE:
        return lex_cmp(args[0], args[1]) <= 0
    if bid == B_EQ:
        return values_equal(args[0], args[1])
    if bid == B_GE:
        return lex_cmp(args[0], args[1]) >= 0
    if bid == B_GT:
        return lex_cmp(args[0], args[1]) > 0
    if bid == B_AND:
        a = args[0]
        b = args[1]
        if type(a) is not bool or type(b) is not bool:
            raise StuckError("&& applied to non-booleans")
        return a and b
    if bid == B_OR:
        a = args[0]
        b = args[1]
        if type(a) is not bool or type(b) is not bool:
            raise StuckError("|| applied to non-booleans")
        return a or b
    if bid == B_MUX:
        g = args[0]
        if type(g) is not bool:
            raise StuckError("mux selector is not a boolean")
        return args[1] if g else args[2]
    if bid == B_PAIR:
        return (args[0], args[1])
    if bid == B_TRIPLE:
        return (args[0], args[1], args[2])
    if bid == B_FST or bid == B_SND or bid == B_TRD:
        v = args[0]
        i = bid - B_FST
        if type(v) is not tuple or len(v) <= i:
            raise StuckError("tuple access on non-tuple or short tuple")
        return v[i]
    if bid == B_MIN:
        return args[0] if lex_cmp(args[0], args[1]) <= 0 else args[1]
    if bid == B_MAX:
        return args[0] if lex_cmp(args[0], args[1]) >= 0 else args[1]
    raise MissingBuiltin("builtin id %d" % bid)


def _pointwise(bid, args, self_id, sensors):
    """Pointwise field promotion: intersect field domains, broadcast locals."""
    keys = None
    for a in args:
        if type(a) is dict:
            ks = set(a)
            keys = ks if keys is None else (keys & ks)
    if keys is None:
        return _scalar_apply(bid, args, self_id, sensors)
    out = {}
    scal = list(args)
    n = len(args)
    for k in sorted(keys):
        i = 0
        while i < n:
            a = args[i]
            if type(a) is dict:
                scal[i] = a[k]
            i += 1
        out[k] = _scalar_apply(bid, scal, self_id, sensors)
    return out


def _sorted_values(phi):
    ks = sorted(phi)
    return [phi[k] for k in ks]


def _fold_min(vals, empty):
    if not vals:
        return empty
    best = vals[0]
    i = 1
    n = len(vals)
    while i < n:
        v = vals[i]
        if lex_cmp(v, best) < 0:
            best = v
        i += 1
    return best


def _fold_max(vals, empty):
    if not vals:
        return empty
    best = vals[0]
    i = 1
    n = len(vals)
    while i < n:
        v = vals[i]
        if lex_cmp(v, best) > 0:
            best = v
        i += 1
    return best


# registry for user-provided builtins (constructor semantics etc.)
REGISTERED = {}


def register_builtin(name, fn, arity):
    """Register a pure builtin ``fn(*local_values) -> local_value``."""
    REGISTERED[name] = (fn, arity)


# --- compiler ----------------------------------------------------------------

class _Compiler(object):
    def __init__(self, program, ast_mod):
        self.program = program
        self.ast = ast_mod
        self.nslots = 0
        self.nreps = 0
        self.scope = {}
        self.fn_bodies = {}
        self.compiling = set()

    def new_slot(self):
        s = self.nslots
        self.nslots += 1
        return s

    def compile_fn(self, name):
        if name in self.fn_bodies:
            return self.fn_bodies[name]
        decl = self.program.function(name)
        slots = tuple(self.new_slot() for _ in decl.params)
        entry = [None, slots, name]
        self.fn_bodies[name] = entry
        saved = {}
        for p, s in zip(decl.params, slots):
            saved[p] = self.scope.get(p)
            self.scope[p] = s
        entry[0] = self.compile(decl.body)
        for p in decl.params:
            if saved[p] is None:
                self.scope.pop(p, None)
            else:
                self.scope[p] = saved[p]
        return entry

    def compile(self, e):
        ast = self.ast
        if isinstance(e, ast.Lit):
            return (OP_LIT, e.value)
        if isinstance(e, ast.Var):
            slot = self.scope.get(e.name)
            if slot is None:
                raise EvalError("unbound variable %r" % e.name)
            return (OP_VAR, slot)
        if isinstance(e, ast.FieldLit):
            return (OP_FLD, e.entries)
        if isinstance(e, ast.Let):
            bound = self.compile(e.bound)
            slot = self.new_slot()
            saved = self.scope.get(e.name)
            self.scope[e.name] = slot
            body = self.compile(e.body)
            if saved is None:
                self.scope.pop(e.name, None)
            else:
                self.scope[e.name] = saved
            return (OP_LET, bound, body, slot)
        if isinstance(e, ast.Nbr):
            return (OP_NBR, self.compile(e.body))
        if isinstance(e, ast.Rep):
            init = self.compile(e.init)
            slot = self.new_slot()
            site = self.nreps
            self.nreps += 1
            saved = self.scope.get(e.var)
            self.scope[e.var] = slot
            update = self.compile(e.update)
            if saved is None:
                self.scope.pop(e.var, None)
            else:
                self.scope[e.var] = saved
            return (OP_REP, init, update, slot, site)
        if isinstance(e, ast.If):
            return (OP_IF, self.compile(e.guard), self.compile(e.then),
                    self.compile(e.orelse))
        if isinstance(e, ast.Call):
            return self.compile_call(e)
        raise EvalError("cannot compile %r" % (e,))

    def compile_call(self, e):
        args = tuple(self.compile(a) for a in e.args)
        decl = self.program.function(e.fn)
        if decl is not None:
            if decl.fn_params:
                raise EvalError(
                    "call to unexpanded extended function %r" % e.fn)
            if len(args) != len(decl.params):
                raise ArityError(
                    "%s expects %d arguments" % (e.fn, len(decl.params)))
            entry = self.compile_fn(e.fn)
            return (OP_DCALL, entry, args)
        bid = BUILTIN_IDS.get(e.fn)
        if bid == B_FOLDHOOD:
            if len(args) != 2 or len(e.fn_args) != 1:
                raise ArityError("foldHood takes (field, initial)(fn)")
            return (OP_BCALL, B_FOLDHOOD, args, e.fn, self.fold_fn(e.fn_args[0]))
        if bid is not None:
            ar = POINTWISE_ARITY.get(bid)
            if ar is not None and len(args) != ar:
                raise ArityError("%s takes %d arguments" % (e.fn, ar))
            return (OP_BCALL, bid, args, e.fn, None)
        if e.fn in REGISTERED:
            fn, ar = REGISTERED[e.fn]
            if len(args) != ar:
                raise ArityError("%s takes %d arguments" % (e.fn, ar))
            return (OP_BCALL, B_REGISTERED, args, e.fn, fn)
        if not args and not e.fn_args:
            return (OP_BCALL, B_SENSOR, args, e.fn, None)
        raise MissingBuiltin("unknown function %r" % e.fn)

    def fold_fn(self, name):
        bid = BUILTIN_IDS.get(name)
        if bid is not None and POINTWISE_ARITY.get(bid) == 2:
            return ("b", bid)
        decl = self.program.function(name)
        if decl is not None and len(decl.params) == 2 and not decl.fn_params:
            entry = self.compile_fn(name)
            return ("d", entry)
        if name in REGISTERED and REGISTERED[name][1] == 2:
            return ("r", REGISTERED[name][0])
        raise MissingBuiltin("foldHood function %r" % name)


def compile_program(program, ast_mod, main=None):
    """Compile an expanded Program (optionally overriding the main expr)."""
    c = _Compiler(program, ast_mod)
    main_expr = main if main is not None else program.main
    if main_expr is None:
        raise EvalError("program has no main expression")
    node = c.compile(main_expr)
    return Code(node, c.nslots, c.nreps, program)


# --- evaluation --------------------------------------------------------------

def _proj(env, i):
    """π_{i+1}: extract the i-th (0-based) subtree of every stored tree."""
    out = []
    for pair in env:
        ch = pair[1][1]
        if i < len(ch):
            out.append((pair[0], ch[i]))
    return out


def _proj_branch(env, guard):
    """π^ℓ: last subtree of two-child trees whose first child's root is ℓ."""
    out = []
    for pair in env:
        ch = pair[1][1]
        if len(ch) == 2:
            r = ch[0][0]
            if type(r) is bool and r == guard:
                out.append((pair[0], ch[1]))
    return out


def _self_tree(env, self_id):
    for pair in env:
        if pair[0] == self_id:
            return pair[1]
    return None


def _nbr_field(env_proj, self_id, self_root):
    phi = {}
    for pair in env_proj:
        phi[pair[0]] = pair[1][0]
    phi[self_id] = self_root
    return phi


def _eval(node, env, ctx):
    op = node[0]
    if op == OP_LIT:
        return (node[1], ())
    if op == OP_VAR:
        v = ctx.slots[node[1]]
        if v is None:
            raise EvalError("unbound slot")
        return (v, ())
    if op == OP_BCALL:
        bid = node[1]
        arg_nodes = node[2]
        n = len(arg_nodes)
        trees = []
        i = 0
        while i < n:
            trees.append(_eval(arg_nodes[i], _proj(env, i), ctx))
            i += 1
        if bid == B_NBRLT or bid == B_NBRGT:
            # nbrlt(x) = nbr{x} < x (field of booleans over the neighbourhood)
            root = trees[0][0]
            phi = _nbr_field(_proj(env, 0), ctx.self_id, root)
            out = {}
            for k in sorted(phi):
                c = lex_cmp(phi[k], root)
                out[k] = (c < 0) if bid == B_NBRLT else (c > 0)
            return (out, tuple(trees))
        roots = [t[0] for t in trees]
        v = _builtin(bid, roots, node[3], node[4], ctx)
        return (v, tuple(trees))
    if op == OP_DCALL:
        entry = node[1]
        arg_nodes = node[2]
        body = entry[0]
        slots = entry[1]
        n = len(arg_nodes)
        trees = []
        i = 0
        while i < n:
            trees.append(_eval(arg_nodes[i], _proj(env, i), ctx))
            i += 1
        ctx_slots = ctx.slots
        saved = [ctx_slots[s] for s in slots]
        i = 0
        while i < n:
            ctx_slots[slots[i]] = trees[i][0]
            i += 1
        try:
            body_tree = _eval(body, _proj(env, n), ctx)
        finally:
            i = 0
            while i < n:
                ctx_slots[slots[i]] = saved[i]
                i += 1
        trees.append(body_tree)
        return (body_tree[0], tuple(trees))
    if op == OP_LET:
        t1 = _eval(node[1], _proj(env, 0), ctx)
        slot = node[3]
        saved = ctx.slots[slot]
        ctx.slots[slot] = t1[0]
        try:
            t2 = _eval(node[2], _proj(env, 1), ctx)
        finally:
            ctx.slots[slot] = saved
        return (t2[0], (t1, t2))
    if op == OP_NBR:
        sub = _proj(env, 0)
        t = _eval(node[1], sub, ctx)
        phi = _nbr_field(sub, ctx.self_id, t[0])
        return (phi, (t,))
    if op == OP_REP:
        t1 = _eval(node[1], _proj(env, 0), ctx)
        own = _self_tree(env, ctx.self_id)
        have_prior = own is not None and len(own[1]) >= 2
        if have_prior:
            l0 = own[1][1][0]
        else:
            l0 = t1[0]
            if ctx.rep_seed is not None:
                l0 = ctx.rep_seed(node[4], l0)
        slot = node[3]
        saved = ctx.slots[slot]
        ctx.slots[slot] = l0
        try:
            t2 = _eval(node[2], _proj(env, 1), ctx)
        finally:
            ctx.slots[slot] = saved
        return (t2[0], (t1, t2))
    if op == OP_IF:
        t1 = _eval(node[1], _proj(env, 0), ctx)
        g = t1[0]
        if type(g) is not bool:
            raise StuckError("if guard is not a boolean")
        branch = node[2] if g else node[3]
        t = _eval(branch, _proj_branch(env, g), ctx)
        return (t[0], (t1, t))
    if op == OP_FLD:
        dom = set()
        for pair in env:
            dom.add(pair[0])
        dom.add(ctx.self_id)
        out = {}
        for k, v in node[1]:
            if k in dom:
                out[k] = v
        return (out, ())
    raise EvalError("bad opcode %r" % (op,))


def _builtin(bid, roots, name, aux, ctx):
    if bid in POINTWISE_ARITY:
        return _pointwise(bid, roots, ctx.self_id, ctx.sensors)
    if bid == B_UID:
        return ctx.self_id
    if bid == B_SNSNUM:
        return ctx.sensors.sns_num
    if bid == B_INTERVAL:
        return ctx.sensors.interval
    if bid == B_NBRRANGE:
        return ctx.sensors.nbr_range
    if bid == B_NBRLAG:
        return ctx.sensors.nbr_lag
    if bid == B_SENSOR:
        extras = ctx.sensors.extras
        if name not in extras:
            raise MissingBuiltin("no sensor or builtin named %r" % name)
        return extras[name]
    if bid == B_REGISTERED:
        return aux(*roots)

    # hood builtins: first argument must be a field
    phi = roots[0]
    if type(phi) is not dict:
        raise StuckError("%s applied to a non-field" % name)
    if bid == B_PICKHOOD:
        if ctx.self_id not in phi:
            raise DomainMismatch("pickHood: field has no entry for self")
        return phi[ctx.self_id]
    if bid == B_MINHOOD or bid == B_MINHOODP:
        return _fold_min(_sorted_values(phi), INF)
    if bid == B_MAXHOOD or bid == B_MAXHOODP:
        return _fold_max(_sorted_values(phi), -INF)
    if bid == B_MINHOODLOC:
        loc = roots[1]
        vals = [phi[k] for k in sorted(phi) if k != ctx.self_id]
        vals.append(loc)
        return _fold_min(vals, loc)
    if bid == B_MEANHOOD:
        vals = _sorted_values(phi)
        if not vals:
            raise EmptyFieldError("meanHood on an empty field")
        s = 0.0
        for v in vals:
            if type(v) is bool or not isinstance(v, (int, float)):
                raise StuckError("meanHood over non-numbers")
            s += v
        return s / len(vals)
    if bid == B_SUMHOOD:
        s = 0.0
        for v in _sorted_values(phi):
            if type(v) is bool or not isinstance(v, (int, float)):
                raise StuckError("sumhood over non-numbers")
            s += v
        return s
    if bid == B_ANYHOOD:
        for v in _sorted_values(phi):
            if type(v) is not bool:
                raise StuckError("anyhood over non-booleans")
            if v:
                return True
        return False
    if bid == B_COUNTHOOD:
        n = 0
        for v in _sorted_values(phi):
            if type(v) is not bool:
                raise StuckError("counthood over non-booleans")
            if v:
                n += 1
        return float(n)
    if bid == B_FOLDHOOD:
        acc = roots[1]
        kind = aux[0]
        if kind == "b":
            op = aux[1]
            pair2 = [acc, None]
            for k in sorted(phi):
                pair2[0] = acc
                pair2[1] = phi[k]
                acc = _scalar_apply(op, pair2, ctx.self_id, ctx.sensors)
            return acc
        if kind == "d":
            entry = aux[1]
            body = entry[0]
            slots = entry[1]
            s0 = slots[0]
            s1 = slots[1]
            ctx_slots = ctx.slots
            saved0 = ctx_slots[s0]
            saved1 = ctx_slots[s1]
            try:
                for k in sorted(phi):
                    ctx_slots[s0] = acc
                    ctx_slots[s1] = phi[k]
                    acc = _eval(body, [], ctx)[0]
            finally:
                ctx_slots[s0] = saved0
                ctx_slots[s1] = saved1
            return acc
        fn = aux[1]
        for k in sorted(phi):
            acc = fn(acc, phi[k])
        return acc
    raise MissingBuiltin("builtin id %d (%s)" % (bid, name))


def evaluate(self_id, env, sensors, code, rep_seed=None):
    """Evaluate one firing: returns the value tree of the main expression.

    ``env`` is a list of ``(device_id, tree)`` pairs (any order; sorted
    internally).  ``rep_seed(site, default) -> value`` optionally overrides
    rep seeding on first firings (used for randomised initial states)."""
    entries = sorted(env, key=_entry_key)
    ctx = _Ctx(self_id, sensors, code.nslots, rep_seed)
    try:
        return _eval(code.main, entries, ctx)
    except RecursionError:
        raise StuckError("recursion too deep (non-terminating function?)")


def _entry_key(pair):
    return pair[0]


def backend_name():
    return "compiled" if _COMPILED else "pure"


_COMPILED = __name__.endswith("_ckernel")
