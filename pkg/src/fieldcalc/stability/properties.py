"""Randomised validation of the Converging / Monotonic / Progressive /
Raising function properties, plus the annotation registry.

Annotations are semantic and undecidable in general; the toolchain therefore
keeps a registry of declared obligations and validates each one on randomised
trials through the real evaluator, reporting the first counterexample found.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field as dfield
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from ..ast import Call, FunctionDecl, Lit, Program
from ..errors import FieldCalcError, SamplerExhausted
from ..runtime import SensorSnapshot, compile_program, evaluate, lex_cmp, values_equal

PROPERTIES = ("C", "M", "P", "R")


@dataclass(frozen=True)
class PropertyAnnotation:
    fn_name: str
    prop: str                      # "C" | "M" | "P" | "R"
    arg_indices: Tuple[int, ...] = (0,)
    orders: Tuple[str, ...] = ("numeric",)
    domain: Optional[str] = None   # named sampler; None = default for prop

    def __post_init__(self):
        if self.prop not in PROPERTIES:
            raise ValueError(f"unknown property {self.prop!r}")


@dataclass
class ValidationResult:
    passed: bool
    trials: int
    counterexample: Optional[dict] = None
    reason: str = ""

    def __bool__(self):
        return self.passed


# --- orders -------------------------------------------------------------------

def order_cmp(order: str, a, b) -> int:
    if order == "numeric" or order == "lex":
        return lex_cmp(a, b)
    if order.startswith("component:"):
        i = int(order.split(":", 1)[1]) - 1
        return lex_cmp(a[i], b[i])
    raise ValueError(f"unknown order {order!r}")


def order_is_top(order: str, v) -> bool:
    if order == "numeric":
        return v == math.inf
    if order == "lex":
        while isinstance(v, tuple):
            if not v:
                return False
            v = v[0]
        return v == math.inf
    if order.startswith("component:"):
        i = int(order.split(":", 1)[1]) - 1
        return v[i] == math.inf
    raise ValueError(f"unknown order {order!r}")


# --- harness -------------------------------------------------------------------

def _lit(v):
    return Lit(v)


def apply_local(program: Program, fn_name: str, args, extras=None,
                interval: float = 1.0):
    """Evaluate ``fn_name(args...)`` on a single device with an empty tree
    environment.  ``args`` are local values (tuples allowed); fields can be
    passed through named sensors referenced by expression arguments."""
    main = Call(fn_name, tuple(_lit(a) for a in args))
    code = compile_program(program, main)
    sens = SensorSnapshot(interval=interval, extras=dict(extras or {}))
    return evaluate(0, [], sens, code)[0]


class NetworkRunner:
    """Evaluates a main expression on a tiny complete network.

    Every device carries its own sampled sensor values; one warm-up sweep
    populates the tree environments, then device 0 is re-fired and its root
    is the trial output.  This exercises alignment and nbr exactly as in
    production."""

    def __init__(self, program: Program, main_source: str, n_devices: int):
        from ..parser import parse_expr
        self.code = compile_program(program, parse_expr(main_source))
        self.n = n_devices

    def run(self, extras_per_device: Dict[int, dict],
            ranges: Optional[Dict[int, Dict[int, float]]] = None,
            lags: Optional[Dict[int, Dict[int, float]]] = None,
            interval: float = 1.0,
            warmup_extras: Optional[Dict[int, dict]] = None):
        trees = {}
        warm = warmup_extras if warmup_extras is not None else extras_per_device
        for d in range(self.n):
            sens = SensorSnapshot(
                interval=interval,
                nbr_range=(ranges or {}).get(d, {}),
                nbr_lag=(lags or {}).get(d, {}),
                extras=warm.get(d, {}))
            trees[d] = evaluate(d, [], sens, self.code)
        sens0 = SensorSnapshot(
            interval=interval,
            nbr_range=(ranges or {}).get(0, {}),
            nbr_lag=(lags or {}).get(0, {}),
            extras=extras_per_device.get(0, {}))
        env = [(d, trees[d]) for d in range(self.n)]
        return evaluate(0, env, sens0, self.code)[0]


# --- clause checking -----------------------------------------------------------

def validate_property(runner: Callable[[random.Random], dict],
                      ann: PropertyAnnotation,
                      trials: int = 400,
                      rng: Optional[random.Random] = None) -> ValidationResult:
    """Check the quantified property definition on randomised trials.

    ``runner(rng)`` produces one trial::

        M/P: {"f": call(l)->value, "l1": v, "l2": v (l1 <= l2 for M)}
        R:   {"f": call(l1, l2)->value, "l1": v, "l2": v, "eq": v}
        C:   {"f": call(phi, psi)->value, "phi": dict, "psi": dict}

    Any violation returns the witness trial."""
    rng = rng or random.Random("fieldcalc:props")
    prop = ann.prop
    for t in range(trials):
        try:
            trial = runner(rng)
        except SamplerExhausted:
            if t == 0:
                raise
            return ValidationResult(True, t)
        try:
            ok, reason = _check_trial(prop, ann.orders, trial)
        except FieldCalcError as exc:
            return ValidationResult(False, t + 1, trial,
                                    f"evaluation error: {exc}")
        if not ok:
            witness = {k: v for k, v in trial.items() if k != "f"}
            return ValidationResult(False, t + 1, witness, reason)
    return ValidationResult(True, trials)


def _check_trial(prop: str, orders: Tuple[str, ...], trial: dict):
    f = trial["f"]
    if prop == "M":
        o = orders[0]
        l1, l2 = trial["l1"], trial["l2"]
        if order_cmp(o, l1, l2) > 0:
            l1, l2 = l2, l1
        if order_cmp(o, f(l1), f(l2)) > 0:
            return False, "monotonicity violated"
        return True, ""
    if prop == "P":
        o = orders[0]
        l1 = trial["l1"]
        out = f(l1)
        if order_is_top(o, out):
            return True, ""
        if order_cmp(o, out, l1) <= 0:
            return False, "not progressive: f(l) <= l and f(l) != top"
        return True, ""
    if prop == "R":
        o1 = orders[0]
        o2 = orders[1] if len(orders) > 1 else orders[0]
        l1, l2 = trial["l1"], trial["l2"]
        eq = trial.get("eq", l1)
        out_eq = f(eq, eq)
        if not values_equal(out_eq, eq):
            return False, "raising clause 1 violated: f(l, l) != l"
        out = f(l1, l2)
        lo = l1 if order_cmp(o1, l1, l2) <= 0 else l2
        if order_cmp(o1, out, lo) < 0:
            return False, "raising clause 2 violated: f(l1, l2) < min(l1, l2)"
        if not (order_cmp(o2, out, l2) > 0 or values_equal(out, l1)):
            return False, ("raising clause 3 violated: "
                           "f(l1, l2) neither raises l2 nor equals l1")
        return True, ""
    if prop == "C":
        metric = METRICS.get(orders[0], _dist)
        phi, psi = trial["phi"], trial["psi"]
        out = f(phi, psi)
        here = trial.get("device", 0)
        d0 = metric(out, psi[here])
        if d0 == 0:
            return True, ""
        worst = max(metric(phi[k], psi[k]) for k in phi if k in psi)
        if d0 < worst:
            return True, ""
        return False, "not converging: output no closer than the worst input"
    raise ValueError(prop)


def _dist(a, b) -> float:
    if isinstance(a, tuple) and isinstance(b, tuple) and len(a) == len(b):
        return max(_dist(x, y) for x, y in zip(a, b)) if a else 0.0
    if a is True or a is False or b is True or b is False:
        return 0.0 if a == b else 1.0
    return abs(a - b)


def _dist_countdown(a, b) -> float:
    """Metric for (remaining, value) countdown pairs: timer distance plus a
    unit kicker when the held values differ."""
    return abs(a[0] - b[0]) + (0.0 if values_equal(a[1], b[1]) else 1.0)


METRICS = {"numeric": _dist, "pair_countdown": _dist_countdown}


# --- registry file -------------------------------------------------------------

def parse_registry_text(text: str) -> List[PropertyAnnotation]:
    """Parse ``property <name> <C|M|P|R> args=<i,..> order=<o,..>
    [domain=<sampler>]`` lines."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] != "property" or len(parts) < 3:
            raise ValueError(f"line {lineno}: expected 'property <name> <prop> ...'")
        name, props = parts[1], parts[2]
        kwargs = {"arg_indices": (0,), "orders": ("numeric",), "domain": None}
        for tok in parts[3:]:
            if "=" not in tok:
                raise ValueError(f"line {lineno}: bad token {tok!r}")
            key, val = tok.split("=", 1)
            if key == "args":
                kwargs["arg_indices"] = tuple(int(x) for x in val.split(","))
            elif key == "order":
                kwargs["orders"] = tuple(val.split(","))
            elif key == "domain":
                kwargs["domain"] = val
            else:
                raise ValueError(f"line {lineno}: unknown key {key!r}")
        for prop in props:  # "MP" declares both M and P
            out.append(PropertyAnnotation(name, prop, **kwargs))
    return out


def registry_text(annotations: Sequence[PropertyAnnotation]) -> str:
    lines = []
    for ann in annotations:
        line = (f"property {ann.fn_name} {ann.prop} "
                f"args={','.join(map(str, ann.arg_indices))} "
                f"order={','.join(ann.orders)}")
        if ann.domain:
            line += f" domain={ann.domain}"
        lines.append(line)
    return "\n".join(lines) + "\n"


# --- default samplers ----------------------------------------------------------

def make_local_caller(program: Program, fn_name: str, n_args: int):
    """Compile ``fn(__a0(), ..)`` once; call with positional local values."""
    from ..parser import parse_expr
    args = ", ".join(f"__a{i}()" for i in range(n_args))
    code = compile_program(program, parse_expr(f"{fn_name}({args})"))

    def call(*vals):
        extras = {f"__a{i}": v for i, v in enumerate(vals)}
        return evaluate(0, [], SensorSnapshot(extras=extras), code)[0]

    return call


def local_fn_sampler(program: Program, fn_name: str, extra_args=(),
                     lo: float = -50.0, hi: float = 50.0):
    """Default numeric sampler for stateless local functions (M/P/R)."""
    n_extra = len(extra_args)
    callers: Dict[int, Callable] = {}

    def runner(rng: random.Random) -> dict:
        l1 = rng.uniform(lo, hi)
        l2 = rng.uniform(lo, hi)
        extras = [rng.uniform(lo, hi) for _ in range(n_extra)]

        def f(*ls):
            caller = callers.get(len(ls))
            if caller is None:
                caller = make_local_caller(program, fn_name,
                                           len(ls) + n_extra)
                callers[len(ls)] = caller
            return caller(*ls, *extras)

        return {"f": f, "l1": l1, "l2": l2}

    return runner


def field_pair_sampler(program: Program, fn_name: str, n_extra: int = 0,
                       lo: float = -20.0, hi: float = 20.0,
                       max_devices: int = 5):
    """Default sampler for converging functions f(phi, psi, extras).

    Mixes independent draws with correlated ones (phi near psi except at a
    few devices, constant psi) - the correlated cases expose functions whose
    output strays further than the worst input deviation."""
    caller = make_local_caller(program, fn_name, 2 + n_extra)

    def runner(rng: random.Random) -> dict:
        n = rng.randint(1, max_devices)
        dom = [0] + sorted(rng.sample(range(1, 50), n - 1))
        style = rng.random()
        if style < 0.4:
            phi = {d: rng.uniform(lo, hi) for d in dom}
            psi = {d: rng.uniform(lo, hi) for d in dom}
        elif style < 0.7:
            psi = {d: rng.uniform(lo, hi) for d in dom}
            phi = dict(psi)
            for d in rng.sample(dom, rng.randint(1, len(dom))):
                phi[d] = psi[d] + rng.uniform(-3.0, 3.0)
        else:
            c = rng.uniform(lo, hi)
            psi = {d: c for d in dom}
            phi = {d: c + rng.uniform(-5.0, 5.0) for d in dom}
        extras = [rng.uniform(lo, hi) for _ in range(n_extra)]

        def f(ph, ps):
            return caller(ph, ps, *extras)

        return {"f": f, "phi": phi, "psi": psi}

    return runner
