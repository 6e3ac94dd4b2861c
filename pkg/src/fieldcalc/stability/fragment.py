"""Static classification of rep expressions against the self-stabilising
fragment.

Every ``rep`` in a program is matched, up to let-substitution and function
inlining, against the three patterns:

* converging:  ``rep(e){(x) => fC(nbr{x}, nbr{s}, ē)}``
* acyclic:     ``rep(e){(x) => f(mux(nbrlt(s), nbr{x}, s'), s̄)}``
  (also with the order-dual filter ``nbrgt``)
* minimising:  ``rep(e){(x) => fR(minHoodLoc(fMP(nbr{x}, s̄), s), x, ē)}``

The self-stabilising subexpressions ``s`` must not contain the rep-bound
variable.  Matches emit C/M/P/R obligations on the functions involved; these
resolve against the annotation registry, or by randomised validation when
absent.  A failed validation downgrades the verdict to Unclassified.
"""

from __future__ import annotations

import io
import random
from dataclasses import dataclass, field as dfield
from typing import Dict, List, Optional, Sequence, Tuple

from ..ast import (Call, Expr, FunctionDecl, If, Let, Lit, Nbr, Program, Rep,
                   Var, free_vars, subst_vars, transform, walk)
from ..errors import FieldCalcError
from ..pretty import pp_expr
from .properties import (PropertyAnnotation, ValidationResult,
                         field_pair_sampler, local_fn_sampler,
                         validate_property)


@dataclass
class Obligation:
    subject: str                 # function name or synthesised context text
    props: str                   # "R", "MP" or "C"
    orders: Tuple[str, ...] = ("lex",)
    synth: Optional[FunctionDecl] = None
    resolved: Optional[str] = None     # "registry" | "validated" | "trivial"
    detail: str = ""

    def label(self) -> str:
        state = self.resolved or "unresolved"
        return f"{self.subject}:{self.props}[{state}]"


@dataclass
class RepVerdict:
    site: str
    rep: Rep
    pattern: Optional[str]       # "converging" | "acyclic" | "minimising"
    reason: str = ""
    obligations: List[Obligation] = dfield(default_factory=list)

    @property
    def classified(self) -> bool:
        return self.pattern is not None

    def verdict_name(self) -> str:
        return {"converging": "ConvergingRep", "acyclic": "AcyclicRep",
                "minimising": "MinimisingRep", None: "Unclassified"}[self.pattern]


@dataclass
class FragmentReport:
    verdicts: List[RepVerdict]

    @property
    def accepted(self) -> bool:
        return all(v.classified and
                   all(o.resolved for o in v.obligations)
                   for v in self.verdicts)

    def verdict_for(self, site_prefix: str) -> Optional[RepVerdict]:
        for v in self.verdicts:
            if v.site.startswith(site_prefix):
                return v
        return None

    def text(self) -> str:
        out = io.StringIO()
        for v in self.verdicts:
            obs = ", ".join(o.label() for o in v.obligations) or "-"
            line = f"{v.site}: {v.verdict_name()}"
            if v.reason:
                line += f" ({v.reason})"
            out.write(line + f" obligations: {obs}\n")
        out.write("accepted\n" if self.accepted else "rejected\n")
        return out.getvalue()

    def csv(self) -> str:
        out = io.StringIO()
        out.write("repSiteId,verdict,obligations,resolved\n")
        for v in self.verdicts:
            obs = ";".join(f"{o.subject}:{o.props}" for o in v.obligations)
            res = ";".join(str(o.resolved) for o in v.obligations)
            out.write(f"{v.site},{v.verdict_name()},{obs},{res}\n")
        return out.getvalue()


# --- helpers -------------------------------------------------------------------

def _subst_xfree_lets(e: Expr, x: str) -> Expr:
    """Substitute let bindings so patterns shine through: always when the
    bound expression is x-free, and also for single-use bindings (duplicating
    an x-containing expression would confuse occurrence counting)."""

    def rewrite(node: Expr) -> Expr:
        if isinstance(node, Let):
            uses = sum(1 for n in walk(node.body)
                       if isinstance(n, Var) and n.name == node.name)
            if x not in free_vars(node.bound) or uses <= 1:
                return subst_vars(node.body, {node.name: node.bound})
        return node

    return transform(e, rewrite)


def _inline_once(e: Expr, program: Program) -> Expr:
    def rewrite(node: Expr) -> Expr:
        if isinstance(node, Call):
            decl = program.function(node.fn)
            if decl is not None and not decl.fn_params and not node.fn_args:
                return subst_vars(decl.body, dict(zip(decl.params, node.args)))
        return node

    return transform(e, rewrite)


def _is_nbrlt_filter(e: Expr, program: Program):
    """Recognise nbrlt(s)/nbrgt(s) as builtin, inline definition or a
    user-declared wrapper; returns (direction, s) or None."""
    if isinstance(e, Call) and len(e.args) == 1 and not e.fn_args:
        if e.fn == "nbrlt":
            return ("lt", e.args[0])
        if e.fn == "nbrgt":
            return ("gt", e.args[0])
        decl = program.function(e.fn)
        if decl is not None and len(decl.params) == 1:
            d = _nbr_cmp_shape(decl.body, Var(decl.params[0]))
            if d is not None:
                return (d, e.args[0])
    if isinstance(e, Call) and e.fn in ("<", ">") and len(e.args) == 2:
        d = _nbr_cmp_shape(e, None)
        if d is not None:
            return (d, e.args[1])
    return None


def _nbr_cmp_shape(e: Expr, arg: Optional[Expr]):
    if isinstance(e, Call) and e.fn in ("<", ">") and len(e.args) == 2:
        lhs, rhs = e.args
        if isinstance(lhs, Nbr) and (lhs.body == rhs if arg is None
                                     else (lhs.body == arg and rhs == arg)):
            return "lt" if e.fn == "<" else "gt"
    return None


_MARK = Lit(False)


def _replace_subterms(e: Expr, targets: List[Expr], replacement: Expr) -> Expr:
    def rewrite(node: Expr) -> Expr:
        for t in targets:
            if node == t:
                return replacement
        return node

    return transform(e, rewrite)


def _count_subterm(e: Expr, target: Expr) -> int:
    return sum(1 for n in walk(e) if n == target)


# --- pattern matchers ----------------------------------------------------------

def _match_minimising(body: Expr, x: str, program: Program):
    # named full form: fR(minHoodLoc(fMP(nbr{x}, s̄), s), x, ē)
    def try_named(call: Call, with_raise: bool):
        mhl = call.args[0] if with_raise else call
        if not (isinstance(mhl, Call) and mhl.fn == "minHoodLoc"
                and len(mhl.args) == 2):
            return None
        inner, s_local = mhl.args
        if x in free_vars(s_local):
            return None
        if not (isinstance(inner, Call) and inner.args
                and inner.args[0] == Nbr(Var(x))):
            return None
        for extra in inner.args[1:]:
            if x in free_vars(extra):
                return None
        obligations = [Obligation(inner.fn, "MP", ("lex",))]
        if with_raise:
            if len(call.args) < 2 or call.args[1] != Var(x):
                return None
            obligations.insert(0, Obligation(call.fn, "R", ("lex", "lex")))
        else:
            obligations.insert(0, Obligation("identity", "R", ("lex", "lex"),
                                             resolved="trivial"))
        return obligations

    if isinstance(body, Call):
        if body.fn == "minHoodLoc":
            got = try_named(body, with_raise=False)
            if got is not None:
                return got, "minHoodLoc form"
        decl = program.function(body.fn)
        if (decl is not None or body.fn not in ("min",)) and body.args:
            got = try_named(body, with_raise=True)
            if got is not None:
                return got, f"raising function {body.fn}"

    # synthesised form: min(C[minHood(D[nbr{x}])], s)
    if isinstance(body, Call) and body.fn == "min" and len(body.args) == 2:
        for e_side, s_side in ((body.args[0], body.args[1]),
                               (body.args[1], body.args[0])):
            if x in free_vars(s_side):
                continue
            got = _synth_minimising(e_side, x)
            if got is not None:
                return got, "synthesised min/minHood form"
    return None


def _synth_minimising(e_side: Expr, x: str):
    hoods = [n for n in walk(e_side)
             if isinstance(n, Call) and n.fn in ("minHood", "minHood+")
             and len(n.args) == 1 and x in free_vars(n.args[0])]
    if len(hoods) != 1:
        return None
    hood = hoods[0]
    arg = hood.args[0]
    if _count_subterm(arg, Nbr(Var(x))) != 1:
        return None
    # every x in the expression must come from that nbr{x}
    probe = _replace_subterms(e_side, [hood], _MARK)
    if x in free_vars(probe):
        return None
    hole = Var("_")
    f_expr = _replace_subterms(arg, [Nbr(Var(x))], hole)
    mp_body = _replace_subterms(e_side, [hood], f_expr)
    if "_" not in free_vars(mp_body) or x in free_vars(mp_body):
        return None
    name = pp_expr(mp_body)
    synth = FunctionDecl(f"__mp_{abs(hash(name)) % 10**8}", ("_",), (), mp_body)
    return [Obligation("identity", "R", ("lex", "lex"), resolved="trivial"),
            Obligation(name, "MP", ("lex",), synth=synth)]


def _match_acyclic(body: Expr, x: str, program: Program):
    patterns = []
    for n in walk(body):
        if (isinstance(n, Call) and n.fn == "mux" and len(n.args) == 3
                and n.args[1] == Nbr(Var(x))):
            filt = _is_nbrlt_filter(n.args[0], program)
            if filt is None:
                continue
            _, s_p = filt
            if x in free_vars(s_p) or x in free_vars(n.args[2]):
                continue
            patterns.append(n)
    if not patterns:
        return None
    rest = _replace_subterms(body, patterns, _MARK)
    if x in free_vars(rest):
        return None
    return [], "potential-filtered mux"


def _match_converging_named(body: Expr, x: str):
    if not (isinstance(body, Call) and len(body.args) >= 2):
        return None
    if body.args[0] != Nbr(Var(x)):
        return None
    psi = body.args[1]
    if not isinstance(psi, Nbr) or x in free_vars(psi.body):
        return None
    return [Obligation(body.fn, "C", ("numeric",))], f"converging function {body.fn}"


def _candidate_targets(body: Expr, x: str) -> List[Expr]:
    """Maximal x-free subexpressions, candidates for the tracked value s."""
    seen = []

    def collect(e: Expr):
        if x not in free_vars(e) and not isinstance(e, Lit):
            if e not in seen:
                seen.append(e)
            return
        for c in _children(e):
            collect(c)

    def _children(e):
        from ..ast import children
        return children(e)

    collect(body)
    seen.sort(key=lambda e: (not isinstance(e, Var), len(pp_expr(e))))
    return seen[:8]


def _synth_converging(body: Expr, x: str, program: Program, rng, trials):
    for n in walk(body):
        if isinstance(n, Rep):
            return None
        if isinstance(n, If) and x in free_vars(n):
            return None
        if isinstance(n, Nbr) and x in free_vars(n.body) and n.body != Var(x):
            return None
    phi, psi = Var("_phi"), Var("_psi")
    for s in _candidate_targets(body, x):
        fc_body = _replace_subterms(body, [Nbr(s)], psi) if not isinstance(s, Nbr) \
            else body
        fc_body = _replace_subterms(fc_body, [s], Call("pickHood", (psi,)))
        fc_body = _replace_subterms(fc_body, [Nbr(Var(x))], phi)
        fc_body = _replace_subterms(fc_body, [Var(x)], Call("pickHood", (phi,)))
        if x in free_vars(fc_body):
            continue
        name = f"__fc_{abs(hash(pp_expr(fc_body))) % 10**8}"
        synth = FunctionDecl(name, ("_phi", "_psi"), (), fc_body)
        extended = Program(program.functions + (synth,), None)
        ann = PropertyAnnotation(name, "C", (0, 1), ("numeric",))
        try:
            result = validate_property(
                field_pair_sampler(extended, name), ann,
                trials=trials, rng=rng)
        except FieldCalcError:
            continue
        if result.passed:
            ob = Obligation(f"fC[s={pp_expr(s)}]: {pp_expr(fc_body)}", "C",
                            ("numeric",), synth=synth, resolved="validated")
            return [ob], f"synthesised converging update toward {pp_expr(s)}"
    return None


# --- obligation resolution -------------------------------------------------------

def _resolve_obligations(obligations: List[Obligation], program: Program,
                         registry: Sequence[PropertyAnnotation],
                         auto_validate: bool, trials: int, rng) -> Optional[str]:
    """Resolve each obligation; returns a failure reason when one is refuted."""
    by_name: Dict[str, set] = {}
    for ann in registry:
        by_name.setdefault(ann.fn_name, set()).add(ann.prop)
    for ob in obligations:
        if ob.resolved:
            continue
        have = by_name.get(ob.subject, set())
        if all(p in have for p in ob.props):
            ob.resolved = "registry"
            continue
        if not auto_validate:
            continue
        target = ob.synth
        prog = program
        if target is not None:
            prog = Program(program.functions + (target,), None)
            fn_name = target.name
        else:
            decl = program.function(ob.subject)
            if decl is None:
                continue
            fn_name = ob.subject
            target = decl
        n_extra = len(target.params) - (2 if ob.props == "R" else 1)
        sampler = local_fn_sampler(prog, fn_name,
                                   extra_args=tuple(range(max(n_extra, 0))))
        for prop in ob.props:
            ann = PropertyAnnotation(fn_name, prop, (0,), ob.orders)
            try:
                result = validate_property(sampler, ann, trials=trials, rng=rng)
            except FieldCalcError as exc:
                return f"obligation {ob.label()} not checkable: {exc}"
            if not result.passed:
                ob.detail = result.reason
                return (f"obligation {ob.subject}:{prop} refuted "
                        f"({result.reason}; witness {result.counterexample})")
        ob.resolved = "validated"
    return None


# --- driver --------------------------------------------------------------------

_MAX_INLINE = 4


def _classify_rep(rep: Rep, program: Program, registry, auto_validate,
                  trials, rng) -> Tuple[Optional[str], str, List[Obligation]]:
    x = rep.var
    reasons = []
    body0 = _subst_xfree_lets(rep.update, x)
    body = body0
    for level in range(_MAX_INLINE + 1):
        for matcher, pat in ((_match_minimising, "minimising"),
                             (_match_acyclic, "acyclic"),
                             (_match_converging_named, "converging")):
            if matcher is _match_converging_named:
                got = matcher(body, x)
            else:
                got = matcher(body, x, program)
            if got is not None:
                obligations, detail = got
                fail = _resolve_obligations(obligations, program, registry,
                                            auto_validate, trials, rng)
                if fail is None:
                    return pat, detail, obligations
                reasons.append(f"{pat} match at inline depth {level}: {fail}")
        nxt = _subst_xfree_lets(_inline_once(body, program), x)
        if nxt == body or sum(1 for _ in walk(nxt)) > 3000:
            body = nxt
            break
        body = nxt
    got = _synth_converging(body0, x, program, rng, trials)
    if got is not None:
        obligations, detail = got
        return "converging", detail, obligations
    reasons.append("no pattern matched")
    return None, "; ".join(reasons), []


def check_fragment(program: Program,
                   registry: Sequence[PropertyAnnotation] = (),
                   auto_validate: bool = True,
                   trials: int = 200,
                   rng: Optional[random.Random] = None) -> FragmentReport:
    """Classify every rep in an expanded program (functions and main)."""
    rng = rng or random.Random("fieldcalc:fragment")
    verdicts: List[RepVerdict] = []

    def visit(owner: str, e: Expr):
        idx = 0
        for node in walk(e):
            if isinstance(node, Rep):
                site = f"{owner}/rep{idx}"
                idx += 1
                pattern, reason, obligations = _classify_rep(
                    node, program, registry, auto_validate, trials, rng)
                verdicts.append(RepVerdict(site, node, pattern, reason,
                                           obligations))

    for f in program.functions:
        visit(f.name, f.body)
    if program.main is not None:
        visit("main", program.main)
    return FragmentReport(verdicts)
