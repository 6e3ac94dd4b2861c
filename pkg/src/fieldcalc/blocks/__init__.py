"""Building-block catalog: field-calculus sources, obligations and oracles.

The blocks ship as source (``catalog/*.fc``) so the static checker exercises
exactly what runs.  ``manifest.txt`` lists, per entry, the C/M/P/R
obligations its fragment classification assumes, in the registry line
format; the samplers used to validate those obligations live here.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field as dfield
from importlib import resources
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from ..ast import Program
from ..errors import FieldCalcError
from ..expand import expand_functional_params
from ..kinds import kind_check
from ..parser import parse, parse_expr
from ..runtime import compile_program, lex_cmp
from ..stability.properties import (NetworkRunner, PropertyAnnotation,
                                    field_pair_sampler, local_fn_sampler,
                                    make_local_caller, parse_registry_text,
                                    validate_property)

_FILES = ("core.fc", "g.fc", "c.fc", "t.fc", "crf.fc", "flex.fc",
          "cprime.fc", "tprime.fc")


@dataclass(frozen=True)
class BlockCatalogEntry:
    name: str
    source_file: str
    entry_fn: str                    # callable function the entry exposes
    obligations: Tuple[str, ...]     # instantiated function names
    eventual_contract: str
    oracle: str                      # oracle reference used by the tests
    parameters: Tuple[Tuple[str, str], ...] = ()  # (name, unit/meaning)


CATALOG: Tuple[BlockCatalogEntry, ...] = (
    BlockCatalogEntry(
        "G", "g.fc", "G",
        ("fr", "fmp__<accumulate>"),
        "per device, second component of the lexicographic path-weight "
        "minimum from the source region",
        "path_weight_oracle",
        (("source", "0 on sources / infinity elsewhere"),
         ("initial", "accumulated value at sources"),
         ("metric", "fn () -> field of metres"),
         ("accumulate", "commutative/associative fn over values"))),
    BlockCatalogEntry(
        "G_distanceTo", "g.fc", "G_distanceTo", ("fr", "fmp__addRange"),
        "shortest-path distance in metres from the source region",
        "dijkstra", (("source", "boolean source field"),)),
    BlockCatalogEntry(
        "G_broadcast", "g.fc", "G_broadcast", ("fr", "fmp__identity"),
        "value held at the nearest source, everywhere",
        "dijkstra+argmin",
        (("source", "boolean source field"), ("value", "any local value"))),
    BlockCatalogEntry(
        "hopcount", "g.fc", "hopcount", (),
        "minimum hop distance from devices where v = 0",
        "hop_counts", (("v", "0 at sources, infinity elsewhere"),)),
    BlockCatalogEntry(
        "C", "c.fc", "C", (),
        "at the potential minimum: accumulate over every device's local "
        "(exact on frozen gradients)",
        "exact_collection",
        (("potential", "numeric field, minimal at the collection point"),
         ("local", "value to collect"), ("null", "accumulate identity"),
         ("accumulate", "commutative/associative fn"))),
    BlockCatalogEntry(
        "C_sum", "c.fc", "C_sum", (), "sum of locals at the source",
        "exact_collection", ()),
    BlockCatalogEntry(
        "C_any", "c.fc", "C_any", (), "logical or of locals at the source",
        "exact_collection", ()),
    BlockCatalogEntry(
        "f2C", "c.fc", "f2C", (),
        "maximum of v over the network, held at the potential top",
        "max_collection", ()),
    BlockCatalogEntry(
        "T", "t.fc", "T", ("fc__<decay>",),
        "eventually the zero value on frozen inputs",
        "countdown_recurrence",
        (("initial", "start value"), ("zero", "floor value"),
         ("decay", "strictly decreasing fn"))),
    BlockCatalogEntry(
        "T_track", "t.fc", "T_track", ("fc__identity",),
        "eventually equals its input on frozen inputs", "identity", ()),
    BlockCatalogEntry(
        "T_memory", "t.fc", "T_memory", ("fc__memory_evolve",),
        "holds value for `time` seconds, then null", "countdown_recurrence",
        (("time", "seconds"),)),
    BlockCatalogEntry(
        "filter", "t.fc", "filter", (),
        "eventually equals its input (low-pass transient)", "identity", ()),
    BlockCatalogEntry(
        "CRF", "crf.fc", "CRF", ("crf_raise", "crf_combine"),
        "eventual field equals block G distance under the same metric",
        "dijkstra",
        (("source", "0/infinity indicator"), ("speed", "metres per round"),
         ("metric", "fn () -> field of metres"))),
    BlockCatalogEntry(
        "FLEX", "flex.fc", "FLEX", ("flex_raise", "flex_combine"),
        "eventual field equals block G distance under the distorted metric "
        "max(metric, distortion*radius)",
        "dijkstra_distorted",
        (("epsilon", "slope tolerance, dimensionless (0,1)"),
         ("frequency", "forced-conform round count"),
         ("distortion", "dimensionless (0,1]"), ("radius", "metres"))),
    BlockCatalogEntry(
        "C'", "cprime.fc", "C'", (),
        "at the potential minimum: accumulate over every device's local "
        "(within float division error for sums)",
        "exact_collection",
        (("accumulate", "abelian monoid operator"),
         ("root", "n-th root of the monoid"))),
    BlockCatalogEntry(
        "C'_sum", "cprime.fc", "C'_sum", (),
        "sum of locals at the source within 1e-6", "exact_collection", ()),
    BlockCatalogEntry(
        "C'_any", "cprime.fc", "C'_any", (),
        "logical or of locals at the source", "exact_collection", ()),
    BlockCatalogEntry(
        "T'", "tprime.fc", "T'", ("follow__meanHood__<decay>",),
        "eventually equals `value` on frozen inputs",
        "identity",
        (("average", "field -> local, e.g. meanHood"),
         ("decay", "contraction toward 0, e.g. x -> a*x"))),
    BlockCatalogEntry(
        "T'_track_002", "tprime.fc", "T'_track_002",
        ("follow__meanHood__decay_002",),
        "eventually equals its input on frozen inputs", "identity",
        (("a", "0.02 smoothing factor"),)),
)


def _read(name: str) -> str:
    return (resources.files(__package__) / "catalog" / name).read_text()


def library_source() -> str:
    return "\n".join(_read(f) for f in _FILES)


def library_program() -> Program:
    """All catalog declarations, unexpanded, no main."""
    return parse(library_source(), require_main=False)


def instantiate(main_source: str, extra_defs: str = "") -> Program:
    """Catalog + main expression, expanded and kind-checked."""
    src = library_source() + "\n" + extra_defs + "\n" + main_source
    program = expand_functional_params(parse(src))
    kind_check(program)
    return program


def manifest_text() -> str:
    return (resources.files(__package__) / "catalog" / "manifest.txt").read_text()


def catalog_registry() -> List[PropertyAnnotation]:
    """Annotations declared in the manifest (registry line format)."""
    lines = [l for l in manifest_text().splitlines()
             if l.strip().startswith("property")]
    return parse_registry_text("\n".join(lines))


def entry(name: str) -> BlockCatalogEntry:
    for e in CATALOG:
        if e.name == name:
            return e
    raise KeyError(name)


# --- obligation samplers -------------------------------------------------------

def _g_fmp_sampler(program: Program, fn_name: str):
    """Pairs under the lexicographic order, strictly positive metric.

    The fmp instances operate pointwise on neighbouring fields (their
    accumulate part reads nbrRange), so the per-edge scalar function is
    probed through a single-entry field whose range entry matches."""
    from ..parser import parse_expr
    main = parse_expr(f"minHood({fn_name}(__phi(), nbrRange()))")
    code = compile_program(program, main)

    def runner(rng: random.Random) -> dict:
        dist = rng.uniform(0.1, 30.0)
        mk = lambda: (rng.uniform(0.0, 100.0), rng.uniform(0.0, 100.0))

        def f(l):
            from ..runtime import SensorSnapshot, evaluate
            sens = SensorSnapshot(nbr_range={9: dist}, extras={"__phi": {9: l}})
            return evaluate(0, [], sens, code)[0]

        return {"f": f, "l1": mk(), "l2": mk()}

    return runner


def _crf_raise_sampler(program: Program):
    """Coherent CRF states: neighbours hold (value, rate) pairs, the tested
    `new` is the actual minHoodLoc of their offers."""
    n = 3
    runner_net = NetworkRunner(
        program,
        "crf_raise(pair(__n1(), __n2()), pair(__o1(), __o2()), __speed(), "
        "nbrRange())", n)

    def runner(rng: random.Random) -> dict:
        speed = rng.uniform(0.05, 5.0)
        interval = 1.0
        src = 0.0 if rng.random() < 0.15 else math.inf
        olds = {d: (rng.uniform(0.0, 60.0),
                    rng.choice([0.0, speed / interval]))
                for d in range(n)}
        pair_d = {(a, b): rng.uniform(0.5, 30.0)
                  for a in range(n) for b in range(a + 1, n)}
        dists = {d: {j: pair_d[(min(d, j), max(d, j))]
                     for j in range(n) if j != d} for d in range(n)}
        lags = {d: {j: rng.uniform(0.0, 2.0) for j in range(n) if j != d}
                for d in range(n)}
        offers = [(olds[j][0] + dists[0][j], 0.0) for j in range(1, n)]
        offers.append((src, 0.0))
        new = min(offers, key=_LexKey)

        def f(l1, l2):
            extras = {}
            for d in range(n):
                extras[d] = {"__n1": new[0], "__n2": new[1],
                             "__o1": olds[d][0], "__o2": olds[d][1],
                             "__speed": speed}
            extras[0]["__n1"], extras[0]["__n2"] = l1[0], l1[1]
            extras[0]["__o1"], extras[0]["__o2"] = l2[0], l2[1]
            return runner_net.run(
                extras, ranges=dists, lags=lags, interval=interval)

        return {"f": f, "l1": new, "l2": olds[0], "eq": olds[0]}

    return runner


def _flex_raise_sampler(program: Program):
    n = 3
    runner_net = NetworkRunner(
        program,
        "flex_raise(pair(__n1(), __n2()), pair(__o1(), __o2()), "
        "max(nbrRange(), __dr()), __eps(), __freq(), __rad())", n)

    def runner(rng: random.Random) -> dict:
        eps = rng.uniform(0.1, 0.5)
        freq = float(rng.randint(2, 12))
        rad = rng.uniform(10.0, 40.0)
        distortion = 0.2
        src = 0.0 if rng.random() < 0.15 else math.inf
        olds = {d: (rng.uniform(0.0, 80.0), float(rng.randint(0, int(freq))))
                for d in range(n)}
        pair_d = {(a, b): rng.uniform(0.5, rad)
                  for a in range(n) for b in range(a + 1, n)}
        raw = {d: {j: pair_d[(min(d, j), max(d, j))]
                   for j in range(n) if j != d} for d in range(n)}
        dists = {j: max(raw[0][j], distortion * rad) for j in range(1, n)}
        offers = [(olds[j][0] + dists[j], 0.0) for j in range(1, n)]
        offers.append((src, 0.0))
        new = min(offers, key=_LexKey)

        def f(l1, l2):
            extras = {}
            for d in range(n):
                extras[d] = {"__n1": new[0], "__n2": new[1],
                             "__o1": olds[d][0], "__o2": olds[d][1],
                             "__dr": distortion * rad, "__eps": eps,
                             "__freq": freq, "__rad": rad}
            warm = {d: dict(extras[d]) for d in extras}
            for d in warm:  # warm-up fires take the new = old branch
                warm[d]["__n1"], warm[d]["__n2"] = warm[d]["__o1"], warm[d]["__o2"]
            extras[0]["__n1"], extras[0]["__n2"] = l1[0], l1[1]
            extras[0]["__o1"], extras[0]["__o2"] = l2[0], l2[1]
            return runner_net.run(extras, ranges=raw, interval=1.0,
                                  warmup_extras=warm)

        return {"f": f, "l1": new, "l2": olds[0], "eq": olds[0]}

    return runner


class _LexKey:
    __slots__ = ("v",)

    def __init__(self, v):
        self.v = v

    def __lt__(self, other):
        return lex_cmp(self.v, other.v) < 0


def _t_fc_sampler(program: Program, fn_name: str, track: bool):
    """Converging check for T's fc instances on their operating domain:
    psi is the constant zero field, state values lie in [zero, initial]."""
    caller = make_local_caller(program, fn_name, 3)

    def runner(rng: random.Random) -> dict:
        zero = 0.0
        initial = zero if track else rng.uniform(1.0, 20.0)
        if track:
            initial = rng.uniform(-10.0, 10.0)
            zero = initial
        n = rng.randint(1, 4)
        dom = [0] + sorted(rng.sample(range(1, 40), n - 1))
        phi = {d: rng.uniform(min(zero, initial), max(zero, initial) + 10.0)
               for d in dom}
        psi = {d: zero for d in dom}

        def f(ph, ps):
            return caller(ph, ps, initial)

        return {"f": f, "phi": phi, "psi": psi}

    return runner


def _t_memory_fc_sampler(program: Program):
    caller = make_local_caller(program, "fc__memory_evolve", 3)

    def runner(rng: random.Random) -> dict:
        hold = rng.uniform(1.0, 10.0)
        value = rng.uniform(1.0, 50.0)
        null = 0.0
        initial = (hold, value)
        n = rng.randint(1, 4)
        dom = [0] + sorted(rng.sample(range(1, 40), n - 1))
        phi = {d: (rng.uniform(0.0, hold),
                   value if rng.random() < 0.8 else null) for d in dom}
        psi = {d: (0.0, null) for d in dom}

        def f(ph, ps):
            return caller(ph, ps, initial)

        return {"f": f, "phi": phi, "psi": psi}

    return runner


def obligation_sampler(program: Program, ann: PropertyAnnotation):
    """Sampler factory for a manifest annotation (by its domain name)."""
    dom = ann.domain or "numeric"
    if dom == "numeric":
        decl = program.function(ann.fn_name)
        n_extra = max(len(decl.params) - (2 if ann.prop == "R" else 1), 0) \
            if decl else 0
        return local_fn_sampler(program, ann.fn_name,
                                extra_args=tuple(range(n_extra)))
    if dom == "g_fmp":
        return _g_fmp_sampler(program, ann.fn_name)
    if dom == "crf_state":
        return _crf_raise_sampler(program)
    if dom == "flex_state":
        return _flex_raise_sampler(program)
    if dom == "t_track_fields":
        return _t_fc_sampler(program, ann.fn_name, track=True)
    if dom == "t_countdown_fields":
        return _t_fc_sampler(program, ann.fn_name, track=False)
    if dom == "t_memory_fields":
        return _t_memory_fc_sampler(program)
    if dom == "fields":
        return field_pair_sampler(program, ann.fn_name)
    raise FieldCalcError(f"unknown sampler domain {dom!r}")


def validate_catalog(trials: int = 1000, rng: Optional[random.Random] = None):
    """Validate every manifest obligation; returns {annotation: result}."""
    rng = rng or random.Random("fieldcalc:catalog")
    program = _validation_program()
    out = {}
    for ann in catalog_registry():
        sampler = obligation_sampler(program, ann)
        out[ann] = validate_property(sampler, ann, trials=trials, rng=rng)
    return out


def _validation_program() -> Program:
    """Catalog expanded against a main that instantiates every extended
    function the manifest names."""
    main = ("pair(pair(G_distanceTo(false), G_broadcast(false, 0)), "
            "pair(pair(C_sum(0, 0), C_any(0, false)), "
            "pair(pair(C'_sum(0, 0), C'_any(0, false)), "
            "pair(pair(T_track(0), T_memory(0, 1, 0)), "
            "pair(T(1, 0)(sub1), "
            "pair(T'_track_002(0), "
            "pair(T'_track_05(0), "
            "pair(G'_crf_distance(false), G'_flex_distance(false, 30)))))))))")
    return instantiate(main)
