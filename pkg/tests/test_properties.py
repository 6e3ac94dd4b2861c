"""Randomised C/M/P/R validation: the nine worked property examples and the
annotation registry format."""

import random

import pytest

from fieldcalc.blocks import library_program
from fieldcalc.expand import expand_functional_params
from fieldcalc.parser import parse
from fieldcalc.stability.properties import (PropertyAnnotation,
                                            field_pair_sampler,
                                            local_fn_sampler,
                                            parse_registry_text,
                                            registry_text, validate_property)

RNG = lambda: random.Random("props-test")
TRIALS = 300

# the worked examples, as field-calculus sources
EXAMPLES = """
def c1(phi, psi) { pickHood(psi - phi) }
def c2(phi, psi) { pickHood((psi + phi) / 2) }
def c3(phi, psi) { pickHood(psi) + meanHood(phi - psi) / 2 }
def m1(l) { l - 1 }
def sq(l) { l * l }
def p1(l) { l + 1 }
def r1(l1, l2) { l1 }
def r2(l1, l2) { l1 - l2 }
def r3(l1, l2) { (l1 + l2) / 2 }
"""

PROGRAM = expand_functional_params(parse(EXAMPLES, require_main=False))


def run_local(fn, prop, orders=("numeric",)):
    ann = PropertyAnnotation(fn, prop, (0,), orders)
    return validate_property(local_fn_sampler(PROGRAM, fn), ann,
                             trials=TRIALS, rng=RNG())


def run_fields(fn, prop="C"):
    ann = PropertyAnnotation(fn, prop, (0, 1), ("numeric",))
    return validate_property(field_pair_sampler(PROGRAM, fn), ann,
                             trials=TRIALS, rng=RNG())


class TestConvergingExamples:
    def test_difference_not_converging(self):
        res = run_fields("c1")
        assert not res.passed
        # witness class: constant fields apart, e.g. phi=2, psi=3
        phi, psi = res.counterexample["phi"], res.counterexample["psi"]
        here = 0
        out = psi[here] - phi[here]
        assert abs(out - psi[here]) >= max(
            abs(phi[k] - psi[k]) for k in phi) - 1e-12

    def test_midpoint_converging(self):
        assert run_fields("c2").passed

    def test_mean_adjustment_converging(self):
        assert run_fields("c3").passed


class TestMonotonicExamples:
    def test_decrement_monotonic(self):
        assert run_local("m1", "M").passed

    def test_square_not_monotonic(self):
        res = run_local("sq", "M")
        assert not res.passed
        l1, l2 = sorted((res.counterexample["l1"], res.counterexample["l2"]))
        # witness class: a negative point below a smaller-magnitude one
        assert l1 < 0 and l1 * l1 > l2 * l2


class TestProgressiveExamples:
    def test_increment_progressive(self):
        assert run_local("p1", "P").passed

    def test_decrement_not_progressive(self):
        res = run_local("m1", "P")
        assert not res.passed

    def test_square_not_progressive(self):
        res = run_local("sq", "P")
        assert not res.passed
        w = res.counterexample["l1"]
        assert w * w <= w  # witness in [0, 1]


class TestRaisingExamples:
    def test_first_projection_raising(self):
        assert run_local("r1", "R", ("numeric", "numeric")).passed

    def test_difference_not_raising(self):
        res = run_local("r2", "R", ("numeric", "numeric"))
        assert not res.passed
        assert "clause 1" in res.reason or "clause 2" in res.reason

    def test_average_fails_third_clause(self):
        # respects the first two clauses but violates the third when l2 > l1
        res = run_local("r3", "R", ("numeric", "numeric"))
        assert not res.passed
        assert "clause 3" in res.reason
        w = res.counterexample
        assert w["l2"] > w["l1"]


class TestRegistryFormat:
    TEXT = ("property fr R args=0,1 order=lex,lex\n"
            "# comment\n"
            "property fmp__addRange MP args=0 order=lex domain=g_fmp\n")

    def test_parse(self):
        anns = parse_registry_text(self.TEXT)
        assert [a.prop for a in anns] == ["R", "M", "P"]
        assert anns[0].orders == ("lex", "lex")
        assert anns[1].domain == "g_fmp"
        assert anns[1].arg_indices == (0,)

    def test_round_trip(self):
        anns = parse_registry_text(self.TEXT)
        assert parse_registry_text(registry_text(anns)) == anns

    def test_bad_lines_rejected(self):
        with pytest.raises(ValueError):
            parse_registry_text("property f X args=0\n")
        with pytest.raises(ValueError):
            parse_registry_text("annotate f C\n")
        with pytest.raises(ValueError):
            parse_registry_text("property f C bogus=1\n")


def test_component_orders():
    src = "def bump(p) { pair(1st(p) + 1, 2nd(p)) }"
    prog = expand_functional_params(parse(src, require_main=False))

    def sampler(rng):
        mk = lambda: (rng.uniform(-5, 5), rng.uniform(-5, 5))
        from fieldcalc.stability.properties import make_local_caller
        caller = make_local_caller(prog, "bump", 1)
        return {"f": lambda l: caller(l), "l1": mk(), "l2": mk()}

    ann = PropertyAnnotation("bump", "P", (0,), ("component:1",))
    assert validate_property(sampler, ann, trials=100, rng=RNG()).passed
    ann2 = PropertyAnnotation("bump", "P", (0,), ("component:2",))
    assert not validate_property(sampler, ann2, trials=100, rng=RNG()).passed
