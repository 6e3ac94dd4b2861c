"""Static fragment classification: paper example functions, catalog blocks,
inlining tolerance and the free-variable restriction."""

import pytest

from fieldcalc import blocks
from fieldcalc.expand import expand_functional_params
from fieldcalc.parser import parse
from fieldcalc.stability import check_fragment


def verdict_of(src, registry=()):
    p = expand_functional_params(parse(src))
    report = check_fragment(p, registry, trials=80)
    return report.verdicts[0]


class TestCounterexampleBattery:
    def test_f1_oscillation_unclassified(self):
        v = verdict_of("def f1(v) { rep (v) { (x) => v - x } } f1(snsNum())")
        assert v.verdict_name() == "Unclassified"

    def test_f2_gossip_unclassified(self):
        v = verdict_of(
            "def f2(v) { rep (v) { (x) => max(maxHood+(nbr{x}), v) } } f2(snsNum())")
        assert v.verdict_name() == "Unclassified"

    def test_f3_divergence_unclassified(self):
        v = verdict_of(
            "def f3(v) { rep (v) { (x) => min(minHood(nbr{x}) - 1, v) } } f3(snsNum())")
        assert v.verdict_name() == "Unclassified"
        assert "refuted" in v.reason


class TestAcceptedExamples:
    def test_hopcount_minimising_with_obligations(self):
        v = verdict_of(
            "def hopcount(v) { rep (v) { (x) => min(minHood(nbr{x}) + 1, v) } } "
            "hopcount(snsNum())")
        assert v.verdict_name() == "MinimisingRep"
        subjects = {o.subject: o for o in v.obligations}
        assert "_ + 1" in subjects
        assert subjects["_ + 1"].props == "MP"
        assert subjects["_ + 1"].resolved == "validated"
        assert subjects["identity"].props == "R"

    def test_filter_converging(self):
        v = verdict_of("def filter(v) { rep (v) { (x) => (v + x) / 2 } } "
                       "filter(snsNum())")
        assert v.verdict_name() == "ConvergingRep"

    def test_f2c_acyclic(self):
        v = verdict_of(
            "def f2C(v, p) { rep (v) { (x) => max(maxHood+(mux(nbrlt(p), "
            "nbr{x}, 0)), v) } } f2C(snsNum(), sns_p())")
        assert v.verdict_name() == "AcyclicRep"

    def test_nbrlt_recognised_as_definition(self):
        v = verdict_of(
            "def mylt(p) { nbr{p} < p } "
            "def g(v, p) { rep (v) { (x) => maxHood+(mux(mylt(p), nbr{x}, 0)) } } "
            "g(snsNum(), sns_p())")
        assert v.verdict_name() == "AcyclicRep"

    def test_inlined_nbrlt_form(self):
        v = verdict_of(
            "def g(v, p) { rep (v) { (x) => maxHood+(mux(nbr{p} < p, nbr{x}, 0)) } } "
            "g(snsNum(), sns_p())")
        assert v.verdict_name() == "AcyclicRep"


class TestRestrictions:
    def test_rep_var_free_in_s_rejected(self):
        # the converging pattern's s must not contain the rep-bound variable
        v = verdict_of(
            "def fc(a, b, c) { pickHood(b) } "
            "def bad(v) { rep (v) { (x) => fc(nbr{x}, nbr{x + 1}, v) } } "
            "bad(snsNum())")
        assert v.verdict_name() == "Unclassified"

    def test_acyclic_filter_must_be_x_free(self):
        v = verdict_of(
            "def bad(v) { rep (v) { (x) => maxHood+(mux(nbrlt(x), nbr{x}, 0)) } } "
            "bad(snsNum())")
        assert v.verdict_name() == "Unclassified"

    def test_bare_x_outside_pattern_rejected(self):
        v = verdict_of(
            "def bad(v, p) { rep (v) { (x) => maxHood+(mux(nbrlt(p), nbr{x}, 0)) + x } } "
            "bad(snsNum(), sns_p())")
        assert v.verdict_name() == "Unclassified"


class TestInliningTolerance:
    WRAPPED = ("def update(x, v) { min(minHood(nbr{x}) + 1, v) } "
               "def hop(v) { rep (v) { (x) => update(x, v) } } hop(snsNum())")
    PLAIN = ("def hop(v) { rep (v) { (x) => min(minHood(nbr{x}) + 1, v) } } "
             "hop(snsNum())")

    def test_wrapper_inlined_same_verdict(self):
        vw = verdict_of(self.WRAPPED)
        vp = verdict_of(self.PLAIN)
        assert vw.verdict_name() == vp.verdict_name() == "MinimisingRep"

    def test_let_tolerated(self):
        v = verdict_of(
            "def hop(v) { rep (v) { (x) => let o = minHood(nbr{x}) + 1 in "
            "min(o, v) } } hop(snsNum())")
        assert v.verdict_name() == "MinimisingRep"


class TestCatalog:
    def test_catalog_accepted_with_manifest_registry(self):
        prog = blocks._validation_program()
        report = check_fragment(prog, registry=blocks.catalog_registry(),
                                trials=40)
        assert report.accepted
        by_pattern = {}
        for v in report.verdicts:
            by_pattern.setdefault(v.pattern, []).append(v.site)
        assert any("G__" in s for s in by_pattern["minimising"])
        assert any("CRF__" in s for s in by_pattern["minimising"])
        assert any("FLEX__" in s for s in by_pattern["minimising"])
        assert any("C__" in s for s in by_pattern["acyclic"])
        assert any("C'__" in s for s in by_pattern["acyclic"])
        assert any("T__" in s for s in by_pattern["converging"])
        assert any("T'__" in s for s in by_pattern["converging"])

    def test_registry_resolution_recorded(self):
        prog = blocks._validation_program()
        report = check_fragment(prog, registry=blocks.catalog_registry(),
                                trials=40)
        crf = report.verdict_for("CRF__")
        assert {o.resolved for o in crf.obligations} == {"registry"}

    def test_report_csv_format(self):
        prog = expand_functional_params(parse(
            "def hop(v) { rep (v) { (x) => min(minHood(nbr{x}) + 1, v) } } "
            "hop(snsNum())"))
        report = check_fragment(prog, trials=40)
        lines = report.csv().splitlines()
        assert lines[0] == "repSiteId,verdict,obligations,resolved"
        assert lines[1].startswith("hop/rep0,MinimisingRep,")


def test_unclassified_is_a_verdict_not_an_error():
    report = check_fragment(expand_functional_params(parse(
        "rep(0){(x) => x}")), trials=10)
    assert not report.accepted
    assert report.verdicts[0].verdict_name() == "Unclassified"
