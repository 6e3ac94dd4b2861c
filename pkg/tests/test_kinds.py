import pytest

from fieldcalc.errors import KindError
from fieldcalc.expand import expand_functional_params
from fieldcalc.kinds import kind_check
from fieldcalc.parser import parse


def check(src):
    return kind_check(expand_functional_params(parse(src)))


def test_nested_field_rejected():
    with pytest.raises(KindError, match="nested field"):
        check("nbr{nbr{0}}")


def test_minhood_of_sensor_field_is_local_num():
    p = parse("minHood(nbr{snsNum()})")
    res = kind_check(p)
    k = res.of(p.main)
    assert not k.is_field() and k.base == "num"


def test_pointwise_promotion_field():
    p = parse("def distanceTo(source) { mux(source, 0, rep(infinity){(x) => minHood(nbr{x} + nbrRange())}) } distanceTo(src())")
    res = kind_check(p)
    rep_expr = p.function("distanceTo").body.args[2]
    inner = rep_expr.update.args[0].args[0]  # nbr{x} + nbrRange()
    assert res.of(inner).is_field()


def test_branch_mismatch():
    with pytest.raises(KindError, match="branch mismatch"):
        check("if (true) { 1 } { false }")


def test_guard_must_be_local_boolean():
    with pytest.raises(KindError):
        check("if (1) { 1 } { 2 }")
    with pytest.raises(KindError):
        check("if (nbrlt(snsNum())) { 1 } { 2 }")


def test_cross_kind_comparison_rejected():
    with pytest.raises(KindError):
        check("1 < true")
    with pytest.raises(KindError):
        check("pair(1, 2) < pair(1, true)")


def test_tuple_comparisons_allowed():
    check("pair(1, 2) < pair(3, 4)")
    check("minHoodLoc(nbr{pair(snsNum(), uid())}, pair(0, uid()))")


def test_rep_state_must_be_local():
    with pytest.raises(KindError):
        check("rep(0){(x) => nbr{x}}")


def test_rep_kinds_unify():
    with pytest.raises(KindError):
        check("rep(0){(x) => x && true}")


def test_mux_branches_unify():
    with pytest.raises(KindError):
        check("mux(true, 1, false)")


def test_equality_on_pairs():
    check("pair(1, 2) = pair(1, 2)")


def test_unknown_nary_function_rejected():
    with pytest.raises(KindError, match="unknown function"):
        check("mystery(1, 2)")


def test_unknown_sensor_accepted():
    check("sns_temp()")


def test_foldhood_fn_must_be_local_pure():
    with pytest.raises(KindError, match="local-pure"):
        check("def bad(a, b) { a + minHood(nbr{b}) } foldHood(nbr{0}, 0)(bad)")
    check("def ok(a, b) { a + b } foldHood(nbr{0}, 0)(ok)")


def test_catalog_library_kinds():
    from fieldcalc import blocks
    blocks.instantiate("G_distanceTo(src())")
    blocks.instantiate("C_sum(G_distanceTo(src()), 1)")
    blocks.instantiate("T_memory(7, 3, 0)")


def test_unexpanded_program_rejected():
    with pytest.raises(KindError):
        kind_check(parse("def g(x)(f) { f(x) } g(1)(g)"))


def test_recursive_function_kind():
    check("def fact(n) { if (n <= 1) { 1 } { n * fact(n - 1) } } fact(5)")
