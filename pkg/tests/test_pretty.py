"""Round-trip property: parse(pretty(p)) == p on generated ASTs."""

import math

from hypothesis import given, settings, strategies as st

from fieldcalc.ast import Call, FunctionDecl, If, Let, Lit, Nbr, Program, Rep, Var
from fieldcalc.parser import parse, parse_expr
from fieldcalc.pretty import pp_expr, pp_program

_names = st.sampled_from(["x", "y", "src", "potential", "v'", "f_1"])
_fn_names = st.sampled_from(["f", "g", "minHood", "mux", "pair", "maxHood+"])
_numbers = st.one_of(
    st.integers(min_value=-1000, max_value=1000).map(float),
    st.floats(min_value=-1e6, max_value=1e6, allow_nan=False,
              allow_infinity=False),
    st.just(math.inf), st.just(-math.inf))
_literals = st.one_of(_numbers.map(Lit), st.booleans().map(Lit))


def _neg(a):
    # mirror the parser: unary minus folds into numeric literals
    if isinstance(a, Lit) and isinstance(a.value, float):
        return Lit(-a.value)
    return Call("neg", (a,))


def _exprs():
    return st.recursive(
        st.one_of(_literals, _names.map(Var)),
        lambda sub: st.one_of(
            st.builds(Nbr, sub),
            st.builds(If, sub, sub, sub),
            st.builds(Let, _names, sub, sub),
            st.builds(Rep, sub, _names, sub),
            st.builds(lambda f, a: Call(f, tuple(a)), _fn_names,
                      st.lists(sub, min_size=0, max_size=3)),
            st.builds(lambda op, a, b: Call(op, (a, b)),
                      st.sampled_from(["+", "-", "*", "/", "<", "<=", "=",
                                       ">=", ">", "&&", "||"]), sub, sub),
            st.builds(_neg, sub),
        ),
        max_leaves=25)


@settings(max_examples=200, deadline=None)
@given(_exprs())
def test_expr_round_trip(e):
    assert parse_expr(pp_expr(e)) == e


@settings(max_examples=50, deadline=None)
@given(st.lists(
    st.builds(lambda n, ps, b: FunctionDecl(n, tuple(dict.fromkeys(ps)), (), b),
              st.sampled_from(["fa", "fb", "fc'"]),
              st.lists(_names, max_size=3), _exprs()),
    max_size=2, unique_by=lambda f: f.name),
    _exprs())
def test_program_round_trip(fns, main):
    p = Program(tuple(fns), main)
    assert parse(pp_program(p)) == p


def test_negative_literal_in_call():
    e = Call("f", (Lit(-2.0),))
    assert parse_expr(pp_expr(e)) == e
