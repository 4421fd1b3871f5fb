"""History algebra: bind, equality normalization, Normal Form, mu shifting."""
import pytest

from histcov import histexpr as hx
from histcov.denote import denote
from histcov.histexpr import (EPS, SideConditionError, alpha_rename_mu, bind,
                              choice, contains_new, eq_normalize,
                              is_normal_form, nf_concats, seq, shift_mu_right,
                              to_normal_form)
from histcov.parser import parse_history, parse_prop
from histcov.registry import Registry


@pytest.fixture
def reg():
    return Registry()


@pytest.fixture
def uni(reg):
    return reg.make_universe(int_bound=4)


def dvals(h, reg, uni, depth=4):
    return denote(h, None, uni, reg, depth=depth).as_set()


def test_bind_restricts_event_values(reg, uni):
    h = hx.ActExpr("log", (("int", parse_prop("v == x", reg)),))
    bound = bind("x", "int", parse_prop("v == 1", reg), h)
    assert dvals(bound, reg, uni) == {(hx.ActEvent("log", (1,)),)}


def test_bind_with_satisfiable_unused_variable_keeps_denotation(reg, uni):
    h = hx.ActExpr("log", (("int", parse_prop("v == 2", reg)),))
    bound = bind("y", "int", parse_prop("v == 3", reg), h)
    assert dvals(bound, reg, uni) == dvals(h, reg, uni)


def test_bind_with_unsatisfiable_variable_empties_events(reg, uni):
    # 7 lies outside the configured int universe, so the existential wrapper
    # has no witness and the event collapses to the empty history.
    h = hx.ActExpr("log", (("int", parse_prop("v == 2", reg)),))
    bound = bind("y", "int", parse_prop("v == 7", reg), h)
    assert dvals(bound, reg, uni) == {()}


def test_eq_normalize_flattens_and_dedupes(reg):
    h = parse_history("(open(file: true) + open(file: true)) + close(file: true)", reg)
    n = eq_normalize(h)
    assert isinstance(n, hx.Choice)
    assert len(n.parts) == 2


def test_eq_normalize_drops_leading_eps_keeps_terminal(reg):
    a = parse_history("open(file: true)", reg)
    n = eq_normalize(seq(EPS, a, EPS))
    assert n == hx.Seq((a, EPS))


def test_normal_form_is_sum_of_concatenations(reg, uni):
    h = parse_history(
        "(open(file: true) + close(file: true)) . read(file: true)", reg)
    n = to_normal_form(h, reg, uni)
    assert is_normal_form(n, reg, uni)
    concats = nf_concats(n)
    assert len(concats) == 2
    assert to_normal_form(n, reg, uni) == n


def test_normal_form_preserves_denotation(reg, uni):
    src = ("new_file(X0) . (open(file: v == X0) + eps) . close(file: v == X0)")
    h = parse_history(src, reg)
    n = to_normal_form(h, reg, uni)
    assert dvals(h, reg, uni) == dvals(n, reg, uni)


def test_mu_blocked_by_matching_call_raises(reg, uni):
    h = parse_history(
        "mu G1(n:(int: true))(eps + call(v == G1; n:(int: true)))"
        " . call(v == G1; n:(int: true))", reg)
    with pytest.raises(SideConditionError):
        shift_mu_right(h, reg, uni)


def test_mu_shifts_past_unrelated_atoms(reg, uni):
    h = parse_history(
        "mu G1(n:(int: true))(eps) . open(file: true) . new_file(X0)", reg)
    shifted = shift_mu_right(h, reg, uni)
    assert shifted != h
    assert dvals(shifted, reg, uni) == dvals(h, reg, uni)


def test_alpha_rename_preserves_denotation(reg, uni):
    h = parse_history(
        "mu G1(n:(int: v >= 0))(eps + write(file: true, int: v == n)"
        " . call(v == G1; n:(int: v == n - 1)))"
        " . call(v == G1; n:(int: v == 1))", reg)
    old = next(iter(hx.bound_mu_idents(h)))
    new = reg.intern_ident("G7", "rec")
    renamed = alpha_rename_mu(h, old, new)
    assert old not in hx.bound_mu_idents(renamed)
    assert dvals(renamed, reg, uni) == dvals(h, reg, uni)


def test_contains_new_detection(reg):
    assert contains_new(parse_history("new_file(X0)", reg))
    assert not contains_new(parse_history("open(file: true) + eps", reg))


def test_choice_and_seq_smart_constructors(reg):
    a = parse_history("open(file: true)", reg)
    assert seq(a) == a
    assert choice(a) == a
    assert seq() == EPS
    nested = seq(seq(a, a), a)
    assert isinstance(nested, hx.Seq)
    assert len(nested.parts) == 3
