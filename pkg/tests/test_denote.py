"""Bounded denotation of history expressions."""
import pytest

from histcov import histexpr as hx
from histcov.denote import DenoteError, denote, denote_in_context
from histcov.parser import parse_history, parse_prop
from histcov.registry import Registry
from histcov.syntax import ECT


@pytest.fixture
def reg():
    return Registry()


@pytest.fixture
def uni(reg):
    return reg.make_universe(int_bound=4)


def test_epsilon_denotes_the_empty_history(reg, uni):
    res = denote(parse_history("eps", reg), None, uni, reg)
    assert res.complete
    assert res.as_set() == {()}


def test_unsatisfiable_slot_reduces_to_epsilon(reg, uni):
    h = parse_history("write(file: true, int: (v == 1) && (v == 2))", reg)
    res = denote(h, None, uni, reg)
    assert res.complete
    assert res.as_set() == {()}


def test_choice_of_creations_branches(reg, uni):
    h = parse_history(
        "(new_file(X0) + new_file(X1)) . open(file: (v == X0) || (v == X1))", reg)
    res = denote(h, None, uni, reg)
    x0 = reg.intern_ident("X0", "file")
    x1 = reg.intern_ident("X1", "file")
    assert res.as_set() == {
        (hx.NewEvent("file", x0), hx.ActEvent("open", (x0,))),
        (hx.NewEvent("file", x1), hx.ActEvent("open", (x1,))),
    }


def test_created_resources_scope_qualifiers(reg, uni):
    # Without a creation the file slot is empty and the event is skipped.
    res = denote(parse_history("open(file: v == X0)", reg), None, uni, reg)
    assert res.as_set() == {()}
    res2 = denote(parse_history("new_file(X0) . open(file: v == X0)", reg),
                  None, uni, reg)
    x0 = reg.intern_ident("X0", "file")
    assert res2.as_set() == {(hx.NewEvent("file", x0), hx.ActEvent("open", (x0,)))}


def test_unbounded_recursion_truncates(reg, uni):
    h = parse_history(
        "mu G1(n:(int: true))(eps + read(file: true)"
        " . call(v == G1; n:(int: true)))"
        " . call(v == G1; n:(int: true))", reg)
    res = denote(h, None, uni, reg, depth=3)
    assert not res.complete


def test_bounded_recursion_completes(reg, uni):
    # The argument chain 1, 0, -1, ... leaves the finite universe after a
    # few unfoldings, which empties the call qualifier and ends recursion.
    h = parse_history(
        "mu G1(n:(int: v >= 0))(eps + write(file: true, int: v == n)"
        " . call(v == G1; n:(int: v == n - 1)))"
        " . call(v == G1; n:(int: v == 1))", reg)
    res = denote(h, None, uni, reg, depth=16)
    assert res.complete


def test_state_budget_is_enforced(reg, uni):
    h = parse_history(
        "new_file(X0) . write(file: v == X0, int: true)"
        " . write(file: v == X0, int: true) . write(file: v == X0, int: true)",
        reg)
    with pytest.raises(DenoteError):
        denote(h, None, uni, reg, max_states=10)


def test_denotation_is_deterministic(reg, uni):
    h = parse_history(
        "(open(file: true) + new_file(X0) . close(file: v == X0))", reg)
    r1 = denote(h, None, uni, reg)
    r2 = denote(h, None, uni, reg)
    assert r1.histories == r2.histories


def test_context_binding_restricts_events(reg, uni):
    h = hx.ActExpr("log", (("int", parse_prop("v == x", reg)),))
    gamma = [("x", ECT("int", parse_prop("v == 1", reg),
                       parse_prop("v == 1", reg)))]
    res = denote_in_context(h, gamma, None, uni, reg)
    assert res.as_set() == {(hx.ActEvent("log", (1,)),)}
    # An unconstrained context variable leaves the full range.
    wide = [("x", ECT("int", parse_prop("true", reg), parse_prop("true", reg)))]
    res2 = denote_in_context(h, wide, None, uni, reg)
    assert len(res2.as_set()) == 9
