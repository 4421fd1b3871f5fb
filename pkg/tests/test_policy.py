"""Policy language and the effect-level verifier."""
import pytest

from conftest import load_program, make_checker
from histcov.parser import ParseError, parse_history
from histcov.policy import check_policy, check_trace, parse_policy
from histcov.registry import Registry


def synth_effect(prog, ctx=None, **overrides):
    reg, uni, term = load_program(prog, ctx, **overrides)
    ck = make_checker(reg, uni)
    return reg, uni, ck.synthesize([], term).effect


def test_order_policy_holds_for_open_before_write():
    reg, uni, h = synth_effect("writes_range.ltg", None, int_bound=4)
    pol = parse_policy(
        "forall x: int. write(_, x) in eta ==> open(_) < write(_, x)", reg)
    assert check_policy(h, [], pol, reg, uni, depth=4).status == "pass"


def test_order_policy_fails_with_counterexample():
    reg, uni, h = synth_effect("writes_range.ltg", None, int_bound=4)
    pol = parse_policy(
        "forall x: int. write(_, x) in eta ==> close(_) < write(_, x)", reg)
    verdict = check_policy(h, [], pol, reg, uni, depth=4)
    assert verdict.status == "fail"
    assert verdict.counterexample is not None


def test_membership_policy_on_concrete_values():
    reg, uni, h = synth_effect("writes_range.ltg", None, int_bound=4)
    assert check_policy(h, [], parse_policy("!(write(_, 4) in eta)", reg),
                        reg, uni, depth=4).status == "pass"
    assert check_policy(h, [], parse_policy("!(write(_, 2) in eta)", reg),
                        reg, uni, depth=4).status == "fail"


def test_truncated_denotation_is_inconclusive():
    reg = Registry()
    uni = reg.make_universe(int_bound=4)
    h = parse_history(
        "mu G1(n:(int: true))(eps + read(file: true)"
        " . call(v == G1; n:(int: true)))"
        " . call(v == G1; n:(int: true))", reg)
    pol = parse_policy("!(write(_, 0) in eta)", reg)
    assert check_policy(h, [], pol, reg, uni, depth=2).status == "inconclusive"


def test_violation_decides_even_when_truncated():
    reg = Registry()
    uni = reg.make_universe(int_bound=4)
    h = parse_history(
        "new_file(X0) . open(file: v == X0)"
        " . mu G1(n:(int: true))(eps + read(file: true)"
        " . call(v == G1; n:(int: true)))"
        " . call(v == G1; n:(int: true))", reg)
    pol = parse_policy("!(open(_) in eta)", reg)
    verdict = check_policy(h, [], pol, reg, uni, depth=2)
    assert verdict.status == "fail"


def test_wildcards_and_new_patterns():
    reg, uni, h = synth_effect("writes_range.ltg", None, int_bound=4)
    pol = parse_policy("new_file(_) in eta ==> open(_) in eta", reg)
    assert check_policy(h, [], pol, reg, uni, depth=4).status == "pass"


def test_check_trace_on_explicit_history():
    reg = Registry()
    uni = reg.make_universe(int_bound=4)
    from histcov.denote import denote
    h = parse_history("new_file(X0) . open(file: v == X0)", reg)
    (eta,) = denote(h, None, uni, reg).histories
    assert check_trace(parse_policy("open(_) in eta", reg), eta, uni, reg)
    assert not check_trace(parse_policy("close(_) in eta", reg), eta, uni, reg)


def test_malformed_policy_is_a_parse_error():
    with pytest.raises(ParseError):
        parse_policy("open(_) in", Registry())
    with pytest.raises(ParseError):
        parse_policy("open(_ <", Registry())
