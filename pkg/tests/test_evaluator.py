"""Reference interpreter: exhaustive and seeded runs, traces, budgets."""
import pytest

from conftest import load_program
from histcov import histexpr as hx
from histcov.evaluator import run_all, run_random


def test_run_all_enumerates_generator_outcomes():
    reg, uni, term = load_program("writes_range.ltg", None, int_bound=4)
    res = run_all(term, reg, uni, depth=4, budget=200_000)
    assert res.complete
    values = sorted(r.value for r in res.runs if r.kind == "value")
    assert values == [1, 2, 3]


def test_run_all_traces_record_resource_events():
    reg, uni, term = load_program("writes_range.ltg", None, int_bound=4)
    res = run_all(term, reg, uni, depth=4, budget=200_000)
    for trace in res.traces():
        kinds = [type(e).__name__ for e in trace]
        assert kinds == ["NewEvent", "ActEvent", "ActEvent", "ActEvent"]
        actions = [e.action for e in trace if isinstance(e, hx.ActEvent)]
        assert actions == ["open", "write", "close"]


def test_error_branches_are_reported_not_raised():
    reg, uni, term = load_program("err_branch.ltg", None, int_bound=4)
    res = run_all(term, reg, uni, depth=4, budget=200_000)
    kinds = sorted(r.kind for r in res.runs)
    assert kinds == ["err", "value"]
    err_run = next(r for r in res.runs if r.kind == "err")
    assert err_run.trace
    assert err_run.trace[-1] == hx.ActEvent("err", ())


def test_runs_are_deterministic_across_repeats():
    reg, uni, term = load_program("branch_actions.ltg", None, int_bound=4)
    r1 = run_all(term, reg, uni, depth=4, budget=200_000)
    r2 = run_all(term, reg, uni, depth=4, budget=200_000)
    assert r1.runs == r2.runs


def test_run_random_is_seed_stable():
    reg, uni, term = load_program("writes_range.ltg", None, int_bound=4)
    a = run_random(term, reg, uni, seed=123, depth=4, budget=200_000)
    b = run_random(term, reg, uni, seed=123, depth=4, budget=200_000)
    assert a == b
    outcomes = {run_random(term, reg, uni, seed=s).value for s in range(30)}
    assert outcomes == {1, 2, 3}


def test_budget_exhaustion_clears_completeness():
    reg, uni, term = load_program("fig3_scaled.ltg", None, int_bound=4)
    res = run_all(term, reg, uni, depth=4, budget=5)
    assert not res.complete


def test_fresh_identifiers_do_not_leak_between_runs():
    reg, uni, term = load_program("two_files.ltg", None, int_bound=4)
    res = run_all(term, reg, uni, depth=4, budget=200_000)
    assert res.complete
    names = {e.ident.name for t in res.traces()
             for e in t if isinstance(e, hx.NewEvent)}
    assert names == {"X0", "X1"}
