"""Qualifier evaluation and the two entailment backends."""
import os
import stat

import pytest

from histcov import logic
from histcov.logic import (SmtBackend, SolverError, UNDEF, eval_prop,
                           eval_term, eval_values, equiv, implies)
from histcov.parser import parse_prop
from histcov.registry import Registry
from histcov.syntax import App, Lit, Var


@pytest.fixture
def reg():
    return Registry()


@pytest.fixture
def uni(reg):
    return reg.make_universe(int_bound=4)


def test_eval_term_arithmetic(reg, uni):
    t = App("+", (App("*", (Lit(2), Var("x"))), Lit(1)))
    assert eval_term(t, {"x": 3}, uni, reg) == 7


def test_mod_by_zero_is_undefined(reg, uni):
    t = App("mod", (Lit(5), Lit(0)))
    assert eval_term(t, {}, uni, reg) is UNDEF
    # The sentinel propagates through enclosing operators.
    t2 = App("+", (t, Lit(1)))
    assert eval_term(t2, {}, uni, reg) is UNDEF
    # Atoms containing it are false rather than an error.
    p = parse_prop("v == (5 mod n)", reg)
    assert eval_prop(p, {"v": 0, "n": 0}, uni, reg) is False


def test_undefined_empties_existential_range(reg, uni):
    p = parse_prop("exists r: nat. v == (r mod n)", reg)
    assert eval_values(p, "nat", {"n": 0}, uni, reg) == ()
    assert eval_values(p, "nat", {"n": 2}, uni, reg) == (0, 1)


def test_eval_values_sorted_and_filtered(reg, uni):
    p = parse_prop("(v >= -1) && (v <= 2)", reg)
    assert eval_values(p, "int", {}, uni, reg) == (-1, 0, 1, 2)
    assert eval_values(p, "nat", {}, uni, reg) == (0, 1, 2)


def test_builtin_implication_directionality(reg, uni):
    narrow = parse_prop("v == 1", reg)
    wide = parse_prop("v >= 0", reg)
    assert implies(narrow, wide, "int", uni, reg)
    assert not implies(wide, narrow, "int", uni, reg)
    assert equiv(narrow, parse_prop("(v >= 1) && (v <= 1)", reg), "int", uni, reg)


def test_implication_quantified_over_environments(reg, uni):
    lhs = parse_prop("v == n", reg)
    rhs = parse_prop("v >= 0", reg)
    envs = [{"n": 0}, {"n": 3}]
    assert implies(lhs, rhs, "int", uni, reg, envs=envs)
    assert not implies(lhs, rhs, "int", uni, reg, envs=envs + [{"n": -1}])


def _stub_solver(tmp_path, answer):
    path = tmp_path / "solver.sh"
    path.write_text(f"#!/bin/sh\necho {answer}\n")
    path.chmod(path.stat().st_mode | stat.S_IEXEC)
    return [str(path)]


def test_smt_backend_accepts_unsat(tmp_path, reg, uni):
    backend = SmtBackend(_stub_solver(tmp_path, "unsat"))
    p1 = parse_prop("v == 1", reg)
    p2 = parse_prop("v >= 0", reg)
    assert implies(p1, p2, "int", uni, reg, backend=backend)


def test_smt_backend_rejects_sat(tmp_path, reg, uni):
    backend = SmtBackend(_stub_solver(tmp_path, "sat"))
    p1 = parse_prop("v >= 0", reg)
    p2 = parse_prop("v == 1", reg)
    assert not implies(p1, p2, "int", uni, reg, backend=backend)


def test_smt_backend_surfaces_unknown(tmp_path, reg, uni):
    backend = SmtBackend(_stub_solver(tmp_path, "unknown"))
    with pytest.raises(SolverError):
        implies(parse_prop("true", reg), parse_prop("true", reg),
                "int", uni, reg, backend=backend)


def test_smt_script_shape(reg, uni):
    backend = SmtBackend(["true"])
    p1 = parse_prop("v == n", reg)
    p2 = parse_prop("v >= 0", reg)
    script = backend.script(p1, p2, "nat", {"n": 2}, reg)
    assert "(set-logic ALL)" in script
    assert "(assert (>= |v| 0))" in script
    assert "(assert (= |n| 2))" in script
    assert "(check-sat)" in script
