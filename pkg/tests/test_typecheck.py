"""Bidirectional checker: subtyping directionality, disjunction and
conjunction of types, and well-formedness clauses."""
import pytest

from conftest import make_checker
from histcov.logic import eval_values
from histcov.parser import parse_history, parse_program, parse_prop, parse_type
from histcov.registry import Registry
from histcov.syntax import ECT, HistoryType, OverType
from histcov.typecheck import Checker, TypingError, wf_check


@pytest.fixture
def reg():
    return Registry()


@pytest.fixture
def uni(reg):
    return reg.make_universe(int_bound=4)


@pytest.fixture
def ck(reg, uni):
    return make_checker(reg, uni)


def ht(t):
    from histcov.histexpr import EPS
    return HistoryType(t, EPS)


def check_term(src, target_src, uni):
    reg = Registry()
    term = parse_program(src, reg)
    target = parse_type(target_src, reg)
    make_checker(reg, uni).check([], term, target)


def test_coverage_may_shrink_but_not_grow(uni):
    check_term("3", "{v: int | v == 3 | v == 3}", uni)
    with pytest.raises(TypingError, match="phi-coverage"):
        check_term("3", "{v: int | true | v == 3}", uni)


def test_exact_qualifier_must_stay_equivalent(uni):
    with pytest.raises(TypingError, match="psi-equivalence"):
        check_term("3", "{v: int | v == 3 | true}", uni)


def test_over_type_subtyping_widens(ck, reg, uni):
    narrow = ht(OverType("int", parse_prop("v == 1", reg)))
    wide = ht(OverType("int", parse_prop("v >= 0", reg)))
    assert ck.subtype_check([], narrow, wide)
    assert not ck.subtype_check([], wide, narrow)


def test_arrow_argument_contravariance(ck, reg):
    t1 = parse_type("n:[v: int | true] -> ({v: int | v == n | v == n}, eps)", reg)
    t2 = parse_type("n:[v: int | v >= 0] -> ({v: int | v == n | v == n}, eps)", reg)
    assert ck.subtype_check([], ht(t1), ht(t2))
    assert not ck.subtype_check([], ht(t2), ht(t1))


def test_effect_inclusion_gates_subtyping(ck, reg, uni):
    tau = parse_type("{v: unit | v == () | v == ()}", reg)
    small = HistoryType(tau, parse_history("open(file: true)", reg))
    big = HistoryType(tau, parse_history("open(file: true) + close(file: true)", reg))
    assert ck.subtype_check([], HistoryType(tau, ck.nf(small.effect)),
                            HistoryType(tau, ck.nf(big.effect)))
    assert not ck.subtype_check([], HistoryType(tau, ck.nf(big.effect)),
                                HistoryType(tau, ck.nf(small.effect)))


def test_type_disjunction_unions_qualifiers(ck, reg, uni):
    t1 = ECT("int", parse_prop("v == 1", reg), parse_prop("v == 1", reg))
    t2 = ECT("int", parse_prop("v == 2", reg), parse_prop("v == 2", reg))
    d = ck.type_disj([], t1, t2)
    assert eval_values(d.phi, "int", {}, uni, reg) == (1, 2)
    assert eval_values(d.psi, "int", {}, uni, reg) == (1, 2)


def test_over_type_disjunction_intersects(ck, reg, uni):
    t1 = OverType("int", parse_prop("v >= 0", reg))
    t2 = OverType("int", parse_prop("v <= 1", reg))
    d = ck.type_disj([], t1, t2)
    assert eval_values(d.phi, "int", {}, uni, reg) == (0, 1)


def test_type_conjunction_intersects_qualifiers(ck, reg, uni):
    t1 = ECT("int", parse_prop("v >= 0", reg), parse_prop("v >= 0", reg))
    t2 = ECT("int", parse_prop("v <= 1", reg), parse_prop("v <= 1", reg))
    c = ck.type_conj([], t1, t2)
    assert eval_values(c.psi, "int", {}, uni, reg) == (0, 1)


def test_conjunction_of_same_effect_is_identity(ck, reg, uni):
    h = ck.nf(parse_history("open(file: true) + close(file: true)", reg))
    from histcov.denote import denote
    got = ck.hist_conj([], h, h)
    assert got is not None
    assert (denote(got, None, uni, reg).as_set()
            == denote(h, None, uni, reg).as_set())


def test_synthesis_of_error_term(uni):
    reg = Registry()
    term = parse_program("let c = bool_gen () in match c with | 0 -> err: int | 1 -> 4",
                         reg)
    ck = make_checker(reg, uni)
    pi = ck.synthesize([], term)
    assert eval_values(pi.tau.psi, "int", {}, uni, reg) == (4,)


def test_wf_rejects_unbound_qualifier_variable(reg):
    h = parse_history("open(file: v == y)", reg)
    violations = wf_check([], h)
    assert any(v.clause == "closed-qualifier" for v in violations)
    assert wf_check([("y", ECT("file", parse_prop("true", reg),
                               parse_prop("true", reg)))], h) == []


def test_wf_rejects_recursive_identifier_out_of_scope(reg):
    h = parse_history("call(v == G1; n:(int: true))", reg)
    violations = wf_check([], h)
    assert any(v.clause == "rec-ident-scope" for v in violations)


def test_wf_accepts_well_formed_history(reg):
    h = parse_history(
        "mu G1(n:(int: v >= 0))(eps + call(v == G1; n:(int: v == n - 1)))"
        " . call(v == G1; n:(int: v == 2))", reg)
    assert wf_check([], h) == []


def test_typing_error_names_failed_premise(uni):
    reg = Registry()
    term = parse_program("let f = new_file () in let _ = write f f in ()", reg)
    ck = make_checker(reg, uni)
    with pytest.raises(TypingError):
        ck.synthesize([], term)
