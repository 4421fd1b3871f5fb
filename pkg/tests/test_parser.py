"""Surface syntax: round trips, error positions, and naming rules."""
import pytest

from conftest import read_fixture
from histcov.parser import (ParseError, parse_history, parse_program,
                            parse_prop, parse_type)
from histcov.pretty import pp_hist, pp_prop, pp_type
from histcov.registry import Registry
from histcov.syntax import ECT, Arrow, HistoryType

HIST_SOURCES = [
    "eps",
    "err()",
    "new_file(X0) . open(file: v == X0)",
    "open(file: true) + close(file: true)",
    "write(file: v == X0, int: (v >= 1) && (v <= 3))",
    "mu G1(n:(int: v >= 0))(eps + write(file: true, int: v <= n)"
    " . call(v == G1; n:(int: v == n - 1)))",
]

TYPE_SOURCES = [
    "{v: int | v == 1 | v == 1 || v == 2}",
    "[v: nat | v <= 3]",
    "n:[v: nat | true] -> {v: int | v == n | v == n}",
    "n:[v: int | v >= 0] -> ({v: unit | v == () | v == ()}, open(file: true))",
]

PROP_SOURCES = [
    "true",
    "(v == 1) || (v == 2)",
    "exists x: int. (x >= 0) && (v == x + 1)",
    "forall m: nat. len(v, m) ==> m < n",
    "!(v == \"/etc/shadow\")",
]


@pytest.mark.parametrize("src", HIST_SOURCES)
def test_history_round_trip(src):
    reg = Registry()
    h = parse_history(src, reg)
    assert parse_history(pp_hist(h), reg) == h


@pytest.mark.parametrize("src", TYPE_SOURCES)
def test_type_round_trip(src):
    reg = Registry()
    t = parse_type(src, reg)
    assert parse_type(pp_type(t), reg) == t


@pytest.mark.parametrize("src", PROP_SOURCES)
def test_prop_round_trip(src):
    reg = Registry()
    p = parse_prop(src, reg)
    assert parse_prop(pp_prop(p), reg) == p


def test_program_fixture_parses_to_expected_shapes():
    reg = Registry()
    term = parse_program(read_fixture("char_match.ltg"), reg)
    assert term is not None
    reg2 = Registry()
    t = parse_type("{v: char | v == 'a' | v == 'a' || v == 'b'}", reg2)
    assert isinstance(t, ECT)
    t2 = parse_type("n:[v: nat | true] -> ({v: int | v == n | v == n}, eps)", reg2)
    assert isinstance(t2, Arrow)
    assert isinstance(t2.res, HistoryType)


def test_mod_usable_in_application_head():
    reg = Registry()
    term = parse_program("let r = int_range 0 3 in let x = mod r 2 in x", reg)
    assert term is not None


def test_match_requires_branches():
    with pytest.raises(ParseError):
        parse_program("match b with", Registry())


def test_unbalanced_qualifier_rejected():
    with pytest.raises(ParseError):
        parse_type("{v: int | v == 1}", Registry())


def test_unknown_token_rejected():
    with pytest.raises(ParseError):
        parse_history("open(file: true) $ eps", Registry())


def test_identifier_interning_is_stable():
    reg = Registry()
    h1 = parse_history("new_file(X0) . open(file: v == X0)", reg)
    h2 = parse_history("open(file: v == X0)", reg)
    idents1 = {i.name for i in reg.idents.values()}
    assert "X0" in idents1
    assert parse_history(pp_hist(h2), reg) == h2
    assert h1 != h2
