"""Shared fixtures and helpers for the test suite."""
import os

import pytest

from histcov.parser import parse_program
from histcov.registry import Registry, parse_resource_context
from histcov.typecheck import Checker

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")

# Programs that synthesize a base-typed result and have a finite run_all.
# Each entry: (program file, optional context file, universe overrides).
CORPUS = [
    ("char_match.ltg", None, {}),
    ("fig3_scaled.ltg", None, {"int_bound": 4}),
    ("palindromes.ltg", "palindromes_ctx.json", {}),
    ("writes_range.ltg", None, {"int_bound": 4}),
    ("const_int.ltg", None, {"int_bound": 4}),
    ("arith.ltg", None, {"int_bound": 4}),
    ("branch_actions.ltg", None, {"int_bound": 4}),
    ("list_match.ltg", None, {"int_bound": 2, "container_max": 1}),
    ("tree_build.ltg", None, {"int_bound": 2, "container_max": 1}),
    ("socket_send.ltg", None, {"int_bound": 4}),
    ("two_files.ltg", None, {"int_bound": 4}),
    ("api_simple.ltg", "api_simple_ctx.json", {}),
    ("lambda_apply.ltg", None, {"int_bound": 4}),
    ("err_branch.ltg", None, {"int_bound": 4}),
    ("rec_zero.ltg", None, {"int_bound": 4}),
    ("shadowing.ltg", None, {"int_bound": 4}),
    ("range_chain.ltg", None, {"int_bound": 4}),
    ("mod_use.ltg", None, {"int_bound": 4}),
    ("char_match2.ltg", None, {"int_bound": 4}),
    ("seq_writes.ltg", None, {"int_bound": 4}),
    ("nat_gen_use.ltg", None, {"int_bound": 4}),
    ("unit_prog.ltg", None, {"int_bound": 4}),
    ("bool_prog.ltg", None, {"int_bound": 4}),
]


def fixture_path(name):
    return os.path.join(FIXTURES, name)


def read_fixture(name):
    with open(fixture_path(name)) as fh:
        return fh.read()


def load_registry(ctx_name=None, **uni_overrides):
    if ctx_name:
        reg = parse_resource_context(read_fixture(ctx_name))
    else:
        reg = Registry()
    reg.universe_config.update(uni_overrides)
    return reg


def load_program(prog_name, ctx_name=None, **uni_overrides):
    """A (registry, universe, term) triple for one fixture program."""
    reg = load_registry(ctx_name, **uni_overrides)
    term = parse_program(read_fixture(prog_name), reg)
    return reg, reg.make_universe(), term


def make_checker(reg, uni, depth=4):
    return Checker(reg, uni, depth=depth)


def value_universe(reg, uni):
    """The universe extended with every resource identifier the program
    interned, grouped by kind, so resource-sorted quantifiers range over
    the names actually in play."""
    groups = {k: list(v) for k, v in uni.resources.items()}
    for ident in list(reg.idents.values()) + list(reg.delta.apis):
        if ident not in groups.setdefault(ident.kind, []):
            groups[ident.kind].append(ident)
    return uni.with_resources({k: tuple(sorted(v)) for k, v in groups.items()})


@pytest.fixture
def registry():
    return Registry()
