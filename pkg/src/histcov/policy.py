"""Resource-usage policies over terminal histories.

A policy is a first-order formula: quantifiers over finite value domains,
the usual connectives, value atoms, plus two trace atoms:

    EVENT in eta          the event occurs in the history
    EVENT1 < EVENT2       some EVENT1 occurrence precedes some EVENT2

Event patterns are action/api names applied to terms or `_` wildcards;
`new_<kind>(x)` and `get(F)` are patterns too.  A policy holds for a typed
term when it holds for every history in the denotation of its effect.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

from . import histexpr as hx
from . import logic
from .denote import denote_in_context
from .parser import ParseError, Parser
from .registry import Registry, Universe
from .syntax import (And, Atom, Base, Exists, Forall, Identifier, Iff,
                     Implies, Lit, Not, Or, Prop, QTerm, Var)


class PolicyError(Exception):
    pass


class _Wild:
    def __repr__(self):
        return "_"


WILD = _Wild()


@dataclass(frozen=True)
class EventPat:
    name: str
    args: Tuple[Any, ...]          # QTerm or WILD


@dataclass(frozen=True)
class InEta:
    event: EventPat


@dataclass(frozen=True)
class Order:
    first: EventPat
    second: EventPat


@dataclass(frozen=True)
class Policy:
    formula: Any                   # Prop nodes extended with InEta / Order
    source: str


# ---------------------------------------------------------------------------
# Parsing

class PolicyParser(Parser):
    def _at_event(self) -> bool:
        t = self.peek()
        if self.peek(1).text != "(":
            return False
        if t.text == "get":
            return True
        if t.kind != "ident":
            return False
        return (t.text in self.reg.actions
                or t.text in self.reg.delta.by_name
                or t.text.startswith("new_"))

    def parse_event_pat(self) -> EventPat:
        name = self.next().text
        self.expect("(")
        args = []
        if not self.at(")"):
            while True:
                if self.at("_"):
                    self.next()
                    args.append(WILD)
                else:
                    args.append(self.as_term(self.parse_add()))
                if not self.eat(","):
                    break
        self.expect(")")
        return EventPat(name, tuple(args))

    def parse_unary(self):
        if self._at_event():
            first = self.parse_event_pat()
            if self.eat("in"):
                t = self.peek()
                if t.text != "eta":
                    raise ParseError(f"expected 'eta', found {t.text!r}", t.pos)
                self.next()
                return InEta(first)
            self.expect("<")
            if not self._at_event():
                t = self.peek()
                raise ParseError("expected an event pattern after '<'", t.pos)
            return Order(first, self.parse_event_pat())
        return super().parse_unary()


def parse_policy(src: str, reg: Optional[Registry] = None) -> Policy:
    reg = reg or Registry()
    text = src.strip()
    p = PolicyParser(text, reg)
    formula = p.parse_prop()
    p.expect_eof()
    return Policy(formula, text)


# ---------------------------------------------------------------------------
# Matching and evaluation

def _match_event(e: hx.Hist, pat: EventPat, env: Dict[str, Any],
                 uni: Universe, reg: Registry) -> bool:
    if isinstance(e, hx.ActEvent):
        if pat.name != e.action:
            return False
        values = e.values
    elif isinstance(e, hx.ApiEvent):
        if pat.name != e.api.name:
            return False
        values = e.values
    elif isinstance(e, hx.NewEvent):
        if pat.name != f"new_{e.rkind}":
            return False
        values = (e.ident,)
    elif isinstance(e, hx.GetEvent):
        if pat.name != "get":
            return False
        values = (e.api,)
    else:
        return False
    if len(pat.args) != len(values):
        return False
    for a, v in zip(pat.args, values):
        if a is WILD:
            continue
        if logic.eval_term(a, env, uni, reg) != v:
            return False
    return True


def check_event_order(eta: Tuple[hx.Hist, ...], first: EventPat,
                      second: EventPat, env: Dict[str, Any],
                      uni: Universe, reg: Registry) -> bool:
    """Some occurrence of `first` strictly precedes some occurrence of
    `second`."""
    for i, e in enumerate(eta):
        if _match_event(e, first, env, uni, reg):
            return any(_match_event(e2, second, env, uni, reg)
                       for e2 in eta[i + 1:])
    return False


def eval_policy(p, eta: Tuple[hx.Hist, ...], env: Dict[str, Any],
                uni: Universe, reg: Registry) -> bool:
    if isinstance(p, InEta):
        return any(_match_event(e, p.event, env, uni, reg) for e in eta)
    if isinstance(p, Order):
        return check_event_order(eta, p.first, p.second, env, uni, reg)
    if isinstance(p, Atom):
        out = logic.eval_term(p.term, env, uni, reg)
        if not isinstance(out, bool):
            raise PolicyError(f"non-boolean policy atom {p!r}")
        return out
    if isinstance(p, Not):
        return not eval_policy(p.body, eta, env, uni, reg)
    if isinstance(p, And):
        return all(eval_policy(q, eta, env, uni, reg) for q in p.parts)
    if isinstance(p, Or):
        return any(eval_policy(q, eta, env, uni, reg) for q in p.parts)
    if isinstance(p, Implies):
        return ((not eval_policy(p.lhs, eta, env, uni, reg))
                or eval_policy(p.rhs, eta, env, uni, reg))
    if isinstance(p, Iff):
        return (eval_policy(p.lhs, eta, env, uni, reg)
                == eval_policy(p.rhs, eta, env, uni, reg))
    if isinstance(p, (Forall, Exists)):
        dom = uni.values(p.base)
        runs = (eval_policy(p.body, eta, {**env, p.var: u}, uni, reg)
                for u in dom)
        return all(runs) if isinstance(p, Forall) else any(runs)
    raise PolicyError(f"unsupported policy node {p!r}")


# ---------------------------------------------------------------------------
# The verifier

@dataclass
class Verdict:
    status: str                    # "pass" | "fail" | "inconclusive"
    counterexample: Optional[Tuple[hx.Hist, ...]] = None
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "pass"


def _history_universe(uni: Universe, eta, reg: Registry) -> Universe:
    """Quantifier domains for resource kinds: Delta's live identifiers plus
    whatever the history itself mentions."""
    groups = {k: list(v) for k, v in reg.delta.resource_map().items()}
    for i in sorted(hx.used_idents(hx.Seq(tuple(eta) + (hx.EPS,)))):
        groups.setdefault(i.kind, [])
        if i not in groups[i.kind]:
            groups[i.kind].append(i)
    return uni.with_resources({k: tuple(v) for k, v in groups.items()})


def check_trace(policy: Policy, eta: Tuple[hx.Hist, ...], uni: Universe,
                reg: Registry) -> bool:
    return eval_policy(policy.formula, tuple(eta), {},
                       _history_universe(uni, eta, reg), reg)


def check_policy(h: hx.Hist, gamma, policy: Policy, reg: Registry,
                 uni: Optional[Universe] = None, depth: int = 16) -> Verdict:
    """Verify a policy against every history the effect denotes.

    A counterexample is decisive even under truncation (the explored set
    under-approximates the full denotation); a clean sweep of a truncated
    set is only inconclusive.
    """
    uni = uni or reg.make_universe()
    res = denote_in_context(h, gamma, reg.delta, uni, reg, depth)
    for eta in res.histories:
        if not check_trace(policy, eta, uni, reg):
            return Verdict("fail", eta, "history violates the policy")
    if not res.complete:
        return Verdict("inconclusive", None,
                       "denotation truncated at the recursion depth bound")
    return Verdict("pass", None, f"{len(res.histories)} histories checked")
