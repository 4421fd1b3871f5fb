"""AST definitions: base types, qualifier propositions, type forms, program terms.

Everything here is a frozen dataclass so nodes can be hashed, memoized and
compared structurally.  Base types are plain strings for scalars and resource
kinds, and ('list', b) / ('tree', b) tuples for containers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional, Tuple, Union

# ---------------------------------------------------------------------------
# Base types

SCALAR_BASES = ("unit", "bool", "nat", "int", "char", "string")

Base = Union[str, tuple]


def list_of(elem: Base) -> Base:
    return ("list", elem)


def tree_of(elem: Base) -> Base:
    return ("tree", elem)


def base_name(b: Base) -> str:
    if isinstance(b, tuple):
        return f"{base_name(b[1])} {b[0]}"
    return b


# ---------------------------------------------------------------------------
# Identifiers (resources, APIs, recursive functions)

KIND_RESOURCE = "resource"
KIND_API = "api"
KIND_REC = "rec"


@dataclass(frozen=True, order=True)
class Identifier:
    index: int
    kind: str
    name: str

    def __repr__(self):
        return self.name


# ---------------------------------------------------------------------------
# First-order terms appearing inside qualifiers

@dataclass(frozen=True)
class Lit:
    value: Any

    def __repr__(self):
        return f"Lit({self.value!r})"


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class App:
    op: str
    args: Tuple["QTerm", ...]


QTerm = Union[Lit, Var, App]

V = Var("v")  # the distinguished value variable


# ---------------------------------------------------------------------------
# Propositions

@dataclass(frozen=True)
class Atom:
    term: QTerm


@dataclass(frozen=True)
class Not:
    body: "Prop"


@dataclass(frozen=True)
class And:
    parts: Tuple["Prop", ...]


@dataclass(frozen=True)
class Or:
    parts: Tuple["Prop", ...]


@dataclass(frozen=True)
class Implies:
    lhs: "Prop"
    rhs: "Prop"


@dataclass(frozen=True)
class Iff:
    lhs: "Prop"
    rhs: "Prop"


@dataclass(frozen=True)
class Forall:
    var: str
    base: Base
    body: "Prop"


@dataclass(frozen=True)
class Exists:
    var: str
    base: Base
    body: "Prop"


Prop = Union[Atom, Not, And, Or, Implies, Iff, Forall, Exists]

TRUE = Atom(Lit(True))
FALSE = Atom(Lit(False))


def conj(*parts: Prop) -> Prop:
    flat = [p for p in parts if p != TRUE]
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(*parts: Prop) -> Prop:
    flat = [p for p in parts if p != FALSE]
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def eq(a: QTerm, b: QTerm) -> Prop:
    return Atom(App("==", (a, b)))


def v_eq(x: Any) -> Prop:
    """v == <literal or term>."""
    t = x if isinstance(x, (Lit, Var, App)) else Lit(x)
    return eq(V, t)


# --- traversal helpers -----------------------------------------------------

def term_free_vars(t: QTerm) -> set:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, App):
        out = set()
        for a in t.args:
            out |= term_free_vars(a)
        return out
    return set()


def prop_free_vars(p: Prop) -> set:
    if isinstance(p, Atom):
        return term_free_vars(p.term)
    if isinstance(p, Not):
        return prop_free_vars(p.body)
    if isinstance(p, (And, Or)):
        out = set()
        for q in p.parts:
            out |= prop_free_vars(q)
        return out
    if isinstance(p, (Implies, Iff)):
        return prop_free_vars(p.lhs) | prop_free_vars(p.rhs)
    if isinstance(p, (Forall, Exists)):
        return prop_free_vars(p.body) - {p.var}
    raise TypeError(p)


def subst_term(t: QTerm, mapping: dict) -> QTerm:
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    if isinstance(t, App):
        return App(t.op, tuple(subst_term(a, mapping) for a in t.args))
    return t


def subst_prop(p: Prop, mapping: dict) -> Prop:
    """Capture-avoiding substitution of variables by terms.

    Bound quantifier variables shadow the mapping; a binder colliding with a
    variable of a substituted term is alpha-renamed first.
    """
    if not mapping:
        return p
    if isinstance(p, Atom):
        return Atom(subst_term(p.term, mapping))
    if isinstance(p, Not):
        return Not(subst_prop(p.body, mapping))
    if isinstance(p, And):
        return And(tuple(subst_prop(q, mapping) for q in p.parts))
    if isinstance(p, Or):
        return Or(tuple(subst_prop(q, mapping) for q in p.parts))
    if isinstance(p, Implies):
        return Implies(subst_prop(p.lhs, mapping), subst_prop(p.rhs, mapping))
    if isinstance(p, Iff):
        return Iff(subst_prop(p.lhs, mapping), subst_prop(p.rhs, mapping))
    if isinstance(p, (Forall, Exists)):
        inner = {k: t for k, t in mapping.items() if k != p.var}
        cls = type(p)
        body = p.body
        var = p.var
        introduced = set()
        free = prop_free_vars(body)
        for k, t in inner.items():
            if k in free:
                introduced |= term_free_vars(t)
        if var in introduced:
            avoid = introduced | free | set(inner)
            fresh = var
            while fresh in avoid:
                fresh += "'"
            body = subst_prop(body, {var: Var(fresh)})
            var = fresh
        return cls(var, p.base, subst_prop(body, inner))
    raise TypeError(p)


def subst_prop_ident(p: Prop, old: Identifier, new: Identifier) -> Prop:
    """Replace the identifier literal `old` with `new` everywhere in p."""

    def on_term(t: QTerm) -> QTerm:
        if isinstance(t, Lit) and t.value == old:
            return Lit(new)
        if isinstance(t, App):
            return App(t.op, tuple(on_term(a) for a in t.args))
        return t

    if isinstance(p, Atom):
        return Atom(on_term(p.term))
    if isinstance(p, Not):
        return Not(subst_prop_ident(p.body, old, new))
    if isinstance(p, And):
        return And(tuple(subst_prop_ident(q, old, new) for q in p.parts))
    if isinstance(p, Or):
        return Or(tuple(subst_prop_ident(q, old, new) for q in p.parts))
    if isinstance(p, Implies):
        return Implies(subst_prop_ident(p.lhs, old, new),
                       subst_prop_ident(p.rhs, old, new))
    if isinstance(p, Iff):
        return Iff(subst_prop_ident(p.lhs, old, new),
                   subst_prop_ident(p.rhs, old, new))
    if isinstance(p, (Forall, Exists)):
        cls = type(p)
        return cls(p.var, p.base, subst_prop_ident(p.body, old, new))
    raise TypeError(p)


# ---------------------------------------------------------------------------
# Types

@dataclass(frozen=True)
class ECT:
    """Extended coverage type {v: base | phi | psi}."""
    base: Base
    phi: Prop
    psi: Prop


@dataclass(frozen=True)
class OverType:
    """[v: base | phi]: ordinary over-approximating refinement."""
    base: Base
    phi: Prop


@dataclass(frozen=True)
class Arrow:
    """Dependent function type  param: arg -> res.

    `res` is either another Arrow or a HistoryType pair; a chain of Arrows
    terminated by one HistoryType is the FunctionType of the surface grammar.
    """
    param: str
    arg: Union[OverType, ECT, "Arrow"]
    res: Union["Arrow", "HistoryType"]


@dataclass(frozen=True)
class HistoryType:
    """The pair (tau, H)."""
    tau: Union[ECT, Arrow]
    effect: Any  # HistoryExpr; untyped to avoid a circular import


Type = Union[ECT, OverType, Arrow, HistoryType]


def erase_type(t: Type):
    """Drop qualifiers and effects, leaving the simple-type shape.

    Scalars erase to their base; arrows erase to ('->', arg, res).
    """
    if isinstance(t, (ECT, OverType)):
        return t.base
    if isinstance(t, Arrow):
        return ("->", erase_type(t.arg), erase_type(t.res))
    if isinstance(t, HistoryType):
        return erase_type(t.tau)
    raise TypeError(t)


def arrow_params(t: Arrow):
    """Flatten an arrow chain into ([(name, argtype), ...], tail HistoryType)."""
    params = []
    cur: Union[Arrow, HistoryType] = t
    while isinstance(cur, Arrow):
        params.append((cur.param, cur.arg))
        cur = cur.res
    return params, cur


def make_arrow(params, tail: HistoryType):
    cur: Union[Arrow, HistoryType] = tail
    for name, arg in reversed(params):
        cur = Arrow(name, arg, cur)
    return cur


# ---------------------------------------------------------------------------
# Program terms (let-normal form)

@dataclass(frozen=True)
class Const:
    value: Any
    base: Optional[Base] = None


@dataclass(frozen=True)
class VarT:
    name: str


@dataclass(frozen=True)
class OpVal:
    """An operator / constructor / action name used in head position."""
    name: str


@dataclass(frozen=True)
class Lam:
    param: str
    base: Base
    phi: Prop
    body: "Term"


@dataclass(frozen=True)
class FixVal:
    """Runtime value of a recursive function (built by the evaluator)."""
    fname: str
    params: Tuple[Tuple[str, Base], ...]
    body: "Term"


Value = Union[Const, VarT, OpVal, Lam, FixVal]


@dataclass(frozen=True)
class Err:
    base: Base


@dataclass(frozen=True)
class Let:
    var: str
    rhs: "Term"
    body: "Term"


@dataclass(frozen=True)
class LetApp:
    var: str
    head: Value
    args: Tuple[Value, ...]
    body: "Term"


@dataclass(frozen=True)
class LetNew:
    var: str
    rkind: str
    body: "Term"


@dataclass(frozen=True)
class LetGet:
    var: str
    api: str
    body: "Term"


@dataclass(frozen=True)
class LetRec:
    fname: str
    params: Tuple[Tuple[str, Base, Prop], ...]
    ret: Union[ECT, HistoryType]
    fbody: "Term"
    body: "Term"


@dataclass(frozen=True)
class PatConst:
    value: Any


@dataclass(frozen=True)
class PatCtor:
    ctor: str
    binders: Tuple[str, ...]


Pattern = Union[PatConst, PatCtor]


@dataclass(frozen=True)
class Branch:
    pattern: Pattern
    body: "Term"


@dataclass(frozen=True)
class Match:
    scrutinee: Value
    branches: Tuple[Branch, ...]


Term = Union[Const, VarT, OpVal, Lam, FixVal, Err, Let, LetApp, LetNew,
             LetGet, LetRec, Match]


def is_value(t: Term) -> bool:
    return isinstance(t, (Const, VarT, OpVal, Lam, FixVal))


def term_vars(t: Term) -> set:
    """Free program variables of a term."""
    if isinstance(t, VarT):
        return {t.name}
    if isinstance(t, (Const, OpVal, Err)):
        return set()
    if isinstance(t, Lam):
        return term_vars(t.body) - {t.param}
    if isinstance(t, FixVal):
        names = {t.fname} | {n for n, _ in t.params}
        return term_vars(t.body) - names
    if isinstance(t, Let):
        return term_vars(t.rhs) | (term_vars(t.body) - {t.var})
    if isinstance(t, LetApp):
        out = term_vars(t.head)
        for a in t.args:
            out |= term_vars(a)
        return out | (term_vars(t.body) - {t.var})
    if isinstance(t, (LetNew, LetGet)):
        return term_vars(t.body) - {t.var}
    if isinstance(t, LetRec):
        names = {t.fname} | {n for n, _, _ in t.params}
        return (term_vars(t.fbody) - names) | (term_vars(t.body) - {t.fname})
    if isinstance(t, Match):
        out = term_vars(t.scrutinee)
        for br in t.branches:
            binders = set(br.pattern.binders) if isinstance(br.pattern, PatCtor) else set()
            out |= term_vars(br.body) - binders
        return out
    raise TypeError(t)
