"""History expressions: the effect algebra.

Grammar nodes, identifier substitution, the bind operation, the equality
axioms as a normalizing rewrite, alpha rules for recursive declarations,
Normal Form conversion, and qualifier-position interpretations.

A history in canonical (sum-of-concatenations) shape is a Choice of Seqs,
each Seq a tuple of atoms with exactly one trailing Eps; a single
concatenation is a bare Seq.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Optional, Tuple, Union

from .syntax import (Base, Identifier, Prop, Lit, V, prop_free_vars,
                     subst_prop, subst_prop_ident, conj, v_eq, Exists, TRUE)


class HistError(Exception):
    pass


class SideConditionError(HistError):
    """An alpha rule's side condition does not hold."""


class NFConversionError(HistError):
    """The history cannot be brought into Normal Form."""


# ---------------------------------------------------------------------------
# Nodes

@dataclass(frozen=True)
class Eps:
    pass


@dataclass(frozen=True)
class ActEvent:
    action: str
    values: Tuple[Any, ...]


@dataclass(frozen=True)
class ApiEvent:
    api: Identifier
    values: Tuple[Any, ...]


@dataclass(frozen=True)
class NewEvent:
    rkind: str
    ident: Identifier
    pending: bool = False


@dataclass(frozen=True)
class GetEvent:
    api: Identifier


@dataclass(frozen=True)
class ActExpr:
    action: str
    args: Tuple[Tuple[Base, Prop], ...]


@dataclass(frozen=True)
class ApiExpr:
    api: Identifier
    args: Tuple[Tuple[str, Base, Prop], ...]
    pending: bool = False


@dataclass(frozen=True)
class CallExpr:
    phi: Prop
    args: Tuple[Tuple[str, Base, Prop], ...]


@dataclass(frozen=True)
class Mu:
    fid: Identifier
    params: Tuple[Tuple[str, Base, Prop], ...]
    body: "Hist"


@dataclass(frozen=True)
class Seq:
    parts: Tuple["Hist", ...]


@dataclass(frozen=True)
class Choice:
    parts: Tuple["Hist", ...]


Hist = Union[Eps, ActEvent, ApiEvent, NewEvent, GetEvent, ActExpr, ApiExpr,
             CallExpr, Mu, Seq, Choice]

EPS = Eps()

VALUE_NODES = (Eps, ActEvent, ApiEvent, NewEvent, GetEvent)


def seq(*parts: Hist) -> Hist:
    flat = []
    for p in parts:
        if isinstance(p, Seq):
            flat.extend(p.parts)
        else:
            flat.append(p)
    flat = [p for p in flat if not isinstance(p, Eps)]
    if not flat:
        return EPS
    if len(flat) == 1:
        return flat[0]
    return Seq(tuple(flat))


def choice(*parts: Hist) -> Hist:
    flat = []
    for p in parts:
        if isinstance(p, Choice):
            flat.extend(p.parts)
        else:
            flat.append(p)
    out = []
    for p in flat:
        if p not in out:
            out.append(p)
    if len(out) == 1:
        return out[0]
    return Choice(tuple(out))


# ---------------------------------------------------------------------------
# Traversals

def map_children(h: Hist, f) -> Hist:
    if isinstance(h, Seq):
        return Seq(tuple(f(p) for p in h.parts))
    if isinstance(h, Choice):
        return Choice(tuple(f(p) for p in h.parts))
    if isinstance(h, Mu):
        return Mu(h.fid, h.params, f(h.body))
    return h


def bound_mu_idents(h: Hist) -> set:
    out = set()
    if isinstance(h, Mu):
        out.add(h.fid)
        out |= bound_mu_idents(h.body)
    elif isinstance(h, (Seq, Choice)):
        for p in h.parts:
            out |= bound_mu_idents(p)
    return out


def used_idents(h: Hist) -> set:
    """Every Identifier occurring anywhere in h (values, qualifiers, binders)."""
    out = set()

    def from_prop(p: Prop):
        stack = [p]
        while stack:
            q = stack.pop()
            if hasattr(q, "term"):
                tstack = [q.term]
                while tstack:
                    t = tstack.pop()
                    if isinstance(t, Lit) and isinstance(t.value, Identifier):
                        out.add(t.value)
                    elif hasattr(t, "args"):
                        tstack.extend(t.args)
            elif hasattr(q, "parts"):
                stack.extend(q.parts)
            elif hasattr(q, "body"):
                stack.append(q.body)
            elif hasattr(q, "lhs"):
                stack.extend([q.lhs, q.rhs])

    def walk(x: Hist):
        if isinstance(x, ActEvent):
            for u in x.values:
                if isinstance(u, Identifier):
                    out.add(u)
        elif isinstance(x, ApiEvent):
            out.add(x.api)
            for u in x.values:
                if isinstance(u, Identifier):
                    out.add(u)
        elif isinstance(x, NewEvent):
            out.add(x.ident)
        elif isinstance(x, GetEvent):
            out.add(x.api)
        elif isinstance(x, ActExpr):
            for _, p in x.args:
                from_prop(p)
        elif isinstance(x, ApiExpr):
            out.add(x.api)
            for _, _, p in x.args:
                from_prop(p)
        elif isinstance(x, CallExpr):
            from_prop(x.phi)
            for _, _, p in x.args:
                from_prop(p)
        elif isinstance(x, Mu):
            out.add(x.fid)
            for _, _, p in x.params:
                from_prop(p)
            walk(x.body)
        elif isinstance(x, (Seq, Choice)):
            for p in x.parts:
                walk(p)

    walk(h)
    return out


def qualifier_free_vars(h: Hist) -> set:
    """Free term variables occurring in any qualifier of h."""
    out = set()

    def walk(x: Hist):
        if isinstance(x, ActExpr):
            for _, p in x.args:
                out.update(prop_free_vars(p) - {"v"})
        elif isinstance(x, ApiExpr):
            for _, _, p in x.args:
                out.update(prop_free_vars(p) - {"v"})
        elif isinstance(x, CallExpr):
            out.update(prop_free_vars(x.phi) - {"v"})
            for _, _, p in x.args:
                out.update(prop_free_vars(p) - {"v"})
        elif isinstance(x, Mu):
            for _, _, p in x.params:
                out.update(prop_free_vars(p) - {"v"})
            walk(x.body)
        elif isinstance(x, (Seq, Choice)):
            for p in x.parts:
                walk(p)

    walk(h)
    return out


def contains_new(h: Hist) -> bool:
    if isinstance(h, NewEvent):
        return True
    if isinstance(h, Mu):
        return contains_new(h.body)
    if isinstance(h, (Seq, Choice)):
        return any(contains_new(p) for p in h.parts)
    return False


# ---------------------------------------------------------------------------
# Substitution of identifiers (values and qualifiers alike)

def subst_identifier(h: Hist, new: Identifier, old: Identifier) -> Hist:
    """h[new/old], applied homomorphically through every node."""

    def on_val(u):
        return new if u == old else u

    def on_prop(p: Prop) -> Prop:
        return subst_prop_ident(p, old, new)

    if isinstance(h, Eps):
        return h
    if isinstance(h, ActEvent):
        return ActEvent(h.action, tuple(on_val(u) for u in h.values))
    if isinstance(h, ApiEvent):
        return ApiEvent(on_val(h.api), tuple(on_val(u) for u in h.values))
    if isinstance(h, NewEvent):
        return NewEvent(h.rkind, on_val(h.ident), h.pending)
    if isinstance(h, GetEvent):
        return GetEvent(on_val(h.api))
    if isinstance(h, ActExpr):
        return ActExpr(h.action, tuple((b, on_prop(p)) for b, p in h.args))
    if isinstance(h, ApiExpr):
        return ApiExpr(on_val(h.api),
                       tuple((a, b, on_prop(p)) for a, b, p in h.args),
                       h.pending)
    if isinstance(h, CallExpr):
        return CallExpr(on_prop(h.phi),
                        tuple((a, b, on_prop(p)) for a, b, p in h.args))
    if isinstance(h, Mu):
        return Mu(on_val(h.fid),
                  tuple((a, b, on_prop(p)) for a, b, p in h.params),
                  subst_identifier(h.body, new, old))
    if isinstance(h, (Seq, Choice)):
        return map_children(h, lambda p: subst_identifier(p, new, old))
    raise TypeError(h)


# ---------------------------------------------------------------------------
# Pending flags (the up-arrow annotation)

def apply_up(h: Hist) -> Hist:
    """Mark creations and api-exprs as pending; never inside a Mu body."""
    if isinstance(h, NewEvent):
        return replace(h, pending=True)
    if isinstance(h, ApiExpr):
        return replace(h, pending=True)
    if isinstance(h, Mu):
        return h
    if isinstance(h, (Seq, Choice)):
        return map_children(h, apply_up)
    return h


# ---------------------------------------------------------------------------
# bind

def _wrap(x: str, base: Base, psi_x: Prop, phi: Prop) -> Prop:
    """Exists x. psi_x[v -> x] /\\ phi, flattened when x is not free in phi.

    The flattening keeps the nesting depth of quantifiers equal to the real
    data dependency depth (important: qualifier evaluation enumerates
    universes per quantifier) while preserving the key property that an
    unsatisfiable binder poisons the wrapped qualifier.
    """
    from .syntax import Var
    shifted = subst_prop(psi_x, {"v": Var(x)})
    if x in prop_free_vars(phi):
        return Exists(x, base, conj(shifted, phi))
    if shifted == TRUE:
        return phi
    return conj(Exists(x, base, shifted), phi)


def bind(x: str, base: Base, psi_x: Prop, h: Hist) -> Hist:
    """Existentially bind the variable x (with qualifier psi_x) into every
    qualifier position of h.  Ground values are untouched."""
    if isinstance(h, VALUE_NODES):
        return h
    if isinstance(h, ActExpr):
        return ActExpr(h.action,
                       tuple((b, _wrap(x, base, psi_x, p)) for b, p in h.args))
    if isinstance(h, ApiExpr):
        return ApiExpr(h.api,
                       tuple((a, b, _wrap(x, base, psi_x, p)) for a, b, p in h.args),
                       h.pending)
    if isinstance(h, CallExpr):
        return CallExpr(_wrap(x, base, psi_x, h.phi),
                        tuple((a, b, _wrap(x, base, psi_x, p)) for a, b, p in h.args))
    if isinstance(h, Mu):
        return Mu(h.fid,
                  tuple((a, b, _wrap(x, base, psi_x, p)) for a, b, p in h.params),
                  bind(x, base, psi_x, h.body))
    if isinstance(h, (Seq, Choice)):
        return map_children(h, lambda p: bind(x, base, psi_x, p))
    raise TypeError(h)


def bind_many(bindings, h: Hist) -> Hist:
    """Fold bind right-to-left over [(name, base, psi), ...]."""
    for x, base, psi in reversed(list(bindings)):
        h = bind(x, base, psi, h)
    return h


# ---------------------------------------------------------------------------
# Equality axioms as a canonical rewrite

def _sort_key(h: Hist) -> str:
    return repr(h)


def _concat_lists(h: Hist):
    """All concatenations (lists of atoms) denoted by h under the axioms."""
    if isinstance(h, Eps):
        return [[]]
    if isinstance(h, Seq):
        out = [[]]
        for p in h.parts:
            sub = _concat_lists(p)
            out = [a + b for a in out for b in sub]
        return out
    if isinstance(h, Choice):
        out = []
        for p in h.parts:
            out.extend(_concat_lists(p))
        return out
    return [[h]]


def eq_normalize(h: Hist) -> Hist:
    """Apply the equality axioms, producing a canonical sum of
    concatenations, each with a single trailing Eps."""
    concats = _concat_lists(h)
    seqs = []
    for atoms in concats:
        s = Seq(tuple(atoms) + (EPS,))
        if s not in seqs:
            seqs.append(s)
    seqs.sort(key=_sort_key)
    if len(seqs) == 1:
        return seqs[0]
    return Choice(tuple(seqs))


def nf_concats(h: Hist):
    """The concatenations of a canonical history, as atom tuples
    (trailing Eps included)."""
    if isinstance(h, Choice):
        return [p.parts for p in h.parts]
    if isinstance(h, Seq):
        return [h.parts]
    raise NFConversionError(f"not in canonical shape: {h!r}")


# ---------------------------------------------------------------------------
# Alpha rules

def alpha_rename_mu(h: Hist, old: Identifier, new: Identifier) -> Hist:
    """Rename the recursive declaration muF to muG consistently in binder,
    body and continuation.  new must be globally fresh in h."""
    if new in used_idents(h):
        raise SideConditionError(
            f"{new} is not fresh for this history (alpha rule 1)")
    return subst_identifier(h, new, old)


def _mentions_fid(h: Hist, fid: Identifier, reg=None, universe=None) -> bool:
    """Does h contain a call that may resolve to fid, or an api form named
    fid?  Used for the side condition of alpha rule 2 and NF clause 3."""
    if isinstance(h, (ApiExpr, ApiEvent)):
        if h.api == fid:
            return True
        if isinstance(h, ApiExpr):
            return False
        return False
    if isinstance(h, GetEvent):
        return h.api == fid
    if isinstance(h, CallExpr):
        return call_may_match(h, fid, reg, universe)
    if isinstance(h, Mu):
        return _mentions_fid(h.body, fid, reg, universe)
    if isinstance(h, (Seq, Choice)):
        return any(_mentions_fid(p, fid, reg, universe) for p in h.parts)
    return False


def call_may_match(c: CallExpr, fid: Identifier, reg=None, universe=None) -> bool:
    """Whether phi[v -> fid] can hold.  Decided semantically when a registry
    and universe are available, conservatively otherwise."""
    phi = subst_prop(c.phi, {"v": Lit(fid)})
    if reg is not None and universe is not None:
        from . import logic
        verdict = logic.try_eval_closed(phi, reg, universe)
        if verdict is not None:
            return verdict
    return fid in used_idents(c) or bool(prop_free_vars(c.phi) - {"v"})


def shift_mu_right(h: Hist, reg=None, universe=None) -> Hist:
    """Alpha rule 2: move the first shiftable mu declaration one atom to the
    right.  Raises SideConditionError when the adjacent segment mentions the
    recursive function."""
    if isinstance(h, Choice):
        return Choice(tuple(shift_mu_right(p, reg, universe) for p in h.parts))
    if not isinstance(h, Seq):
        return h
    parts = list(h.parts)
    for i, p in enumerate(parts[:-1]):
        if isinstance(p, Mu):
            nxt = parts[i + 1]
            if isinstance(nxt, Eps):
                continue
            if _mentions_fid(nxt, p.fid, reg, universe):
                raise SideConditionError(
                    f"segment after mu{p.fid} mentions it (alpha rule 2)")
            parts[i], parts[i + 1] = nxt, p
            return Seq(tuple(parts))
    return h


# ---------------------------------------------------------------------------
# Normal Form

NF_ATOMS = (ActExpr, NewEvent, GetEvent, CallExpr, Mu)


def _shift_mus_in_concat(atoms, reg, universe):
    """Move every mu in one concatenation maximally right; a mu may stop at
    the penultimate slot or directly before a call matching it."""
    atoms = list(atoms)
    changed = True
    while changed:
        changed = False
        for i in range(len(atoms) - 1):
            p = atoms[i]
            if not isinstance(p, Mu):
                continue
            nxt = atoms[i + 1]
            if isinstance(nxt, Eps):
                continue  # penultimate: done
            if _mentions_fid(nxt, p.fid, reg, universe):
                if isinstance(nxt, CallExpr):
                    continue  # valid stop: followed by its matching call
                raise NFConversionError(
                    f"mu{p.fid} blocked by a non-call use while shifting")
            atoms[i], atoms[i + 1] = nxt, p
            changed = True
    return atoms


def to_normal_form(h: Hist, reg=None, universe=None) -> Hist:
    """Normal Form: sum of concatenations of atoms with one trailing Eps,
    mu bodies recursively normalized, each mu shifted maximally right."""

    def norm_bodies(x: Hist) -> Hist:
        if isinstance(x, Mu):
            return Mu(x.fid, x.params, to_normal_form(x.body, reg, universe))
        return map_children(x, norm_bodies)

    h = norm_bodies(h)
    canon = eq_normalize(h)
    seqs = []
    for atoms in nf_concats(canon):
        core = [a for a in atoms if not isinstance(a, Eps)]
        for a in core:
            if not isinstance(a, NF_ATOMS):
                raise NFConversionError(f"non-atomic segment in NF: {a!r}")
        core = _shift_mus_in_concat(core, reg, universe)
        s = Seq(tuple(core) + (EPS,))
        if s not in seqs:
            seqs.append(s)
    seqs.sort(key=_sort_key)
    return seqs[0] if len(seqs) == 1 else Choice(tuple(seqs))


def is_normal_form(h: Hist, reg=None, universe=None) -> bool:
    try:
        return to_normal_form(h, reg, universe) == h
    except NFConversionError:
        return False


# ---------------------------------------------------------------------------
# Interpretations (qualifier positions)

class _Skip:
    def __repr__(self):
        return "skip"


SKIP = _Skip()


def _qual_slots(h: Hist):
    """Pre-order, left-to-right qualifier slots, mu bodies (and params)
    excluded.  Yields (node, field-path) descriptors."""
    slots = []

    def walk(x: Hist):
        if isinstance(x, ActExpr):
            for i in range(len(x.args)):
                slots.append((x, ("args", i)))
        elif isinstance(x, ApiExpr):
            for i in range(len(x.args)):
                slots.append((x, ("args", i)))
        elif isinstance(x, CallExpr):
            slots.append((x, ("phi",)))
            for i in range(len(x.args)):
                slots.append((x, ("args", i)))
        elif isinstance(x, (Seq, Choice)):
            for p in x.parts:
                walk(p)

    walk(h)
    return slots


def count_qualifiers(h: Hist) -> int:
    return len(_qual_slots(h))


def apply_interpretation(h: Hist, interp: dict) -> Hist:
    """Replace the qualifier at each indexed position with v == value; a SKIP
    entry leaves the qualifier intact.  Indices follow _qual_slots order."""
    n = count_qualifiers(h)
    for i in interp:
        if not (0 <= i < n):
            raise IndexError(f"qualifier index {i} out of range (n={n})")
    counter = [0]

    def rewrite_prop(p: Prop) -> Prop:
        i = counter[0]
        counter[0] += 1
        if i in interp and interp[i] is not SKIP:
            return v_eq(interp[i])
        return p

    def walk(x: Hist) -> Hist:
        if isinstance(x, ActExpr):
            return ActExpr(x.action,
                           tuple((b, rewrite_prop(p)) for b, p in x.args))
        if isinstance(x, ApiExpr):
            return ApiExpr(x.api,
                           tuple((a, b, rewrite_prop(p)) for a, b, p in x.args),
                           x.pending)
        if isinstance(x, CallExpr):
            phi = rewrite_prop(x.phi)
            return CallExpr(phi,
                            tuple((a, b, rewrite_prop(p)) for a, b, p in x.args))
        if isinstance(x, (Seq, Choice)):
            return map_children(x, walk)
        return x

    return walk(h)
