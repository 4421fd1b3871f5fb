"""Bounded denotation of history expressions.

Exhaustive exploration of the reduction relation over (Omega, Upsilon, H)
triples.  Recursive unfoldings (applications of an Upsilon substitution)
count against a depth bound; any truncated branch clears the completeness
flag.  The result set is deterministic.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Tuple

from . import logic
from .histexpr import (ActEvent, ActExpr, ApiEvent, ApiExpr, CallExpr, Choice,
                       Eps, GetEvent, Hist, Mu, NewEvent, Seq, apply_up,
                       bind_many)
from .registry import Delta, Registry, Universe
from .syntax import ECT, Identifier, KIND_API, KIND_REC, Lit, OverType, Prop, subst_prop


class DenoteError(Exception):
    pass


@dataclass(frozen=True)
class ReductionState:
    omega: FrozenSet[Identifier]
    upsilon: Tuple[Tuple[Identifier, tuple, Hist], ...]
    focus: Tuple[Hist, ...]
    emitted: Tuple[Hist, ...]
    unfolds: int


@dataclass
class DenoteResult:
    histories: Tuple[Tuple[Hist, ...], ...]
    complete: bool

    def as_set(self):
        return frozenset(self.histories)


MAX_STATES = 500_000


def _flatten(h: Hist) -> Tuple[Hist, ...]:
    if isinstance(h, Seq):
        out: List[Hist] = []
        for p in h.parts:
            out.extend(_flatten(p))
        return tuple(out)
    return (h,)


def _live_universe(uni: Universe, omega, delta: Delta) -> Universe:
    groups: Dict[str, list] = {}
    for i in sorted(omega):
        groups.setdefault(i.kind, []).append(i)
    apis = sorted(set(delta.apis) | {i for i in omega if i.kind == KIND_API})
    groups[KIND_API] = list(apis)
    return uni.with_resources({k: tuple(v) for k, v in groups.items()})


def _upsilon_lookup(upsilon, fid):
    for f, params, body in reversed(upsilon):
        if f == fid:
            return params, body
    return None


def denote(h: Hist, delta: Optional[Delta], uni: Universe, reg: Registry,
           depth: int = 16, trace: Optional[list] = None,
           max_states: int = MAX_STATES) -> DenoteResult:
    """All terminal histories reachable from (emptyset, emptyset, h-up)."""
    delta = delta or Delta()
    start = ReductionState(frozenset(), (), _flatten(apply_up(h)), (), 0)
    stack = [start]
    seen = {start}
    results = set()
    complete = True
    explored = 0

    def qual_values(phi: Prop, base, luni):
        try:
            return logic.eval_values(phi, base, {}, luni, reg)
        except logic.UnboundVariable as e:
            raise DenoteError(f"free variable {e} in a qualifier during reduction")

    while stack:
        st = stack.pop()
        explored += 1
        if explored > max_states:
            raise DenoteError("state budget exceeded during denotation")
        if not st.focus:
            results.add(st.emitted)
            continue
        head, rest = st.focus[0], st.focus[1:]
        succs: List[ReductionState] = []

        if isinstance(head, Eps):
            succs.append(ReductionState(st.omega, st.upsilon, rest, st.emitted, st.unfolds))
        elif isinstance(head, (ActEvent, ApiEvent, GetEvent)):
            succs.append(ReductionState(st.omega, st.upsilon, rest,
                                        st.emitted + (head,), st.unfolds))
        elif isinstance(head, NewEvent):
            omega = st.omega | {head.ident} if head.pending else st.omega
            ev = NewEvent(head.rkind, head.ident, False)
            succs.append(ReductionState(omega, st.upsilon, rest,
                                        st.emitted + (ev,), st.unfolds))
        elif isinstance(head, Choice):
            for p in head.parts:
                succs.append(ReductionState(st.omega, st.upsilon,
                                            _flatten(p) + rest, st.emitted, st.unfolds))
        elif isinstance(head, Seq):
            succs.append(ReductionState(st.omega, st.upsilon,
                                        _flatten(head) + rest, st.emitted, st.unfolds))
        elif isinstance(head, Mu):
            ups = st.upsilon + ((head.fid, head.params, head.body),)
            succs.append(ReductionState(st.omega, ups, rest, st.emitted, st.unfolds))
        elif isinstance(head, ActExpr):
            luni = _live_universe(uni, st.omega, delta)
            vals = [qual_values(p, b, luni) for b, p in head.args]
            if any(not vs for vs in vals):
                # an empty value slot reduces the whole event to epsilon
                succs.append(ReductionState(st.omega, st.upsilon, rest,
                                            st.emitted, st.unfolds))
            else:
                for combo in itertools.product(*vals):
                    ev = ActEvent(head.action, tuple(combo))
                    succs.append(ReductionState(st.omega, st.upsilon, rest,
                                                st.emitted + (ev,), st.unfolds))
        elif isinstance(head, CallExpr):
            luni = _live_universe(uni, st.omega, delta)
            candidates = sorted(set(delta.apis)
                                | {f for f, _, _ in st.upsilon}
                                | {i for i in st.omega if i.kind in (KIND_API, KIND_REC)})
            api = []
            for f in candidates:
                phi = subst_prop(head.phi, {"v": Lit(f)})
                verdict = logic.try_eval_closed(phi, reg, luni)
                if verdict is None:
                    raise DenoteError("free variable in a call qualifier")
                if verdict:
                    api.append(f)
            if not api:
                # no matching target: the call reduces to epsilon
                succs.append(ReductionState(st.omega, st.upsilon, rest,
                                            st.emitted, st.unfolds))
            for f in api:
                ex = ApiExpr(f, head.args, pending=True)
                succs.append(ReductionState(st.omega, st.upsilon, (ex,) + rest,
                                            st.emitted, st.unfolds))
        elif isinstance(head, ApiExpr):
            bindings = [(a, b, p) for a, b, p in head.args]
            if head.pending:
                rec = _upsilon_lookup(st.upsilon, head.api)
                sig = delta.lookup(head.api)
                latent: Tuple[Hist, ...] = ()
                if sig is not None and not isinstance(sig.effect, Eps):
                    latent = _flatten(apply_up(bind_many(bindings, sig.effect)))
                if rec is not None:
                    if st.unfolds + 1 > depth:
                        complete = False
                        continue
                    _, body = rec
                    unfolded = _flatten(apply_up(bind_many(bindings, body)))
                    succs.append(ReductionState(st.omega, st.upsilon,
                                                unfolded + latent + rest,
                                                st.emitted, st.unfolds + 1))
                elif sig is not None:
                    ex = ApiExpr(head.api, head.args, pending=False)
                    succs.append(ReductionState(st.omega, st.upsilon,
                                                (ex,) + latent + rest,
                                                st.emitted, st.unfolds))
                else:
                    raise DenoteError(f"api {head.api} has no signature in Delta")
            else:
                luni = _live_universe(uni, st.omega, delta)
                vals = [qual_values(p, b, luni) for _, b, p in head.args]
                if any(not vs for vs in vals):
                    succs.append(ReductionState(st.omega, st.upsilon, rest,
                                                st.emitted, st.unfolds))
                else:
                    for combo in itertools.product(*vals):
                        ev = ApiEvent(head.api, tuple(combo))
                        succs.append(ReductionState(st.omega, st.upsilon, rest,
                                                    st.emitted + (ev,), st.unfolds))
        else:
            raise DenoteError(f"irreducible non-terminal node {head!r}")

        for s in succs:
            if s not in seen:
                seen.add(s)
                stack.append(s)
                if trace is not None:
                    trace.append(s)

    ordered = tuple(sorted(results, key=repr))
    return DenoteResult(ordered, complete)


def gamma_psi_bindings(gamma):
    """The (name, base, qualifier) bindings a context contributes to bind:
    psi for ECT entries, phi for over-type entries; function types skipped."""
    out = []
    for name, ty in gamma:
        if isinstance(ty, ECT):
            out.append((name, ty.base, ty.psi))
        elif isinstance(ty, OverType):
            out.append((name, ty.base, ty.phi))
    return out


def denote_in_context(h: Hist, gamma, delta: Optional[Delta], uni: Universe,
                      reg: Registry, depth: int = 16) -> DenoteResult:
    """Fold bind over the psi-projected context, then denote."""
    bound = bind_many(gamma_psi_bindings(gamma), h)
    return denote(bound, delta, uni, reg, depth)
