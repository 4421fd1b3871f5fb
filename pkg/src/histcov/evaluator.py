"""Reference interpreter: substitution-based small-step reduction.

Nondeterminism (generator operators, API return oracles, API latent traces)
goes through a chooser callback, so one step function serves exhaustive
enumeration (run_all), random testing (run_random), and scripted replay.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Callable, List, Optional, Tuple

from . import histexpr as hx
from . import logic
from .denote import denote
from .registry import OpSig, Registry, Universe
from .syntax import (Branch, Const, Err, FixVal, Identifier, KIND_API,
                     KIND_REC, Lam, Let, LetApp, LetGet, LetNew, LetRec,
                     Match, PatConst, PatCtor, Term, VarT, is_value)
from .typecheck import FreshState


class StuckError(Exception):
    pass


class BudgetExceeded(Exception):
    pass


class _NeedChoice(Exception):
    def __init__(self, n: int):
        super().__init__(f"unscripted choice with {n} options")
        self.n = n


Chooser = Callable[[list, str], int]


@dataclass
class MachineState:
    term: Term
    trace: Tuple[hx.Hist, ...] = ()
    steps: int = 0


@dataclass(frozen=True)
class RunResult:
    kind: str                      # "value" | "err" | "stuck"
    value: Any
    trace: Tuple[hx.Hist, ...]


@dataclass
class RunAllResult:
    runs: Tuple[RunResult, ...]
    complete: bool

    def traces(self):
        return sorted({r.trace for r in self.runs}, key=repr)


# ---------------------------------------------------------------------------
# Substitution of runtime values for program variables

def subst_term(t: Term, name: str, val) -> Term:
    s = lambda x: subst_term(x, name, val)
    if isinstance(t, VarT):
        return val if t.name == name else t
    if isinstance(t, (Const, Err)):
        return t
    if isinstance(t, Lam):
        return t if t.param == name else Lam(t.param, t.base, t.phi, s(t.body))
    if isinstance(t, FixVal):
        bound = {t.fname} | {n for n, _ in t.params}
        return t if name in bound else FixVal(t.fname, t.params, s(t.body))
    if isinstance(t, Let):
        body = t.body if t.var == name else s(t.body)
        return Let(t.var, s(t.rhs), body)
    if isinstance(t, LetApp):
        body = t.body if t.var == name else s(t.body)
        return LetApp(t.var, s(t.head), tuple(s(a) for a in t.args), body)
    if isinstance(t, LetNew):
        body = t.body if t.var == name else s(t.body)
        return LetNew(t.var, t.rkind, body)
    if isinstance(t, LetGet):
        body = t.body if t.var == name else s(t.body)
        return LetGet(t.var, t.api, body)
    if isinstance(t, LetRec):
        bound = {t.fname} | {n for n, _, _ in t.params}
        fbody = t.fbody if name in bound else s(t.fbody)
        body = t.body if t.fname == name else s(t.body)
        return LetRec(t.fname, t.params, t.ret, fbody, body)
    if isinstance(t, Match):
        branches = []
        for br in t.branches:
            binders = set(br.pattern.binders) if isinstance(br.pattern, PatCtor) else set()
            branches.append(br if name in binders else Branch(br.pattern, s(br.body)))
        return Match(s(t.scrutinee), tuple(branches))
    raise TypeError(t)


# ---------------------------------------------------------------------------
# The machine

class Evaluator:
    def __init__(self, reg: Registry, uni: Optional[Universe] = None,
                 depth: int = 16, budget: int = 100_000):
        self.reg = reg
        self.delta = reg.delta
        self.base_uni = uni or reg.make_universe()
        self.depth = depth
        self.budget = budget
        self.fresh = FreshState(reg)

    def universe(self) -> Universe:
        return self.base_uni.with_resources(self.delta.resource_map())

    def is_terminal(self, t: Term) -> bool:
        return is_value(t) or isinstance(t, Err)

    def step(self, state: MachineState, chooser: Chooser) -> Optional[MachineState]:
        """One reduction; None when the term is a value.  A final Err term
        emits its err() event exactly once, then becomes terminal."""
        t = state.term
        if is_value(t):
            return None
        if isinstance(t, Err):
            return None
        term, events = self._reduce(t, chooser)
        return MachineState(term, state.trace + tuple(events), state.steps + 1)

    def _reduce(self, t: Term, chooser: Chooser):
        if isinstance(t, Let):
            if self.is_terminal(t.rhs):
                if isinstance(t.rhs, Err):
                    return Err(t.rhs.base), [hx.ActEvent("err", ())]
                return subst_term(t.body, t.var, t.rhs), []
            rhs, ev = self._reduce(t.rhs, chooser)
            return Let(t.var, rhs, t.body), ev
        if isinstance(t, LetNew):
            if t.rkind not in self.reg.resource_kinds:
                raise StuckError(f"unknown resource kind {t.rkind}")
            ident = self.fresh.next_ident(t.rkind)
            self.delta.used.add(ident)
            ev = hx.NewEvent(t.rkind, ident, False)
            return subst_term(t.body, t.var, Const(ident, t.rkind)), [ev]
        if isinstance(t, LetGet):
            fid = self.delta.by_name.get(t.api)
            if fid is None:
                raise StuckError(f"api {t.api} not registered")
            return (subst_term(t.body, t.var, Const(fid, KIND_API)),
                    [hx.GetEvent(fid)])
        if isinstance(t, LetRec):
            fix = FixVal(t.fname, tuple((n, b) for n, b, _ in t.params), t.fbody)
            return subst_term(t.body, t.fname, fix), []
        if isinstance(t, Match):
            return self._reduce_match(t)
        if isinstance(t, LetApp):
            return self._reduce_app(t, chooser)
        raise StuckError(f"cannot reduce {type(t).__name__}")

    # -- match ------------------------------------------------------------

    def _reduce_match(self, t: Match):
        scrut = t.scrutinee
        if not isinstance(scrut, Const):
            raise StuckError("match scrutinee is not a ground value")
        v, base = scrut.value, scrut.base
        for br in t.branches:
            pat = br.pattern
            if isinstance(pat, PatConst):
                if v == pat.value:
                    return br.body, []
                continue
            if pat.ctor == "Nil" and v == ():
                return br.body, []
            if pat.ctor == "Cons" and isinstance(v, tuple) and v and v[0] != "leaf" \
                    and v[0] != "node":
                elem = base[1] if isinstance(base, tuple) else None
                body = subst_term(br.body, pat.binders[0], Const(v[0], elem))
                body = subst_term(body, pat.binders[1], Const(tuple(v[1:]), base))
                return body, []
            if pat.ctor == "Leaf" and v == ("leaf",):
                return br.body, []
            if pat.ctor == "Node" and isinstance(v, tuple) and v and v[0] == "node":
                elem = base[1] if isinstance(base, tuple) else None
                body = subst_term(br.body, pat.binders[0], Const(v[1], elem))
                body = subst_term(body, pat.binders[1], Const(v[2], base))
                body = subst_term(body, pat.binders[2], Const(v[3], base))
                return body, []
        raise StuckError(f"no branch matches value {v!r}")

    # -- application ------------------------------------------------------

    def _reduce_app(self, t: LetApp, chooser: Chooser):
        head = t.head
        if isinstance(head, VarT):
            name = head.name
            if name in self.reg.actions:
                return self._apply_sig(t, self.reg.actions[name], chooser,
                                       emit_action=name)
            if name in self.reg.operators:
                return self._apply_sig(t, self.reg.operators[name], chooser)
            raise StuckError(f"unbound application head {name}")
        if isinstance(head, Const) and isinstance(head.value, Identifier):
            return self._apply_api(t, head.value, chooser)
        if isinstance(head, Lam):
            arg = t.args[0]
            if not is_value(arg):
                raise StuckError("argument is not a value")
            out = subst_term(head.body, head.param, arg)
            if len(t.args) == 1:
                return Let(t.var, out, t.body), []
            if not is_value(out):
                raise StuckError("partial application of a non-curried function")
            return LetApp(t.var, out, t.args[1:], t.body), []
        if isinstance(head, FixVal):
            arg = t.args[0]
            (pname, _), rest = head.params[0], head.params[1:]
            body = subst_term(head.body, pname, arg)
            if head.fname:
                body = subst_term(body, head.fname, head)
            if rest:
                nxt = FixVal("", rest, body)
                if len(t.args) == 1:
                    return Let(t.var, nxt, t.body), []
                return LetApp(t.var, nxt, t.args[1:], t.body), []
            if len(t.args) > 1:
                raise StuckError("too many arguments to a recursive function")
            return Let(t.var, body, t.body), []
        raise StuckError(f"inapplicable head {head!r}")

    def _arg_values(self, t: LetApp, params):
        if len(t.args) != len(params):
            raise StuckError(f"arity mismatch applying {t.head!r}")
        env = {}
        vals = []
        uni = self.universe()
        for a, (pname, pbase, pphi) in zip(t.args, params):
            if not isinstance(a, Const):
                raise StuckError("argument is not a ground value")
            if not logic.eval_prop(pphi, {**env, "v": a.value}, uni, self.reg):
                raise StuckError(f"argument {pname} outside its domain")
            env[pname] = a.value
            vals.append(a.value)
        return env, vals

    def _apply_sig(self, t: LetApp, sig: OpSig, chooser: Chooser,
                   emit_action: Optional[str] = None):
        env, vals = self._arg_values(t, sig.params)
        uni = self.universe()
        results = logic.eval_values(sig.result.psi, sig.result.base, env,
                                    uni, self.reg)
        if not results:
            raise StuckError(f"{sig.name}: no result value inside the universe")
        if len(results) == 1:
            out = results[0]
        else:
            out = results[chooser(list(results), f"op:{sig.name}")]
        events = [hx.ActEvent(emit_action, tuple(vals))] if emit_action else []
        return (subst_term(t.body, t.var, Const(out, sig.result.base)), events)

    def _apply_api(self, t: LetApp, fid: Identifier, chooser: Chooser):
        sig = self.delta.lookup(fid)
        if sig is None:
            raise StuckError(f"api {fid.name} has no signature")
        env, vals = self._arg_values(t, sig.params)
        uni = self.universe()
        results = logic.eval_values(sig.ret.phi, sig.ret.base, env, uni, self.reg)
        if not results:
            raise StuckError(f"api {fid.name}: empty return oracle")
        if len(results) == 1:
            out = results[0]
        else:
            out = results[chooser(list(results), f"api:{fid.name}")]
        events: List[hx.Hist] = [hx.ApiEvent(fid, tuple(vals))]
        if not isinstance(sig.effect, hx.Eps):
            bindings = [(n, b, _ground_qual(v))
                        for (n, b, _), v in zip(sig.params, vals)]
            latent = hx.bind_many(bindings, sig.effect)
            res = denote(latent, self.delta, uni, self.reg, depth=self.depth)
            if not res.histories:
                raise StuckError(f"api {fid.name}: latent effect denotes nothing")
            hist = res.histories[0] if len(res.histories) == 1 else \
                res.histories[chooser(list(res.histories), f"latent:{fid.name}")]
            events.extend(hist)
        return (subst_term(t.body, t.var, Const(out, sig.ret.base)), events)


def _ground_qual(value):
    from .syntax import v_eq
    return v_eq(value)


# ---------------------------------------------------------------------------
# Drivers

def _final(state: MachineState) -> RunResult:
    t = state.term
    if isinstance(t, Err):
        return RunResult("err", None, state.trace + (hx.ActEvent("err", ()),))
    if isinstance(t, Const):
        return RunResult("value", t.value, state.trace)
    return RunResult("value", t, state.trace)


def run_one(term: Term, ev: Evaluator, chooser: Chooser) -> RunResult:
    state = MachineState(term)
    while True:
        if state.steps > ev.budget:
            raise BudgetExceeded(f"more than {ev.budget} steps")
        nxt = ev.step(state, chooser)
        if nxt is None:
            return _final(state)
        state = nxt


class _Scripted:
    def __init__(self, prefix):
        self.prefix = prefix
        self.i = 0
        self.arities: List[int] = []

    def __call__(self, options, tag):
        if self.i < len(self.prefix):
            k = self.prefix[self.i]
            self.i += 1
            return k
        raise _NeedChoice(len(options))


class _RegistrySnapshot:
    """Fresh identifiers allocated during one run must not leak into the
    next, or identical runs would produce differently-named resources."""

    def __init__(self, reg: Registry):
        self.reg = reg

    def __enter__(self):
        self.idents = dict(self.reg.idents)
        self.used = set(self.reg.delta.used)
        return self

    def __exit__(self, *exc):
        self.reg.idents.clear()
        self.reg.idents.update(self.idents)
        self.reg.delta.used.clear()
        self.reg.delta.used.update(self.used)
        return False


def run_all(term: Term, reg: Registry, uni: Optional[Universe] = None,
            depth: int = 16, budget: int = 100_000) -> RunAllResult:
    """Exhaustive exploration of every chooser decision sequence."""
    pending: List[tuple] = [()]
    runs = []
    complete = True
    while pending:
        prefix = pending.pop()
        with _RegistrySnapshot(reg):
            ev = Evaluator(reg, uni, depth, budget)
            try:
                r = run_one(term, ev, _Scripted(list(prefix)))
            except _NeedChoice as e:
                for k in range(e.n):
                    pending.append(prefix + (k,))
                continue
            except StuckError as e:
                runs.append(RunResult("stuck", str(e), ()))
                continue
            except BudgetExceeded:
                complete = False
                continue
        if r not in runs:
            runs.append(r)
    runs.sort(key=repr)
    return RunAllResult(tuple(runs), complete)


def run_random(term: Term, reg: Registry, uni: Optional[Universe] = None,
               seed: int = 0, depth: int = 16, budget: int = 100_000) -> RunResult:
    rng = random.Random(seed)
    with _RegistrySnapshot(reg):
        ev = Evaluator(reg, uni, depth, budget)
        return run_one(term, ev, lambda opts, tag: rng.randrange(len(opts)))
