"""Well-formedness, subtyping, the history algorithms (SubHist / SubConc /
HistConj), disjunction/conjunction, quantification helpers, and the
bidirectional synthesize/check pair.

Synthesis follows the let-normal structure: every let form builds an
auxiliary context Gamma' tying argument formals to actual values, emits its
event, synthesizes the body, existentially quantifies the locally bound
names out of the result type, and binds them into the body's effect.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

from . import logic
from .denote import gamma_psi_bindings
from .histexpr import (ActEvent, ActExpr, ApiExpr, CallExpr, Choice, EPS,
                       Eps, GetEvent, Hist, Mu, NewEvent, Seq, bind, bind_many,
                       choice, contains_new, seq, subst_identifier,
                       to_normal_form, used_idents, _wrap)
from .registry import ApiSig, Delta, OpSig, Registry, Universe
from .syntax import (App, Arrow, Atom, Base, Branch, Const, ECT, Err, Exists,
                     FALSE, Forall, HistoryType, Identifier, Implies, KIND_REC,
                     Lam, Let, LetApp, LetGet, LetNew, LetRec, Lit, Match,
                     Not, OverType, PatConst, PatCtor, Prop, QTerm, TRUE,
                     Term, V, Var, VarT, arrow_params, conj, disj, erase_type,
                     is_value, make_arrow, prop_free_vars, subst_prop, v_eq)


class TypingError(Exception):
    def __init__(self, rule: str, msg: str):
        super().__init__(f"[{rule}] {msg}")
        self.rule = rule
        self.msg = msg


# ---------------------------------------------------------------------------
# Fresh identifiers

class FreshState:
    """Delta plus a monotone counter over the identifier order."""

    def __init__(self, reg: Registry):
        self.reg = reg
        self.delta = reg.delta
        start = self.delta.max_index()
        for i in reg.idents.values():
            start = max(start, i.index)
        self.counter = start + 1

    def next_ident(self, kind: str = "file") -> Identifier:
        n = self.counter
        self.counter += 1
        name = (f"G{n}" if kind == KIND_REC else f"X{n}")
        ident = Identifier(n, kind, name)
        self.reg.idents[name] = ident
        return ident


def next_delta(state: FreshState, kind: str = "file",
               signature: Optional[tuple] = None) -> Identifier:
    """Issue a fresh identifier; with a signature (params, ret) it is also
    registered in Delta as an API with an empty latent effect."""
    ident = state.next_ident(KIND_REC if signature is not None else kind)
    if signature is not None:
        params, ret = signature
        state.delta.register_api(ApiSig(ident, params, ret, EPS))
    else:
        state.delta.used.add(ident)
    return ident


# ---------------------------------------------------------------------------
# Context plumbing

Gamma = List[Tuple[str, Union[ECT, OverType, Arrow]]]


def project_context(gamma: Gamma, which: str) -> Gamma:
    """Gamma_phi / Gamma_psi: ECT entries keep the selected qualifier,
    over-type and function entries pass through."""
    if which not in ("phi", "psi"):
        raise ValueError(which)
    out = []
    for name, ty in gamma:
        if isinstance(ty, ECT):
            q = ty.phi if which == "phi" else ty.psi
            out.append((name, OverType(ty.base, q)))
        else:
            out.append((name, ty))
    return out


def lookup(gamma: Gamma, name: str):
    for n, ty in reversed(gamma):
        if n == name:
            return ty
    return None


# ---------------------------------------------------------------------------
# Well-formedness

@dataclass
class Violation:
    clause: str
    detail: str

    def __str__(self):
        return f"{self.clause}: {self.detail}"


def _check_qualifier(p: Prop, scope: set, where: str, out: List[Violation]):
    free = prop_free_vars(p) - {"v"} - scope
    if free:
        out.append(Violation("closed-qualifier",
                             f"{where}: unbound variable(s) {sorted(free)}"))


def wf_history(h: Hist, scope: set, out: List[Violation],
               in_mu: Optional[Identifier] = None,
               declared: Optional[set] = None):
    declared = set() if declared is None else declared

    def rec_uses(x: Hist) -> set:
        return {i for i in used_idents(x) if i.kind == KIND_REC}

    if isinstance(h, Seq):
        local = set(declared)
        for p in h.parts:
            wf_history(p, scope, out, in_mu, local)
            if isinstance(p, Mu):
                local.add(p.fid)
        return
    if isinstance(h, Choice):
        for p in h.parts:
            wf_history(p, scope, out, in_mu, set(declared))
        return
    if isinstance(h, Mu):
        if contains_new(h.body):
            out.append(Violation(
                "no-new-in-mu",
                f"mu {h.fid.name}: resource creation inside a recursive effect"))
        for a, b, p in h.params:
            _check_qualifier(p, scope, f"mu {h.fid.name} param {a}", out)
        pscope = scope | {a for a, _, _ in h.params}
        wf_history(h.body, pscope, out, in_mu=h.fid,
                   declared=declared | {h.fid})
        return
    if isinstance(h, ActExpr):
        for i, (b, p) in enumerate(h.args):
            _check_qualifier(p, scope, f"action {h.action} arg {i}", out)
        return
    if isinstance(h, ApiExpr):
        if h.api.kind == KIND_REC and h.api not in declared and h.api != in_mu:
            out.append(Violation(
                "rec-ident-scope",
                f"recursive identifier {h.api.name} used before its declaration"))
        for a, b, p in h.args:
            _check_qualifier(p, scope, f"api {h.api.name} arg {a}", out)
        return
    if isinstance(h, CallExpr):
        _check_qualifier(h.phi, scope, "call target", out)
        for i in rec_uses(h):
            if i not in declared and i != in_mu:
                out.append(Violation(
                    "rec-ident-scope",
                    f"recursive identifier {i.name} used before its declaration"))
        for a, b, p in h.args:
            _check_qualifier(p, scope, f"call arg {a}", out)
        return
    if isinstance(h, (GetEvent, ActEvent)):
        return
    if isinstance(h, Eps) or isinstance(h, NewEvent):
        return
    from .histexpr import ApiEvent
    if isinstance(h, ApiEvent):
        if h.api.kind == KIND_REC and h.api not in declared and h.api != in_mu:
            out.append(Violation(
                "rec-ident-scope",
                f"recursive identifier {h.api.name} used before its declaration"))
        return
    raise TypeError(h)


def wf_type(t, scope: set, out: List[Violation]):
    if isinstance(t, ECT):
        _check_qualifier(t.phi, scope, "coverage qualifier", out)
        _check_qualifier(t.psi, scope, "exact qualifier", out)
    elif isinstance(t, OverType):
        _check_qualifier(t.phi, scope, "over qualifier", out)
    elif isinstance(t, Arrow):
        wf_type(t.arg, scope, out)
        wf_type(t.res, scope | {t.param}, out)
    elif isinstance(t, HistoryType):
        wf_type(t.tau, scope, out)
        wf_history(t.effect, scope, out)
    else:
        raise TypeError(t)


def wf_check(gamma: Gamma, subject) -> List[Violation]:
    """All well-formedness clauses; an empty list means ok."""
    out: List[Violation] = []
    scope = {name for name, _ in gamma}
    if isinstance(subject, (ECT, OverType, Arrow, HistoryType)):
        wf_type(subject, scope, out)
    else:
        wf_history(subject, scope, out)
    return out


# ---------------------------------------------------------------------------
# Quantification helpers

def _fa_wrap(x: str, base: Base, phi_x: Prop, phi: Prop) -> Prop:
    shifted = subst_prop(phi_x, {"v": Var(x)})
    if x in prop_free_vars(phi):
        return Forall(x, base, Implies(shifted, phi))
    if shifted == TRUE:
        return phi
    return Implies(Exists(x, base, shifted), phi)


def ex_quantify(x: str, tau_x: ECT, t):
    """Exists: wrap both qualifiers of an ECT, bind pairs' effects, flip to
    ForAll on over-types and arrow arguments."""
    if isinstance(tau_x, OverType):
        tau_x = ECT(tau_x.base, tau_x.phi, tau_x.phi)
    if isinstance(t, ECT):
        return ECT(t.base,
                   _wrap(x, tau_x.base, tau_x.phi, t.phi),
                   _wrap(x, tau_x.base, tau_x.psi, t.psi))
    if isinstance(t, OverType):
        return OverType(t.base, _fa_wrap(x, tau_x.base, tau_x.phi, t.phi))
    if isinstance(t, HistoryType):
        return HistoryType(ex_quantify(x, tau_x, t.tau),
                           bind(x, tau_x.base, tau_x.psi, t.effect))
    if isinstance(t, Arrow):
        return Arrow(t.param, fa_quantify(x, tau_x, t.arg),
                     ex_quantify(x, tau_x, t.res))
    raise TypeError(t)


def fa_quantify(x: str, tau_x: ECT, t):
    if isinstance(tau_x, OverType):
        tau_x = ECT(tau_x.base, tau_x.phi, tau_x.phi)
    if isinstance(t, ECT):
        return ECT(t.base,
                   _fa_wrap(x, tau_x.base, tau_x.phi, t.phi),
                   _fa_wrap(x, tau_x.base, tau_x.psi, t.psi))
    if isinstance(t, OverType):
        return OverType(t.base, _wrap(x, tau_x.base, tau_x.phi, t.phi))
    if isinstance(t, HistoryType):
        return HistoryType(fa_quantify(x, tau_x, t.tau),
                           bind(x, tau_x.base, tau_x.psi, t.effect))
    if isinstance(t, Arrow):
        return Arrow(t.param, ex_quantify(x, tau_x, t.arg),
                     fa_quantify(x, tau_x, t.res))
    raise TypeError(t)


def ex_context(gamma_prime: Gamma, t):
    """Fold ex_quantify right-to-left; function-typed entries contribute
    nothing to qualifiers."""
    for name, ty in reversed(gamma_prime):
        if isinstance(ty, (ECT, OverType)):
            t = ex_quantify(name, ty, t)
    return t


# ---------------------------------------------------------------------------
# The checker

MAX_CTX_ENVS = 20000


class Checker:
    def __init__(self, reg: Registry, uni: Optional[Universe] = None,
                 depth: int = 16, backend=None):
        self.reg = reg
        self.delta = reg.delta
        self.base_uni = uni or reg.make_universe()
        self.depth = depth
        self.backend = backend or logic.BuiltinBackend()
        self.fresh = FreshState(reg)
        self._rec_frames: List[tuple] = []  # (fname, fid, first formal, base)
        self._freshen = 0

    # -- universes and entailment ----------------------------------------

    def universe(self) -> Universe:
        return self.base_uni.with_resources(self.delta.resource_map())

    def ctx_envs(self, gamma: Gamma, needed: set) -> List[dict]:
        """Assignments for the context variables a query mentions (with
        their dependencies), enumerated from psi-projected value sets."""
        uni = self.universe()
        entries = []
        want = set(needed)
        for name, ty in reversed(gamma):
            if name in want and isinstance(ty, (ECT, OverType)):
                q = ty.psi if isinstance(ty, ECT) else ty.phi
                entries.append((name, ty.base, q))
                want |= prop_free_vars(q) - {"v"}
        entries.reverse()
        envs = [{}]
        for name, base, q in entries:
            nxt = []
            for env in envs:
                for val in logic.eval_values(q, base, env, uni, self.reg):
                    nxt.append({**env, name: val})
                if len(nxt) > MAX_CTX_ENVS:
                    raise TypingError("Query", "context enumeration too large")
            envs = nxt
        return envs

    def implies(self, gamma: Gamma, phi1: Prop, phi2: Prop, base: Base) -> bool:
        needed = (prop_free_vars(phi1) | prop_free_vars(phi2)) - {"v"}
        envs = self.ctx_envs(gamma, needed)
        return self.backend.implies(phi1, phi2, base, envs, self.universe(), self.reg)

    def equiv(self, gamma: Gamma, phi1: Prop, phi2: Prop, base: Base) -> bool:
        return (self.implies(gamma, phi1, phi2, base)
                and self.implies(gamma, phi2, phi1, base))

    # -- history algorithms ----------------------------------------------

    def nf(self, h: Hist) -> Hist:
        return to_normal_form(h, self.reg, self.universe())

    def bind_nf(self, gamma: Gamma, h: Hist) -> Hist:
        return self.nf(bind_many(gamma_psi_bindings(gamma), h))

    def sub_hist(self, h1: Hist, h2: Hist) -> bool:
        """Algorithm SubHist: every concatenation of h1 has a SubConc-related
        concatenation in h2.  Inputs must be in Normal Form."""
        from .histexpr import nf_concats
        c1s = nf_concats(h1)
        c2s = nf_concats(h2)
        for c1 in c1s:
            if not any(self.sub_conc(c1, c2) for c2 in c2s):
                return False
        return True

    def sub_conc(self, c1: tuple, c2: tuple) -> bool:
        """Algorithm SubConc on two atom tuples (trailing Eps included)."""
        if len(c1) != len(c2):
            return False
        if not c1:
            return True
        a, b = c1[0], c2[0]
        rest = lambda: self.sub_conc(c1[1:], c2[1:])
        if isinstance(a, Eps) and isinstance(b, Eps):
            return rest()
        if isinstance(a, ActExpr) and isinstance(b, ActExpr):
            if a.action != b.action or len(a.args) != len(b.args):
                return False
            for (b1, p1), (b2, p2) in zip(a.args, b.args):
                if b1 != b2 or not self.implies([], p1, p2, b1):
                    return False
            return rest()
        if isinstance(a, NewEvent) and isinstance(b, NewEvent):
            return a.rkind == b.rkind and a.ident == b.ident and rest()
        if isinstance(a, GetEvent) and isinstance(b, GetEvent):
            return a.api == b.api and rest()
        if isinstance(a, CallExpr) and isinstance(b, CallExpr):
            if len(a.args) != len(b.args):
                return False
            if not self.implies([], a.phi, b.phi, "api"):
                return False
            for (_, b1, p1), (_, b2, p2) in zip(a.args, b.args):
                if b1 != b2 or not self.implies([], p1, p2, b1):
                    return False
            return rest()
        if isinstance(a, Mu) and isinstance(b, Mu):
            if len(a.params) != len(b.params):
                return False
            for (_, b1, p1), (_, b2, p2) in zip(a.params, b.params):
                if b1 != b2 or not self.implies([], p1, p2, b1):
                    return False
            body1 = bind_many([(n, t, p) for n, t, p in a.params], a.body)
            body2 = bind_many([(n, t, p) for n, t, p in b.params], b.body)
            body2 = subst_identifier(body2, a.fid, b.fid)
            try:
                if not self.sub_hist(self.nf(body1), self.nf(body2)):
                    return False
            except Exception:
                return False
            c2r = tuple(subst_identifier(Seq(c2[1:]), a.fid, b.fid).parts) \
                if len(c2) > 1 else ()
            return self.sub_conc(c1[1:], c2r)
        return False

    def hist_conj(self, gamma: Gamma, h1: Hist, h2: Hist) -> Optional[Hist]:
        """Algorithm HistConj; None is the bottom result (no common part)."""
        from .histexpr import nf_concats
        h1n = self.bind_nf(gamma, h1)
        h2n = self.bind_nf(gamma, h2)
        picked = []
        for c1 in nf_concats(h1n):
            for c2 in nf_concats(h2n):
                got = None
                if self.sub_conc(c1, c2):
                    got = Seq(c1)
                elif self.sub_conc(c2, c1):
                    got = Seq(c2)
                if got is not None and got not in picked:
                    picked.append(got)
        if not picked:
            return None
        picked.sort(key=repr)
        return picked[0] if len(picked) == 1 else Choice(tuple(picked))

    # -- subtyping --------------------------------------------------------

    def subtype_check(self, gamma: Gamma, pi1: HistoryType, pi2: HistoryType) -> bool:
        try:
            self.require_subtype(gamma, pi1, pi2)
            return True
        except TypingError:
            return False

    def require_subtype(self, gamma: Gamma, pi1: HistoryType, pi2: HistoryType):
        self._sub_tau(gamma, pi1.tau, pi2.tau)
        h1 = self.bind_nf(gamma, pi1.effect)
        h2 = self.bind_nf(gamma, pi2.effect)
        if not self.sub_hist(h1, h2):
            raise TypingError("SubHist", "effect inclusion failed")

    def _sub_tau(self, gamma: Gamma, t1, t2):
        if isinstance(t1, ECT) and isinstance(t2, ECT):
            if t1.base != t2.base:
                raise TypingError("SubUBase", "base type mismatch")
            if not self.implies(gamma, t2.phi, t1.phi, t1.base):
                raise TypingError("SubUBase phi-coverage",
                                  "coverage qualifier not included")
            if not self.equiv(gamma, t1.psi, t2.psi, t1.base):
                raise TypingError("SubUBase psi-equivalence",
                                  "exact qualifiers differ")
            return
        if isinstance(t1, OverType) and isinstance(t2, OverType):
            if t1.base != t2.base:
                raise TypingError("SubOBase", "base type mismatch")
            if not self.implies(gamma, t1.phi, t2.phi, t1.base):
                raise TypingError("SubOBase", "over qualifier not included")
            return
        if isinstance(t1, Arrow) and isinstance(t2, Arrow):
            t2r = t2
            if t1.param != t2.param:
                t2r = rename_type_var(t2, t2.param, t1.param)
            self._sub_tau(gamma, t2r.arg, t1.arg)
            g2 = gamma + [(t1.param, t2r.arg)]
            r1, r2 = t1.res, t2r.res
            if isinstance(r1, HistoryType) != isinstance(r2, HistoryType):
                raise TypingError("SubArr", "function shape mismatch")
            if isinstance(r1, HistoryType):
                self.require_subtype(g2, r1, r2)
            else:
                self._sub_tau(g2, r1, r2)
            return
        raise TypingError("Sub", f"incompatible type shapes "
                                 f"{type(t1).__name__} / {type(t2).__name__}")

    # -- disjunction / conjunction ----------------------------------------

    def type_disj(self, gamma: Gamma, t1, t2):
        if isinstance(t1, ECT) and isinstance(t2, ECT) and t1.base == t2.base:
            return ECT(t1.base, disj(t1.phi, t2.phi), disj(t1.psi, t2.psi))
        if isinstance(t1, OverType) and isinstance(t2, OverType) and t1.base == t2.base:
            return OverType(t1.base, conj(t1.phi, t2.phi))
        if isinstance(t1, Arrow) and isinstance(t2, Arrow):
            t2r = rename_type_var(t2, t2.param, t1.param) if t1.param != t2.param else t2
            return Arrow(t1.param, self.type_conj(gamma, t1.arg, t2r.arg),
                         self.type_disj(gamma, t1.res, t2r.res))
        if isinstance(t1, HistoryType) and isinstance(t2, HistoryType):
            return HistoryType(self.type_disj(gamma, t1.tau, t2.tau),
                               choice(t1.effect, t2.effect))
        raise TypingError("Disjunction", "type shapes do not match")

    def type_conj(self, gamma: Gamma, t1, t2):
        if isinstance(t1, ECT) and isinstance(t2, ECT) and t1.base == t2.base:
            return ECT(t1.base, conj(t1.phi, t2.phi), conj(t1.psi, t2.psi))
        if isinstance(t1, OverType) and isinstance(t2, OverType) and t1.base == t2.base:
            return OverType(t1.base, disj(t1.phi, t2.phi))
        if isinstance(t1, Arrow) and isinstance(t2, Arrow):
            t2r = rename_type_var(t2, t2.param, t1.param) if t1.param != t2.param else t2
            return Arrow(t1.param, self.type_disj(gamma, t1.arg, t2r.arg),
                         self.type_conj(gamma, t1.res, t2r.res))
        if isinstance(t1, HistoryType) and isinstance(t2, HistoryType):
            h = self.hist_conj(gamma, t1.effect, t2.effect)
            if h is None:
                raise TypingError("Conjunction", "effects have no common part")
            return HistoryType(self.type_conj(gamma, t1.tau, t2.tau), h)
        raise TypingError("Conjunction", "type shapes do not match")

    # -- synthesis ---------------------------------------------------------

    def fresh_name(self, hint: str) -> str:
        self._freshen += 1
        return f"{hint}%{self._freshen}"

    def synthesize(self, gamma: Gamma, term: Term) -> HistoryType:
        if isinstance(term, Const):
            base = term.base
            if base is None:
                raise TypingError("SynConst", "constant without a base type")
            q = v_eq(term.value)
            return HistoryType(ECT(base, q, q), EPS)
        if isinstance(term, VarT):
            ty = lookup(gamma, term.name)
            if ty is None:
                raise TypingError("SynVar", f"unbound variable {term.name}")
            if isinstance(ty, Arrow):
                return HistoryType(ty, EPS)
            q = v_eq(Var(term.name))
            return HistoryType(ECT(ty.base, q, q), EPS)
        if isinstance(term, Err):
            return HistoryType(ECT(term.base, FALSE, FALSE),
                               ActEvent("err", ()))
        if isinstance(term, Lam):
            return self._syn_lam(gamma, term)
        if isinstance(term, Let):
            return self._syn_let(gamma, term)
        if isinstance(term, LetApp):
            return self._syn_letapp(gamma, term)
        if isinstance(term, LetNew):
            return self._syn_letnew(gamma, term)
        if isinstance(term, LetGet):
            return self._syn_letget(gamma, term)
        if isinstance(term, LetRec):
            return self._syn_letrec(gamma, term)
        if isinstance(term, Match):
            return self._syn_match(gamma, term)
        raise TypingError("Syn", f"cannot synthesize {type(term).__name__}")

    def _syn_lam(self, gamma: Gamma, term: Lam) -> HistoryType:
        over = OverType(term.base, term.phi)
        pi = self.synthesize(gamma + [(term.param, over)], term.body)
        arrow = Arrow(term.param, over, pi)
        return HistoryType(flatten_arrow(arrow), EPS)

    def _compose(self, gamma_prime: Gamma, events: Hist, body_pi: HistoryType,
                 xname: str, tau_x) -> HistoryType:
        """The shared tail of every let rule: Gamma'' = Gamma', x:tau_x;
        Ex-quantify the result type, bind effects, sequence."""
        gamma2 = gamma_prime + [(xname, tau_x)]
        tau_prime = ex_context(gamma2, body_pi.tau)
        h_event = bind_many(gamma_psi_bindings(gamma_prime), events)
        h_body = bind_many(gamma_psi_bindings(gamma2), body_pi.effect)
        return HistoryType(tau_prime, seq(h_event, h_body))

    def _syn_let(self, gamma: Gamma, term: Let) -> HistoryType:
        pi_rhs = self.synthesize(gamma, term.rhs)
        tau_x = pi_rhs.tau
        pi_body = self.synthesize(gamma + [(term.var, tau_x)], term.body)
        gamma2 = [(term.var, tau_x)]
        tau_prime = ex_context(gamma2, pi_body.tau)
        h_body = bind_many(gamma_psi_bindings(gamma2), pi_body.effect)
        return HistoryType(tau_prime, seq(pi_rhs.effect, h_body))

    def _syn_letnew(self, gamma: Gamma, term: LetNew) -> HistoryType:
        if term.rkind not in self.reg.resource_kinds:
            raise TypingError("SynNew", f"unknown resource kind {term.rkind}")
        x_id = next_delta(self.fresh, term.rkind)
        tau_x = ECT(term.rkind, v_eq(x_id), v_eq(x_id))
        pi_body = self.synthesize(gamma + [(term.var, tau_x)], term.body)
        gamma2 = [(term.var, tau_x)]
        tau_prime = ex_context(gamma2, pi_body.tau)
        h_body = bind_many(gamma_psi_bindings(gamma2), pi_body.effect)
        return HistoryType(tau_prime,
                           seq(NewEvent(term.rkind, x_id), h_body))

    def _syn_letget(self, gamma: Gamma, term: LetGet) -> HistoryType:
        fid = self.delta.by_name.get(term.api)
        if fid is None:
            raise TypingError("SynGet", f"api {term.api} not in Delta")
        tau_x = ECT("api", v_eq(fid), v_eq(fid))
        pi_body = self.synthesize(gamma + [(term.var, tau_x)], term.body)
        gamma2 = [(term.var, tau_x)]
        tau_prime = ex_context(gamma2, pi_body.tau)
        h_body = bind_many(gamma_psi_bindings(gamma2), pi_body.effect)
        return HistoryType(tau_prime, seq(GetEvent(fid), h_body))

    # value views -----------------------------------------------------------

    def value_qterm(self, v) -> Optional[QTerm]:
        if isinstance(v, Const):
            return Lit(v.value)
        if isinstance(v, VarT):
            return Var(v.name)
        return None

    def value_ect(self, gamma: Gamma, v) -> ECT:
        pi = self.synthesize(gamma, v)
        if not isinstance(pi.tau, ECT):
            raise TypingError("SynApp", "expected a base-typed value")
        return pi.tau

    def _freshen_sig(self, params, result_phi_psi):
        """Rename signature formals apart from program variables; returns
        (fresh params, substitution mapping)."""
        mapping: Dict[str, QTerm] = {}
        fresh_params = []
        for name, base, phi in params:
            fname = self.fresh_name(name)
            mapping[name] = Var(fname)
            fresh_params.append((fname, base, phi))
        fresh_params = [(n, b, subst_prop(p, mapping)) for n, b, p in fresh_params]
        return fresh_params, mapping

    def _syn_letapp(self, gamma: Gamma, term: LetApp) -> HistoryType:
        head = term.head
        if isinstance(head, VarT):
            name = head.name
            if lookup(gamma, name) is None:
                if name in self.reg.actions:
                    return self._syn_action(gamma, term, self.reg.actions[name])
                if name in self.reg.operators:
                    return self._syn_op(gamma, term, self.reg.operators[name])
                raise TypingError("SynApp", f"unknown head {name}")
            ty = lookup(gamma, name)
            if isinstance(ty, ECT) and ty.base == "api":
                return self._syn_api_app(gamma, term, ty)
            if isinstance(ty, Arrow):
                return self._syn_fun_app(gamma, term, ty)
            raise TypingError("SynApp", f"{name} is not applicable")
        if isinstance(head, Lam):
            pi = self.synthesize(gamma, head)
            return self._syn_fun_app(gamma, term, pi.tau)
        raise TypingError("SynApp", f"bad application head {head!r}")

    def _args_gamma(self, gamma: Gamma, args, params) -> Gamma:
        """Gamma' rows a_i : {v = u_i /\\ phi_i}, with base-shape checks."""
        if len(args) != len(params):
            raise TypingError("SynApp", "argument count mismatch")
        rows: Gamma = []
        for u, (pname, pbase, pphi) in zip(args, params):
            ect = self.value_ect(gamma + rows, u)
            # int and nat share a value shape; the qualifier (evaluated over
            # the parameter's own base universe) carries the range constraint
            if ect.base != pbase and not ({ect.base, pbase} <= {"int", "nat"}):
                raise TypingError("SynApp",
                                  f"argument {pname}: expected {pbase}, got {ect.base}")
            uterm = self.value_qterm(u)
            q = conj(v_eq(uterm), pphi)
            rows.append((pname, ECT(pbase, q, q)))
        return rows

    def _syn_op(self, gamma: Gamma, term: LetApp, sig: OpSig) -> HistoryType:
        params, mapping = self._freshen_sig(sig.params, None)
        rows = self._args_gamma(gamma, term.args, params)
        tau_x = ECT(sig.result.base,
                    subst_prop(sig.result.phi, mapping),
                    subst_prop(sig.result.psi, mapping))
        pi_body = self.synthesize(gamma + rows + [(term.var, tau_x)], term.body)
        return self._compose(rows, EPS, pi_body, term.var, tau_x)

    def _syn_action(self, gamma: Gamma, term: LetApp, sig: OpSig) -> HistoryType:
        params, mapping = self._freshen_sig(sig.params, None)
        rows = self._args_gamma(gamma, term.args, params)
        event = ActExpr(sig.name,
                        tuple((b, v_eq(Var(n))) for n, b, _ in params))
        tau_x = ECT(sig.result.base,
                    subst_prop(sig.result.phi, mapping),
                    subst_prop(sig.result.psi, mapping))
        pi_body = self.synthesize(gamma + rows + [(term.var, tau_x)], term.body)
        return self._compose(rows, event, pi_body, term.var, tau_x)

    def _syn_api_app(self, gamma: Gamma, term: LetApp, fty: ECT) -> HistoryType:
        closed = ex_context(gamma, fty)
        uni = self.universe()
        api = []
        for fid in sorted(self.delta.apis):
            phi = subst_prop(closed.psi, {"v": Lit(fid)})
            verdict = logic.try_eval_closed(phi, self.reg, uni)
            if verdict:
                api.append(fid)
        if not api:
            raise TypingError("SynAppAPI", "no api satisfies the head qualifier")
        sig = self.delta.apis[api[0]]
        params, mapping = self._freshen_sig(sig.params, None)
        # the decreasing-argument conjunct for recursive self-calls
        frame = self._frame_for(gamma, term.head)
        if frame is not None and params:
            fname, fid0, first_formal, fbase = frame
            if fid0 in api:
                n0, b0, p0 = params[0]
                params = ((n0, b0, conj(p0, prec_prop(b0, first_formal))),) \
                    + tuple(params[1:])
        rows = self._args_gamma(gamma, term.args, params)
        # event arg slots keep the signature's own formal names: unfolding a
        # recursive effect binds the mu body through exactly these names
        call_args = []
        for (oname, _, _), (pname, pbase, pphi), row in zip(sig.params, params, rows):
            call_args.append((oname, pbase, row[1].phi))
        event = CallExpr(closed.psi, tuple(call_args))
        tau_x = None
        for fid in api:
            s = self.delta.apis[fid]
            ret = ECT(s.ret.base, subst_prop(s.ret.phi, mapping),
                      subst_prop(s.ret.psi, mapping))
            tau_x = ret if tau_x is None else self.type_disj(gamma, tau_x, ret)
        pi_body = self.synthesize(gamma + rows + [(term.var, tau_x)], term.body)
        return self._compose(rows, event, pi_body, term.var, tau_x)

    def _frame_for(self, gamma: Gamma, head) -> Optional[tuple]:
        if not (isinstance(head, VarT) and self._rec_frames):
            return None
        for frame in reversed(self._rec_frames):
            if frame[0] == head.name:
                return frame
        # a rebound alias still points at the api identifier
        ty = lookup(gamma, head.name)
        if isinstance(ty, ECT):
            for frame in reversed(self._rec_frames):
                if ty.psi == v_eq(frame[1]):
                    return frame
        return None

    def _syn_fun_app(self, gamma: Gamma, term: LetApp, kappa: Arrow) -> HistoryType:
        params, tail = arrow_params(kappa)
        if len(term.args) > len(params):
            raise TypingError("SynAppFun", "too many arguments")
        rows: Gamma = []
        mapping: Dict[str, QTerm] = {}
        for u, (pname, pty) in zip(term.args, params):
            fname = self.fresh_name(pname)
            if isinstance(pty, OverType):
                ect = self.value_ect(gamma + rows, u)
                if ect.base != pty.base and not ({ect.base, pty.base} <= {"int", "nat"}):
                    raise TypingError("SynAppFun",
                                      f"argument {pname}: expected {pty.base}")
                uterm = self.value_qterm(u)
                q = conj(v_eq(uterm), subst_prop(pty.phi, mapping))
                rows.append((fname, ECT(pty.base, q, q)))
                mapping[pname] = Var(fname)
            elif isinstance(pty, Arrow):
                pi_arg = self.synthesize(gamma, u)
                want = subst_type(pty, mapping)
                self._sub_tau(gamma, pi_arg.tau, want)
                mapping.pop(pname, None)
            else:
                raise TypingError("SynAppFun", "unsupported parameter type")
        if len(term.args) < len(params):
            remaining = make_arrow(
                [(n, subst_type(t, mapping)) for n, t in params[len(term.args):]],
                subst_pair(tail, mapping))
            pi_body = self.synthesize(gamma + rows + [(term.var, remaining)],
                                      term.body)
            return self._compose(rows, EPS, pi_body, term.var, remaining)
        # last argument: activate the latent effect with fresh identifiers
        tail = subst_pair(tail, mapping)
        latent = tail.effect
        theta = {}
        latent_renamed = latent
        for x_id in sorted(_new_idents(latent)):
            y_id = next_delta(self.fresh, x_id.kind)
            theta[x_id] = y_id
            latent_renamed = subst_identifier(latent_renamed, y_id, x_id)
        tau_x = tail.tau
        for x_id, y_id in theta.items():
            tau_x = subst_type_ident(tau_x, x_id, y_id)
        pi_body = self.synthesize(gamma + rows + [(term.var, tau_x)], term.body)
        return self._compose(rows, latent_renamed, pi_body, term.var, tau_x)

    def _syn_letrec(self, gamma: Gamma, term: LetRec) -> HistoryType:
        params = term.params
        ret = term.ret
        annotated_pair = isinstance(ret, HistoryType)
        ret_tau = ret.tau if annotated_pair else ret
        if not isinstance(ret_tau, ECT):
            raise TypingError("SynFix", "recursive return annotation must be "
                                        "a base-typed coverage type")
        sig_params = tuple((n, b, p) for n, b, p in params)
        fid = next_delta(self.fresh, signature=(sig_params, ret_tau))
        over_rows: Gamma = [(n, OverType(b, p)) for n, b, p in params]
        f_ect = ECT("api", v_eq(fid), v_eq(fid))
        g_inner = gamma + [(term.fname, f_ect)] + over_rows
        self._rec_frames.append((term.fname, fid, params[0][0], params[0][1]))
        try:
            pi_fb = self.synthesize(g_inner, term.fbody)
        finally:
            self._rec_frames.pop()
        # synthesized return type must agree with the annotation
        self._sub_tau(g_inner, pi_fb.tau, ret_tau)
        if annotated_pair:
            h1 = self.bind_nf(g_inner, pi_fb.effect)
            h2 = self.bind_nf(g_inner, ret.effect)
            if not self.sub_hist(h1, h2):
                raise TypingError("ChkFix SubHist",
                                  "body effect exceeds the annotated effect")
            body_h = ret.effect
        else:
            body_h = pi_fb.effect
        mu = Mu(fid, sig_params, body_h)
        # the latent effect: declare the recursion, then call it with the
        # (still unbound) parameter variables; application binds them
        entry = CallExpr(v_eq(fid),
                         tuple((n, b, conj(v_eq(Var(n)), p))
                               for n, b, p in sig_params))
        tail = HistoryType(ret_tau, seq(mu, entry))
        kappa = make_arrow([(n, OverType(b, p)) for n, b, p in params], tail)
        pi_body = self.synthesize(gamma + [(term.fname, kappa)], term.body)
        return pi_body

    def _syn_match(self, gamma: Gamma, term: Match) -> HistoryType:
        scrut = self.value_ect(gamma, term.scrutinee)
        uterm = self.value_qterm(term.scrutinee)
        taus = []
        effects = []
        for br in term.branches:
            binders, psi_i = self._pattern_info(br.pattern, scrut.base)
            aname = self.fresh_name("m")
            rows: Gamma = [(n, ECT(b, TRUE, TRUE)) for n, b in binders]
            q = conj(v_eq(uterm), psi_i)
            rows.append((aname, ECT(scrut.base, q, q)))
            pi_i = self.synthesize(gamma + rows, br.body)
            taus.append(ex_context(rows, pi_i.tau))
            effects.append(bind_many(gamma_psi_bindings(rows), pi_i.effect))
        tau = taus[0]
        for t in taus[1:]:
            tau = self.type_disj(gamma, tau, t)
        return HistoryType(tau, choice(*effects))

    def _pattern_info(self, pat, base: Base):
        if isinstance(pat, PatConst):
            return [], v_eq(pat.value)
        if isinstance(pat, PatCtor):
            if pat.ctor == "Nil":
                if pat.binders:
                    raise TypingError("SynMatch", "Nil takes no binders")
                return [], v_eq(())
            if pat.ctor == "Cons":
                if len(pat.binders) != 2 or not (isinstance(base, tuple) and base[0] == "list"):
                    raise TypingError("SynMatch", "Cons pattern shape")
                h, t = pat.binders
                return ([(h, base[1]), (t, base)],
                        v_eq(App("cons", (Var(h), Var(t)))))
            if pat.ctor == "Leaf":
                return [], v_eq(("leaf",))
            if pat.ctor == "Node":
                if len(pat.binders) != 3 or not (isinstance(base, tuple) and base[0] == "tree"):
                    raise TypingError("SynMatch", "Node pattern shape")
                r, l, rr = pat.binders
                return ([(r, base[1]), (l, base), (rr, base)],
                        v_eq(App("node", (Var(r), Var(l), Var(rr)))))
            raise TypingError("SynMatch", f"unknown constructor {pat.ctor}")
        raise TypingError("SynMatch", f"bad pattern {pat!r}")

    # -- checking ----------------------------------------------------------

    def check(self, gamma: Gamma, term: Term, expected):
        """Bidirectional check; raises TypingError with the failing premise.

        A bare type (no effect component) constrains the value side only."""
        if not isinstance(expected, HistoryType):
            if isinstance(term, Lam) and isinstance(expected, Arrow):
                self.check(gamma, term, HistoryType(expected, EPS))
                return
            pi = self.synthesize(gamma, term)
            self._sub_tau(gamma, pi.tau, expected)
            return
        if isinstance(term, Lam) and isinstance(expected.tau, Arrow):
            arrow = expected.tau
            if erase_type(arrow.arg) != term.base and not isinstance(arrow.arg, Arrow):
                raise TypingError("ChkFun", "parameter base type mismatch")
            arg = arrow.arg
            if arrow.param != term.param:
                arrow = rename_type_var(arrow, arrow.param, term.param)
            g2 = gamma + [(term.param, arrow.arg)]
            res = arrow.res
            if isinstance(res, HistoryType):
                self.check(g2, term.body, res)
            else:
                self.check(g2, term.body, HistoryType(res, EPS))
            return
        if isinstance(term, Match) and isinstance(expected.tau, ECT):
            pi = self.synthesize(gamma, term)
            self.require_subtype(gamma, pi, expected)
            return
        # ChkSub: synthesize, then subtype
        pi = self.synthesize(gamma, term)
        self.require_subtype(gamma, pi, expected)


# ---------------------------------------------------------------------------
# Helpers over types

def flatten_arrow(a: Arrow):
    """Merge nested effect-free function results so multi-argument functions
    carry a single trailing pair."""
    res = a.res
    if isinstance(res, HistoryType) and isinstance(res.tau, Arrow) \
            and isinstance(res.effect, Eps):
        res = flatten_arrow(res.tau)
    elif isinstance(res, Arrow):
        res = flatten_arrow(res)
    return Arrow(a.param, a.arg, res)


def subst_type(t, mapping: Dict[str, QTerm]):
    if not mapping:
        return t
    if isinstance(t, ECT):
        return ECT(t.base, subst_prop(t.phi, mapping), subst_prop(t.psi, mapping))
    if isinstance(t, OverType):
        return OverType(t.base, subst_prop(t.phi, mapping))
    if isinstance(t, Arrow):
        inner = {k: v for k, v in mapping.items() if k != t.param}
        return Arrow(t.param, subst_type(t.arg, mapping), subst_type(t.res, inner))
    if isinstance(t, HistoryType):
        return HistoryType(subst_type(t.tau, mapping),
                           subst_hist_vars(t.effect, mapping))
    raise TypeError(t)


def subst_pair(p: HistoryType, mapping) -> HistoryType:
    return subst_type(p, mapping)


def subst_hist_vars(h: Hist, mapping: Dict[str, QTerm]) -> Hist:
    from .histexpr import map_children, ActExpr as AE, ApiExpr as PE, CallExpr as CE, Mu as M
    if isinstance(h, AE):
        return AE(h.action, tuple((b, subst_prop(p, mapping)) for b, p in h.args))
    if isinstance(h, PE):
        return PE(h.api, tuple((a, b, subst_prop(p, mapping)) for a, b, p in h.args),
                  h.pending)
    if isinstance(h, CE):
        return CE(subst_prop(h.phi, mapping),
                  tuple((a, b, subst_prop(p, mapping)) for a, b, p in h.args))
    if isinstance(h, M):
        inner = {k: v for k, v in mapping.items()
                 if k not in {n for n, _, _ in h.params}}
        return M(h.fid, tuple((a, b, subst_prop(p, mapping)) for a, b, p in h.params),
                 subst_hist_vars(h.body, inner))
    return map_children(h, lambda p: subst_hist_vars(p, mapping))


def rename_type_var(t, old: str, new: str):
    return subst_type(t, {old: Var(new)}) if old != new else t


def subst_type_ident(t, old: Identifier, new: Identifier):
    from .syntax import subst_prop_ident
    if isinstance(t, ECT):
        return ECT(t.base, subst_prop_ident(t.phi, old, new),
                   subst_prop_ident(t.psi, old, new))
    if isinstance(t, OverType):
        return OverType(t.base, subst_prop_ident(t.phi, old, new))
    if isinstance(t, Arrow):
        return Arrow(t.param, subst_type_ident(t.arg, old, new),
                     subst_type_ident(t.res, old, new))
    if isinstance(t, HistoryType):
        return HistoryType(subst_type_ident(t.tau, old, new),
                           subst_identifier(t.effect, new, old))
    raise TypeError(t)


def _new_idents(h: Hist) -> set:
    out = set()

    def walk(x):
        if isinstance(x, NewEvent):
            out.add(x.ident)
        elif isinstance(x, (Seq, Choice)):
            for p in x.parts:
                walk(p)
        elif isinstance(x, Mu):
            walk(x.body)

    walk(h)
    return out


def prec_prop(base: Base, formal: str) -> Prop:
    """The decreasing-argument relation at recursive call sites."""
    if base in ("nat", "int"):
        return conj(Atom(App("<", (V, Var(formal)))),
                    Atom(App(">=", (V, Lit(0)))) if base == "int" else TRUE)
    if isinstance(base, tuple) and base[0] in ("list", "tree"):
        return Atom(App("shorter", (V, Var(formal))))
    raise TypingError("SynFix", f"no decreasing relation for base {base!r}")
