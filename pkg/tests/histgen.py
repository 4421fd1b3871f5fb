"""Seeded random generation of history expressions for soundness tests.

Every qualifier is drawn from a pool of propositions that are satisfiable
over the small test universe, so each event expression denotes at least one
concrete event.  Generated expressions are pushed through Normal Form
conversion before use.
"""
import random

from histcov.denote import DenoteError, denote
from histcov.histexpr import (ActExpr, CallExpr, Choice, EPS, Mu, NFConversionError,
                              Seq, choice, seq, to_normal_form)
from histcov.syntax import (And, App, Atom, Lit, Or, TRUE, Var, conj, disj, v_eq)


def _cmp(op, rhs):
    return Atom(App(op, (Var("v"), Lit(rhs))))


# Each entry is satisfiable over int values [-4 .. 4].  Small value sets
# keep brute-force denotations cheap; a couple of wide ones add variety.
SMALL_POOL = [
    _cmp("==", 0),
    _cmp("==", 1),
    _cmp("==", -2),
    disj(_cmp("==", 3), _cmp("==", -3)),
    conj(_cmp(">=", -1), _cmp("<=", 1)),
    conj(_cmp(">=", 0), _cmp("<=", 2)),
]
WIDE_POOL = [
    conj(_cmp(">", -3), _cmp("<", 3)),
    _cmp(">=", 0),
]
INT_POOL = SMALL_POOL + WIDE_POOL

# Weaker-or-equal replacements by pool index, used to build related pairs.
# Replacements stay narrow so weakened histories remain cheap to denote.
WEAKEN = {
    0: [conj(_cmp(">=", -1), _cmp("<=", 1)), conj(_cmp(">=", 0), _cmp("<=", 2))],
    1: [conj(_cmp(">=", 0), _cmp("<=", 2)), conj(_cmp(">=", -1), _cmp("<=", 1))],
    2: [conj(_cmp(">=", -3), _cmp("<=", -1))],
    3: [disj(_cmp("==", 3), disj(_cmp("==", -3), _cmp("==", 0)))],
    4: [conj(_cmp(">=", -1), _cmp("<=", 2))],
    5: [conj(_cmp(">=", 0), _cmp("<=", 3))],
}

ACTIONS = ["a", "b", "c"]


class HistGen:
    """Random well-shaped histories over int-only event slots."""

    def __init__(self, seed, reg, max_depth=2, actions=None):
        self.rng = random.Random(seed)
        self.reg = reg
        self.max_depth = max_depth
        self.actions = list(actions) if actions else list(ACTIONS)
        self.fresh = 0

    def qual(self):
        if self.rng.random() < 0.8:
            return self.rng.choice(SMALL_POOL)
        return self.rng.choice(WIDE_POOL)

    def event(self):
        act = self.rng.choice(self.actions)
        nargs = 1 if self.rng.random() < 0.85 else 2
        return ActExpr(act, tuple(("int", self.qual()) for _ in range(nargs)))

    def mu(self, depth):
        self.fresh += 1
        fid = self.reg.intern_ident(f"G9{self.fresh}", "rec")
        param = ("n", "int", TRUE)
        inner = self.hist(depth + 1, in_mu=True)
        call = CallExpr(v_eq(fid), (("n", "int", self.qual()),))
        body = choice(EPS, seq(inner, call))
        entry = CallExpr(v_eq(fid), (("n", "int", self.qual()),))
        return seq(Mu(fid, (param,), body), entry)

    def hist(self, depth=0, in_mu=False):
        roll = self.rng.random()
        if depth >= self.max_depth or roll < 0.35:
            return self.event()
        if roll < 0.55:
            return seq(self.hist(depth + 1, in_mu), self.hist(depth + 1, in_mu))
        if roll < 0.75:
            return choice(self.hist(depth + 1, in_mu), self.hist(depth + 1, in_mu))
        if roll < 0.9 or in_mu:
            return seq(self.event(), self.event())
        return self.mu(depth)

    def nf_hist(self, universe, max_histories=3000):
        """A random history already in Normal Form; retries on conversion
        failures caused by unshiftable recursion and on candidates whose
        brute-force denotation would be too large for oracle comparisons."""
        for _ in range(50):
            h = self.hist()
            try:
                nf = to_normal_form(h, self.reg, universe)
                if len(dset(nf, universe, self.reg,
                            max_states=20 * max_histories)) <= max_histories:
                    return nf
            except (NFConversionError, DenoteError):
                continue
        raise RuntimeError("could not produce a normal form in 50 attempts")


_DSET_CACHE = {}


def dset(h, universe, reg, depth=3, max_states=500_000):
    """Memoized brute-force denotation as a set of terminal histories."""
    key = (h, universe.cache_key(), depth)
    if key not in _DSET_CACHE:
        _DSET_CACHE[key] = denote(h, None, universe, reg, depth=depth,
                                  max_states=max_states).as_set()
    return _DSET_CACHE[key]


def requalify(h, rng, p_swap=0.5):
    """Same skeleton, freshly drawn event qualifiers."""
    def draw(p):
        return rng.choice(INT_POOL) if rng.random() < p_swap else p
    if isinstance(h, ActExpr):
        return ActExpr(h.action, tuple((b, draw(p)) for b, p in h.args))
    if isinstance(h, CallExpr):
        return CallExpr(h.phi, tuple((n, b, draw(p)) for n, b, p in h.args))
    if isinstance(h, Mu):
        return Mu(h.fid, h.params, requalify(h.body, rng, p_swap))
    if isinstance(h, Seq):
        return Seq(tuple(requalify(p, rng, p_swap) for p in h.parts))
    if isinstance(h, Choice):
        return Choice(tuple(requalify(p, rng, p_swap) for p in h.parts))
    return h


def weaken_prop(p, rng):
    idx = INT_POOL.index(p) if p in INT_POOL else None
    if idx in WEAKEN:
        return rng.choice(WEAKEN[idx])
    return TRUE


def weaken_hist(h, rng, p_weaken=0.5):
    """Pointwise weakening of event qualifiers: the result should denote a
    superset of the input."""
    if isinstance(h, ActExpr):
        args = tuple((b, weaken_prop(p, rng) if rng.random() < p_weaken else p)
                     for b, p in h.args)
        return ActExpr(h.action, args)
    if isinstance(h, CallExpr):
        args = tuple((n, b, weaken_prop(p, rng) if rng.random() < p_weaken else p)
                     for n, b, p in h.args)
        return CallExpr(h.phi, args)
    if isinstance(h, Mu):
        return Mu(h.fid, h.params, weaken_hist(h.body, rng, p_weaken))
    if isinstance(h, Seq):
        return Seq(tuple(weaken_hist(p, rng, p_weaken) for p in h.parts))
    if isinstance(h, Choice):
        return Choice(tuple(weaken_hist(p, rng, p_weaken) for p in h.parts))
    return h
