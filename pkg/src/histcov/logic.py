"""Qualifier evaluation and entailment.

The default backend enumerates finite universes; an optional backend talks
SMT-LIB v2 to an external solver process.  All answers are relative to the
configured universe.
"""
from __future__ import annotations

import subprocess
from typing import Any, Dict, Iterable, List, Optional, Tuple

from .syntax import (And, App, Atom, Base, Exists, Forall, Iff, Implies, Lit,
                     Not, Or, Prop, QTerm, Var, prop_free_vars)
from .registry import Registry, Universe


class EvalError(Exception):
    pass


class UnboundVariable(EvalError):
    pass


class SolverError(Exception):
    pass


class SolverTimeout(SolverError):
    pass


# ---------------------------------------------------------------------------
# Term evaluation


class _Undefined:
    """Result of a partial operation outside its domain (e.g. mod by zero).
    Propagates through operators; atoms containing it are false."""

    def __repr__(self):
        return "UNDEF"


UNDEF = _Undefined()


def eval_term(t: QTerm, env: Dict[str, Any], uni: Universe, reg: Registry):
    if isinstance(t, Lit):
        return t.value
    if isinstance(t, Var):
        if t.name not in env:
            raise UnboundVariable(t.name)
        return env[t.name]
    if isinstance(t, App):
        args = [eval_term(a, env, uni, reg) for a in t.args]
        if any(a is UNDEF for a in args):
            return UNDEF
        op = t.op
        if op == "+":
            return args[0] + args[1]
        if op == "-":
            return args[0] - args[1]
        if op == "*":
            return args[0] * args[1]
        if op == "mod":
            return args[0] % args[1] if args[1] != 0 else UNDEF
        if op == "==":
            return args[0] == args[1]
        if op == "!=":
            return args[0] != args[1]
        if op == "<":
            return args[0] < args[1]
        if op == "<=":
            return args[0] <= args[1]
        if op == ">":
            return args[0] > args[1]
        if op == ">=":
            return args[0] >= args[1]
        if op == "cons":
            return (args[0],) + tuple(args[1])
        if op == "node":
            return ("node", args[0], args[1], args[2])
        mp = reg.method_predicates.get(op)
        if mp is not None:
            if len(args) != mp.arity:
                raise EvalError(f"{op} expects {mp.arity} arguments")
            return mp.fn(*args)
        raise EvalError(f"unknown operator {op}")
    raise TypeError(t)


# ---------------------------------------------------------------------------
# Proposition evaluation (with memoization)

_prop_cache: Dict[tuple, bool] = {}


def _env_key(p: Prop, env: Dict[str, Any]):
    fv = prop_free_vars(p)
    return tuple(sorted((k, env[k]) for k in fv if k in env))


def eval_prop(p: Prop, env: Dict[str, Any], uni: Universe, reg: Registry) -> bool:
    try:
        key = (p, _env_key(p, env), uni.cache_key())
    except TypeError:
        key = None
    if key is not None and key in _prop_cache:
        return _prop_cache[key]
    out = _eval_prop(p, env, uni, reg)
    if key is not None:
        if len(_prop_cache) > 200000:
            _prop_cache.clear()
        _prop_cache[key] = out
    return out


def _eval_prop(p: Prop, env, uni, reg) -> bool:
    if isinstance(p, Atom):
        val = eval_term(p.term, env, uni, reg)
        if val is UNDEF:
            return False
        if not isinstance(val, bool):
            raise EvalError(f"qualifier atom is not boolean: {p!r} = {val!r}")
        return val
    if isinstance(p, Not):
        return not eval_prop(p.body, env, uni, reg)
    if isinstance(p, And):
        return all(eval_prop(q, env, uni, reg) for q in p.parts)
    if isinstance(p, Or):
        return any(eval_prop(q, env, uni, reg) for q in p.parts)
    if isinstance(p, Implies):
        return (not eval_prop(p.lhs, env, uni, reg)) or eval_prop(p.rhs, env, uni, reg)
    if isinstance(p, Iff):
        return eval_prop(p.lhs, env, uni, reg) == eval_prop(p.rhs, env, uni, reg)
    if isinstance(p, Forall):
        dom = uni.values(p.base)
        return all(eval_prop(p.body, {**env, p.var: u}, uni, reg) for u in dom)
    if isinstance(p, Exists):
        dom = uni.values(p.base)
        return any(eval_prop(p.body, {**env, p.var: u}, uni, reg) for u in dom)
    raise TypeError(p)


def value_sort_key(v) -> str:
    return repr(v)


def eval_values(phi: Prop, base: Base, env: Dict[str, Any], uni: Universe,
                reg: Registry) -> tuple:
    """The universe members u with phi[v -> u] true under env, sorted."""
    dom = uni.values(base)
    out = [u for u in dom if eval_prop(phi, {**env, "v": u}, uni, reg)]
    return tuple(sorted(out, key=value_sort_key))


def try_eval_closed(p: Prop, reg: Registry, uni: Universe) -> Optional[bool]:
    """Evaluate a closed proposition; None when it has free variables."""
    try:
        return eval_prop(p, {}, uni, reg)
    except UnboundVariable:
        return None


# ---------------------------------------------------------------------------
# Entailment backends

class BuiltinBackend:
    """Finite-model enumeration: phi1 entails phi2 iff the value set of phi1
    is contained in that of phi2, for every supplied environment."""

    name = "builtin"

    def implies(self, phi1: Prop, phi2: Prop, base: Base,
                envs: Iterable[Dict[str, Any]], uni: Universe, reg: Registry) -> bool:
        for env in envs:
            s1 = eval_values(phi1, base, env, uni, reg)
            s2 = set(eval_values(phi2, base, env, uni, reg))
            if any(u not in s2 for u in s1):
                return False
        return True


_SMT_SORTS = {"int": "Int", "nat": "Int", "bool": "Bool"}


def to_smtlib_term(t: QTerm) -> str:
    if isinstance(t, Lit):
        if isinstance(t.value, bool):
            return "true" if t.value else "false"
        if isinstance(t.value, int):
            return str(t.value) if t.value >= 0 else f"(- {-t.value})"
        raise SolverError(f"literal {t.value!r} not representable in SMT mode")
    if isinstance(t, Var):
        return f"|{t.name}|"
    if isinstance(t, App):
        op = {"==": "=", "!=": "distinct"}.get(t.op, t.op)
        args = " ".join(to_smtlib_term(a) for a in t.args)
        return f"({op} {args})"
    raise TypeError(t)


def to_smtlib_prop(p: Prop, quantified=()) -> str:
    if isinstance(p, Atom):
        return to_smtlib_term(p.term)
    if isinstance(p, Not):
        return f"(not {to_smtlib_prop(p.body)})"
    if isinstance(p, And):
        return "(and " + " ".join(to_smtlib_prop(q) for q in p.parts) + ")"
    if isinstance(p, Or):
        return "(or " + " ".join(to_smtlib_prop(q) for q in p.parts) + ")"
    if isinstance(p, Implies):
        return f"(=> {to_smtlib_prop(p.lhs)} {to_smtlib_prop(p.rhs)})"
    if isinstance(p, Iff):
        return f"(= {to_smtlib_prop(p.lhs)} {to_smtlib_prop(p.rhs)})"
    if isinstance(p, (Forall, Exists)):
        if p.base not in _SMT_SORTS:
            raise SolverError(f"sort {p.base!r} not supported by the SMT backend")
        q = "forall" if isinstance(p, Forall) else "exists"
        body = to_smtlib_prop(p.body)
        guard = f"(>= |{p.var}| 0)"
        if p.base == "nat":
            body = (f"(=> {guard} {body})" if q == "forall"
                    else f"(and {guard} {body})")
        return f"({q} ((|{p.var}| {_SMT_SORTS[p.base]})) {body})"
    raise TypeError(p)


def _collect_mps(p: Prop, reg: Registry, acc: set):
    if isinstance(p, Atom):
        stack = [p.term]
        while stack:
            t = stack.pop()
            if isinstance(t, App):
                if t.op in reg.method_predicates:
                    acc.add(t.op)
                stack.extend(t.args)
    elif isinstance(p, (And, Or)):
        for q in p.parts:
            _collect_mps(q, reg, acc)
    elif isinstance(p, Not):
        _collect_mps(p.body, reg, acc)
    elif isinstance(p, (Implies, Iff)):
        _collect_mps(p.lhs, reg, acc)
        _collect_mps(p.rhs, reg, acc)
    elif isinstance(p, (Forall, Exists)):
        _collect_mps(p.body, reg, acc)


class SmtBackend:
    """Entailment through an external SMT-LIB v2 solver process.

    Supports int/nat/bool qualifiers; method predicates become uninterpreted
    functions.  A timeout or unknown answer raises SolverError, never a
    silent false.
    """

    name = "smt"

    def __init__(self, command: List[str], timeout: float = 10.0):
        self.command = list(command)
        self.timeout = timeout

    def script(self, phi1: Prop, phi2: Prop, base: Base, env: Dict[str, Any],
               reg: Registry) -> str:
        if base not in _SMT_SORTS:
            raise SolverError(f"sort {base!r} not supported by the SMT backend")
        lines = ["(set-logic ALL)"]
        mps: set = set()
        _collect_mps(phi1, reg, mps)
        _collect_mps(phi2, reg, mps)
        for name in sorted(mps):
            mp = reg.method_predicates[name]
            sorts = " ".join("Int" for _ in range(mp.arity))
            lines.append(f"(declare-fun {name} ({sorts}) Bool)")
        lines.append(f"(declare-const |v| {_SMT_SORTS[base]})")
        fv = (prop_free_vars(phi1) | prop_free_vars(phi2)) - {"v"}
        for x in sorted(fv):
            if x in env:
                val = env[x]
                if isinstance(val, bool):
                    lines.append(f"(declare-const |{x}| Bool)")
                    lines.append(f"(assert (= |{x}| {'true' if val else 'false'}))")
                elif isinstance(val, int):
                    lines.append(f"(declare-const |{x}| Int)")
                    lines.append(f"(assert (= |{x}| {val}))")
                else:
                    raise SolverError(f"value {val!r} not representable in SMT mode")
            else:
                lines.append(f"(declare-const |{x}| Int)")
        if base == "nat":
            lines.append("(assert (>= |v| 0))")
        lines.append(f"(assert (not (=> {to_smtlib_prop(phi1)} {to_smtlib_prop(phi2)})))")
        lines.append("(check-sat)")
        return "\n".join(lines) + "\n"

    def implies(self, phi1: Prop, phi2: Prop, base: Base,
                envs: Iterable[Dict[str, Any]], uni: Universe, reg: Registry) -> bool:
        for env in envs:
            text = self.script(phi1, phi2, base, env, reg)
            try:
                proc = subprocess.run(self.command, input=text.encode(),
                                      capture_output=True, timeout=self.timeout)
            except subprocess.TimeoutExpired as e:
                raise SolverTimeout(f"solver timed out after {self.timeout}s") from e
            except OSError as e:
                raise SolverError(f"cannot run solver {self.command}: {e}") from e
            answer = proc.stdout.decode().strip().splitlines()
            answer = answer[-1].strip() if answer else ""
            if answer == "unsat":
                continue
            if answer == "sat":
                return False
            raise SolverError(f"solver answered {answer!r}")
        return True


def implies(phi1: Prop, phi2: Prop, base: Base, uni: Universe, reg: Registry,
            envs: Optional[Iterable[Dict[str, Any]]] = None,
            backend=None) -> bool:
    backend = backend or BuiltinBackend()
    envs = list(envs) if envs is not None else [{}]
    return backend.implies(phi1, phi2, base, envs, uni, reg)


def equiv(phi1: Prop, phi2: Prop, base: Base, uni: Universe, reg: Registry,
          envs: Optional[Iterable[Dict[str, Any]]] = None, backend=None) -> bool:
    return (implies(phi1, phi2, base, uni, reg, envs, backend)
            and implies(phi2, phi1, base, uni, reg, envs, backend))
