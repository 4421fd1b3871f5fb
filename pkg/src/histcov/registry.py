"""Signature registry, finite universes, and the resource context.

The registry answers "what is this name": action, operator, constructor,
method predicate, or API.  Operator/action signatures realize the Ty table;
the resource context (Delta) tracks used identifiers plus API signatures
with latent effects.  Universes give every base type a finite value set so
qualifier evaluation is enumeration.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Tuple

from .syntax import (App, Base, ECT, Identifier, KIND_API, KIND_RESOURCE,
                     Lit, Prop, TRUE, V, Var, conj, eq, v_eq)
from . import histexpr


class RegistryError(Exception):
    pass


# ---------------------------------------------------------------------------
# Signatures

@dataclass(frozen=True)
class OpSig:
    """An operator or action signature: over-typed params and an ECT result.

    Param qualifiers and the result qualifiers may reference earlier param
    names.
    """
    name: str
    params: Tuple[Tuple[str, Base, Prop], ...]
    result: ECT


@dataclass(frozen=True)
class ApiSig:
    ident: Identifier
    params: Tuple[Tuple[str, Base, Prop], ...]
    ret: Any                       # ECT (tau component of the result pair)
    effect: Any                    # latent HistoryExpr


@dataclass(frozen=True)
class MethodPredicateDef:
    name: str
    arity: int
    bases: Tuple[Base, ...]
    fn: Callable


# ---------------------------------------------------------------------------
# Universe

class Universe:
    """Finite value sets per base type.  Resource universes are derived from
    whatever identifiers are live, never configured directly."""

    def __init__(self, int_bound: int = 8, nat_bound: int = None,
                 chars: Tuple[str, ...] = ("a", "b"),
                 strings: Tuple[str, ...] = ("", "a", "b"),
                 container_max: int = 3,
                 resources: Optional[Dict[str, Tuple[Identifier, ...]]] = None):
        self.int_bound = int_bound
        self.nat_bound = int_bound if nat_bound is None else nat_bound
        self.chars = tuple(chars)
        self.strings = tuple(strings)
        self.container_max = container_max
        self.resources = dict(resources or {})
        self._cache: Dict[Base, tuple] = {}

    def cache_key(self):
        return (self.int_bound, self.nat_bound, self.chars, self.strings,
                self.container_max,
                tuple(sorted((k, tuple(v)) for k, v in self.resources.items())))

    def with_resources(self, resources: Dict[str, Tuple[Identifier, ...]]):
        return Universe(self.int_bound, self.nat_bound, self.chars,
                        self.strings, self.container_max, resources)

    def values(self, base: Base) -> tuple:
        if base in self._cache:
            return self._cache[base]
        out = self._compute(base)
        self._cache[base] = out
        return out

    def _compute(self, base: Base) -> tuple:
        if base == "unit":
            return ((),)
        if base == "bool":
            return (False, True)
        if base == "nat":
            return tuple(range(0, self.nat_bound + 1))
        if base == "int":
            return tuple(range(-self.int_bound, self.int_bound + 1))
        if base == "char":
            return self.chars
        if base == "string":
            return self.strings
        if isinstance(base, tuple) and base[0] == "list":
            elems = self.values(base[1])
            out = [()]
            layer = [()]
            for _ in range(self.container_max):
                layer = [(e,) + l for e in elems for l in layer]
                out.extend(layer)
            return tuple(out)
        if isinstance(base, tuple) and base[0] == "tree":
            elems = self.values(base[1])

            def build(budget):
                trees = [("leaf",)]
                if budget > 0:
                    subs = build(budget - 1)
                    for r in elems:
                        for l in subs:
                            for rr in subs:
                                trees.append(("node", r, l, rr))
                return trees

            return tuple(build(min(self.container_max, 2)))
        if isinstance(base, str):
            # resource kind
            if base in self.resources:
                return tuple(self.resources[base])
            return ()
        raise RegistryError(f"no universe for base type {base!r}")


# ---------------------------------------------------------------------------
# Method predicate semantics

def _mp_mem(l, u):
    return u in l


def _mp_emp(l):
    return len(l) == 0


def _mp_hd(l, u):
    return len(l) > 0 and l[0] == u


def _mp_dec_sorted(l):
    return all(l[i] >= l[i + 1] for i in range(len(l) - 1))


def _mp_dec_strict(l):
    return all(l[i] > l[i + 1] for i in range(len(l) - 1))


def _mp_shorter(a, b):
    return len(a) < len(b)


def _mp_len(x, n):
    return len(x) == n


def _mp_is_palindrome(s):
    return s == s[::-1]


def _mp_size(t, n):
    # node count of a tree
    def sz(x):
        if x[0] == "leaf":
            return 0
        return 1 + sz(x[2]) + sz(x[3])
    return sz(t) == n


DEFAULT_METHOD_PREDICATES = {
    "mem": MethodPredicateDef("mem", 2, (("list", "int"), "int"), _mp_mem),
    "emp": MethodPredicateDef("emp", 1, (("list", "int"),), _mp_emp),
    "hd": MethodPredicateDef("hd", 2, (("list", "int"), "int"), _mp_hd),
    "dec_sorted": MethodPredicateDef("dec_sorted", 1, (("list", "int"),), _mp_dec_sorted),
    "dec_strict": MethodPredicateDef("dec_strict", 1, (("list", "int"),), _mp_dec_strict),
    "shorter": MethodPredicateDef("shorter", 2, (("list", "int"), ("list", "int")), _mp_shorter),
    "len": MethodPredicateDef("len", 2, ("string", "nat"), _mp_len),
    "size": MethodPredicateDef("size", 2, (("tree", "int"), "nat"), _mp_size),
    "is_palindrome": MethodPredicateDef("is_palindrome", 1, ("string",), _mp_is_palindrome),
}


# ---------------------------------------------------------------------------
# Default Ty table

def _binop(name: str, b: Base, rb: Base, qual: Prop) -> OpSig:
    return OpSig(name, (("a", b, TRUE), ("b", b, TRUE)), ECT(rb, qual, qual))


def _cmp(name: str) -> OpSig:
    q = eq(V, App(name, (Var("a"), Var("b"))))
    return _binop(name, "int", "bool", q)


def default_operators() -> Dict[str, OpSig]:
    ops: Dict[str, OpSig] = {}
    for name in ("+", "-", "*"):
        ops[name] = _binop(name, "int", "int", eq(V, App(name, (Var("a"), Var("b")))))
    ops["mod"] = _binop("mod", "int", "int", eq(V, App("mod", (Var("a"), Var("b")))))
    for name in ("<", "<=", ">", ">=", "==", "!="):
        ops[name] = _cmp(name)
    unit_p = ("u", "unit", TRUE)
    ops["bool_gen"] = OpSig("bool_gen", (unit_p,),
                            ECT("nat", Or_01(), Or_01()))
    ops["nat_gen"] = OpSig("nat_gen", (unit_p,), ECT("nat", TRUE, TRUE))
    ops["int_gen"] = OpSig("int_gen", (unit_p,), ECT("int", TRUE, TRUE))
    rng = conj(Atomic("<=", Var("a"), V), Atomic("<=", V, Var("b")))
    ops["int_range"] = OpSig("int_range", (("a", "int", TRUE), ("b", "int", TRUE)),
                             ECT("int", rng, rng))
    consq = eq(V, App("cons", (Var("h"), Var("t"))))
    ops["Cons"] = OpSig("Cons", (("h", "int", TRUE), ("t", ("list", "int"), TRUE)),
                        ECT(("list", "int"), consq, consq))
    nodeq = eq(V, App("node", (Var("r"), Var("l"), Var("rr"))))
    ops["Node"] = OpSig("Node", (("r", "int", TRUE), ("l", ("tree", "int"), TRUE),
                                 ("rr", ("tree", "int"), TRUE)),
                        ECT(("tree", "int"), nodeq, nodeq))
    # spelled-out aliases usable in application head position
    aliases = {"add": "+", "sub": "-", "mul": "*", "eq": "==", "neq": "!=",
               "lt": "<", "leq": "<=", "gt": ">", "geq": ">="}
    for alias, sym in aliases.items():
        sig = ops[sym]
        ops[alias] = OpSig(alias, sig.params, sig.result)
    return ops


def Atomic(op: str, a, b) -> Prop:
    from .syntax import Atom
    return Atom(App(op, (a, b)))


def Or_01() -> Prop:
    from .syntax import disj
    return disj(v_eq(0), v_eq(1))


def default_actions() -> Dict[str, OpSig]:
    unit_res = ECT("unit", v_eq(()), v_eq(()))
    acts = {}
    for name in ("open", "close", "read"):
        acts[name] = OpSig(name, (("f", "file", TRUE),), unit_res)
    acts["write"] = OpSig("write", (("f", "file", TRUE), ("x", "int", TRUE)), unit_res)
    acts["send"] = OpSig("send", (("s", "socket", TRUE), ("x", "int", TRUE)), unit_res)
    return acts


# Constant constructors usable as bare values.
CONSTANT_CTORS = {
    "Nil": ((), ("list", "int")),
    "Leaf": (("leaf",), ("tree", "int")),
}


# ---------------------------------------------------------------------------
# Resource context (Delta)

class Delta:
    """Used resource identifiers plus API signatures with latent effects."""

    def __init__(self):
        self.apis: Dict[Identifier, ApiSig] = {}
        self.by_name: Dict[str, Identifier] = {}
        self.used: set = set()

    def register_api(self, sig: ApiSig):
        if sig.ident.name in self.by_name:
            raise RegistryError(f"duplicate API name {sig.ident.name}")
        if histexpr.contains_new(sig.effect):
            raise RegistryError(
                f"API {sig.ident.name}: latent effect creates a resource "
                "(resource creation is not permitted in registered effects)")
        self.apis[sig.ident] = sig
        self.by_name[sig.ident.name] = sig.ident

    def lookup(self, ident: Identifier) -> Optional[ApiSig]:
        return self.apis.get(ident)

    def max_index(self) -> int:
        idx = [i.index for i in self.apis] + [i.index for i in self.used]
        return max(idx) if idx else -1

    def resource_map(self) -> Dict[str, Tuple[Identifier, ...]]:
        """Live identifiers grouped by resource kind (apis under 'api')."""
        res: Dict[str, list] = {}
        for i in sorted(self.used):
            res.setdefault(i.kind, []).append(i)
        out: Dict[str, Tuple[Identifier, ...]] = {k: tuple(v) for k, v in res.items()}
        out["api"] = tuple(sorted(self.apis))
        return out


# ---------------------------------------------------------------------------
# Registry

class Registry:
    def __init__(self):
        self.resource_kinds = {"file", "socket", "api"}
        self.operators: Dict[str, OpSig] = default_operators()
        self.actions: Dict[str, OpSig] = default_actions()
        self.method_predicates: Dict[str, MethodPredicateDef] = dict(DEFAULT_METHOD_PREDICATES)
        self.delta = Delta()
        self.universe_config: Dict[str, Any] = {}
        self.idents: Dict[str, Identifier] = {}

    def intern_ident(self, name: str, kind: Optional[str] = None) -> Identifier:
        """Resolve a concrete identifier name to one Identifier object per
        session.  Indices come from trailing digits when present."""
        if name in self.delta.by_name:
            return self.delta.by_name[name]
        if name in self.idents:
            return self.idents[name]
        digits = ""
        while name[:len(name) - len(digits) or None][-1:].isdigit():
            digits = name[len(name) - len(digits) - 1] + digits
        if digits:
            idx = int(digits)
        else:
            taken = [i.index for i in self.idents.values()] + [self.delta.max_index()]
            idx = max(taken) + 1
        if kind is None:
            kind = "rec" if name.startswith("G") else "file"
        ident = Identifier(idx, kind, name)
        self.idents[name] = ident
        return ident

    def register_method_predicate(self, mp: MethodPredicateDef):
        if mp.name in self.method_predicates:
            raise RegistryError(f"duplicate method predicate {mp.name}")
        self.method_predicates[mp.name] = mp

    def kind_of_name(self, name: str) -> Optional[str]:
        if name in self.actions:
            return "action"
        if name in self.operators:
            return "operator"
        if name in self.delta.by_name:
            return "api"
        return None

    def make_universe(self, **overrides) -> Universe:
        cfg = dict(self.universe_config)
        cfg.update({k: v for k, v in overrides.items() if v is not None})
        uni = Universe(
            int_bound=cfg.get("int_bound", 8),
            nat_bound=cfg.get("nat_bound"),
            chars=tuple(cfg.get("chars", ("a", "b"))),
            strings=tuple(cfg.get("strings", ("", "a", "b"))),
            container_max=cfg.get("container_max", 3),
        )
        return uni


def parse_resource_context(source: str, reg: Optional[Registry] = None) -> Registry:
    """Load a JSON context file: resource kinds, Ty additions, method
    predicate declarations, APIs with latent effects, universe bounds, and
    pre-used identifiers."""
    from . import parser  # late import: parser needs a registry to resolve names

    reg = reg or Registry()
    data = json.loads(source) if source.strip() else {}
    for rk in data.get("resource_kinds", []):
        reg.resource_kinds.add(rk)
    reg.universe_config.update(data.get("universe", {}))
    for name, spec in data.get("method_predicates", {}).items():
        if name not in DEFAULT_METHOD_PREDICATES:
            raise RegistryError(
                f"method predicate {name} has no executable semantics")
        reg.method_predicates[name] = DEFAULT_METHOD_PREDICATES[name]
    for name, sig_src in data.get("operators", {}).items():
        reg.operators[name] = parser.parse_op_sig(name, sig_src, reg)
    for name, sig_src in data.get("actions", {}).items():
        reg.actions[name] = parser.parse_op_sig(name, sig_src, reg)
    for xname in data.get("used_identifiers", []):
        reg.delta.used.add(parser.parse_identifier_name(xname))
    next_idx = reg.delta.max_index() + 1
    for name, sig_src in data.get("apis", {}).items():
        ident = Identifier(next_idx, KIND_API, name)
        next_idx += 1
        # APIs may reference each other (and themselves) in effects, so the
        # identifier is visible while its own signature is parsed.
        reg.delta.by_name[name] = ident
        params, ret, effect = parser.parse_api_sig(sig_src, reg)
        del reg.delta.by_name[name]
        reg.delta.register_api(ApiSig(ident, params, ret, effect))
    return reg
