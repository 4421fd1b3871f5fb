"""Pretty printing for every AST family; parse(pretty(x)) == x."""
from __future__ import annotations

from . import histexpr as hx
from .syntax import (And, App, Arrow, Atom, Base, Branch, Const, ECT, Err,
                     Exists, Forall, HistoryType, Identifier, Iff, Implies,
                     Lam, Let, LetApp, LetGet, LetNew, LetRec, Lit, Match,
                     Not, Or, OverType, PatConst, PatCtor, Prop, QTerm, Term,
                     Var, VarT, FixVal, base_name)


def pp_base(b: Base) -> str:
    return base_name(b)


def pp_value(v) -> str:
    """Ground values as they appear in events and constants."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, Identifier):
        return v.name
    if v == ():
        return "()"
    if isinstance(v, tuple):
        if v and v[0] == "leaf":
            return "leaf"
        if v and v[0] == "node":
            return f"node({pp_value(v[1])}; {pp_value(v[2])}; {pp_value(v[3])})"
        return "[" + "; ".join(pp_value(x) for x in v) + "]"
    raise TypeError(f"unprintable value {v!r}")


# ---------------------------------------------------------------------------
# Qualifier terms and propositions

_CMPS = ("==", "!=", "<", "<=", ">", ">=")
_ARITH = ("+", "-", "*", "mod")


def pp_qterm(t: QTerm, atom=False) -> str:
    if isinstance(t, Lit):
        return pp_value(t.value)
    if isinstance(t, Var):
        return t.name
    if isinstance(t, App):
        if t.op in _CMPS or t.op in _ARITH:
            s = f"{pp_qterm(t.args[0], atom=True)} {t.op} {pp_qterm(t.args[1], atom=True)}"
            return f"({s})" if atom else s
        args = ", ".join(pp_qterm(a) for a in t.args)
        return f"{t.op}({args})"
    raise TypeError(t)


def pp_prop(p: Prop, atom=False) -> str:
    def wrap(s):
        return f"({s})" if atom else s

    if isinstance(p, Atom):
        return pp_qterm(p.term, atom=atom)
    if isinstance(p, Not):
        return "!" + pp_prop(p.body, atom=True)
    if isinstance(p, And):
        return wrap(" && ".join(pp_prop(q, atom=True) for q in p.parts))
    if isinstance(p, Or):
        return wrap(" || ".join(pp_prop(q, atom=True) for q in p.parts))
    if isinstance(p, Implies):
        return wrap(f"{pp_prop(p.lhs, atom=True)} ==> {pp_prop(p.rhs, atom=True)}")
    if isinstance(p, Iff):
        return wrap(f"{pp_prop(p.lhs, atom=True)} <=> {pp_prop(p.rhs, atom=True)}")
    if isinstance(p, (Forall, Exists)):
        kw = "forall" if isinstance(p, Forall) else "exists"
        return wrap(f"{kw} {p.var}: {pp_base(p.base)}. {pp_prop(p.body)}")
    raise TypeError(p)


# ---------------------------------------------------------------------------
# Histories

def pp_hist(h: hx.Hist, atom=False) -> str:
    if isinstance(h, hx.Eps):
        return "eps"
    if isinstance(h, hx.ActEvent):
        return f"{h.action}({', '.join(pp_value(v) for v in h.values)})"
    if isinstance(h, hx.ApiEvent):
        return f"{h.api.name}({', '.join(pp_value(v) for v in h.values)})"
    if isinstance(h, hx.NewEvent):
        return f"new_{h.rkind}({h.ident.name})"
    if isinstance(h, hx.GetEvent):
        return f"get({h.api.name})"
    if isinstance(h, hx.ActExpr):
        args = ", ".join(f"{pp_base(b)}: {pp_prop(p)}" for b, p in h.args)
        return f"{h.action}({args})"
    if isinstance(h, hx.ApiExpr):
        args = ", ".join(f"{a}:({pp_base(b)}: {pp_prop(p)})" for a, b, p in h.args)
        return f"{h.api.name}({args})"
    if isinstance(h, hx.CallExpr):
        args = ", ".join(f"{a}:({pp_base(b)}: {pp_prop(p)})" for a, b, p in h.args)
        return f"call({pp_prop(h.phi)}; {args})"
    if isinstance(h, hx.Mu):
        params = ", ".join(f"{a}:({pp_base(b)}: {pp_prop(p)})" for a, b, p in h.params)
        return f"mu {h.fid.name}({params})({pp_hist(h.body)})"
    if isinstance(h, hx.Seq):
        s = " . ".join(pp_hist(p, atom=True) for p in h.parts)
        return f"({s})" if atom else s
    if isinstance(h, hx.Choice):
        s = " + ".join(pp_hist(p, atom=True) for p in h.parts)
        return f"({s})" if atom else s
    raise TypeError(h)


# ---------------------------------------------------------------------------
# Types

def pp_type(t) -> str:
    if isinstance(t, ECT):
        return f"{{v: {pp_base(t.base)} | {pp_prop(t.phi)} | {pp_prop(t.psi)}}}"
    if isinstance(t, OverType):
        return f"[v: {pp_base(t.base)} | {pp_prop(t.phi)}]"
    if isinstance(t, Arrow):
        arg = pp_type(t.arg)
        if isinstance(t.arg, (Arrow, HistoryType)):
            arg = f"({arg})"
        return f"{t.param}: {arg} -> {pp_type(t.res)}"
    if isinstance(t, HistoryType):
        return f"({pp_type(t.tau)}, {pp_hist(t.effect)})"
    raise TypeError(t)


# ---------------------------------------------------------------------------
# Terms

def pp_term(t: Term, indent: int = 0) -> str:
    pad = "  " * indent

    if isinstance(t, Const):
        if t.value == () and t.base == ("list", "int"):
            return "Nil"
        if t.value == ("leaf",) and t.base == ("tree", "int"):
            return "Leaf"
        return pp_value(t.value)
    if isinstance(t, VarT):
        return t.name
    if isinstance(t, Lam):
        ann = f"({t.param}: {pp_base(t.base)}" + (
            f" | {pp_prop(t.phi)})" if t.phi != Atom(Lit(True)) else ")")
        return f"fun {ann} -> {pp_term(t.body, indent)}"
    if isinstance(t, FixVal):
        return f"<fix {t.fname}>"
    if isinstance(t, Err):
        return f"err : {pp_base(t.base)}"
    if isinstance(t, Let):
        return (f"let {t.var} = {pp_term(t.rhs, indent)} in\n{pad}"
                f"{pp_term(t.body, indent)}")
    if isinstance(t, LetApp):
        app = " ".join([pp_term(t.head, indent)] + [pp_term(a, indent) for a in t.args])
        if isinstance(t.body, VarT) and t.body.name == t.var and t.var.startswith("_w"):
            return app
        return f"let {t.var} = {app} in\n{pad}{pp_term(t.body, indent)}"
    if isinstance(t, LetNew):
        return f"let {t.var} = new_{t.rkind} () in\n{pad}{pp_term(t.body, indent)}"
    if isinstance(t, LetGet):
        return f"let {t.var} = get {t.api} in\n{pad}{pp_term(t.body, indent)}"
    if isinstance(t, LetRec):
        params = " ".join(
            f"({n}: {pp_base(b)}" + (f" | {pp_prop(p)})" if p != Atom(Lit(True)) else ")")
            for n, b, p in t.params)
        return (f"let rec {t.fname} {params} : {pp_type(t.ret)} =\n{pad}  "
                f"{pp_term(t.fbody, indent + 1)} in\n{pad}{pp_term(t.body, indent)}")
    if isinstance(t, Match):
        out = [f"match {pp_term(t.scrutinee, indent)} with"]
        for br in t.branches:
            out.append(f"\n{pad}| {pp_pattern(br.pattern)} -> {pp_term(br.body, indent + 1)}")
        return "".join(out)
    raise TypeError(t)


def pp_pattern(p) -> str:
    if isinstance(p, PatConst):
        return pp_value(p.value)
    if isinstance(p, PatCtor):
        return " ".join([p.ctor] + list(p.binders))
    raise TypeError(p)


def pretty(x) -> str:
    """One printer for every AST family."""
    if isinstance(x, (ECT, OverType, Arrow, HistoryType)):
        return pp_type(x)
    if isinstance(x, (Atom, Not, And, Or, Implies, Iff, Forall, Exists)):
        return pp_prop(x)
    if isinstance(x, (Lit, Var, App)):
        return pp_qterm(x)
    if isinstance(x, (hx.Eps, hx.ActEvent, hx.ApiEvent, hx.NewEvent,
                      hx.GetEvent, hx.ActExpr, hx.ApiExpr, hx.CallExpr,
                      hx.Mu, hx.Seq, hx.Choice)):
        return pp_hist(x)
    return pp_term(x)


def pp_trace(events) -> str:
    """Terminal history, one event per line (the evaluator trace grammar)."""
    if not events:
        return "eps"
    return "\n".join(pp_hist(e) for e in events)
