"""Concrete syntax: tokenizer and recursive-descent parsers for programs,
qualifier propositions, types, and history expressions.

Surface syntax is OCaml-flavoured; `(* ... *)` comments are allowed.  Name
resolution (action vs operator vs API vs plain variable) consults a
Registry.
"""
from __future__ import annotations

import re
from typing import List, Optional, Tuple

from . import histexpr as hx
from .registry import ApiSig, OpSig, Registry
from .syntax import (And, App, Arrow, Atom, Base, Branch, Const, ECT, Err,
                     Exists, FALSE, Forall, HistoryType, Identifier, Iff,
                     Implies, Lam, Let, LetApp, LetGet, LetNew, LetRec, Lit,
                     Match, Not, Or, OverType, PatConst, PatCtor, Prop, QTerm,
                     SCALAR_BASES, TRUE, Term, Value, Var, VarT, conj, disj)


class ParseError(Exception):
    def __init__(self, msg, pos=None):
        super().__init__(msg if pos is None else f"{msg} (at {pos})")
        self.pos = pos


KEYWORDS = {
    "let", "rec", "in", "fun", "match", "with", "if", "then", "else", "err",
    "get", "mu", "call", "eps", "forall", "exists", "not", "true", "false",
    "mod", "unit", "bool", "nat", "int", "char", "string", "list", "tree",
}

PUNCT = ["==>", "<=>", "->", "==", "!=", "<=", ">=", "&&", "||",
         "(", ")", "[", "]", "{", "}", ",", ";", ":", "|", "+", "-", "*",
         "<", ">", "=", ".", "!", "_"]

_TOKEN_RE = re.compile(
    r"""\s+|\(\*.*?\*\)"""
    r"""|(?P<int>\d+)"""
    r"""|(?P<char>'(?:[^'\\]|\\.)')"""
    r"""|(?P<string>"(?:[^"\\]|\\.)*")"""
    r"""|(?P<ident>[A-Za-z_][A-Za-z0-9_']*)"""
    r"""|(?P<punct>""" + "|".join(re.escape(p) for p in PUNCT) + r""")""",
    re.DOTALL)


class Tok:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind, text, pos):
        self.kind = kind
        self.text = text
        self.pos = pos

    def __repr__(self):
        return f"{self.kind}:{self.text}"


def tokenize(src: str) -> List[Tok]:
    toks = []
    i = 0
    while i < len(src):
        m = _TOKEN_RE.match(src, i)
        if not m:
            raise ParseError(f"unexpected character {src[i]!r}", i)
        i = m.end()
        for kind in ("int", "char", "string", "ident", "punct"):
            text = m.group(kind)
            if text is not None:
                if kind == "ident" and text in KEYWORDS:
                    kind = "kw"
                toks.append(Tok(kind, text, m.start()))
                break
    toks.append(Tok("eof", "", len(src)))
    return toks


def _unquote(text: str) -> str:
    body = text[1:-1]
    return body.replace("\\\\", "\\").replace('\\"', '"').replace("\\'", "'") \
               .replace("\\n", "\n").replace("\\t", "\t")


INTERNAL_NAME = re.compile(r"^[XG][0-9]+$")


class Parser:
    def __init__(self, src: str, reg: Registry):
        self.toks = tokenize(src)
        self.i = 0
        self.reg = reg
        self._wild = 0

    def fresh_wild(self) -> str:
        self._wild += 1
        return f"_w{self._wild}"

    # -- token plumbing ---------------------------------------------------

    def peek(self, ahead=0) -> Tok:
        j = min(self.i + ahead, len(self.toks) - 1)
        return self.toks[j]

    def next(self) -> Tok:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind in ("punct", "kw", "ident")

    def eat(self, text: str) -> bool:
        if self.at(text):
            self.next()
            return True
        return False

    def expect(self, text: str) -> Tok:
        if not self.at(text):
            t = self.peek()
            raise ParseError(f"expected {text!r}, found {t.text!r}", t.pos)
        return self.next()

    def expect_ident(self) -> str:
        t = self.peek()
        if t.kind != "ident":
            raise ParseError(f"expected identifier, found {t.text!r}", t.pos)
        return self.next().text

    # -- base types -------------------------------------------------------

    def at_base(self) -> bool:
        t = self.peek()
        return (t.text in SCALAR_BASES
                or (t.kind == "ident" and t.text in self.reg.resource_kinds))

    def parse_base(self) -> Base:
        t = self.peek()
        if t.text in SCALAR_BASES:
            self.next()
            b: Base = t.text
        elif t.kind == "ident" and t.text in self.reg.resource_kinds:
            self.next()
            b = t.text
        else:
            raise ParseError(f"expected base type, found {t.text!r}", t.pos)
        while self.peek().text in ("list", "tree"):
            b = (self.next().text, b)
        return b

    # -- propositions -----------------------------------------------------

    def parse_prop(self) -> Prop:
        return self.as_prop(self.parse_quant())

    def as_prop(self, x) -> Prop:
        if isinstance(x, (Lit, Var, App)):
            return Atom(x)
        return x

    def as_term(self, x) -> QTerm:
        if isinstance(x, Atom):
            return x.term
        if isinstance(x, (Lit, Var, App)):
            return x
        raise ParseError(f"expected a term, found proposition {x!r}")

    def parse_quant(self):
        t = self.peek()
        if t.text in ("forall", "exists"):
            self.next()
            var = self.expect_ident()
            self.expect(":")
            base = self.parse_base()
            self.expect(".")
            body = self.as_prop(self.parse_quant())
            cls = Forall if t.text == "forall" else Exists
            return cls(var, base, body)
        return self.parse_iff()

    def parse_iff(self):
        lhs = self.parse_imp()
        if self.at("<=>"):
            self.next()
            rhs = self.parse_iff()
            return Iff(self.as_prop(lhs), self.as_prop(rhs))
        return lhs

    def parse_imp(self):
        lhs = self.parse_or()
        if self.at("==>"):
            self.next()
            rhs = self.parse_quant() if self.peek().text in ("forall", "exists") \
                else self.parse_imp()
            return Implies(self.as_prop(lhs), self.as_prop(rhs))
        return lhs

    def parse_or(self):
        lhs = self.parse_and()
        parts = [lhs]
        while self.at("||"):
            self.next()
            parts.append(self.parse_and())
        if len(parts) == 1:
            return lhs
        return Or(tuple(self.as_prop(p) for p in parts))

    def parse_and(self):
        lhs = self.parse_unary()
        parts = [lhs]
        while self.at("&&"):
            self.next()
            parts.append(self.parse_unary())
        if len(parts) == 1:
            return lhs
        return And(tuple(self.as_prop(p) for p in parts))

    def parse_unary(self):
        if self.at("!") or self.at("not"):
            self.next()
            return Not(self.as_prop(self.parse_unary()))
        return self.parse_cmp()

    CMP_OPS = ("==", "!=", "<=", ">=", "<", ">")

    def parse_cmp(self):
        lhs = self.parse_add()
        if self.peek().text in self.CMP_OPS and self.peek().kind == "punct":
            op = self.next().text
            rhs = self.parse_add()
            return App(op, (self.as_term(lhs), self.as_term(rhs)))
        return lhs

    def parse_add(self):
        x = self.parse_mul()
        while self.peek().kind == "punct" and self.peek().text in ("+", "-"):
            op = self.next().text
            y = self.parse_mul()
            x = App(op, (self.as_term(x), self.as_term(y)))
        return x

    def parse_mul(self):
        x = self.parse_atom()
        while (self.peek().text == "*" and self.peek().kind == "punct") \
                or self.peek().text == "mod":
            op = self.next().text
            y = self.parse_atom()
            x = App(op, (self.as_term(x), self.as_term(y)))
        return x

    def parse_atom(self):
        t = self.peek()
        if t.kind == "int":
            self.next()
            return Lit(int(t.text))
        if t.text == "-" and self.peek(1).kind == "int":
            self.next()
            return Lit(-int(self.next().text))
        if t.kind == "char":
            self.next()
            return Lit(_unquote(t.text))
        if t.kind == "string":
            self.next()
            return Lit(_unquote(t.text))
        if t.text == "true":
            self.next()
            return Lit(True)
        if t.text == "false":
            self.next()
            return Lit(False)
        if t.text == "(":
            if self.peek(1).text == ")":
                self.next(), self.next()
                return Lit(())
            self.next()
            inner = self.parse_quant()
            self.expect(")")
            return inner
        if t.kind == "ident":
            name = self.next().text
            if self.at("(") and (name in self.reg.method_predicates
                                 or name in ("cons", "node")):
                self.next()
                args = [self.as_term(self.parse_quant())]
                while self.eat(","):
                    args.append(self.as_term(self.parse_quant()))
                self.expect(")")
                return App(name, tuple(args))
            ident = self.resolve_ident(name)
            if ident is not None:
                return Lit(ident)
            return Var(name)
        if t.text == "v":
            self.next()
            return Var("v")
        raise ParseError(f"unexpected token {t.text!r} in qualifier", t.pos)

    def resolve_ident(self, name: str) -> Optional[Identifier]:
        """Concrete resource/api identifiers: declared API names, previously
        interned names, or the internal X<n>/G<n> spelling."""
        if name in self.reg.delta.by_name:
            return self.reg.delta.by_name[name]
        if name in self.reg.idents:
            return self.reg.idents[name]
        if INTERNAL_NAME.match(name):
            return self.reg.intern_ident(name)
        return None

    # -- history expressions ---------------------------------------------

    def parse_hist(self) -> hx.Hist:
        parts = [self.parse_hseq()]
        while self.eat("+"):
            parts.append(self.parse_hseq())
        if len(parts) == 1:
            return parts[0]
        return hx.Choice(tuple(parts))

    def parse_hseq(self) -> hx.Hist:
        parts = [self.parse_hatom()]
        while self.eat("."):
            parts.append(self.parse_hatom())
        if len(parts) == 1:
            return parts[0]
        return hx.Seq(tuple(parts))

    def parse_hatom(self) -> hx.Hist:
        t = self.peek()
        if t.text == "eps":
            self.next()
            return hx.EPS
        if t.text == "err":
            self.next()
            self.expect("(")
            self.expect(")")
            return hx.ActEvent("err", ())
        if t.text == "(":
            self.next()
            inner = self.parse_hist()
            self.expect(")")
            return inner
        if t.text == "mu":
            self.next()
            fname = self.expect_ident()
            fid = self.reg.intern_ident(fname, kind="rec")
            self.expect("(")
            params = self.parse_named_qual_args()
            self.expect(")")
            self.expect("(")
            body = self.parse_hist()
            self.expect(")")
            return hx.Mu(fid, params, body)
        if t.text == "call":
            self.next()
            self.expect("(")
            phi = self.parse_prop()
            self.expect(";")
            args = self.parse_named_qual_args()
            self.expect(")")
            return hx.CallExpr(phi, args)
        if t.text == "get":
            self.next()
            self.expect("(")
            name = self.expect_ident()
            ident = self.resolve_ident(name) or self.reg.intern_ident(name, kind="api")
            self.expect(")")
            return hx.GetEvent(ident)
        if t.kind == "ident" and t.text.startswith("new_"):
            name = self.next().text
            rkind = name[len("new_"):]
            if rkind not in self.reg.resource_kinds:
                raise ParseError(f"unknown resource kind {rkind!r}", t.pos)
            self.expect("(")
            xname = self.expect_ident()
            ident = self.reg.intern_ident(xname, kind=rkind)
            self.expect(")")
            return hx.NewEvent(rkind, ident)
        if t.kind == "ident":
            name = self.next().text
            self.expect("(")
            return self.parse_event_or_expr(name, t.pos)
        raise ParseError(f"unexpected token {t.text!r} in history", t.pos)

    def parse_named_qual_args(self) -> tuple:
        """name:(base: prop), ..."""
        args = []
        if self.peek().text in (")",):
            return tuple(args)
        while True:
            name = self.expect_ident()
            self.expect(":")
            self.expect("(")
            base = self.parse_base()
            self.expect(":")
            phi = self.parse_prop()
            self.expect(")")
            args.append((name, base, phi))
            if not self.eat(","):
                break
        return tuple(args)

    def parse_event_or_expr(self, name: str, pos) -> hx.Hist:
        """After NAME( : action/api event with ground values, an action expr
        with base:prop args, or an api expr with name:(base:prop) args."""
        is_action = name in self.reg.actions
        api_ident = None if is_action else (
            self.resolve_ident(name) or None)
        if not is_action and api_ident is None:
            api_ident = self.reg.intern_ident(name, kind="api")

        # empty argument list: an event with no values
        if self.eat(")"):
            return hx.ActEvent(name, ()) if is_action else hx.ApiEvent(api_ident, ())

        t = self.peek()
        if self.at_base() and self.peek(1).text == ":":
            args = []
            while True:
                base = self.parse_base()
                self.expect(":")
                phi = self.parse_prop()
                args.append((base, phi))
                if not self.eat(","):
                    break
            self.expect(")")
            if not is_action:
                raise ParseError(f"{name} is not an action", pos)
            return hx.ActExpr(name, tuple(args))
        if t.kind == "ident" and self.peek(1).text == ":" and self.peek(2).text == "(":
            args = self.parse_named_qual_args()
            self.expect(")")
            if is_action:
                raise ParseError(f"{name} is an action, not an api", pos)
            return hx.ApiExpr(api_ident, args)
        values = [self.parse_event_value()]
        while self.eat(","):
            values.append(self.parse_event_value())
        self.expect(")")
        if is_action:
            return hx.ActEvent(name, tuple(values))
        return hx.ApiEvent(api_ident, tuple(values))

    def parse_event_value(self):
        t = self.peek()
        if t.kind == "int":
            return int(self.next().text)
        if t.text == "-" and self.peek(1).kind == "int":
            self.next()
            return -int(self.next().text)
        if t.kind in ("char", "string"):
            return _unquote(self.next().text)
        if t.text == "true":
            self.next()
            return True
        if t.text == "false":
            self.next()
            return False
        if t.text == "(" and self.peek(1).text == ")":
            self.next(), self.next()
            return ()
        if t.text == "[":
            self.next()
            items = []
            if not self.at("]"):
                items.append(self.parse_event_value())
                while self.eat(";"):
                    items.append(self.parse_event_value())
            self.expect("]")
            return tuple(items)
        if t.kind == "ident":
            name = self.next().text
            ident = self.resolve_ident(name)
            if ident is None:
                ident = self.reg.intern_ident(name)
            return ident
        raise ParseError(f"unexpected event value {t.text!r}", t.pos)

    # -- types ------------------------------------------------------------

    def parse_type(self):
        t = self.peek()
        if t.text == "{":
            return self.parse_ect()
        if t.text == "[":
            return self.parse_over()
        if t.kind == "ident" and self.peek(1).text == ":":
            return self.parse_arrow()
        if t.text == "(":
            self.next()
            tau = self.parse_type()
            self.expect(",")
            h = self.parse_hist()
            self.expect(")")
            return HistoryType(tau, h)
        raise ParseError(f"unexpected token {t.text!r} in type", t.pos)

    def parse_ect(self) -> ECT:
        self.expect("{")
        self.expect("v")
        self.expect(":")
        base = self.parse_base()
        self.expect("|")
        phi = self.parse_prop()
        self.expect("|")
        psi = self.parse_prop()
        self.expect("}")
        return ECT(base, phi, psi)

    def parse_over(self) -> OverType:
        self.expect("[")
        self.expect("v")
        self.expect(":")
        base = self.parse_base()
        self.expect("|")
        phi = self.parse_prop()
        self.expect("]")
        return OverType(base, phi)

    def parse_arrow(self) -> Arrow:
        name = self.expect_ident()
        self.expect(":")
        t = self.peek()
        if t.text == "[":
            arg = self.parse_over()
        elif t.text == "{":
            arg = self.parse_ect()
        elif t.text == "(":
            self.next()
            arg = self.parse_type()
            self.expect(")")
        else:
            raise ParseError(f"unexpected argument type {t.text!r}", t.pos)
        self.expect("->")
        res = self.parse_type()
        return Arrow(name, arg, res)

    # -- terms ------------------------------------------------------------

    def check_program_name(self, name: str, pos=None):
        if INTERNAL_NAME.match(name):
            raise ParseError(
                f"identifier {name!r} is reserved for internal use", pos)
        if name == "v":
            raise ParseError("'v' is the reserved value variable", pos)
        return name

    def parse_term(self) -> Term:
        t = self.peek()
        if t.text == "let":
            return self.parse_let()
        if t.text == "match":
            return self.parse_match()
        if t.text == "if":
            return self.parse_if()
        if t.text == "err":
            self.next()
            self.expect(":")
            return Err(self.parse_base())
        if t.text == "fun":
            return self.parse_fun()
        # application or bare value in tail position
        vals = [self.parse_value()]
        while self.is_value_start():
            vals.append(self.parse_value())
        if len(vals) == 1:
            return vals[0]
        res = self.fresh_wild()
        return LetApp(res, vals[0], tuple(vals[1:]), VarT(res))

    def parse_let(self) -> Term:
        self.expect("let")
        if self.eat("rec"):
            fname = self.check_program_name(self.expect_ident())
            params = []
            while self.at("("):
                params.append(self.parse_annot_param())
            if not params:
                raise ParseError("let rec needs at least one parameter")
            self.expect(":")
            ret = self.parse_type()
            self.expect("=")
            fbody = self.parse_term()
            self.expect("in")
            body = self.parse_term()
            return LetRec(fname, tuple(params), ret, fbody, body)
        tname = self.peek()
        if tname.kind == "ident":
            name = self.check_program_name(self.next().text, tname.pos)
        elif tname.text == "_":
            self.next()
            name = self.fresh_wild()
        else:
            raise ParseError(f"expected name after let, found {tname.text!r}", tname.pos)
        self.expect("=")
        return self.parse_let_rhs(name)

    def parse_annot_param(self):
        self.expect("(")
        name = self.check_program_name(self.expect_ident())
        self.expect(":")
        base = self.parse_base()
        phi = TRUE
        if self.eat("|"):
            phi = self.parse_prop()
        self.expect(")")
        return (name, base, phi)

    def parse_let_rhs(self, name: str) -> Term:
        t = self.peek()
        if t.kind == "ident" and t.text.startswith("new_") \
                and self.peek(1).text == "(" and self.peek(2).text == ")":
            rkind = self.next().text[len("new_"):]
            if rkind not in self.reg.resource_kinds:
                raise ParseError(f"unknown resource kind {rkind!r}", t.pos)
            self.next(), self.next()
            self.expect("in")
            return LetNew(name, rkind, self.parse_term())
        if t.text == "get":
            self.next()
            api = self.expect_ident()
            self.expect("in")
            return LetGet(name, api, self.parse_term())
        if t.text in ("let", "match", "if", "err"):
            rhs = self.parse_term()
            self.expect("in")
            return Let(name, rhs, self.parse_term())
        if t.text == "fun":
            lam = self.parse_fun()
            self.expect("in")
            return Let(name, lam, self.parse_term())
        vals = [self.parse_value()]
        while self.is_value_start():
            vals.append(self.parse_value())
        self.expect("in")
        body = self.parse_term()
        if len(vals) == 1:
            return Let(name, vals[0], body)
        return LetApp(name, vals[0], tuple(vals[1:]), body)

    def parse_fun(self) -> Lam:
        self.expect("fun")
        params = []
        while self.at("("):
            if self.peek(1).text == ")":
                break
            params.append(self.parse_annot_param())
        if not params:
            raise ParseError("fun needs at least one parameter")
        self.expect("->")
        body = self.parse_term()
        lam: Term = body
        for pname, base, phi in reversed(params):
            lam = Lam(pname, base, phi, lam)
        return lam

    def parse_if(self) -> Match:
        self.expect("if")
        scrut = self.parse_value()
        self.expect("then")
        then = self.parse_term()
        self.expect("else")
        other = self.parse_term()
        return Match(scrut, (Branch(PatConst(True), then),
                             Branch(PatConst(False), other)))

    def parse_match(self) -> Match:
        self.expect("match")
        scrut = self.parse_value()
        self.expect("with")
        branches = []
        while self.eat("|"):
            pat = self.parse_pattern()
            self.expect("->")
            body = self.parse_term()
            branches.append(Branch(pat, body))
        if not branches:
            raise ParseError("match needs at least one branch")
        return Match(scrut, tuple(branches))

    def parse_pattern(self):
        t = self.peek()
        if t.kind == "int":
            return PatConst(int(self.next().text))
        if t.text == "-" and self.peek(1).kind == "int":
            self.next()
            return PatConst(-int(self.next().text))
        if t.kind in ("char", "string"):
            return PatConst(_unquote(self.next().text))
        if t.text == "true":
            self.next()
            return PatConst(True)
        if t.text == "false":
            self.next()
            return PatConst(False)
        if t.text == "(" and self.peek(1).text == ")":
            self.next(), self.next()
            return PatConst(())
        if t.kind == "ident":
            name = self.next().text
            if name[0].isupper():
                binders = []
                while self.peek().kind == "ident" and not self.at("->"):
                    binders.append(self.check_program_name(self.next().text))
                return PatCtor(name, tuple(binders))
            raise ParseError(f"unknown pattern {name!r}", t.pos)
        raise ParseError(f"unexpected pattern token {t.text!r}", t.pos)

    def is_value_start(self) -> bool:
        t = self.peek()
        if t.kind in ("int", "char", "string"):
            return True
        if t.text in ("true", "false"):
            return True
        if t.text == "(" and self.peek(1).text == ")":
            return True
        if t.text == "-" and self.peek(1).kind == "int":
            return True
        if t.kind == "ident":
            return True
        return False

    def parse_value(self) -> Value:
        t = self.peek()
        if t.kind == "int":
            return Const(int(self.next().text), "int")
        if t.text == "-" and self.peek(1).kind == "int":
            self.next()
            return Const(-int(self.next().text), "int")
        if t.kind == "char":
            return Const(_unquote(self.next().text), "char")
        if t.kind == "string":
            return Const(_unquote(self.next().text), "string")
        if t.text == "true":
            self.next()
            return Const(True, "bool")
        if t.text == "false":
            self.next()
            return Const(False, "bool")
        if t.text == "(" and self.peek(1).text == ")":
            self.next(), self.next()
            return Const((), "unit")
        if t.text == "fun":
            return self.parse_fun()
        if t.text == "mod":
            self.next()
            return VarT("mod")
        if t.text == "(":
            self.next()
            v = self.parse_value()
            self.expect(")")
            return v
        if t.kind == "ident":
            name = self.next().text
            from .registry import CONSTANT_CTORS
            if name in CONSTANT_CTORS:
                val, base = CONSTANT_CTORS[name]
                return Const(val, base)
            self.check_program_name(name, t.pos)
            return VarT(name)
        raise ParseError(f"unexpected token {t.text!r} in value position", t.pos)

    def expect_eof(self):
        t = self.peek()
        if t.kind != "eof":
            raise ParseError(f"trailing input {t.text!r}", t.pos)


# ---------------------------------------------------------------------------
# Entry points

def parse_program(src: str, reg: Optional[Registry] = None) -> Term:
    reg = reg or Registry()
    p = Parser(src, reg)
    if p.peek().kind == "eof":
        raise ParseError("empty input")
    term = p.parse_term()
    p.expect_eof()
    return term


def parse_prop(src: str, reg: Optional[Registry] = None) -> Prop:
    p = Parser(src, reg or Registry())
    out = p.parse_prop()
    p.expect_eof()
    return out


def parse_history(src: str, reg: Optional[Registry] = None) -> hx.Hist:
    p = Parser(src, reg or Registry())
    out = p.parse_hist()
    p.expect_eof()
    return out


def parse_type(src: str, reg: Optional[Registry] = None):
    p = Parser(src, reg or Registry())
    out = p.parse_type()
    p.expect_eof()
    return out


def parse_op_sig(name: str, src: str, reg: Registry) -> OpSig:
    """Operator/action signature: a:[v:b|phi] -> ... -> {v:b|phi|psi}."""
    p = Parser(src, reg)
    params = []
    while not p.at("{"):
        pname = p.expect_ident()
        p.expect(":")
        over = p.parse_over()
        p.expect("->")
        params.append((pname, over.base, over.phi))
    result = p.parse_ect()
    p.expect_eof()
    return OpSig(name, tuple(params), result)


def parse_api_sig(src: str, reg: Registry):
    """API signature: a:[v:b|phi] -> ... -> ({v:b|phi|psi}, H)."""
    p = Parser(src, reg)
    params = []
    while not p.at("("):
        pname = p.expect_ident()
        p.expect(":")
        over = p.parse_over()
        p.expect("->")
        params.append((pname, over.base, over.phi))
    p.expect("(")
    ret = p.parse_ect()
    p.expect(",")
    effect = p.parse_hist()
    p.expect(")")
    p.expect_eof()
    return tuple(params), ret, effect


def parse_identifier_name(spec: str) -> Identifier:
    """'kind:Name' (kind defaults to file); index from trailing digits."""
    if ":" in spec:
        kind, name = spec.split(":", 1)
    else:
        kind, name = "file", spec
    m = re.search(r"(\d+)$", name)
    idx = int(m.group(1)) if m else 0
    return Identifier(idx, kind, name)
