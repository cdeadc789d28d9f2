"""Recursive-descent parser for programs, expressions, types and constraints."""

from __future__ import annotations

from linck.constraints import EPS, Atom, SimpleConstraint
from linck.surface.lexer import ParseError, Token, tokenize
from linck.surface.syntax import (
    OPERATORS, RETURN, Alt, App, Case, ClassDecl, Ctor, CtorDecl, DataDecl, Decl, Do, Expr,
    Lam, Let, Lit, PCon, PrimDecl, PrimTypeDecl, Program, PVar, PWild, Pack, Pattern, SBind,
    Scheme, SExpr, SLet, Span, Stmt, SynonymDecl, Unpack, ValueDecl, Var,
)
from linck.types import BOOL, INT, STRING, UNIT, Many, Multiplicity, One, TArrow, TCon, TExists, TQual, TVar, Type

_EXPR_KEYWORDS = {"\\", "let", "case", "if", "do", "Linearly.do"}
_BUILTIN_TYPES = {"Int": INT, "String": STRING, "Bool": BOOL}


class Parser:
    def __init__(self, text: str, file: str = "<input>"):
        self.toks = tokenize(text, file)
        self.i = 0
        self.file = file
        self.in_do = 0

    # -- token helpers ------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind != "string" and t.text in texts

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, *texts: str) -> Token:
        if not self.at(*texts):
            self.fail(f"unexpected {self.describe(self.tok)}", set(texts))
        return self.advance()

    def fail(self, msg: str, expected: set[str] | frozenset[str] = frozenset(), span: Span | None = None):
        raise ParseError(msg, span or self.tok.span, frozenset(expected))

    @staticmethod
    def describe(t: Token) -> str:
        if t.kind == "eof":
            return "end of input"
        if t.kind == "sep":
            return "start of a new declaration"
        return repr(t.text)

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            self.fail(f"unexpected {self.describe(self.tok)}", {"identifier"})
        return self.advance()

    def conid(self) -> Token:
        if self.tok.kind != "conid":
            self.fail(f"unexpected {self.describe(self.tok)}", {"constructor name"})
        return self.advance()

    def span_from(self, start: Span) -> Span:
        prev = self.toks[self.i - 1].span if self.i > 0 else start
        return Span(start.start_line, start.start_col, prev.end_line, prev.end_col, start.file)

    # -- multiplicities -------------------------------------------------------

    def mult_annotation(self, default: Multiplicity) -> Multiplicity:
        if not self.at("@"):
            return default
        self.advance()
        t = self.tok
        if t.kind == "int" and t.value == 1:
            self.advance()
            return One
        if t.kind == "ident" and t.text == "w":
            self.advance()
            return Many
        self.fail(f"unknown multiplicity {self.describe(t)}", {"1", "w"})

    # -- programs ---------------------------------------------------------------

    def program(self) -> Program:
        decls: list[Decl] = []
        sigs: dict[str, tuple[Scheme, Span]] = {}
        defined: set[str] = set()
        while self.tok.kind != "eof":
            if self.at(";;"):
                self.advance()
                continue
            start = self.tok.span
            d = self.decl(sigs)
            if d is None:
                pass
            else:
                name = getattr(d, "name", None)
                if isinstance(d, (ValueDecl, PrimDecl)):
                    if name in defined:
                        self.fail(f"duplicate definition of {name}", span=start)
                    defined.add(name)
                decls.append(d)
            if self.tok.kind not in ("eof", "sep"):
                self.fail(f"unexpected {self.describe(self.tok)}", {"end of declaration"})
        missing = sorted(set(sigs) - defined)
        if missing:
            raise ParseError(f"signature for {missing[0]} lacks a defining equation", sigs[missing[0]][1])
        return Program(tuple(decls), self.file)

    def decl(self, sigs: dict) -> Decl | None:
        start = self.tok.span
        if self.at("class"):
            self.advance()
            return self.class_decl(start, dup=False)
        if self.at("dup") and self.peek(1).text == "class":
            self.advance()
            self.expect("class")
            return self.class_decl(start, dup=True)
        if self.at("constraint"):
            self.advance()
            name = self.conid().text
            params = self.tyvar_list()
            self.expect("=")
            body = self.constraint()
            return SynonymDecl(name, params, body, self.span_from(start))
        if self.at("data"):
            self.advance()
            return self.data_decl(start)
        if self.at("primitive"):
            self.advance()
            if self.at("type"):
                self.advance()
                name = self.conid().text
                return PrimTypeDecl(name, self.tyvar_list(), self.span_from(start))
            name = self.value_name()
            self.expect("::")
            return PrimDecl(name, self.scheme(), self.span_from(start))
        # signature or equation
        name_tok = self.tok
        name = self.value_name()
        if self.at("::"):
            self.advance()
            if name in sigs:
                self.fail(f"duplicate signature for {name}", span=start)
            sigs[name] = (self.scheme(), start)
            return None
        params = []
        while self.tok.kind == "ident" or self.at("_"):
            params.append("_" if self.at("_") else self.tok.text)
            self.advance()
        self.expect("=")
        body = self.expr()
        if name not in sigs:
            raise ParseError(f"definition of {name} has no type signature", name_tok.span)
        return ValueDecl(name, sigs[name][0], tuple(params), body, self.span_from(start))

    def value_name(self) -> str:
        if self.at("(") and self.peek(1).text in OPERATORS and self.peek(2).text == ")":
            self.advance()
            op = self.advance().text
            self.advance()
            return op
        return self.ident().text

    def tyvar_list(self) -> tuple[str, ...]:
        out = []
        while self.tok.kind == "ident":
            out.append(self.advance().text)
        return tuple(out)

    def class_decl(self, start: Span, dup: bool) -> ClassDecl:
        name = self.conid().text
        return ClassDecl(name, self.tyvar_list(), dup, self.span_from(start))

    def data_decl(self, start: Span) -> DataDecl:
        name = self.conid().text
        params = self.tyvar_list()
        ctors = []
        if self.at("="):
            self.advance()
            while True:
                cstart = self.tok.span
                cname = self.conid().text
                fields = []
                while self.at("@", "(") or self.tok.kind in ("ident", "conid"):
                    m = self.mult_annotation(One)
                    fields.append((m, self.atype()))
                ctors.append(CtorDecl(cname, tuple(fields), self.span_from(cstart)))
                if not self.at("|"):
                    break
                self.advance()
        return DataDecl(name, params, tuple(ctors), self.span_from(start))

    # -- types ------------------------------------------------------------------

    def scheme(self) -> Scheme:
        vars_: tuple[str, ...] = ()
        if self.at("forall"):
            self.advance()
            vars_ = self.tyvar_list()
            self.expect(".")
        t = self.qtype()
        if isinstance(t, TQual):
            return Scheme(vars_, t.given, t.body)
        return Scheme(vars_, EPS, t)

    def qtype(self) -> Type:
        if self.at("exists"):
            start = self.advance().span
            vars_ = self.tyvar_list()
            if not vars_:
                self.fail("existential binds no variables", {"type variable"})
            self.expect(".")
            t = self.startype()
            if not isinstance(t, TExists) or t.vars:
                self.fail("existential body must have the form 'type * constraint'", {"*"}, start)
            return TExists(vars_, t.body, t.given)
        start = self.tok.span
        t = self.arrowtype()
        if self.at("=o", "=>"):
            mult = One if self.advance().text == "=o" else Many
            given = self.type_to_constraint(t, start).scale(mult)
            return TQual(given, self.qtype())
        return t

    def arrowtype(self) -> Type:
        t = self.startype()
        if self.at("->", "-o"):
            mult = Many if self.advance().text == "->" else One
            return TArrow(mult, t, self.qtype())
        return t

    def startype(self) -> Type:
        t = self.btype()
        if self.at("*"):
            self.advance()
            return TExists((), t, self.constraint())
        return t

    def btype(self) -> Type:
        if self.tok.kind == "conid":
            name = self.advance().text
            args = []
            while self.at("(") or self.tok.kind in ("ident", "conid"):
                args.append(self.atype())
            return self.mk_con(name, args)
        return self.atype()

    def mk_con(self, name: str, args: list[Type]) -> Type:
        if name in _BUILTIN_TYPES and not args:
            return _BUILTIN_TYPES[name]
        return TCon(name, tuple(args))

    def atype(self) -> Type:
        t = self.tok
        if t.kind == "ident":
            self.advance()
            return TVar(t.text)
        if t.kind == "conid":
            self.advance()
            return self.mk_con(t.text, [])
        if self.at("("):
            self.advance()
            if self.at(")"):
                self.advance()
                return UNIT
            items = [self.qtype()]
            while self.at(","):
                self.advance()
                items.append(self.qtype())
            self.expect(")", ",")
            out = items[-1]
            for x in reversed(items[:-1]):
                out = TCon("(,)", (x, out))
            return out
        self.fail(f"unexpected {self.describe(t)}", {"type"})

    def type_to_constraint(self, t: Type, span: Span) -> SimpleConstraint:
        if t == UNIT:
            return EPS
        if isinstance(t, TCon) and t.name == "(,)":
            return self.type_to_constraint(t.args[0], span).tensor(self.type_to_constraint(t.args[1], span))
        if isinstance(t, TCon) and t.name not in ("Int", "String", "Bool"):
            return SimpleConstraint.atom(Atom(t.name, t.args))
        raise ParseError(f"{t} is not a constraint", span, frozenset({"constraint"}))

    def constraint(self) -> SimpleConstraint:
        if self.at("("):
            start = self.advance().span
            if self.at(")"):
                self.advance()
                return EPS
            q = self.constraint()
            while self.at(","):
                self.advance()
                q = q.tensor(self.constraint())
            self.expect(")", ",")
            return q
        name = self.conid().text
        args = []
        while self.at("(") or self.tok.kind in ("ident", "conid"):
            args.append(self.atype())
        return SimpleConstraint.atom(Atom(name, tuple(args)))

    # -- expressions --------------------------------------------------------------

    def expr(self) -> Expr:
        t = self.tok
        if self.at("\\"):
            self.advance()
            names = []
            while self.tok.kind == "ident" or self.at("_"):
                names.append(self.advance().text)
            if not names:
                self.fail("lambda without binders", {"identifier"})
            self.expect("->")
            body = self.expr()
            for n in reversed(names):
                body = Lam(n, body, self.span_from(t.span))
            return body
        if self.at("let"):
            return self.let_expr()
        if self.at("case"):
            return self.case_expr()
        if self.at("if"):
            return self.if_expr()
        if self.at("do", "Linearly.do"):
            return self.do_block()
        return self.op_expr(0)

    def let_expr(self) -> Expr:
        start = self.advance().span
        default = Many
        mult = self.mult_annotation(default)
        if self.at("pack"):
            self.advance()
            name = self.ident().text
            self.expect("=")
            rhs = self.expr()
            self.expect("in")
            return Unpack(name, rhs, self.expr(), self.span_from(start))
        name, scheme, rhs = self.let_binding()
        self.expect("in")
        body = self.expr()
        return Let(mult, name, scheme, rhs, body, self.span_from(start))

    def let_binding(self) -> tuple[str, Scheme | None, Expr]:
        name = self.ident().text
        scheme = None
        if self.at("::"):
            self.advance()
            scheme = self.scheme()
        self.expect("=", "::")
        return name, scheme, self.expr()

    def case_expr(self) -> Expr:
        start = self.advance().span
        mult = self.mult_annotation(One if self.in_do else Many)
        scrut = self.expr()
        self.expect("of")
        self.expect("{")
        alts = []
        while True:
            astart = self.tok.span
            pat = self.pattern()
            self.expect("->")
            alts.append(Alt(pat, self.expr(), self.span_from(astart)))
            if self.at(";"):
                self.advance()
                if self.at("}"):
                    break
                continue
            break
        self.expect("}", ";")
        return Case(mult, scrut, tuple(alts), self.span_from(start))

    def if_expr(self) -> Expr:
        start = self.advance().span
        mult = self.mult_annotation(One if self.in_do else Many)
        cond = self.expr()
        self.expect("then")
        a = self.expr()
        self.expect("else")
        b = self.expr()
        span = self.span_from(start)
        return Case(mult, cond, (Alt(PCon("True"), a, a_span(a)), Alt(PCon("False"), b, a_span(b))), span)

    def do_block(self) -> Expr:
        start = self.advance().span
        self.expect("{")
        self.in_do += 1
        stmts: list[Stmt] = []
        while not self.at("}"):
            stmts.append(self.stmt())
            if not self.at(";"):
                break
            self.advance()
        self.in_do -= 1
        self.expect("}", ";")
        if not stmts:
            self.fail("empty do block", span=start)
        return Do(tuple(stmts), self.span_from(start))

    def stmt(self) -> Stmt:
        start = self.tok.span
        if self.at("let") and not self._let_in_ahead():
            self.advance()
            mult = self.mult_annotation(Many)
            name, scheme, rhs = self.let_binding()
            return SLet(mult, name, scheme, rhs, self.span_from(start))
        save = self.i
        try:
            pat = self.pattern()
            if self.at("<-"):
                self.advance()
                return SBind(pat, self.expr(), self.span_from(start))
        except ParseError:
            pass
        self.i = save
        return SExpr(self.expr(), self.span_from(start))

    def _let_in_ahead(self) -> bool:
        """Whether a ``let`` inside a do block is a let-in expression."""
        depth = 0
        for t in self.toks[self.i + 1:]:
            if t.text in ("(", "{"):
                depth += 1
            elif t.text in (")", "}"):
                if depth == 0:
                    return False
                depth -= 1
            elif depth == 0 and t.text == ";":
                return False
            elif depth == 0 and t.text == "in" and t.kind == "kw":
                return True
            elif t.kind in ("eof", "sep"):
                return False
        return False

    def op_expr(self, min_prec: int) -> Expr:
        if self.at(*_EXPR_KEYWORDS):
            return self.expr()
        left = self.app_expr()
        while True:
            t = self.tok
            if t.kind != "sym":
                return left
            if t.text == "$":
                if min_prec > 0:
                    return left
                self.advance()
                right = self.op_expr(0)
                left = App(left, right, _join(left, right))
                continue
            info = OPERATORS.get(t.text)
            if info is None:
                return left
            prec, assoc = info
            if prec < min_prec:
                return left
            self.advance()
            next_min = prec if assoc == "right" else prec + 1
            right = self.op_expr(next_min)
            op = Var(t.text, t.span)
            left = App(App(op, left, _join(left, op)), right, _join(left, right))
            if assoc == "none" and self.tok.text in OPERATORS and OPERATORS[self.tok.text][0] == prec:
                self.fail(f"non-associative operator {self.tok.text} chained", span=self.tok.span)

    def app_expr(self) -> Expr:
        t = self.tok
        if self.at("pack"):
            self.advance()
            if self.at("$"):
                self.advance()
                body = self.op_expr(0)
            elif self.at(*_EXPR_KEYWORDS):
                body = self.expr()
            else:
                body = self.aexpr()
            return Pack(body, self.span_from(t.span))
        fn = self.aexpr()
        while self._starts_aexpr():
            arg = self.aexpr()
            fn = App(fn, arg, _join(fn, arg))
        return fn

    def _starts_aexpr(self) -> bool:
        t = self.tok
        if t.kind in ("ident", "conid", "qual", "int", "string"):
            return t.text != "Linearly.do"
        return t.text in ("(", "(,)")

    def aexpr(self) -> Expr:
        t = self.tok
        if t.kind == "ident":
            self.advance()
            return Var(t.text, t.span)
        if t.kind == "qual":
            self.advance()
            return Var(t.text, t.span)
        if t.kind == "conid":
            self.advance()
            return Ctor(t.text, t.span)
        if t.kind in ("int", "string"):
            self.advance()
            return Lit(t.value, t.span)
        if self.at("(,)"):
            self.advance()
            return Ctor("(,)", t.span)
        if self.at("("):
            self.advance()
            if self.at(")"):
                self.advance()
                return Ctor("()", self.span_from(t.span))
            if self.tok.text in OPERATORS and self.peek(1).text == ")":
                op = self.advance()
                self.advance()
                return Var(op.text, op.span)
            e = self.expr()
            if self.at(","):
                self.advance()
                e2 = self.expr()
                self.expect(")")
                span = self.span_from(t.span)
                return App(App(Ctor("(,)", t.span), e, span), e2, span)
            self.expect(")", ",")
            return e
        self.fail(f"unexpected {self.describe(t)}", {"expression"})

    # -- patterns -------------------------------------------------------------------

    def pattern(self) -> Pattern:
        t = self.tok
        if t.kind == "conid":
            self.advance()
            args = []
            while self.tok.kind in ("ident", "conid") or self.at("(", "_"):
                args.append(self.apattern())
            return PCon(t.text, tuple(args), self.span_from(t.span))
        return self.apattern()

    def apattern(self) -> Pattern:
        t = self.tok
        if t.kind == "ident":
            self.advance()
            return PVar(t.text, t.span)
        if self.at("_"):
            self.advance()
            return PWild(t.span)
        if t.kind == "conid":
            self.advance()
            return PCon(t.text, (), t.span)
        if self.at("("):
            self.advance()
            if self.at(")"):
                self.advance()
                return PCon("()", (), self.span_from(t.span))
            p = self.pattern()
            if self.at(","):
                self.advance()
                q = self.pattern()
                self.expect(")")
                return PCon("(,)", (p, q), self.span_from(t.span))
            self.expect(")", ",")
            return p
        self.fail(f"unexpected {self.describe(t)}", {"pattern"})


def a_span(e: Expr) -> Span | None:
    return getattr(e, "span", None)


def _join(a: Expr, b: Expr) -> Span | None:
    sa, sb = a_span(a), a_span(b)
    if sa is None:
        return sb
    return sa.to(sb)


def parse_program(text: str, file: str = "<input>") -> Program:
    return Parser(text, file).program()


def parse_expr(text: str, file: str = "<input>") -> Expr:
    p = Parser(text, file)
    e = p.expr()
    if p.tok.kind != "eof":
        p.fail(f"unexpected {p.describe(p.tok)}", {"end of input"})
    return e


def parse_scheme(text: str) -> Scheme:
    p = Parser(text)
    s = p.scheme()
    if p.tok.kind != "eof":
        p.fail(f"unexpected {p.describe(p.tok)}", {"end of input"})
    return s


def parse_type(text: str) -> Type:
    p = Parser(text)
    t = p.qtype()
    if p.tok.kind != "eof":
        p.fail(f"unexpected {p.describe(p.tok)}", {"end of input"})
    return t
