"""Do-notation removal.

``do { x <- u; s }`` becomes ``Linearly.bind u (\\x -> s)``, ``do { u; s }``
becomes ``Linearly.then u s``, a final ``Linearly.return e`` becomes ``pack e``.
Binding a pattern goes through a fresh variable and a linear case.
"""

from __future__ import annotations

import itertools
from dataclasses import replace

from linck.surface.lexer import ParseError
from linck.surface.syntax import (
    BIND, RETURN, THEN, Alt, App, Case, Ctor, Decl, Do, Expr, Lam, Let, Lit, Pack, Program, PVar,
    SBind, SExpr, SLet, Stmt, Unpack, ValueDecl, Var,
)
from linck.types import One


class _Fresh:
    def __init__(self) -> None:
        self.n = itertools.count(1)

    def __call__(self) -> str:
        return f"bind'{next(self.n)}"


def desugar_do(stmts: tuple[Stmt, ...] | list[Stmt], fresh: _Fresh | None = None) -> Expr:
    fresh = fresh or _Fresh()
    stmts = list(stmts)
    if not stmts:
        raise ParseError("empty do block")
    last = stmts[-1]
    if not isinstance(last, SExpr):
        raise ParseError("the last statement of a do block must be an expression", getattr(last, "span", None))
    out = desugar_expr(last.expr, fresh)
    for s in reversed(stmts[:-1]):
        span = s.span
        if isinstance(s, SExpr):
            out = App(App(Var(THEN, span), desugar_expr(s.expr, fresh), span), out, span)
        elif isinstance(s, SLet):
            out = Let(s.mult, s.binder, s.scheme, desugar_expr(s.rhs, fresh), out, span)
        elif isinstance(s, SBind):
            u = desugar_expr(s.expr, fresh)
            if isinstance(s.pattern, PVar):
                k = Lam(s.pattern.name, out, span)
            else:
                y = fresh()
                k = Lam(y, Case(One, Var(y, span), (Alt(s.pattern, out, span),), span), span)
            out = App(App(Var(BIND, span), u, span), k, span)
        else:
            raise TypeError(s)
    return out


def desugar_expr(e: Expr, fresh: _Fresh | None = None) -> Expr:
    """Remove every do block and ``Linearly.return`` inside ``e``."""
    fresh = fresh or _Fresh()
    go = lambda x: desugar_expr(x, fresh)  # noqa: E731
    if isinstance(e, Do):
        return desugar_do(e.stmts, fresh)
    if isinstance(e, (Var, Ctor, Lit)):
        return e
    if isinstance(e, App):
        if isinstance(e.fn, Var) and e.fn.name == RETURN:
            return Pack(go(e.arg), e.span)
        return replace(e, fn=go(e.fn), arg=go(e.arg))
    if isinstance(e, Lam):
        return replace(e, body=go(e.body))
    if isinstance(e, Pack):
        return replace(e, body=go(e.body))
    if isinstance(e, Unpack):
        return replace(e, rhs=go(e.rhs), body=go(e.body))
    if isinstance(e, Case):
        return replace(e, scrut=go(e.scrut), alts=tuple(replace(a, body=go(a.body)) for a in e.alts))
    if isinstance(e, Let):
        return replace(e, rhs=go(e.rhs), body=go(e.body))
    raise TypeError(e)


def desugar_program(p: Program) -> Program:
    decls: list[Decl] = []
    for d in p.decls:
        if isinstance(d, ValueDecl):
            d = replace(d, body=desugar_expr(d.body))
        decls.append(d)
    return Program(tuple(decls), p.file)


def contains_do(e: Expr) -> bool:
    if isinstance(e, Do):
        return True
    if isinstance(e, App):
        if isinstance(e.fn, Var) and e.fn.name == RETURN:
            return True
        return contains_do(e.fn) or contains_do(e.arg)
    if isinstance(e, (Lam, Pack)):
        return contains_do(e.body)
    if isinstance(e, (Unpack, Let)):
        return contains_do(e.rhs) or contains_do(e.body)
    if isinstance(e, Case):
        return contains_do(e.scrut) or any(contains_do(a.body) for a in e.alts)
    return False
