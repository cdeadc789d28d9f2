"""Pretty printer.  Output re-parses to a structurally equal tree."""

from __future__ import annotations

import json

from linck.surface.syntax import (
    OPERATORS, Alt, App, Case, ClassDecl, Ctor, DataDecl, Decl, Do, Expr, Lam, Let, Lit, PCon,
    PrimDecl, PrimTypeDecl, Program, PVar, PWild, Pack, Pattern, SBind, SExpr, SLet, Stmt,
    SynonymDecl, Unpack, ValueDecl, Var,
)
from linck.types import Multiplicity, Scheme, TQual, show_type

# context levels: 0 anywhere, 1 operator operand, 2 function position, 3 argument
_TOP, _OPERAND, _FUN, _ARG = 0, 1, 2, 3


def show_scheme(s: Scheme) -> str:
    head = f"forall {' '.join(s.vars)}. " if s.vars else ""
    if s.given.is_empty():
        if isinstance(s.body, TQual):
            return f"{head}() =o {show_type(s.body)}"
        return head + show_type(s.body)
    return f"{head}{s.given.surface()} {s.given.surface_arrow()} {show_type(s.body)}"


def _mult(m: Multiplicity) -> str:
    return f"@{m.value}"


def _name(n: str) -> str:
    return f"({n})" if n in OPERATORS else n


def show_pattern(p: Pattern, arg: bool = False) -> str:
    if isinstance(p, PVar):
        return p.name
    if isinstance(p, PWild):
        return "_"
    if isinstance(p, PCon):
        if p.name == "()":
            return "()"
        if p.name == "(,)" and len(p.args) == 2:
            return f"({show_pattern(p.args[0])}, {show_pattern(p.args[1])})"
        if not p.args:
            return p.name
        s = p.name + " " + " ".join(show_pattern(a, True) for a in p.args)
        return f"({s})" if arg else s
    raise TypeError(p)


def _binop(e: Expr) -> tuple[str, Expr, Expr] | None:
    if isinstance(e, App) and isinstance(e.fn, App) and isinstance(e.fn.fn, Var) and e.fn.fn.name in OPERATORS:
        return e.fn.fn.name, e.fn.arg, e.arg
    return None


def _pair(e: Expr) -> tuple[Expr, Expr] | None:
    if isinstance(e, App) and isinstance(e.fn, App) and isinstance(e.fn.fn, Ctor) and e.fn.fn.name == "(,)":
        return e.fn.arg, e.arg
    return None


def show_expr(e: Expr, level: int = _TOP, indent: int = 0) -> str:
    def paren(s: str, at_least: int) -> str:
        return f"({s})" if level >= at_least else s

    if isinstance(e, Var):
        return _name(e.name)
    if isinstance(e, Ctor):
        return e.name
    if isinstance(e, Lit):
        return json.dumps(e.value) if isinstance(e.value, str) else str(e.value)
    pair = _pair(e)
    if pair is not None:
        return f"({show_expr(pair[0], _TOP, indent)}, {show_expr(pair[1], _TOP, indent)})"
    op = _binop(e)
    if op is not None:
        name, l, r = op
        return paren(f"{show_expr(l, _ARG, indent)} {name} {show_expr(r, _ARG, indent)}", _OPERAND)
    if isinstance(e, App):
        return paren(f"{show_expr(e.fn, _FUN, indent)} {show_expr(e.arg, _ARG, indent)}", _ARG)
    if isinstance(e, Pack):
        return paren(f"pack {show_expr(e.body, _ARG, indent)}", _FUN)
    if isinstance(e, Lam):
        return paren(f"\\{e.binder} -> {show_expr(e.body, _TOP, indent)}", _OPERAND)
    if isinstance(e, Unpack):
        s = f"let pack {e.binder} = {show_expr(e.rhs, _TOP, indent)} in {show_expr(e.body, _TOP, indent)}"
        return paren(s, _OPERAND)
    if isinstance(e, Let):
        sig = f" :: {show_scheme(e.scheme)}" if e.scheme is not None else ""
        s = (f"let {_mult(e.mult)} {e.binder}{sig} = {show_expr(e.rhs, _TOP, indent)} "
             f"in {show_expr(e.body, _TOP, indent)}")
        return paren(s, _OPERAND)
    if isinstance(e, Case):
        alts = "; ".join(_show_alt(a, indent) for a in e.alts)
        return paren(f"case {_mult(e.mult)} {show_expr(e.scrut, _TOP, indent)} of {{ {alts} }}", _OPERAND)
    if isinstance(e, Do):
        pad = " " * (indent + 2)
        body = (";\n" + pad).join(show_stmt(s, indent + 2) for s in e.stmts)
        return paren(f"do {{\n{pad}{body} }}", _OPERAND)
    raise TypeError(e)


def _show_alt(a: Alt, indent: int) -> str:
    return f"{show_pattern(a.pattern)} -> {show_expr(a.body, _TOP, indent)}"


def show_stmt(s: Stmt, indent: int = 0) -> str:
    if isinstance(s, SBind):
        return f"{show_pattern(s.pattern)} <- {show_expr(s.expr, _TOP, indent)}"
    if isinstance(s, SExpr):
        return show_expr(s.expr, _TOP, indent)
    if isinstance(s, SLet):
        sig = f" :: {show_scheme(s.scheme)}" if s.scheme is not None else ""
        return f"let {_mult(s.mult)} {s.binder}{sig} = {show_expr(s.rhs, _TOP, indent)}"
    raise TypeError(s)


def show_decl(d: Decl) -> str:
    if isinstance(d, ClassDecl):
        return ("dup " if d.dup else "") + " ".join(("class", d.name) + d.params)
    if isinstance(d, SynonymDecl):
        return " ".join(("constraint", d.name) + d.params) + f" = {d.body.surface()}"
    if isinstance(d, DataDecl):
        head = " ".join(("data", d.name) + d.params)
        if not d.ctors:
            return head
        ctors = []
        for c in d.ctors:
            fields = "".join(f" {_mult(m)} {show_type(t, 2)}" for m, t in c.fields)
            ctors.append(c.name + fields)
        return head + " = " + " | ".join(ctors)
    if isinstance(d, PrimTypeDecl):
        return " ".join(("primitive type", d.name) + d.params)
    if isinstance(d, PrimDecl):
        return f"primitive {_name(d.name)} :: {show_scheme(d.scheme)}"
    if isinstance(d, ValueDecl):
        lhs = " ".join((_name(d.name),) + d.params)
        return f"{_name(d.name)} :: {show_scheme(d.scheme)}\n{lhs} =\n  {show_expr(d.body, _TOP, 2)}"
    raise TypeError(d)


def pretty_print(p: Program) -> str:
    return "\n\n".join(show_decl(d) for d in p.decls) + "\n"
