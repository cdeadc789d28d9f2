"""Type and multiplicity checker for core.

Synthesises a type and a usage map for each term.  A linear binder must be
used exactly once in its scope; usages in different case branches that
disagree are joined to ``w``, which then fails that check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from linck.core.terms import (
    EV_PREFIX, CApp, CCase, CCtor, CExists, CLam, CLet, CLit, CoreProgram, CPack, CPCon, CPrim, CPVar,
    CUnpack, CVar, Term, cequal, cfree, csubst, show_ctype,
)
from linck.types import UNIT, Many, Multiplicity, One, TArrow, TCon, TVar, Type

Usage = dict[str, Multiplicity]


class CoreLintError(Exception):
    def __init__(self, rule: str, message: str, where: str | None = None, span: Any = None):
        self.rule = rule
        self.message = message
        self.where = where
        self.span = span
        super().__init__(str(self))

    def __str__(self) -> str:
        at = f" in {self.where}" if self.where else ""
        return f"[{self.rule}]{at}: {self.message}"


class ContextClashError(Exception):
    pass


@dataclass(frozen=True)
class Binding:
    mult: Multiplicity
    type: Type
    tyvars: tuple[str, ...] = ()


def context_add(g1: dict[str, Binding], g2: dict[str, Binding]) -> dict[str, Binding]:
    """Pointwise sum of two contexts; shared names must agree on their types."""
    out = dict(g1)
    for x, b in g2.items():
        a = out.get(x)
        if a is None:
            out[x] = b
        elif a.tyvars != b.tyvars or not cequal(a.type, b.type):
            raise ContextClashError(f"{x} has different types in the two contexts")
        else:
            out[x] = Binding(Many, a.type, a.tyvars)
    return out


def _add(u1: Usage, u2: Usage) -> Usage:
    out = dict(u1)
    for x, m in u2.items():
        out[x] = Many if x in out else m
    return out


def _scale(m: Multiplicity, u: Usage) -> Usage:
    return dict(u) if m is One else {x: Many for x in u}


def _mul(a: Multiplicity, b: Multiplicity) -> Multiplicity:
    return One if a is One and b is One else Many


class Linter:
    def __init__(self, prog: CoreProgram):
        self.prog = prog
        self.where: str | None = None

    def fail(self, rule: str, msg: str):
        raise CoreLintError(rule, msg, self.where)

    # -- schemes ------------------------------------------------------------

    def _inst(self, name: str, tyvars: tuple[str, ...], ty: Type, tyargs: tuple[Type, ...]) -> Type:
        if len(tyvars) != len(tyargs):
            self.fail("L-VAR", f"{name} expects {len(tyvars)} type argument(s), got {len(tyargs)}")
        return csubst(ty, dict(zip(tyvars, tyargs)))

    def ctor_type(self, name: str, tyargs: tuple[Type, ...]) -> Type:
        info = self.prog.ctors.get(name)
        if info is None:
            self.fail("L-CTOR", f"unknown constructor {name}")
        type_name, params, fields = info
        ty: Type = TCon(type_name, tuple(TVar(p) for p in params))
        for m, f in reversed(fields):
            ty = TArrow(m, f, ty)
        return self._inst(name, tuple(params), ty, tyargs)

    def prim_type(self, t: CPrim) -> Type:
        op, _, cls = t.name.partition("@")
        if cls and op in ("dup", "dis"):
            if cls not in self.prog.dup_classes:
                self.fail("L-PRIM", f"{cls} is not duplicable")
            ev = TCon(EV_PREFIX + cls, t.tyargs)
            return TArrow(One, ev, TCon("(,)", (ev, ev)) if op == "dup" else UNIT)
        b = self.prog.prims.get(t.name)
        if b is None:
            self.fail("L-PRIM", f"unknown primitive {t.name}")
        return self._inst(t.name, b.tyvars, b.type, t.tyargs)

    # -- terms --------------------------------------------------------------

    def expect(self, rule: str, got: Type, want: Type, what: str) -> None:
        if not cequal(got, want):
            self.fail(rule, f"{what} has type {show_ctype(got)}, expected {show_ctype(want)}")

    def bind(self, rule: str, x: str, mult: Multiplicity, u: Usage) -> Usage:
        used = u.pop(x, None)
        if mult is One and used is not One:
            how = "not used" if used is None else "used more than once"
            self.fail(rule, f"linear binder {x} is {how}")
        return u

    def synth(self, ctx: dict[str, Binding], t: Term) -> tuple[Type, Usage]:
        if isinstance(t, CVar):
            b = ctx.get(t.name)
            if b is not None:
                return self._inst(t.name, b.tyvars, b.type, t.tyargs), {t.name: One}
            g = self.prog.lookup(t.name)
            if g is None:
                self.fail("L-VAR", f"unbound variable {t.name}")
            return self._inst(t.name, g.tyvars, g.type, t.tyargs), {}
        if isinstance(t, CPrim):
            return self.prim_type(t), {}
        if isinstance(t, CCtor):
            return self.ctor_type(t.name, t.tyargs), {}
        if isinstance(t, CLit):
            return TCon("String" if isinstance(t.value, str) else "Int"), {}
        if isinstance(t, CLam):
            body_t, u = self.synth({**ctx, t.name: Binding(t.mult, t.type)}, t.body)
            return TArrow(t.mult, t.type, body_t), self.bind("L-ABS", t.name, t.mult, u)
        if isinstance(t, CApp):
            ft, u1 = self.synth(ctx, t.fn)
            if not isinstance(ft, TArrow):
                self.fail("L-APP", f"applying a non-function of type {show_ctype(ft)}")
            at, u2 = self.synth(ctx, t.arg)
            self.expect("L-APP", at, ft.dom, "argument")
            return ft.cod, _add(u1, _scale(ft.mult, u2))
        if isinstance(t, CPack):
            ex = t.exty
            if len(ex.vars) != len(t.tyargs):
                self.fail("L-PACK", "wrong number of witness types")
            sub = dict(zip(ex.vars, t.tyargs))
            et, u1 = self.synth(ctx, t.ev)
            self.expect("L-PACK", et, csubst(ex.ev, sub), "evidence")
            pt, u2 = self.synth(ctx, t.payload)
            self.expect("L-PACK", pt, csubst(ex.payload, sub), "payload")
            return ex, _add(u1, u2)
        if isinstance(t, CUnpack):
            rt, u1 = self.synth(ctx, t.rhs)
            if not isinstance(rt, CExists) or len(rt.vars) != len(t.tyvars):
                self.fail("L-UNPACK", f"unpacking a non-package of type {show_ctype(rt)}")
            taken = {v for b in ctx.values() for v in cfree(b.type)}
            if set(t.tyvars) & taken:
                self.fail("L-UNPACK", "unpacked type variables are not fresh")
            ren = {v: TVar(n) for v, n in zip(rt.vars, t.tyvars)}
            inner = {**ctx, t.evvar: Binding(One, csubst(rt.ev, ren)), t.var: Binding(One, csubst(rt.payload, ren))}
            bt, u2 = self.synth(inner, t.body)
            u2 = self.bind("L-UNPACK", t.evvar, One, u2)
            u2 = self.bind("L-UNPACK", t.var, One, u2)
            if set(cfree(bt)) & set(t.tyvars):
                self.fail("L-UNPACK", "an unpacked type variable escapes")
            return bt, _add(u1, u2)
        if isinstance(t, CCase):
            return self.case(ctx, t)
        if isinstance(t, CLet):
            rt, u1 = self.synth(ctx, t.rhs)
            self.expect("L-LET", rt, t.type, f"right-hand side of {t.name}")
            bt, u2 = self.synth({**ctx, t.name: Binding(t.mult, t.type, t.tyvars)}, t.body)
            u2 = self.bind("L-LET", t.name, t.mult, u2)
            return bt, _add(_scale(t.mult, u1), u2)
        raise TypeError(t)

    def case(self, ctx: dict[str, Binding], t: CCase) -> tuple[Type, Usage]:
        st, us = self.synth(ctx, t.scrut)
        if not isinstance(st, TCon) or st.name not in self.prog.type_ctors:
            self.fail("L-CASE", f"case on a value of type {show_ctype(st)}")
        ctors = self.prog.type_ctors[st.name]
        seen: set[str] = set()
        result: Type | None = None
        joined: Usage | None = None
        for alt in t.alts:
            p = alt.pattern
            if not isinstance(p, CPCon) or p.name not in ctors:
                self.fail("L-CASE", f"pattern does not match type {st.name}")
            if p.name in seen:
                self.fail("L-CASE", f"duplicate alternative {p.name}")
            seen.add(p.name)
            _, params, fields = self.prog.ctors[p.name]
            if len(p.args) != len(fields):
                self.fail("L-CASE", f"{p.name} expects {len(fields)} field(s)")
            sub = dict(zip(params, st.args))
            inner = dict(ctx)
            binders = []
            for sub_p, (m, ft) in zip(p.args, fields):
                if not isinstance(sub_p, CPVar):
                    self.fail("L-CASE", "nested pattern left in core; run flattening first")
                bm = _mul(t.mult, m)
                inner[sub_p.name] = Binding(bm, csubst(ft, sub))
                binders.append((sub_p.name, bm))
            bt, ub = self.synth(inner, alt.body)
            for x, bm in binders:
                ub = self.bind("L-CASE", x, bm, ub)
            if result is None:
                result = bt
            else:
                self.expect("L-CASE", bt, result, "branch")
            joined = ub if joined is None else _join(joined, ub)
        if seen != set(ctors):
            self.fail("L-CASE", f"missing alternatives: {', '.join(sorted(set(ctors) - seen))}")
        if result is None:
            self.fail("L-CASE", "empty case")
        return result, _add(_scale(t.mult, us), joined or {})

    # -- bindings -----------------------------------------------------------

    def check_binding(self, name: str) -> None:
        b = self.prog.bindings[name]
        self.where = name
        t, u = self.synth({}, b.term)
        self.expect("L-TOP", t, b.type, name)
        if u:
            self.fail("L-TOP", f"free local variables: {', '.join(sorted(u))}")
        self.where = None


def _join(u1: Usage, u2: Usage) -> Usage:
    out: Usage = {}
    for x in set(u1) | set(u2):
        a, b = u1.get(x), u2.get(x)
        out[x] = a if a is b else Many
    return out


def core_typecheck(prog: CoreProgram, ctx: dict[str, Binding], term: Term) -> Type:
    """Type of ``term`` under ``ctx``; linear entries of ``ctx`` must be used exactly once."""
    lint = Linter(prog)
    t, u = lint.synth(ctx, term)
    for x, b in ctx.items():
        lint.bind("L-VAR", x, b.mult, u)
    return t


def lint_program(prog: CoreProgram, names=None) -> list[CoreLintError]:
    errors = []
    lint = Linter(prog)
    for name in names if names is not None else prog.bindings:
        try:
            lint.check_binding(name)
        except CoreLintError as err:
            err.span = prog.bindings[name].span
            errors.append(err)
    return errors
