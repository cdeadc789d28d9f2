"""Bidirectional type checker with usage tracking.

Checking a declaration produces a derivation tree; constraints are not solved
here.  Linear variables are tracked with usage maps (variable -> 1 or w) and
validated where they are bound.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Any

from linck.constraints import EPS, Atom, SimpleConstraint
from linck.surface.syntax import (
    BIND, THEN, Alt, App, Case, Ctor, Expr, Lam, Let, Lit, PCon, Program, PVar, PWild, Pack,
    Pattern, Unpack, ValueDecl, Var,
)
from linck.types import (
    INT, STRING, UNIT, Many, Multiplicity, One, Scheme, TArrow, TCon, TExists, TMeta, TQual, TVar,
    Type, free_vars, map_type, metas, show_type, subst_type,
)
from linck.typing.derivation import (
    D, DAbs, DAlt, DApp, DCase, DCtor, DDecl, DLet, DLetSig, DLit, DPack, DQual, DUnpack, DVar,
    map_derivation_types,
)
from linck.typing.env import GlobalEnv, LinearityError, TypeCheckError, add_usage, scale_usage


@dataclass(frozen=True)
class Local:
    mult: Multiplicity
    type: Type | None = None
    scheme: Scheme | None = None


@dataclass
class TypedProgram:
    env: GlobalEnv
    decls: list[DDecl]

    def decl(self, name: str) -> DDecl:
        for d in self.decls:
            if d.name == name:
                return d
        raise KeyError(name)


def instantiate_scheme(s: Scheme, fresh) -> tuple[dict[str, Type], SimpleConstraint, Type]:
    """Replace the scheme's variables by ``fresh()`` types; returns (subst, given, body)."""
    sub = {v: fresh() for v in s.vars}
    return sub, s.given.substitute(sub, strict=False), subst_type(s.body, sub)


class Checker:
    def __init__(self, env: GlobalEnv):
        self.env = env
        self.subst: dict[int, Type] = {}
        self.uids = itertools.count()
        self.names = itertools.count(1)
        self.used_tyvars: set[str] = set()

    # -- metas and zonking ---------------------------------------------------------

    def meta(self) -> TMeta:
        return TMeta(next(self.uids))

    def zonk(self, t: Type) -> Type:
        def leaf(v: Type) -> Type | None:
            if isinstance(v, TMeta) and v.uid in self.subst:
                return self.zonk(self.subst[v.uid])
            return None
        return map_type(t, leaf)

    def zonk_q(self, q: SimpleConstraint) -> SimpleConstraint:
        return q.map_types(self.zonk)

    def fresh_skolem(self, base: str) -> str:
        base = base.rstrip("0123456789") or base
        name, k = base, 0
        while name in self.used_tyvars:
            k += 1
            name = f"{base}{k}"
        self.used_tyvars.add(name)
        return name

    def fresh_name(self, base: str) -> str:
        return f"{base}'{next(self.names)}"

    # -- unification -------------------------------------------------------------------

    def unify(self, a: Type, b: Type, span: Any) -> None:
        try:
            self._unify(a, b)
        except TypeCheckError as err:
            za, zb = self.zonk(a), self.zonk(b)
            msg = f"cannot match {show_type(zb)} with {show_type(za)}"
            if err.message != "mismatch":
                msg += f": {err.message}"
            raise TypeCheckError(msg, span) from None

    def _unify(self, a: Type, b: Type) -> None:
        a, b = self._head(a), self._head(b)
        if isinstance(a, TMeta) or isinstance(b, TMeta):
            if a == b:
                return
            m, t = (a, b) if isinstance(a, TMeta) else (b, a)
            if m.uid in set(metas(self.zonk(t))):
                raise TypeCheckError("occurs check: infinite type")
            self.subst[m.uid] = t
            return
        if isinstance(a, TVar) and isinstance(b, TVar) and a.name == b.name:
            return
        if isinstance(a, TCon) and isinstance(b, TCon) and a.name == b.name and len(a.args) == len(b.args):
            for x, y in zip(a.args, b.args):
                self._unify(x, y)
            return
        if isinstance(a, TArrow) and isinstance(b, TArrow):
            if a.mult is not b.mult:
                raise TypeCheckError("arrow multiplicities differ")
            self._unify(a.dom, b.dom)
            self._unify(a.cod, b.cod)
            return
        if isinstance(a, TExists) and isinstance(b, TExists) and len(a.vars) == len(b.vars):
            common = [TVar(f"%x{next(self.uids)}") for _ in a.vars]
            sa, sb = dict(zip(a.vars, common)), dict(zip(b.vars, common))
            self._unify(subst_type(a.body, sa), subst_type(b.body, sb))
            self._unify_q(a.given.substitute(sa, strict=False), b.given.substitute(sb, strict=False))
            return
        if isinstance(a, TQual) and isinstance(b, TQual):
            self._unify_q(a.given, b.given)
            self._unify(a.body, b.body)
            return
        raise TypeCheckError("mismatch")

    def _head(self, t: Type) -> Type:
        while isinstance(t, TMeta) and t.uid in self.subst:
            t = self.subst[t.uid]
        return t

    def _unify_q(self, q1: SimpleConstraint, q2: SimpleConstraint) -> None:
        q1, q2 = self.zonk_q(q1), self.zonk_q(q2)
        if q1 == q2:
            return
        left, right = q1.items(), list(q2.items())
        if len(left) != len(right):
            raise TypeCheckError(f"constraints {q1.surface()} and {q2.surface()} differ")
        for m, a in left:
            for i, (m2, b) in enumerate(right):
                if m is m2 and a.class_name == b.class_name and self._try(a, b):
                    del right[i]
                    break
            else:
                raise TypeCheckError(f"constraints {q1.surface()} and {q2.surface()} differ")

    def _try(self, a: Atom, b: Atom) -> bool:
        saved = dict(self.subst)
        try:
            for x, y in zip(a.args, b.args):
                self._unify(x, y)
            return True
        except TypeCheckError:
            self.subst = saved
            return False

    # -- declarations ------------------------------------------------------------------

    def check_decl(self, d: ValueDecl) -> DDecl:
        self.subst.clear()
        scheme = self.env.values[d.name]
        self.used_tyvars = set(scheme.vars)
        scope = {v: TVar(v) for v in scheme.vars}
        body: Expr = d.body
        for p in reversed(d.params):
            body = Lam(p, body, d.span)
        node = self.check(body, scheme.body, {}, scope)
        self.finish(node)
        return DDecl(d.name, scheme, node, d.span)

    def finish(self, node: D) -> None:
        def close(t: Type) -> Type:
            z = self.zonk(t)
            # anything still undetermined carries no information; pick unit
            return map_type(z, lambda v: UNIT if isinstance(v, TMeta) else None)
        map_derivation_types(node, close)

    # -- checking -----------------------------------------------------------------------

    def check(self, e: Expr, expected: Type, ctx: dict[str, Local], scope: dict[str, Type]) -> D:
        exp = self.zonk(expected)
        span = getattr(e, "span", None)
        if isinstance(exp, TQual):
            inner = self.check(e, exp.body, ctx, scope)
            return DQual(exp, inner.usage, span, given=exp.given, inner=inner)
        if isinstance(e, Lam):
            if not isinstance(exp, TArrow):
                raise TypeCheckError(f"a function cannot have type {show_type(exp)}", span)
            body = self.check(e.body, exp.cod, {**ctx, e.binder: Local(exp.mult, exp.dom)}, scope)
            usage = self.bind_usage(e.binder, exp.mult, body.usage, span)
            return DAbs(exp, usage, span, binder=e.binder, mult=exp.mult, dom=exp.dom, body=body)
        if isinstance(e, Pack):
            if not isinstance(exp, TExists):
                raise TypeCheckError(f"pack needs an existential type, not {show_type(exp)}", span)
            sub = {v: self.meta() for v in exp.vars}
            body = self.check(e.body, subst_type(exp.body, sub), ctx, scope)
            emitted = exp.given.substitute(sub, strict=False)
            return DPack(exp, body.usage, span, body=body, exty=exp, tyargs=tuple(sub.values()), emitted=emitted)
        if isinstance(e, App):
            return self.app(e, ctx, scope, exp)
        if isinstance(e, (Case, Let, Unpack)):
            return self.structural(e, ctx, scope, exp)
        d = self.infer(e, ctx, scope)
        self.unify(d.type, exp, span)
        return d

    def infer(self, e: Expr, ctx: dict[str, Local], scope: dict[str, Type]) -> D:
        span = getattr(e, "span", None)
        if isinstance(e, Var):
            return self.var(e, ctx)
        if isinstance(e, Ctor):
            info = self.env.ctors.get(e.name)
            if info is None:
                raise TypeCheckError(f"unknown constructor {e.name}", span)
            sub = {p: self.meta() for p in info.params}
            t: Type = subst_type(info.result_type(), sub)
            for m, f in reversed(info.fields):
                t = TArrow(m, subst_type(f, sub), t)
            return DCtor(t, {}, span, name=e.name, tyargs=tuple(sub.values()))
        if isinstance(e, Lit):
            return DLit(INT if isinstance(e.value, int) else STRING, {}, span, value=e.value)
        if isinstance(e, App):
            return self.app(e, ctx, scope, None)
        if isinstance(e, (Case, Let, Unpack)):
            return self.structural(e, ctx, scope, None)
        if isinstance(e, Lam):
            raise TypeCheckError("cannot infer the type of a lambda here; give it a signature", span)
        if isinstance(e, Pack):
            raise TypeCheckError("cannot infer the type of a package here; give it a signature", span)
        raise TypeCheckError(f"unsupported expression {type(e).__name__}", span)

    def var(self, e: Var, ctx: dict[str, Local]) -> DVar:
        span = e.span
        loc = ctx.get(e.name)
        if loc is not None:
            usage = {e.name: One}
            if loc.scheme is not None:
                sub, given, body = instantiate_scheme(loc.scheme, self.meta)
                return DVar(body, usage, span, name=e.name, local=True, scheme_vars=loc.scheme.vars,
                            tyargs=tuple(sub.values()), generic=loc.scheme.given, emitted=given, has_scheme=True,
                            generic_type=loc.scheme.body)
            t = self.zonk(loc.type)
            if isinstance(t, TQual):
                return DVar(t.body, usage, span, name=e.name, local=True, generic=t.given, emitted=t.given)
            return DVar(t, usage, span, name=e.name, local=True)
        s = self.env.values.get(e.name)
        if s is None:
            raise TypeCheckError(f"unknown variable {e.name}", span)
        sub, given, body = instantiate_scheme(s, self.meta)
        return DVar(body, {}, span, name=e.name, scheme_vars=s.vars, tyargs=tuple(sub.values()),
                    generic=s.given, emitted=given, generic_type=s.body)

    def app(self, e: App, ctx, scope, expected: Type | None) -> D:
        head: Expr = e
        args: list[Expr] = []
        while isinstance(head, App):
            args.append(head.arg)
            head = head.fn
        args.reverse()
        if isinstance(head, Var) and head.name in (BIND, THEN) and head.name not in ctx:
            if len(args) != 2:
                raise TypeCheckError(f"{head.name} expects two arguments", e.span)
            return self.sequence(head.name, args[0], args[1], ctx, scope, expected, e.span)
        hd = self.infer(head, ctx, scope)
        t = self.zonk(hd.type)
        doms = []
        for a in args:
            t = self.zonk(t)
            if not isinstance(t, TArrow):
                raise TypeCheckError(f"{show_type(t)} is not a function type", getattr(a, "span", e.span))
            doms.append((t.mult, t.dom))
            t = t.cod
        # constraint matching against the expected result is ambiguous while its
        # atoms still hold metas, so let the arguments fix them first
        late = expected is not None and self._open_constraints(t)
        if expected is not None and not late:
            self.unify(t, expected, e.span)
        node = hd
        # rebuild the spine with the spans of the source application nodes
        spans, cur = [], e
        while isinstance(cur, App):
            spans.append(cur.span)
            cur = cur.fn
        spans.reverse()
        for (m, dom), a, sp in zip(doms, args, spans):
            arg = self.check(a, dom, ctx, scope)
            cod = self.zonk(node.type).cod
            usage = add_usage(node.usage, scale_usage(m, arg.usage))
            node = DApp(cod, usage, sp, fn=node, arg=arg, mult=m)
        if late:
            self.unify(node.type, expected, e.span)
        return node

    def _open_constraints(self, t: Type) -> bool:
        t = self.zonk(t)
        while isinstance(t, TQual):
            t = t.body
        if not isinstance(t, TExists):
            return False
        return any(metas(x) for a in t.given.atoms() for x in a.args)

    # -- do-notation primitives --------------------------------------------------------

    def sequence(self, which: str, u: Expr, k: Expr, ctx, scope, expected, span) -> D:
        du = self.infer(u, ctx, scope)
        t = self.zonk(du.type)
        if which == BIND:
            if not isinstance(k, Lam):
                raise TypeCheckError("the continuation of a bind must be a lambda", span)
            if isinstance(t, TExists):
                return self.unpack_into(du, t, k.binder, k.body, ctx, scope, expected, span)
            body = self.body(k.body, {**ctx, k.binder: Local(One, t)}, scope, expected)
            usage = add_usage(du.usage, self.bind_usage(k.binder, One, body.usage, span))
            return DLet(body.type, usage, span, mult=One, binder=k.binder, rhs=du, body=body)
        # then: the statement's result must be unit, possibly packed with constraints
        if isinstance(t, TExists):
            y = self.fresh_name("unit")
            rest = Case(One, Var(y, span), (Alt(PCon("()"), k, span),), span)
            return self.unpack_into(du, t, y, rest, ctx, scope, expected, span)
        self.unify(t, UNIT, getattr(u, "span", span))
        body = self.body(k, ctx, scope, expected)
        alt = DAlt("()", (), body)
        return DCase(body.type, add_usage(du.usage, body.usage), span, mult=One, scrut=du, alts=[alt])

    def unpack_into(self, du: D, t: TExists, x: str, body_e: Expr, ctx, scope, expected, span) -> D:
        sks = [self.fresh_skolem(v) for v in t.vars]
        sub = {v: TVar(s) for v, s in zip(t.vars, sks)}
        payload = subst_type(t.body, sub)
        given = t.given.substitute(sub, strict=False)
        inner_scope = {**scope, **sub}
        body = self.body(body_e, {**ctx, x: Local(One, payload)}, inner_scope, expected)
        escaped = set(free_vars(self.zonk(body.type))) & set(sks)
        if escaped:
            raise TypeCheckError(f"existential type variable {sorted(escaped)[0]} escapes its scope", span)
        usage = add_usage(du.usage, self.bind_usage(x, One, body.usage, span))
        return DUnpack(body.type, usage, span, binder=x, skolems=tuple(sks), rhs=du, body=body,
                       given=given, payload=payload)

    def body(self, e: Expr, ctx, scope, expected: Type | None) -> D:
        return self.infer(e, ctx, scope) if expected is None else self.check(e, expected, ctx, scope)

    # -- let, unpack, case ---------------------------------------------------------------

    def structural(self, e: Expr, ctx, scope, expected: Type | None) -> D:
        span = e.span
        if isinstance(e, Unpack):
            du = self.infer(e.rhs, ctx, scope)
            t = self.zonk(du.type)
            if not isinstance(t, TExists):
                raise TypeCheckError(f"cannot unpack a value of type {show_type(t)}", getattr(e.rhs, "span", span))
            return self.unpack_into(du, t, e.binder, e.body, ctx, scope, expected, span)
        if isinstance(e, Let):
            if e.scheme is not None:
                return self.let_sig(e, ctx, scope, expected)
            rhs = self.infer(e.rhs, ctx, scope)
            body = self.body(e.body, {**ctx, e.binder: Local(e.mult, rhs.type)}, scope, expected)
            usage = add_usage(scale_usage(e.mult, rhs.usage), self.bind_usage(e.binder, e.mult, body.usage, span))
            return DLet(body.type, usage, span, mult=e.mult, binder=e.binder, rhs=rhs, body=body)
        if isinstance(e, Case):
            return self.case(e, ctx, scope, expected)
        raise TypeError(e)

    def let_sig(self, e: Let, ctx, scope, expected) -> D:
        span = e.span
        s = self.env.resolve_scheme(e.scheme, set(scope), span)
        # scheme variables are rigid while checking the right-hand side
        renamed = {v: TVar(self.fresh_skolem(v)) for v in s.vars}
        full = {**scope, **renamed}
        s = Scheme(tuple(t.name for t in renamed.values()), s.given.substitute(full, strict=False),
                   subst_type(s.body, full))
        rhs = self.check(e.rhs, TQual(s.given, s.body) if not s.given.is_empty() else s.body, ctx, full)
        if not s.given.is_empty():
            rhs = rhs.inner  # the implication is part of the let rule, not a separate node
        body = self.body(e.body, {**ctx, e.binder: Local(e.mult, scheme=s)}, scope, expected)
        usage = add_usage(scale_usage(e.mult, rhs.usage), self.bind_usage(e.binder, e.mult, body.usage, span))
        return DLetSig(body.type, usage, span, mult=e.mult, binder=e.binder, scheme=s, rhs=rhs, body=body)

    def case(self, e: Case, ctx, scope, expected) -> D:
        span = e.span
        scrut = self.infer(e.scrut, ctx, scope)
        st = self.zonk(scrut.type)
        if not e.alts:
            raise TypeCheckError("case with no alternatives", span)
        for a in e.alts:
            if not isinstance(a.pattern, PCon):
                raise TypeCheckError("case alternatives must match on constructors", a.span or span)
        first = self.env.ctors.get(e.alts[0].pattern.name)
        if first is None:
            raise TypeCheckError(f"unknown constructor {e.alts[0].pattern.name}", e.alts[0].span or span)
        tyname = first.type_name
        if isinstance(st, TMeta):
            st = TCon(tyname, tuple(self.meta() for _ in first.params))
            self.unify(scrut.type, st, span)
        if not isinstance(st, TCon) or st.name != tyname:
            raise TypeCheckError(f"pattern for {tyname} does not match scrutinee of type {show_type(st)}", span)
        wanted = self.env.type_ctors[tyname]
        seen = [a.pattern.name for a in e.alts]
        for c in seen:
            if c not in wanted:
                raise TypeCheckError(f"constructor {c} does not belong to {tyname}", span)
        dups = sorted({c for c in seen if seen.count(c) > 1})
        if dups:
            raise TypeCheckError(f"constructor {dups[0]} is matched twice", span)
        missing = [c for c in wanted if c not in seen]
        if missing:
            raise TypeCheckError(f"case is not exhaustive: {missing[0]} is not matched", span)
        alts: list[DAlt] = []
        result = expected
        usages = []
        for a in e.alts:
            info = self.env.ctors[a.pattern.name]
            sub = dict(zip(info.params, st.args))
            if len(a.pattern.args) != len(info.fields):
                raise TypeCheckError(f"{info.name} expects {len(info.fields)} field(s)", a.span or span)
            binders, inner_ctx = [], dict(ctx)
            body_e = a.body
            for (fm, ft), p in zip(info.fields, a.pattern.args):
                m = e.mult * fm
                t = subst_type(ft, sub)
                name, body_e = self.field_binder(p, m, t, body_e, span)
                binders.append((name, m, t))
                inner_ctx[name] = Local(m, t)
            body = self.body(body_e, inner_ctx, scope, result)
            if result is None:
                result = body.type
            u = dict(body.usage)
            for name, m, _ in binders:
                u = self.bind_usage(name, m, u, a.span or span)
            usages.append(u)
            alts.append(DAlt(info.name, tuple(binders), body, tuple(st.args)))
        usage = add_usage(scale_usage(e.mult, scrut.usage), self.join(usages, ctx, span))
        return DCase(result, usage, span, mult=e.mult, scrut=scrut, alts=alts)

    def field_binder(self, p: Pattern, m: Multiplicity, t: Type, body: Expr, span) -> tuple[str, Expr]:
        if isinstance(p, PVar):
            return p.name, body
        if isinstance(p, PWild):
            if m is One:
                raise LinearityError("a wildcard cannot discard a linear field", p.span or span)
            return self.fresh_name("wild"), body
        # nested pattern: bind a fresh variable and match on it at the same multiplicity
        info = self.env.ctors.get(p.name)
        if info is None:
            raise TypeCheckError(f"unknown constructor {p.name}", p.span or span)
        if len(self.env.type_ctors[info.type_name]) != 1:
            raise TypeCheckError(f"nested pattern {p.name} can fail to match", p.span or span)
        z = self.fresh_name("pat")
        return z, Case(m, Var(z, p.span or span), (Alt(p, body, p.span or span),), p.span or span)

    # -- usage ------------------------------------------------------------------------

    def bind_usage(self, x: str, m: Multiplicity, usage: dict, span) -> dict:
        u = dict(usage)
        got = u.pop(x, None)
        if m is One and got is not One:
            if got is None:
                raise LinearityError(f"linear variable {x} is never used", span)
            raise LinearityError(f"linear variable {x} is used more than once", span)
        return u

    def join(self, usages: list[dict], ctx: dict[str, Local], span) -> dict:
        out: dict = {}
        names = set().union(*usages) if usages else set()
        for x in sorted(names):
            ms = [u.get(x) for u in usages]
            if all(m is ms[0] for m in ms):
                out[x] = ms[0]
                continue
            loc = ctx.get(x)
            if loc is not None and loc.mult is One:
                raise LinearityError(f"linear variable {x} is not used the same way in every branch", span)
            out[x] = Many
        return out


def typecheck(prog: Program, base: GlobalEnv | None = None) -> TypedProgram:
    env = (base or GlobalEnv.builtin()).copy()
    env.add_program(prog)
    checker = Checker(env)
    decls = [checker.check_decl(d) for d in prog.of_kind(ValueDecl)]
    return TypedProgram(env, decls)
