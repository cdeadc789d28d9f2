"""Elaboration of typing derivations into core.

Every derivation node is translated together with a *pool*: the evidence
variables in scope that together provide exactly the node's demand (the
constraint the solver computed for it).  Linear tokens must be used exactly
once; unrestricted tokens (bound under ``Ur``) may be used freely.  Splitting a
pool between children, duplicating or discarding tokens of duplicable classes
and assembling evidence arguments for calls are the only places where
evidence terms get built.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

from linck.constraints import EPS, Atom, DuplicableSet, SimpleConstraint, diff, meet
from linck.core.terms import (
    CAlt, CApp, CCase, CCtor, CExists, CLam, CLet, CLit, CoreBinding, CoreProgram, CPack, CPCon,
    CPrim, CPVar, CUnpack, CVar, Term, EV_PREFIX, cequal, csubst, ev_atom_type, show_ctype,
)
from linck.types import (
    UNIT, Many, Multiplicity, One, TArrow, TCon, TExists, TQual, TVar, Type, subst_type,
)
from linck.typing.checker import TypedProgram
from linck.typing.derivation import (
    D, DAbs, DApp, DCase, DCtor, DDecl, DLet, DLetSig, DLit, DPack, DQual, DUnpack, DVar,
)


class ElaborationError(Exception):
    """Internal invariant broken while building evidence; indicates a bug."""


# ---------------------------------------------------------------------------
# evidence shapes


@dataclass(frozen=True)
class EvLeaf:
    mult: Multiplicity
    atom: Atom


@dataclass(frozen=True)
class EvPair:
    left: EvTree
    right: EvTree


class _Unit:
    def __repr__(self) -> str:
        return "EvUnit"


EvUnit = _Unit()
EvTree = EvLeaf | EvPair | _Unit


def ev_tree(q: SimpleConstraint) -> EvTree:
    """Canonical shape: leaves in canonical item order, nested to the right."""
    leaves = [EvLeaf(m, a) for m, a in q.items()]
    if not leaves:
        return EvUnit
    out: EvTree = leaves[-1]
    for leaf in reversed(leaves[:-1]):
        out = EvPair(leaf, out)
    return out


def tree_leaves(t: EvTree) -> list[EvLeaf]:
    if isinstance(t, EvLeaf):
        return [t]
    if isinstance(t, EvPair):
        return tree_leaves(t.left) + tree_leaves(t.right)
    return []


def tree_constraint(t: EvTree) -> SimpleConstraint:
    out = EPS
    for leaf in tree_leaves(t):
        out = out.tensor(SimpleConstraint.atom(leaf.atom, leaf.mult))
    return out


def tree_subst(t: EvTree, sub: dict[str, Type]) -> EvTree:
    if isinstance(t, EvLeaf):
        return EvLeaf(t.mult, Atom(t.atom.class_name, tuple(subst_type(a, sub) for a in t.atom.args)))
    if isinstance(t, EvPair):
        return EvPair(tree_subst(t.left, sub), tree_subst(t.right, sub))
    return t


def evidence_type(q: SimpleConstraint | EvTree) -> Type:
    """Core type of evidence: unit, ``Ev.C t``, ``Ur (Ev.C t)`` or pairs of those."""
    t = ev_tree(q) if isinstance(q, SimpleConstraint) else q
    if isinstance(t, EvLeaf):
        ev = ev_atom_type(t.atom, core_type)
        return ev if t.mult is One else TCon("Ur", (ev,))
    if isinstance(t, EvPair):
        return TCon("(,)", (evidence_type(t.left), evidence_type(t.right)))
    return UNIT


def ev_tree_of_type(t: Type) -> EvTree | None:
    """Read an evidence layout back from a core type, or None if ``t`` is not evidence."""
    if t == UNIT:
        return EvUnit
    if isinstance(t, TCon):
        if t.name.startswith(EV_PREFIX):
            return EvLeaf(One, Atom(t.name[len(EV_PREFIX):], t.args))
        if t.name == "Ur" and isinstance(t.args[0], TCon) and t.args[0].name.startswith(EV_PREFIX):
            a = t.args[0]
            return EvLeaf(Many, Atom(a.name[len(EV_PREFIX):], a.args))
        if t.name == "(,)":
            left, right = ev_tree_of_type(t.args[0]), ev_tree_of_type(t.args[1])
            if left is None or right is None or left is EvUnit or right is EvUnit:
                return None
            return EvPair(left, right)
    return None


def core_type(t: Type) -> Type:
    if isinstance(t, TVar):
        return t
    if isinstance(t, TCon):
        return TCon(t.name, tuple(core_type(a) for a in t.args)) if t.args else t
    if isinstance(t, TArrow):
        return TArrow(t.mult, core_type(t.dom), core_type(t.cod))
    if isinstance(t, TExists):
        return CExists(t.vars, core_type(t.body), evidence_type(t.given))
    if isinstance(t, TQual):
        return TArrow(One, evidence_type(t.given), core_type(t.body))
    raise ElaborationError(f"no core type for {t!r}")


def scheme_core_type(given: SimpleConstraint, body: Type) -> Type:
    return TArrow(One, evidence_type(given), core_type(body))


# ---------------------------------------------------------------------------
# pools of evidence tokens

Wrapper = Callable[[Term], Term]


@dataclass
class Pool:
    lin: dict[Atom, list[str]] = field(default_factory=dict)
    omega: dict[Atom, str] = field(default_factory=dict)

    def union(self, other: Pool) -> Pool:
        lin = {q: list(v) for q, v in self.lin.items()}
        for q, v in other.lin.items():
            lin.setdefault(q, []).extend(v)
        return Pool(lin, {**other.omega, **self.omega})

    def atoms(self) -> set[Atom]:
        return set(self.lin) | set(self.omega)


def wrap_all(ws: list[Wrapper], body: Term) -> Term:
    for w in reversed(ws):
        body = w(body)
    return body


class Evidence:
    """Token bookkeeping shared by one declaration's elaboration."""

    def __init__(self, dup: DuplicableSet, names: Callable[[str], str]):
        self.dup = dup
        self.fresh = names

    # -- binding ------------------------------------------------------------

    def destructure(self, var: str, tree: EvTree) -> tuple[list[Wrapper], Pool]:
        pool = Pool()

        def pat(t: EvTree):
            if isinstance(t, EvLeaf):
                if t.mult is One:
                    x = self.fresh("t")
                    pool.lin.setdefault(t.atom, []).append(x)
                    return CPVar(x)
                w = self.fresh("w")
                pool.omega.setdefault(t.atom, w)
                return CPCon("Ur", (CPVar(w),))
            if isinstance(t, EvPair):
                return CPCon("(,)", (pat(t.left), pat(t.right)))
            return CPCon("()")

        if isinstance(tree, EvLeaf) and tree.mult is One:
            pool.lin[tree.atom] = [var]
            return [], pool
        p = pat(tree)
        return [lambda body: CCase(One, CVar(var), (CAlt(p, body),))], pool

    # -- splitting ----------------------------------------------------------

    def partition(self, pool: Pool, parts: list[tuple[SimpleConstraint, bool]]) -> tuple[list[Wrapper], list[Pool]]:
        """Split ``pool`` into one pool per part; a part flagged True sits in an unrestricted context."""
        wrappers: list[Wrapper] = []
        subs = [Pool() for _ in parts]
        atoms = pool.atoms()
        for q, _ in parts:
            atoms |= set(q.atoms())
        for q in sorted(atoms, key=lambda a: a.key):
            w = pool.omega.get(q)
            toks = list(pool.lin.get(q, []))
            demands = [0 if om else c.count(q) for c, om in parts]
            needs_omega = any((om and c.count(q) > 0) or q in c.unrestricted for c, om in parts)
            total = sum(demands)
            if q in self.dup and toks:
                while len(toks) > total:
                    wrappers.append(self._dis(q, toks.pop()))
                while 0 < len(toks) < total:
                    t = toks.pop()
                    t1, t2 = self.fresh("t"), self.fresh("t")
                    wrappers.append(self._dup(q, t, t1, t2))
                    toks += [t1, t2]
            elif len(toks) > total:
                raise ElaborationError(f"linear evidence for {q} would be dropped")
            if (len(toks) < total or needs_omega) and w is None:
                raise ElaborationError(f"no evidence available for {q}")
            i = 0
            for s, k in zip(subs, demands):
                take = toks[i:i + k]
                i += len(take)
                if take:
                    s.lin[q] = take
                if w is not None:
                    s.omega[q] = w
        return wrappers, subs

    def _dup(self, q: Atom, t: str, t1: str, t2: str) -> Wrapper:
        call = CApp(CPrim(f"dup@{q.class_name}", tuple(core_type(a) for a in q.args)), CVar(t))
        pat = CPCon("(,)", (CPVar(t1), CPVar(t2)))
        return lambda body: CCase(One, call, (CAlt(pat, body),))

    def _dis(self, q: Atom, t: str) -> Wrapper:
        call = CApp(CPrim(f"dis@{q.class_name}", tuple(core_type(a) for a in q.args)), CVar(t))
        return lambda body: CCase(One, call, (CAlt(CPCon("()"), body),))

    def finish(self, pool: Pool) -> list[Wrapper]:
        """Discard what is left; only duplicable linear tokens may remain."""
        ws, _ = self.partition(pool, [])
        return ws

    # -- building -----------------------------------------------------------

    def construct(self, tree: EvTree, pool: Pool) -> tuple[list[Wrapper], Term]:
        ws, (p,) = self.partition(pool, [(tree_constraint(tree), False)])
        lin = {q: list(v) for q, v in p.lin.items()}

        def build(t: EvTree) -> Term:
            if isinstance(t, EvLeaf):
                if t.mult is Many:
                    return CApp(CCtor("Ur", (ev_atom_type(t.atom, core_type),)), CVar(p.omega[t.atom]))
                toks = lin.get(t.atom)
                if toks:
                    return CVar(toks.pop(0))
                return CVar(p.omega[t.atom])
            if isinstance(t, EvPair):
                tys = (evidence_type(t.left), evidence_type(t.right))
                return CApp(CApp(CCtor("(,)", tys), build(t.left)), build(t.right))
            return CCtor("()")

        term = build(tree)
        if any(lin.values()):
            raise ElaborationError("evidence left over after construction")
        return ws, term


# ---------------------------------------------------------------------------
# the translation


def _tensor_all(qs) -> SimpleConstraint:
    out = EPS
    for q in qs:
        out = out.tensor(q)
    return out


class Elaborator:
    def __init__(self, dup: DuplicableSet, env=None):
        self.dup = dup
        self.env = env
        self.counter = itertools.count(1)
        self.ev = Evidence(dup, self.fresh)
        self.demands: dict[int, SimpleConstraint] = {}

    def fresh(self, base: str) -> str:
        return f"%{base}{next(self.counter)}"

    # -- demands, mirroring the solver --------------------------------------------

    def demand(self, d: D) -> SimpleConstraint:
        key = id(d)
        got = self.demands.get(key)
        if got is None:
            got = self._demand(d)
            self.demands[key] = got
        return got

    def _demand(self, d: D) -> SimpleConstraint:
        if isinstance(d, DVar):
            return d.emitted
        if isinstance(d, (DCtor, DLit)):
            return EPS
        if isinstance(d, DAbs):
            return self.demand(d.body)
        if isinstance(d, DApp):
            return self.demand(d.fn).tensor(self.demand(d.arg).scale(d.mult))
        if isinstance(d, DPack):
            return self.demand(d.body).tensor(d.emitted)
        if isinstance(d, DUnpack):
            return self.demand(d.rhs).tensor(diff(self.demand(d.body), d.given, self.dup))
        if isinstance(d, DCase):
            return self.demand(d.scrut).scale(d.mult).tensor(self._branches(d))
        if isinstance(d, DLet):
            return self.demand(d.rhs).scale(d.mult).tensor(self.demand(d.body))
        if isinstance(d, DLetSig):
            inner = diff(self.demand(d.rhs), d.scheme.given, self.dup).scale(d.mult)
            return self.demand(d.body).tensor(inner)
        if isinstance(d, DQual):
            return diff(self.demand(d.inner), d.given, self.dup)
        raise TypeError(d)

    def _branches(self, d: DCase) -> SimpleConstraint:
        out = self.demand(d.alts[0].body)
        for a in d.alts[1:]:
            out = meet(out, self.demand(a.body), self.dup)
        return out

    # -- terms -----------------------------------------------------------------------

    def decl(self, dd: DDecl) -> CoreBinding:
        z = self.fresh("z")
        tree = ev_tree(dd.scheme.given)
        ws, pool = self.ev.destructure(z, tree)
        body = wrap_all(ws, self.term(dd.body, pool))
        ty = scheme_core_type(dd.scheme.given, dd.scheme.body)
        lam = CLam(z, One, evidence_type(tree), body)
        return CoreBinding(dd.name, dd.scheme.vars, ty, lam, dd.span)

    def term(self, d: D, pool: Pool) -> Term:
        ev = self.ev
        if isinstance(d, DVar):
            tyargs = tuple(core_type(t) for t in d.tyargs)
            if d.local and not d.has_scheme and d.generic.is_empty():
                return wrap_all(ev.finish(pool), CVar(d.name))
            sub = dict(zip(d.scheme_vars, d.tyargs))
            tree = tree_subst(ev_tree(d.generic), sub)
            ws, arg = ev.construct(tree, pool)
            term: Term = CApp(CVar(d.name, tyargs), arg)
            if d.generic_type is not None:
                actual = csubst(core_type(d.generic_type), {v: core_type(t) for v, t in sub.items()})
                term = self.coerce(term, actual, core_type(d.type))
            return wrap_all(ws, term)
        if isinstance(d, DCtor):
            tyargs = tuple(core_type(t) for t in d.tyargs)
            term = CCtor(d.name, tyargs)
            info = self.env.ctors.get(d.name) if self.env is not None else None
            if info is not None:
                ty: Type = TCon(info.type_name, tuple(TVar(p) for p in info.params))
                for m, f in reversed(info.fields):
                    ty = TArrow(m, core_type(f), ty)
                term = self.coerce(term, csubst(ty, dict(zip(info.params, tyargs))), core_type(d.type))
            return wrap_all(ev.finish(pool), term)
        if isinstance(d, DLit):
            return wrap_all(ev.finish(pool), CLit(d.value))
        if isinstance(d, DAbs):
            return CLam(d.binder, d.mult, core_type(d.dom), self.term(d.body, pool))
        if isinstance(d, DApp):
            ws, (p1, p2) = ev.partition(pool, [(self.demand(d.fn), False), (self.demand(d.arg), d.mult is Many)])
            return wrap_all(ws, CApp(self.term(d.fn, p1), self.term(d.arg, p2)))
        if isinstance(d, DPack):
            exty = d.exty
            tree = tree_subst(ev_tree(exty.given), dict(zip(exty.vars, d.tyargs)))
            ws, (p1, p2) = ev.partition(pool, [(self.demand(d.body), False), (tree_constraint(tree), False)])
            ws2, evterm = ev.construct(tree, p2)
            cex = core_type(exty)
            tyargs = tuple(core_type(t) for t in d.tyargs)
            payload = self.coerce(self.term(d.body, p1), core_type(d.body.type),
                                  csubst(cex.payload, dict(zip(cex.vars, tyargs))))
            packed = CPack(cex, tyargs, evterm, payload)
            return wrap_all(ws + ws2, packed)
        if isinstance(d, DUnpack):
            rest = diff(self.demand(d.body), d.given, self.dup)
            ws, (p1, p2) = ev.partition(pool, [(self.demand(d.rhs), False), (rest, False)])
            ex = d.rhs.type
            tree = tree_subst(ev_tree(ex.given), {v: TVar(s) for v, s in zip(ex.vars, d.skolems)})
            zb = self.fresh("zb")
            wsb, bound = ev.destructure(zb, tree)
            body = wrap_all(wsb, self.term(d.body, p2.union(bound)))
            cex = core_type(ex)
            actual = csubst(cex.payload, {v: TVar(s) for v, s in zip(cex.vars, d.skolems)})
            target = core_type(subst_type(ex.body, {v: TVar(s) for v, s in zip(ex.vars, d.skolems)}))
            binder = d.binder
            if not cequal(actual, target):
                binder = self.fresh("y")
                body = CLet(One, d.binder, (), target, self.coerce(CVar(binder), actual, target), body)
            return wrap_all(ws, CUnpack(d.skolems, zb, binder, self.term(d.rhs, p1), body))
        if isinstance(d, DCase):
            ws, (ps, pm) = ev.partition(pool, [(self.demand(d.scrut), d.mult is Many), (self._branches(d), False)])
            alts = []
            for a in d.alts:
                pat = CPCon(a.ctor, tuple(CPVar(x) for x, _, _ in a.binders))
                alts.append(CAlt(pat, self.term(a.body, pm)))
            return wrap_all(ws, CCase(d.mult, self.term(d.scrut, ps), tuple(alts)))
        if isinstance(d, DLet):
            ws, (p1, p2) = ev.partition(pool, [(self.demand(d.rhs), d.mult is Many), (self.demand(d.body), False)])
            let = CLet(d.mult, d.binder, (), core_type(d.rhs.type), self.term(d.rhs, p1), self.term(d.body, p2))
            return wrap_all(ws, let)
        if isinstance(d, DLetSig):
            s = d.scheme
            rest = diff(self.demand(d.rhs), s.given, self.dup)
            ws, (pb, pr) = ev.partition(pool, [(self.demand(d.body), False), (rest, d.mult is Many)])
            rhs = self._abstract(s.given, d.rhs, pr)
            let = CLet(d.mult, d.binder, s.vars, scheme_core_type(s.given, s.body), rhs, self.term(d.body, pb))
            return wrap_all(ws, let)
        if isinstance(d, DQual):
            return self._abstract(d.given, d.inner, pool)
        raise TypeError(d)

    # -- layout coercions -----------------------------------------------------------

    def coerce(self, term: Term, actual: Type, target: Type) -> Term:
        """Convert between core types that differ only in the order of evidence leaves.

        Instantiating a scheme substitutes into its evidence layout, which need not
        be the canonical layout of the instantiated type.
        """
        if cequal(actual, target):
            return term
        ta, tb = ev_tree_of_type(actual), ev_tree_of_type(target)
        if ta is not None and tb is not None:
            z = self.fresh("c")
            ws, pool = self.ev.destructure(z, ta)
            ws2, built = self.ev.construct(tb, pool)
            return CLet(One, z, (), actual, term, wrap_all(ws + ws2, built))
        if isinstance(actual, TArrow) and isinstance(target, TArrow) and actual.mult is target.mult:
            f, x = self.fresh("f"), self.fresh("x")
            call = CApp(CVar(f), self.coerce(CVar(x), target.dom, actual.dom))
            lam = CLam(x, target.mult, target.dom, self.coerce(call, actual.cod, target.cod))
            return CLet(One, f, (), actual, term, lam)
        if isinstance(actual, CExists) and isinstance(target, CExists) and len(actual.vars) == len(target.vars):
            vs = tuple(self.fresh("a") for _ in actual.vars)
            ra = {v: TVar(n) for v, n in zip(actual.vars, vs)}
            rb = {v: TVar(n) for v, n in zip(target.vars, vs)}
            z, y = self.fresh("c"), self.fresh("y")
            ev = self.coerce(CVar(z), csubst(actual.ev, ra), csubst(target.ev, rb))
            payload = self.coerce(CVar(y), csubst(actual.payload, ra), csubst(target.payload, rb))
            return CUnpack(vs, z, y, term, CPack(target, tuple(TVar(n) for n in vs), ev, payload))
        if isinstance(actual, TCon) and isinstance(target, TCon) and actual.name == target.name \
                and actual.name in ("(,)", "Ur") and len(actual.args) == len(target.args):
            xs = tuple(self.fresh("x") for _ in actual.args)
            built: Term = CCtor(actual.name, target.args)
            for x, a, b in zip(xs, actual.args, target.args):
                built = CApp(built, self.coerce(CVar(x), a, b))
            return CCase(One, term, (CAlt(CPCon(actual.name, tuple(CPVar(x) for x in xs)), built),))
        raise ElaborationError(f"cannot convert {show_ctype(actual)} to {show_ctype(target)}")

    def _abstract(self, given: SimpleConstraint, inner: D, pool: Pool) -> Term:
        zq = self.fresh("zq")
        tree = ev_tree(given)
        ws, bound = self.ev.destructure(zq, tree)
        return CLam(zq, One, evidence_type(tree), wrap_all(ws, self.term(inner, pool.union(bound))))


def elaborate(tp: TypedProgram) -> dict[str, CoreBinding]:
    el = Elaborator(tp.env.dup, tp.env)
    return {d.name: el.decl(d) for d in tp.decls}


def desugar_derivation(d: DDecl, dup: DuplicableSet, env=None) -> CoreBinding:
    return Elaborator(dup, env).decl(d)


# ---------------------------------------------------------------------------
# standalone evidence functions


def entailment_evidence(q1: SimpleConstraint, q2: SimpleConstraint, dup: DuplicableSet) -> Term:
    """``\\z : [q1]. e : [q2]``; raises ElaborationError unless q1 entails q2."""
    el = Elaborator(dup)
    z = el.fresh("z")
    t1 = ev_tree(q1)
    ws, pool = el.ev.destructure(z, t1)
    ws2, term = el.ev.construct(ev_tree(q2), pool)
    return CLam(z, One, evidence_type(t1), wrap_all(ws + ws2, term))


def ur_coerce(e: Term, q: SimpleConstraint, dup: DuplicableSet) -> Term:
    """Turn ``e : [w.q]`` into a term of type ``Ur [q]``.

    A single linear atom needs nothing: ``[w.q]`` already is ``Ur [q]``.
    """
    tree = ev_tree(q)
    if isinstance(tree, EvLeaf) and tree.mult is One:
        return e
    el = Elaborator(dup)
    scaled = ev_tree(q.scale(Many))
    z = e.name if isinstance(e, CVar) else el.fresh("z")
    ws, pool = el.ev.destructure(z, scaled)
    ws2, (inner,) = el.ev.partition(pool, [(q, True)])
    ws3, term = el.ev.construct(tree, Pool({}, inner.omega))
    out = wrap_all(ws + ws2 + ws3, CApp(CCtor("Ur", (evidence_type(tree),)), term))
    return out if isinstance(e, CVar) else CLet(One, z, (), evidence_type(scaled), e, out)


def rearrange(sources: list[tuple[str, SimpleConstraint]], targets: list[SimpleConstraint],
              dup: DuplicableSet, body: Callable[[list[Term]], Term]) -> Term:
    """Destructure the source evidence variables and hand ``body`` one term per target."""
    el = Elaborator(dup)
    ws: list[Wrapper] = []
    pool = Pool()
    for var, q in sources:
        w, p = el.ev.destructure(var, ev_tree(q))
        ws += w
        pool = pool.union(p)
    wsp, pools = el.ev.partition(pool, [(t, False) for t in targets])
    ws += wsp
    terms = []
    for t, p in zip(targets, pools):
        wc, term = el.ev.construct(ev_tree(t), p)
        ws += wc
        terms.append(term)
    return wrap_all(ws, body(terms))


plan = Evidence.partition


def core_program(tp: TypedProgram, prelude: TypedProgram | None = None) -> CoreProgram:
    """Elaborate a checked program (and the prelude it builds on) into core."""
    from linck.core.prims import prim_bindings

    env = tp.env
    bindings: dict[str, CoreBinding] = {}
    for src in ([prelude] if prelude is not None else []) + [tp]:
        bindings.update(elaborate(src))
    ctors = {}
    for name, info in env.ctors.items():
        ctors[name] = (info.type_name, info.params, tuple((m, core_type(t)) for m, t in info.fields))
    prims = prim_bindings(env)
    return CoreProgram(bindings, ctors, {k: list(v) for k, v in env.type_ctors.items()}, prims, env.dup.classes)
