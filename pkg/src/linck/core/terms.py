"""Core calculus: explicitly typed, evidence-passing, no constraints.

Core types reuse ``TVar``, ``TCon`` and ``TArrow``; existential packages
become ``CExists`` whose second component is an evidence value.  The evidence
for an atom ``C t`` has type ``Ev.C t``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping

from linck.constraints import Atom
from linck.types import Multiplicity, TArrow, TCon, TVar, Type

EV_PREFIX = "Ev."


@dataclass(frozen=True)
class CExists(Type):
    """``exists vars. payload * ev``"""

    vars: tuple[str, ...]
    payload: Type
    ev: Type


def ev_atom_type(q: Atom, conv=lambda t: t) -> TCon:
    return TCon(EV_PREFIX + q.class_name, tuple(conv(a) for a in q.args))


# ---------------------------------------------------------------------------
# type utilities


def csubst(t: Type, s: Mapping[str, Type]) -> Type:
    if not s:
        return t
    if isinstance(t, TVar):
        return s.get(t.name, t)
    if isinstance(t, TCon):
        return TCon(t.name, tuple(csubst(a, s) for a in t.args)) if t.args else t
    if isinstance(t, TArrow):
        return TArrow(t.mult, csubst(t.dom, s), csubst(t.cod, s))
    if isinstance(t, CExists):
        inner = {k: v for k, v in s.items() if k not in t.vars}
        clash = set(t.vars) & set().union(*(set(cfree(v)) for v in inner.values())) if inner else set()
        if clash:
            ren = {}
            taken = set(cfree(t.payload)) | set(cfree(t.ev)) | set().union(*(set(cfree(v)) for v in inner.values()))
            for v in t.vars:
                if v in clash:
                    k, name = 0, v
                    while name in taken:
                        k += 1
                        name = f"{v}{k}"
                    taken.add(name)
                    ren[v] = TVar(name)
            vars_ = tuple(ren[v].name if v in ren else v for v in t.vars)
            return CExists(vars_, csubst(csubst(t.payload, ren), inner), csubst(csubst(t.ev, ren), inner))
        return CExists(t.vars, csubst(t.payload, inner), csubst(t.ev, inner))
    raise TypeError(t)


def cfree(t: Type):
    if isinstance(t, TVar):
        yield t.name
    elif isinstance(t, TCon):
        for a in t.args:
            yield from cfree(a)
    elif isinstance(t, TArrow):
        yield from cfree(t.dom)
        yield from cfree(t.cod)
    elif isinstance(t, CExists):
        for v in list(cfree(t.payload)) + list(cfree(t.ev)):
            if v not in t.vars:
                yield v


def cequal(a: Type, b: Type) -> bool:
    if isinstance(a, CExists) and isinstance(b, CExists):
        if len(a.vars) != len(b.vars):
            return False
        common = {v: TVar(f"%{i}.{len(a.vars)}") for i, v in enumerate(a.vars)}
        common_b = {v: TVar(f"%{i}.{len(b.vars)}") for i, v in enumerate(b.vars)}
        return cequal(csubst(a.payload, common), csubst(b.payload, common_b)) and \
            cequal(csubst(a.ev, common), csubst(b.ev, common_b))
    if type(a) is not type(b):
        return False
    if isinstance(a, TVar):
        return a.name == b.name
    if isinstance(a, TCon):
        return a.name == b.name and len(a.args) == len(b.args) and all(cequal(x, y) for x, y in zip(a.args, b.args))
    if isinstance(a, TArrow):
        return a.mult is b.mult and cequal(a.dom, b.dom) and cequal(a.cod, b.cod)
    return False


def show_ctype(t: Type) -> str:
    """S-expression form of a core type."""
    if isinstance(t, TVar):
        return t.name
    if isinstance(t, TCon):
        if not t.args:
            return t.name
        return "(" + " ".join([t.name] + [show_ctype(a) for a in t.args]) + ")"
    if isinstance(t, TArrow):
        return f"(-> {t.mult} {show_ctype(t.dom)} {show_ctype(t.cod)})"
    if isinstance(t, CExists):
        return f"(exists ({' '.join(t.vars)}) {show_ctype(t.payload)} {show_ctype(t.ev)})"
    raise TypeError(t)


# ---------------------------------------------------------------------------
# terms


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class CVar(Term):
    name: str
    tyargs: tuple[Type, ...] = ()


@dataclass(frozen=True)
class CPrim(Term):
    """A runtime primitive, including the per-class evidence duplicators."""

    name: str
    tyargs: tuple[Type, ...] = ()


@dataclass(frozen=True)
class CCtor(Term):
    name: str
    tyargs: tuple[Type, ...] = ()


@dataclass(frozen=True)
class CLit(Term):
    value: int | str


@dataclass(frozen=True)
class CLam(Term):
    name: str
    mult: Multiplicity
    type: Type
    body: Term


@dataclass(frozen=True)
class CApp(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True)
class CPack(Term):
    exty: CExists
    tyargs: tuple[Type, ...]
    ev: Term
    payload: Term


@dataclass(frozen=True)
class CUnpack(Term):
    """``let pack [tyvars] (evvar, var) = rhs in body``"""

    tyvars: tuple[str, ...]
    evvar: str
    var: str
    rhs: Term
    body: Term


class CPattern:
    __slots__ = ()


@dataclass(frozen=True)
class CPVar(CPattern):
    name: str


@dataclass(frozen=True)
class CPCon(CPattern):
    name: str
    args: tuple[CPattern, ...] = ()


@dataclass(frozen=True)
class CAlt:
    pattern: CPattern
    body: Term


@dataclass(frozen=True)
class CCase(Term):
    mult: Multiplicity
    scrut: Term
    alts: tuple[CAlt, ...]


@dataclass(frozen=True)
class CLet(Term):
    """``let_m name : forall tyvars. type = rhs in body``"""

    mult: Multiplicity
    name: str
    tyvars: tuple[str, ...]
    type: Type
    rhs: Term
    body: Term


@dataclass(frozen=True)
class CoreBinding:
    name: str
    tyvars: tuple[str, ...]
    type: Type
    term: Term | None  # None for primitives
    span: Any = field(default=None, compare=False)


@dataclass
class CoreProgram:
    bindings: dict[str, CoreBinding]
    ctors: dict[str, Any]        # name -> CtorInfo with core field types
    type_ctors: dict[str, list[str]]
    prims: dict[str, CoreBinding]
    dup_classes: frozenset[str] = frozenset()

    def lookup(self, name: str) -> CoreBinding | None:
        return self.bindings.get(name) or self.prims.get(name)


# ---------------------------------------------------------------------------
# printing


def show_pattern(p: CPattern) -> str:
    if isinstance(p, CPVar):
        return p.name
    if not p.args:
        return p.name
    return "(" + " ".join([p.name] + [show_pattern(a) for a in p.args]) + ")"


def _tyargs(ts: tuple[Type, ...]) -> str:
    return "" if not ts else " [" + " ".join(show_ctype(t) for t in ts) + "]"


def show_term(t: Term) -> str:
    if isinstance(t, CVar):
        return t.name if not t.tyargs else f"(@ {t.name}{_tyargs(t.tyargs)})"
    if isinstance(t, CPrim):
        return f"(prim {t.name}{_tyargs(t.tyargs)})"
    if isinstance(t, CCtor):
        return t.name if not t.tyargs else f"(@ {t.name}{_tyargs(t.tyargs)})"
    if isinstance(t, CLit):
        return json.dumps(t.value) if isinstance(t.value, str) else str(t.value)
    if isinstance(t, CLam):
        return f"(lambda {t.mult} ({t.name} {show_ctype(t.type)}) {show_term(t.body)})"
    if isinstance(t, CApp):
        return f"({show_term(t.fn)} {show_term(t.arg)})"
    if isinstance(t, CPack):
        return f"(pack {show_ctype(t.exty)}{_tyargs(t.tyargs)} {show_term(t.ev)} {show_term(t.payload)})"
    if isinstance(t, CUnpack):
        return (f"(unpack ({' '.join(t.tyvars)}) ({t.evvar} {t.var}) {show_term(t.rhs)} "
                f"{show_term(t.body)})")
    if isinstance(t, CCase):
        alts = " ".join(f"({show_pattern(a.pattern)} {show_term(a.body)})" for a in t.alts)
        return f"(case {t.mult} {show_term(t.scrut)} {alts})"
    if isinstance(t, CLet):
        ty = show_ctype(t.type) if not t.tyvars else f"(forall ({' '.join(t.tyvars)}) {show_ctype(t.type)})"
        return f"(let {t.mult} ({t.name} {ty}) {show_term(t.rhs)} {show_term(t.body)})"
    raise TypeError(t)


def show_program(p: CoreProgram) -> str:
    out = []
    for b in p.bindings.values():
        ty = show_ctype(b.type) if not b.tyvars else f"(forall ({' '.join(b.tyvars)}) {show_ctype(b.type)})"
        out.append(f"(define ({b.name} {ty})\n  {show_term(b.term)})")
    return "\n".join(out) + "\n"


def term_size(t: Term) -> int:
    if isinstance(t, (CVar, CPrim, CCtor, CLit)):
        return 1
    if isinstance(t, CLam):
        return 1 + term_size(t.body)
    if isinstance(t, CApp):
        return 1 + term_size(t.fn) + term_size(t.arg)
    if isinstance(t, CPack):
        return 1 + term_size(t.ev) + term_size(t.payload)
    if isinstance(t, CUnpack):
        return 1 + term_size(t.rhs) + term_size(t.body)
    if isinstance(t, CCase):
        return 1 + term_size(t.scrut) + sum(term_size(a.body) for a in t.alts)
    if isinstance(t, CLet):
        return 1 + term_size(t.rhs) + term_size(t.body)
    raise TypeError(t)
