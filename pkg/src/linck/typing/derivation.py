"""Typing derivations.

One node per rule application.  Nodes are mutable so the checker can zonk them
in place once a declaration's unification problem is solved.  Constraint
generation and elaboration both walk these trees rather than the source.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Iterator

from linck.constraints import EPS, SimpleConstraint
from linck.types import Multiplicity, Scheme, TExists, Type

Usage = dict[str, Multiplicity]


@dataclass(eq=False)
class D:
    type: Type
    usage: Usage
    span: Any

    rule = "?"

    def children(self) -> Iterator[D]:
        return iter(())


@dataclass(eq=False)
class DVar(D):
    name: str = ""
    local: bool = False
    # instantiation of the binding's scheme; ``generic`` is its given before substitution
    scheme_vars: tuple[str, ...] = ()
    tyargs: tuple[Type, ...] = ()
    generic: SimpleConstraint = EPS
    emitted: SimpleConstraint = EPS
    generic_type: Type | None = None
    # bound by a let with a signature: always applied to an evidence argument
    has_scheme: bool = False
    rule = "VAR"


@dataclass(eq=False)
class DCtor(D):
    name: str = ""
    tyargs: tuple[Type, ...] = ()
    rule = "CTOR"


@dataclass(eq=False)
class DLit(D):
    value: int | str = 0
    rule = "LIT"


@dataclass(eq=False)
class DAbs(D):
    binder: str = ""
    mult: Multiplicity | None = None
    dom: Type | None = None
    body: D | None = None
    rule = "ABS"

    def children(self):
        yield self.body


@dataclass(eq=False)
class DApp(D):
    fn: D | None = None
    arg: D | None = None
    mult: Multiplicity | None = None
    rule = "APP"

    def children(self):
        yield self.fn
        yield self.arg


@dataclass(eq=False)
class DPack(D):
    body: D | None = None
    exty: TExists | None = None
    tyargs: tuple[Type, ...] = ()
    emitted: SimpleConstraint = EPS
    rule = "PACK"

    def children(self):
        yield self.body


@dataclass(eq=False)
class DUnpack(D):
    binder: str = ""
    skolems: tuple[str, ...] = ()
    rhs: D | None = None
    body: D | None = None
    given: SimpleConstraint = EPS
    payload: Type | None = None
    rule = "UNPACK"

    def children(self):
        yield self.rhs
        yield self.body


@dataclass(eq=False)
class DAlt:
    ctor: str
    binders: tuple[tuple[str, Multiplicity, Type], ...]
    body: D
    tyargs: tuple[Type, ...] = ()


@dataclass(eq=False)
class DCase(D):
    mult: Multiplicity | None = None
    scrut: D | None = None
    alts: list[DAlt] = field(default_factory=list)
    rule = "CASE"

    def children(self):
        yield self.scrut
        for a in self.alts:
            yield a.body


@dataclass(eq=False)
class DLet(D):
    mult: Multiplicity | None = None
    binder: str = ""
    rhs: D | None = None
    body: D | None = None
    rule = "LET"

    def children(self):
        yield self.rhs
        yield self.body


@dataclass(eq=False)
class DLetSig(D):
    mult: Multiplicity | None = None
    binder: str = ""
    scheme: Scheme | None = None
    rhs: D | None = None
    body: D | None = None
    rule = "LETSIG"

    def children(self):
        yield self.rhs
        yield self.body


@dataclass(eq=False)
class DQual(D):
    """Checking against ``given =o body``: the inner derivation may assume ``given``."""

    given: SimpleConstraint = EPS
    inner: D | None = None
    rule = "QUAL"

    def children(self):
        yield self.inner


@dataclass(eq=False)
class DDecl:
    name: str
    scheme: Scheme
    body: D
    span: Any = None


def walk(d: D) -> Iterator[D]:
    yield d
    for c in d.children():
        yield from walk(c)


def map_derivation_types(d: D, f: Callable[[Type], Type]) -> None:
    """Apply ``f`` to every type and constraint stored in the tree, in place."""
    g = lambda q: q.map_types(f)  # noqa: E731
    for n in walk(d):
        n.type = f(n.type)
        if isinstance(n, DVar):
            n.tyargs = tuple(f(t) for t in n.tyargs)
            n.emitted = g(n.emitted)
        elif isinstance(n, DCtor):
            n.tyargs = tuple(f(t) for t in n.tyargs)
        elif isinstance(n, DAbs):
            n.dom = f(n.dom)
        elif isinstance(n, DPack):
            n.exty = f(n.exty)
            n.tyargs = tuple(f(t) for t in n.tyargs)
            n.emitted = g(n.emitted)
        elif isinstance(n, DUnpack):
            n.given = g(n.given)
            n.payload = f(n.payload)
        elif isinstance(n, DCase):
            for a in n.alts:
                a.binders = tuple((x, m, f(t)) for x, m, t in a.binders)
                a.tyargs = tuple(f(t) for t in a.tyargs)
        elif isinstance(n, DQual):
            n.given = g(n.given)
