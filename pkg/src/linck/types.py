"""Type representation shared by the surface language, the checker and the algebra.

Constraints appear inside types (existential packages and qualified types), and
types appear inside constraints (atom arguments), so both directions meet here.
Only structural helpers live in this module; unification is in ``linck.typing``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Iterator, Mapping

if TYPE_CHECKING:
    from linck.constraints import SimpleConstraint


class Multiplicity(enum.Enum):
    ONE = "1"
    MANY = "w"

    def __add__(self, other: Multiplicity) -> Multiplicity:
        return Multiplicity.MANY

    def __mul__(self, other: Multiplicity) -> Multiplicity:
        if self is Multiplicity.ONE:
            return other
        return Multiplicity.MANY

    def __str__(self) -> str:
        return self.value

    def __repr__(self) -> str:
        return "One" if self is Multiplicity.ONE else "Many"


One = Multiplicity.ONE
Many = Multiplicity.MANY


class Type:
    """Base class of types."""

    __slots__ = ()

    def __str__(self) -> str:
        return show_type(self)


@dataclass(frozen=True)
class TVar(Type):
    """Rigid type variable, including skolems introduced by unpacking."""

    name: str


@dataclass(frozen=True)
class TMeta(Type):
    """Unification variable; never survives zonking."""

    uid: int


@dataclass(frozen=True)
class TCon(Type):
    name: str
    args: tuple[Type, ...] = ()


@dataclass(frozen=True)
class TArrow(Type):
    mult: Multiplicity
    dom: Type
    cod: Type


@dataclass(frozen=True)
class TExists(Type):
    """``exists vars. body * given``; the given constraint is carried linearly."""

    vars: tuple[str, ...]
    body: Type
    given: SimpleConstraint


@dataclass(frozen=True)
class TQual(Type):
    """A first-class qualified type ``given =o body``."""

    given: SimpleConstraint
    body: Type


@dataclass(frozen=True)
class Scheme:
    """``forall vars. given =o body``; ``vars`` empty means implicit quantification."""

    vars: tuple[str, ...]
    given: SimpleConstraint
    body: Type

    def __str__(self) -> str:
        head = f"forall {' '.join(self.vars)}. " if self.vars else ""
        if self.given.is_empty():
            return head + show_type(self.body)
        return f"{head}{self.given.surface()} {self.given.surface_arrow()} {show_type(self.body)}"


UNIT = TCon("()")
INT = TCon("Int")
STRING = TCon("String")
BOOL = TCon("Bool")


def t_pair(a: Type, b: Type) -> TCon:
    return TCon("(,)", (a, b))


def t_ur(a: Type) -> TCon:
    return TCon("Ur", (a,))


# ---------------------------------------------------------------------------
# traversal


def map_type(t: Type, leaf: Callable[[Type], Type | None], bound: frozenset[str] = frozenset()) -> Type:
    """Rebuild ``t``; ``leaf`` may replace variables and metas (return None to keep)."""
    if isinstance(t, (TVar, TMeta)):
        if isinstance(t, TVar) and t.name in bound:
            return t
        r = leaf(t)
        return t if r is None else r
    if isinstance(t, TCon):
        if not t.args:
            return t
        return TCon(t.name, tuple(map_type(a, leaf, bound) for a in t.args))
    if isinstance(t, TArrow):
        return TArrow(t.mult, map_type(t.dom, leaf, bound), map_type(t.cod, leaf, bound))
    if isinstance(t, TExists):
        return _map_exists(t, leaf, bound)
    if isinstance(t, TQual):
        return TQual(t.given.map_types(lambda a: map_type(a, leaf, bound)), map_type(t.body, leaf, bound))
    raise TypeError(f"not a type: {t!r}")


def _map_exists(t: TExists, leaf, bound: frozenset[str]) -> TExists:
    # Bound variables are first moved out of the way, so nothing the leaf
    # function returns can be captured; afterwards they get their old names
    # back unless that would now clash with a free variable.
    temp = {v: TVar("\0" + v) for v in t.vars}
    pre = lambda x: subst_raw(x, temp)  # noqa: E731
    body = map_type(pre(t.body), leaf, bound)
    given = t.given.map_types(lambda a: map_type(pre(a), leaf, bound))
    taken = set(free_vars(body)) | set(given.free_vars())
    final: dict[str, Type] = {}
    names = []
    for v in t.vars:
        name, k = v, 0
        while name in taken:
            k += 1
            name = f"{v}{k}"
        taken.add(name)
        names.append(name)
        final["\0" + v] = TVar(name)
    back = lambda x: subst_raw(x, final)  # noqa: E731
    return TExists(tuple(names), back(body), given.map_types(back))


def subst_raw(t: Type, s: Mapping[str, Type]) -> Type:
    """Renaming to names known to be unused, so no capture check is needed."""
    if isinstance(t, TVar):
        return s.get(t.name, t)
    if isinstance(t, TCon):
        return TCon(t.name, tuple(subst_raw(a, s) for a in t.args)) if t.args else t
    if isinstance(t, TArrow):
        return TArrow(t.mult, subst_raw(t.dom, s), subst_raw(t.cod, s))
    if isinstance(t, TExists):
        inner = {k: v for k, v in s.items() if k not in t.vars}
        return TExists(t.vars, subst_raw(t.body, inner), t.given.map_types(lambda a: subst_raw(a, inner)))
    if isinstance(t, TQual):
        return TQual(t.given.map_types(lambda a: subst_raw(a, s)), subst_raw(t.body, s))
    return t


def subst_type(t: Type, s: Mapping[str, Type]) -> Type:
    if not s:
        return t
    return map_type(t, lambda v: s.get(v.name) if isinstance(v, TVar) else None)


def free_vars(t: Type) -> Iterator[str]:
    """Free rigid variables in left-to-right order (with repeats)."""
    if isinstance(t, TVar):
        yield t.name
    elif isinstance(t, TCon):
        for a in t.args:
            yield from free_vars(a)
    elif isinstance(t, TArrow):
        yield from free_vars(t.dom)
        yield from free_vars(t.cod)
    elif isinstance(t, TExists):
        for v in list(free_vars(t.body)) + list(t.given.free_vars()):
            if v not in t.vars:
                yield v
    elif isinstance(t, TQual):
        yield from t.given.free_vars()
        yield from free_vars(t.body)


def metas(t: Type) -> Iterator[int]:
    if isinstance(t, TMeta):
        yield t.uid
    elif isinstance(t, TCon):
        for a in t.args:
            yield from metas(a)
    elif isinstance(t, TArrow):
        yield from metas(t.dom)
        yield from metas(t.cod)
    elif isinstance(t, TExists):
        yield from metas(t.body)
        for a in t.given.atoms():
            for x in a.args:
                yield from metas(x)
    elif isinstance(t, TQual):
        for a in t.given.atoms():
            for x in a.args:
                yield from metas(x)
        yield from metas(t.body)


def alpha_equal(a: Type, b: Type) -> bool:
    return _alpha(a, b, {}, {})


def _alpha(a: Type, b: Type, la: dict, lb: dict) -> bool:
    if isinstance(a, TVar) and isinstance(b, TVar):
        ia, ib = la.get(a.name), lb.get(b.name)
        if ia is None and ib is None:
            return a.name == b.name
        return ia == ib
    if type(a) is not type(b):
        return False
    if isinstance(a, TMeta):
        return a == b
    if isinstance(a, TCon):
        return a.name == b.name and len(a.args) == len(b.args) and all(
            _alpha(x, y, la, lb) for x, y in zip(a.args, b.args))
    if isinstance(a, TArrow):
        return a.mult is b.mult and _alpha(a.dom, b.dom, la, lb) and _alpha(a.cod, b.cod, la, lb)
    if isinstance(a, TExists):
        if len(a.vars) != len(b.vars):
            return False
        depth = len(la) + 1
        la2 = {**la, **{v: (depth, i) for i, v in enumerate(a.vars)}}
        lb2 = {**lb, **{v: (depth, i) for i, v in enumerate(b.vars)}}
        fresh = {v: TVar(f"%{depth}.{i}") for i, v in enumerate(a.vars)}
        fresh_b = {v: TVar(f"%{depth}.{i}") for i, v in enumerate(b.vars)}
        return _alpha(a.body, b.body, la2, lb2) and (
            a.given.substitute(fresh, strict=False) == b.given.substitute(fresh_b, strict=False))
    if isinstance(a, TQual):
        return a.given == b.given and _alpha(a.body, b.body, la, lb)
    return False


# ---------------------------------------------------------------------------
# printing

_ARROW_TOKENS = {Multiplicity.ONE: "-o", Multiplicity.MANY: "->"}


def show_type(t: Type, prec: int = 0) -> str:
    """Concrete syntax for a type; ``prec`` 0 = top, 1 = arrow operand, 2 = argument."""
    if isinstance(t, TVar):
        return t.name
    if isinstance(t, TMeta):
        return f"?{t.uid}"
    if isinstance(t, TCon):
        if t.name == "(,)" and len(t.args) == 2:
            return f"({show_type(t.args[0])}, {show_type(t.args[1])})"
        if not t.args:
            return t.name
        s = t.name + " " + " ".join(show_type(a, 2) for a in t.args)
        return f"({s})" if prec >= 2 else s
    if isinstance(t, TArrow):
        s = f"{show_type(t.dom, 1)} {_ARROW_TOKENS[t.mult]} {show_type(t.cod, 0)}"
        return f"({s})" if prec >= 1 else s
    if isinstance(t, TExists):
        head = f"exists {' '.join(t.vars)}. " if t.vars else ""
        s = f"{head}{show_type(t.body, 1)} * {t.given.surface()}"
        return f"({s})" if prec >= 1 else s
    if isinstance(t, TQual):
        s = f"{t.given.surface()} {t.given.surface_arrow()} {show_type(t.body, 0)}"
        return f"({s})" if prec >= 1 else s
    raise TypeError(f"not a type: {t!r}")
