"""Surface abstract syntax.

Every node carries a ``span`` that is excluded from equality, so two trees that
differ only in source positions compare equal.  Multiplicity annotations are
always explicit here; the parser fills in the defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from linck.constraints import SimpleConstraint
from linck.types import Multiplicity, Scheme, Type


@dataclass(frozen=True, order=True)
class Span:
    start_line: int
    start_col: int
    end_line: int = 0
    end_col: int = 0
    file: str = field(default="<input>", compare=False)

    def __str__(self) -> str:
        return f"{self.file}:{self.start_line}:{self.start_col}"

    def to(self, other: Span | None) -> Span:
        if other is None:
            return self
        return Span(self.start_line, self.start_col, other.end_line, other.end_col, self.file)


def _span() -> Span | None:
    return field(default=None, compare=False, repr=False)


# ---------------------------------------------------------------------------
# patterns


class Pattern:
    __slots__ = ()


@dataclass(frozen=True)
class PVar(Pattern):
    name: str
    span: Span | None = _span()


@dataclass(frozen=True)
class PWild(Pattern):
    span: Span | None = _span()


@dataclass(frozen=True)
class PCon(Pattern):
    """Constructor pattern; pairs are ``(,)`` and unit is ``()``."""

    name: str
    args: tuple[Pattern, ...] = ()
    span: Span | None = _span()


# ---------------------------------------------------------------------------
# expressions


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Var(Expr):
    name: str
    span: Span | None = _span()


@dataclass(frozen=True)
class Ctor(Expr):
    name: str
    span: Span | None = _span()


@dataclass(frozen=True)
class Lit(Expr):
    value: int | str
    span: Span | None = _span()


@dataclass(frozen=True)
class Lam(Expr):
    binder: str
    body: Expr
    span: Span | None = _span()


@dataclass(frozen=True)
class App(Expr):
    fn: Expr
    arg: Expr
    span: Span | None = _span()


@dataclass(frozen=True)
class Pack(Expr):
    body: Expr
    span: Span | None = _span()


@dataclass(frozen=True)
class Unpack(Expr):
    """``let pack x = rhs in body``"""

    binder: str
    rhs: Expr
    body: Expr
    span: Span | None = _span()


@dataclass(frozen=True)
class Alt:
    pattern: Pattern
    body: Expr
    span: Span | None = _span()


@dataclass(frozen=True)
class Case(Expr):
    mult: Multiplicity
    scrut: Expr
    alts: tuple[Alt, ...]
    span: Span | None = _span()


@dataclass(frozen=True)
class Let(Expr):
    """``let @m x = rhs in body``, or with a signature ``let @m x :: s = rhs in body``."""

    mult: Multiplicity
    binder: str
    scheme: Scheme | None
    rhs: Expr
    body: Expr
    span: Span | None = _span()


class Stmt:
    __slots__ = ()


@dataclass(frozen=True)
class SBind(Stmt):
    pattern: Pattern
    expr: Expr
    span: Span | None = _span()


@dataclass(frozen=True)
class SExpr(Stmt):
    expr: Expr
    span: Span | None = _span()


@dataclass(frozen=True)
class SLet(Stmt):
    mult: Multiplicity
    binder: str
    scheme: Scheme | None
    rhs: Expr
    span: Span | None = _span()


@dataclass(frozen=True)
class Do(Expr):
    stmts: tuple[Stmt, ...]
    span: Span | None = _span()


BIND = "Linearly.bind"
THEN = "Linearly.then"
RETURN = "Linearly.return"


# ---------------------------------------------------------------------------
# declarations


class Decl:
    __slots__ = ()


@dataclass(frozen=True)
class ClassDecl(Decl):
    name: str
    params: tuple[str, ...]
    dup: bool = False
    span: Span | None = _span()


@dataclass(frozen=True)
class SynonymDecl(Decl):
    """``constraint RW n = (Read n, Write n)``"""

    name: str
    params: tuple[str, ...]
    body: SimpleConstraint
    span: Span | None = _span()


@dataclass(frozen=True)
class CtorDecl:
    name: str
    fields: tuple[tuple[Multiplicity, Type], ...]
    span: Span | None = _span()


@dataclass(frozen=True)
class DataDecl(Decl):
    name: str
    params: tuple[str, ...]
    ctors: tuple[CtorDecl, ...]
    span: Span | None = _span()


@dataclass(frozen=True)
class PrimTypeDecl(Decl):
    """``primitive type UArray a n``"""

    name: str
    params: tuple[str, ...]
    span: Span | None = _span()


@dataclass(frozen=True)
class PrimDecl(Decl):
    name: str
    scheme: Scheme
    span: Span | None = _span()


@dataclass(frozen=True)
class ValueDecl(Decl):
    """A signature together with its single defining equation."""

    name: str
    scheme: Scheme
    params: tuple[str, ...]
    body: Expr
    span: Span | None = _span()


@dataclass(frozen=True)
class Program:
    decls: tuple[Decl, ...]
    file: str = field(default="<input>", compare=False)

    def of_kind(self, kind: type) -> list:
        return [d for d in self.decls if isinstance(d, kind)]

    def lookup(self, name: str) -> Decl | None:
        for d in self.decls:
            if getattr(d, "name", None) == name:
                return d
        return None


OPERATORS = {
    # name: (precedence, associativity)
    "||": (2, "right"),
    "&&": (3, "right"),
    "==": (4, "none"), "/=": (4, "none"), "<": (4, "none"),
    "<=": (4, "none"), ">": (4, "none"), ">=": (4, "none"),
    "+": (6, "left"), "-": (6, "left"),
    "*": (7, "left"), "/": (7, "left"),
}


def expr_span(e: Expr | Stmt | Pattern | Alt) -> Span | None:
    return getattr(e, "span", None)
