"""Global environment: classes, synonyms, data types and value signatures."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from linck.constraints import EPS, Atom, DuplicableSet, SimpleConstraint
from linck.surface.syntax import (
    ClassDecl, DataDecl, PrimDecl, PrimTypeDecl, Program, SynonymDecl, ValueDecl,
)
from linck.types import (
    Many, Multiplicity, One, Scheme, TArrow, TCon, TExists, TMeta, TQual, TVar, Type, free_vars,
)


class TypeCheckError(Exception):
    def __init__(self, message: str, span: Any = None):
        self.message = message
        self.span = span
        super().__init__(str(self))

    def __str__(self) -> str:
        return f"{self.span}: {self.message}" if self.span is not None else self.message


class LinearityError(TypeCheckError):
    """A linear variable is dropped, duplicated, or used unrestrictedly."""


@dataclass(frozen=True)
class CtorInfo:
    name: str
    type_name: str
    params: tuple[str, ...]
    fields: tuple[tuple[Multiplicity, Type], ...]

    def result_type(self) -> TCon:
        return TCon(self.type_name, tuple(TVar(p) for p in self.params))


@dataclass
class GlobalEnv:
    classes: dict[str, tuple[int, bool]] = field(default_factory=dict)
    synonyms: dict[str, tuple[tuple[str, ...], SimpleConstraint]] = field(default_factory=dict)
    types: dict[str, int] = field(default_factory=dict)
    datatypes: dict[str, tuple[str, ...]] = field(default_factory=dict)
    ctors: dict[str, CtorInfo] = field(default_factory=dict)
    type_ctors: dict[str, list[str]] = field(default_factory=dict)
    values: dict[str, Scheme] = field(default_factory=dict)
    prims: set[str] = field(default_factory=set)

    @staticmethod
    def builtin() -> GlobalEnv:
        env = GlobalEnv()
        env.types.update({"Int": 0, "String": 0})
        env._add_data("()", (), [("()", ())])
        env._add_data("(,)", ("a", "b"), [("(,)", ((One, TVar("a")), (One, TVar("b"))))])
        return env

    def copy(self) -> GlobalEnv:
        return GlobalEnv(dict(self.classes), dict(self.synonyms), dict(self.types), dict(self.datatypes),
                         dict(self.ctors), {k: list(v) for k, v in self.type_ctors.items()},
                         dict(self.values), set(self.prims))

    @property
    def dup(self) -> DuplicableSet:
        return DuplicableSet(frozenset(n for n, (_, d) in self.classes.items() if d))

    def _add_data(self, name: str, params: tuple[str, ...], ctors) -> None:
        self.types[name] = len(params)
        self.datatypes[name] = params
        self.type_ctors[name] = []
        for cname, fields in ctors:
            self.ctors[cname] = CtorInfo(cname, name, params, tuple(fields))
            self.type_ctors[name].append(cname)

    # -- declarations ---------------------------------------------------------

    def add_program(self, prog: Program) -> None:
        """Register every declaration's signature; bodies are checked separately."""
        for d in prog.decls:
            if isinstance(d, ClassDecl):
                self._fresh_name(d.name, d.span, self.classes, self.synonyms)
                self.classes[d.name] = (len(d.params), d.dup)
            elif isinstance(d, SynonymDecl):
                self._fresh_name(d.name, d.span, self.classes, self.synonyms)
                body = self.resolve_constraint(d.body, set(d.params), d.span)
                self.synonyms[d.name] = (d.params, body)
            elif isinstance(d, PrimTypeDecl):
                self._fresh_name(d.name, d.span, self.types)
                self.types[d.name] = len(d.params)
            elif isinstance(d, DataDecl):
                self._fresh_name(d.name, d.span, self.types)
                self.types[d.name] = len(d.params)
        for d in prog.decls:
            if isinstance(d, DataDecl):
                ctors = []
                for c in d.ctors:
                    if c.name in self.ctors:
                        raise TypeCheckError(f"constructor {c.name} is already defined", c.span)
                    fields = tuple((m, self.resolve_type(t, set(d.params), c.span)) for m, t in c.fields)
                    ctors.append((c.name, fields))
                self._add_data(d.name, d.params, ctors)
        for d in prog.decls:
            if isinstance(d, (PrimDecl, ValueDecl)):
                if d.name in self.values:
                    raise TypeCheckError(f"{d.name} is already defined", d.span)
                self.values[d.name] = self.resolve_scheme(d.scheme, set(), d.span)
                if isinstance(d, PrimDecl):
                    self.prims.add(d.name)

    @staticmethod
    def _fresh_name(name: str, span: Any, *tables: dict) -> None:
        for t in tables:
            if name in t:
                raise TypeCheckError(f"{name} is already defined", span)

    # -- resolution -----------------------------------------------------------

    def resolve_scheme(self, s: Scheme, scope: set[str], span: Any) -> Scheme:
        """Expand synonyms, check kinds, and make implicit quantification explicit."""
        vars_ = list(s.vars)
        if not vars_:
            seen: list[str] = []
            for v in list(s.given.free_vars()) + list(free_vars(s.body)):
                if v not in scope and v not in seen:
                    seen.append(v)
            vars_ = seen
        inner = scope | set(vars_)
        given = self.resolve_constraint(s.given, inner, span)
        body = self.resolve_type(s.body, inner, span)
        return Scheme(tuple(vars_), given, body)

    def resolve_type(self, t: Type, scope: set[str], span: Any) -> Type:
        if isinstance(t, TVar):
            if t.name not in scope:
                raise TypeCheckError(f"type variable {t.name} is not in scope", span)
            return t
        if isinstance(t, TMeta):
            return t
        if isinstance(t, TCon):
            arity = self.types.get(t.name)
            if arity is None:
                raise TypeCheckError(f"unknown type {t.name}", span)
            if arity != len(t.args):
                raise TypeCheckError(f"type {t.name} expects {arity} argument(s), got {len(t.args)}", span)
            return TCon(t.name, tuple(self.resolve_type(a, scope, span) for a in t.args))
        if isinstance(t, TArrow):
            return TArrow(t.mult, self.resolve_type(t.dom, scope, span), self.resolve_type(t.cod, scope, span))
        if isinstance(t, TExists):
            inner = scope | set(t.vars)
            given = self.resolve_constraint(t.given, inner, span)
            if given.unrestricted:
                raise TypeCheckError("existential packages carry linear constraints only", span)
            return TExists(t.vars, self.resolve_type(t.body, inner, span), given)
        if isinstance(t, TQual):
            return TQual(self.resolve_constraint(t.given, scope, span), self.resolve_type(t.body, scope, span))
        raise TypeError(t)

    def resolve_constraint(self, q: SimpleConstraint, scope: set[str], span: Any) -> SimpleConstraint:
        out = EPS
        for mult, a in q.items():
            out = out.tensor(self.expand_atom(a, mult, scope, span))
        return out

    def expand_atom(self, a: Atom, mult: Multiplicity, scope: set[str], span: Any) -> SimpleConstraint:
        args = tuple(self.resolve_type(x, scope, span) for x in a.args)
        if a.class_name in self.synonyms:
            params, body = self.synonyms[a.class_name]
            if len(params) != len(args):
                raise TypeCheckError(f"constraint {a.class_name} expects {len(params)} argument(s)", span)
            return body.substitute(dict(zip(params, args))).scale(mult)
        info = self.classes.get(a.class_name)
        if info is None:
            raise TypeCheckError(f"unknown class {a.class_name}", span)
        if info[0] != len(args):
            raise TypeCheckError(f"class {a.class_name} expects {info[0]} argument(s), got {len(args)}", span)
        return SimpleConstraint.atom(Atom(a.class_name, args), mult)


def scale_usage(mult: Multiplicity, u: dict[str, Multiplicity]) -> dict[str, Multiplicity]:
    if mult is One:
        return dict(u)
    return {x: Many for x in u}


def add_usage(u1: dict, u2: dict) -> dict:
    out = dict(u1)
    for x, m in u2.items():
        out[x] = Many if x in out else m
    return out
