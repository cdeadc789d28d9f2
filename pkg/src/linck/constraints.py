"""Multiplicities, atomic and simple constraints, entailment, meet and diff.

A simple constraint is a pair ``(U, L)``: a set of unrestricted atoms and a
multiset of linear atoms.  The multiset is stored as a canonically sorted tuple
of ``(atom, count)`` pairs so that structural equality is multiset equality.

Entailment follows the recursive rules Q-LINEAR, Q-DUPONE, Q-DUPNONE and Q-UR,
with Q-UR read as "U2 is a subset of U1" and one extra rule (Q-URLIN) letting an
unrestricted given discharge a linear wanted of the same atom.
"""

from __future__ import annotations

import contextlib
import enum
import random
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping

from linck.types import Many, Multiplicity, One, TCon, TVar, Type, free_vars, show_type, subst_type

__all__ = [
    "Multiplicity", "One", "Many", "mult_add", "mult_mul",
    "Atom", "DuplicableSet", "SimpleConstraint", "EPS",
    "scale_simple", "tensor", "substitute_simple", "entails_simple", "entailment_derivation",
    "meet", "diff", "FailureKind", "SolverFailure", "UnboundTypeVariable",
    "parse_simple", "atom_order_shuffled",
]


def mult_add(p: Multiplicity, r: Multiplicity) -> Multiplicity:
    return p + r


def mult_mul(p: Multiplicity, r: Multiplicity) -> Multiplicity:
    return p * r


class UnboundTypeVariable(Exception):
    def __init__(self, name: str):
        super().__init__(f"unbound type variable {name}")
        self.name = name


@dataclass(frozen=True)
class Atom:
    class_name: str
    args: tuple[Type, ...] = ()

    @property
    def key(self) -> tuple[str, tuple[str, ...]]:
        return (self.class_name, tuple(show_type(a) for a in self.args))

    def __lt__(self, other: Atom) -> bool:
        return self.key < other.key

    def __str__(self) -> str:
        if not self.args:
            return self.class_name
        return self.class_name + " " + " ".join(show_type(a, 2) for a in self.args)

    def substitute(self, s: Mapping[str, Type], strict: bool = True) -> Atom:
        if strict:
            for v in self.free_vars():
                if v not in s:
                    raise UnboundTypeVariable(v)
        return Atom(self.class_name, tuple(subst_type(a, s) for a in self.args))

    def map_types(self, f: Callable[[Type], Type]) -> Atom:
        return Atom(self.class_name, tuple(f(a) for a in self.args))

    def free_vars(self) -> Iterator[str]:
        for a in self.args:
            yield from free_vars(a)


@dataclass(frozen=True)
class DuplicableSet:
    """Classes whose linear atoms may be duplicated and discarded; Linearly always is."""

    classes: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "classes", frozenset(self.classes) | {"Linearly"})

    def __contains__(self, item: Atom | str) -> bool:
        name = item.class_name if isinstance(item, Atom) else item
        return name in self.classes

    def with_classes(self, names: Iterable[str]) -> DuplicableSet:
        return DuplicableSet(self.classes | frozenset(names))


# Processing order for meet and diff.  Canonical unless a stress seed is active;
# results never depend on it, which the determinism tests check.
_shuffle_rng: random.Random | None = None


@contextlib.contextmanager
def atom_order_shuffled(seed: int):
    global _shuffle_rng
    saved = _shuffle_rng
    _shuffle_rng = random.Random(seed)
    try:
        yield
    finally:
        _shuffle_rng = saved


def _order(atoms: Iterable[Atom]) -> list[Atom]:
    out = sorted(set(atoms), key=lambda a: a.key)
    if _shuffle_rng is not None:
        _shuffle_rng.shuffle(out)
    return out


def _freeze_counts(counts: Mapping[Atom, int]) -> tuple[tuple[Atom, int], ...]:
    return tuple(sorted(((a, n) for a, n in counts.items() if n > 0), key=lambda p: p[0].key))


@dataclass(frozen=True)
class SimpleConstraint:
    unrestricted: frozenset[Atom] = frozenset()
    linear: tuple[tuple[Atom, int], ...] = ()

    @staticmethod
    def of(unrestricted: Iterable[Atom] = (), linear: Iterable[Atom] | Mapping[Atom, int] = ()) -> SimpleConstraint:
        counts = Counter(linear) if not isinstance(linear, Mapping) else Counter(dict(linear))
        return SimpleConstraint(frozenset(unrestricted), _freeze_counts(counts))

    @staticmethod
    def atom(q: Atom, mult: Multiplicity = One) -> SimpleConstraint:
        if mult is One:
            return SimpleConstraint(frozenset(), ((q, 1),))
        return SimpleConstraint(frozenset([q]), ())

    @property
    def counts(self) -> dict[Atom, int]:
        return dict(self.linear)

    def count(self, q: Atom) -> int:
        for a, n in self.linear:
            if a == q:
                return n
        return 0

    def atoms(self) -> list[Atom]:
        """Distinct atoms, canonical order."""
        return sorted(set(self.unrestricted) | {a for a, _ in self.linear}, key=lambda a: a.key)

    def linear_atoms(self) -> list[Atom]:
        """Linear atoms with repetition, canonical order."""
        return [a for a, n in self.linear for _ in range(n)]

    def items(self) -> list[tuple[Multiplicity, Atom]]:
        """Scaled atoms in canonical order: per atom, the unrestricted copy then linear copies."""
        out: list[tuple[Multiplicity, Atom]] = []
        counts = self.counts
        for a in self.atoms():
            if a in self.unrestricted:
                out.append((Many, a))
            out.extend((One, a) for _ in range(counts.get(a, 0)))
        return out

    def is_empty(self) -> bool:
        return not self.unrestricted and not self.linear

    def tensor(self, other: SimpleConstraint) -> SimpleConstraint:
        c = Counter(self.counts)
        c.update(other.counts)
        return SimpleConstraint(self.unrestricted | other.unrestricted, _freeze_counts(c))

    def scale(self, mult: Multiplicity) -> SimpleConstraint:
        if mult is One:
            return self
        return SimpleConstraint(self.unrestricted | {a for a, _ in self.linear}, ())

    def substitute(self, s: Mapping[str, Type], strict: bool = True) -> SimpleConstraint:
        return self.map_atoms(lambda a: a.substitute(s, strict))

    def map_types(self, f: Callable[[Type], Type]) -> SimpleConstraint:
        return self.map_atoms(lambda a: a.map_types(f))

    def map_atoms(self, f: Callable[[Atom], Atom]) -> SimpleConstraint:
        c: Counter = Counter()
        for a, n in self.linear:
            c[f(a)] += n
        return SimpleConstraint(frozenset(f(a) for a in self.unrestricted), _freeze_counts(c))

    def free_vars(self) -> Iterator[str]:
        for a in self.atoms():
            yield from a.free_vars()

    def remove_atom(self, q: Atom) -> SimpleConstraint:
        return SimpleConstraint(self.unrestricted - {q}, tuple(p for p in self.linear if p[0] != q))

    def __str__(self) -> str:
        items = self.items()
        if not items:
            return "eps"
        return " * ".join(f"{m}.{_atom_text(a)}" for m, a in items)

    def surface(self) -> str:
        """Constraint as written in source types, ignoring multiplicities."""
        atoms = [a for _, a in self.items()]
        if not atoms:
            return "()"
        if len(atoms) == 1:
            return str(atoms[0])
        return "(" + ", ".join(str(a) for a in atoms) + ")"

    def surface_arrow(self) -> str:
        if self.linear or not self.unrestricted:
            return "=o"
        return "=>"


EPS = SimpleConstraint()


def _atom_text(a: Atom) -> str:
    return f"({a})" if a.args else str(a)


def scale_simple(mult: Multiplicity, q: SimpleConstraint) -> SimpleConstraint:
    return q.scale(mult)


def tensor(q1: SimpleConstraint, q2: SimpleConstraint) -> SimpleConstraint:
    return q1.tensor(q2)


def substitute_simple(q: SimpleConstraint, subst: Mapping[str, Type]) -> SimpleConstraint:
    return q.substitute(subst, strict=True)


# ---------------------------------------------------------------------------
# entailment


@dataclass(frozen=True)
class EntailStep:
    """One rule application of a concrete entailment derivation."""

    rule: str  # Q-LINEAR | Q-DUPONE | Q-DUPNONE | Q-URLIN | Q-UR
    atom: Atom | None = None


def entailment_derivation(q1: SimpleConstraint, q2: SimpleConstraint, dup: DuplicableSet) -> list[EntailStep] | None:
    """A derivation of ``q1 |- q2`` read bottom-up, or None if there is none.

    The rules are syntax directed once the wanted atom is chosen; atoms are
    taken in canonical order.  Linear wanteds are matched against linear givens
    first, then against an unrestricted given; leftover duplicable givens are
    dropped; the remaining unrestricted parts are compared by Q-UR.
    """
    steps: list[EntailStep] = []
    given = Counter(q1.counts)
    wanted = Counter(q2.counts)
    for q in sorted(set(given) | set(wanted), key=lambda a: a.key):
        g, w = given[q], wanted[q]
        if q in dup:
            if g >= 1:
                steps.extend(EntailStep("Q-DUPONE", q) for _ in range(w))
                steps.extend(EntailStep("Q-DUPNONE", q) for _ in range(g))
            elif w > 0:
                if q not in q1.unrestricted:
                    return None
                steps.extend(EntailStep("Q-URLIN", q) for _ in range(w))
        else:
            if g > w:
                return None
            steps.extend(EntailStep("Q-LINEAR", q) for _ in range(g))
            if w > g:
                if q not in q1.unrestricted:
                    return None
                steps.extend(EntailStep("Q-URLIN", q) for _ in range(w - g))
    if not q2.unrestricted <= q1.unrestricted:
        return None
    steps.append(EntailStep("Q-UR"))
    return steps


def entails_simple(q1: SimpleConstraint, q2: SimpleConstraint, dup: DuplicableSet) -> bool:
    return entailment_derivation(q1, q2, dup) is not None


# ---------------------------------------------------------------------------
# meet and diff


def meet(q1: SimpleConstraint, q2: SimpleConstraint, dup: DuplicableSet) -> SimpleConstraint:
    """Q1 /\\ Q2 by INF-MATCH, INF-DIFF{L,R}, INF-DIFFD{L,R}, then INF-UR."""
    c1, c2 = q1.counts, q2.counts
    unr = set(q1.unrestricted | q2.unrestricted)
    lin: Counter = Counter()
    for q in _order(set(c1) | set(c2)):
        k1, k2 = c1.get(q, 0), c2.get(q, 0)
        lin[q] += min(k1, k2)  # INF-MATCH
        extra = abs(k1 - k2)
        if extra:
            if q in dup:
                lin[q] += extra  # INF-DIFFDL / INF-DIFFDR
            else:
                unr.add(q)  # INF-DIFFL / INF-DIFFR
    return SimpleConstraint(frozenset(unr), _freeze_counts(lin))


class FailureKind(enum.Enum):
    MULTIPLICITY = "MultiplicityError"
    AMBIGUITY = "AmbiguityError"
    UNSOLVED = "UnsolvedAtom"


@dataclass
class SolverFailure(Exception):
    kind: FailureKind
    atom: Atom
    detail: str = ""
    spans: tuple = field(default=())

    def __str__(self) -> str:
        return f"{self.kind.value} on {self.atom}: {self.detail}"


def diff(qi: SimpleConstraint, qb: SimpleConstraint, dup: DuplicableSet) -> SimpleConstraint:
    """Qi \\ Qb ~> Qo, removing the atoms bound by Qb; raises SolverFailure.

    Atoms are visited in processing order, but when several atoms fail the
    canonically least one is reported, so the outcome never depends on order.
    """
    counts_b = qb.counts
    ambiguous = [q for q in _order(qb.atoms())
                 if counts_b.get(q, 0) > 1 or (q in qb.unrestricted and counts_b.get(q, 0) > 0)]
    if ambiguous:
        q = min(ambiguous, key=lambda a: a.key)
        raise SolverFailure(FailureKind.AMBIGUITY, q, "bound more than once by the same implication")
    failures: list[SolverFailure] = []
    out = qi
    for q in _order(qb.atoms()):
        k = out.count(q)
        unr = q in out.unrestricted
        if q in qb.unrestricted:
            pass  # D-UR
        elif q in dup:
            if unr:
                failures.append(SolverFailure(
                    FailureKind.MULTIPLICITY, q, "a duplicable linear given cannot serve an unrestricted use"))
        elif unr:
            failures.append(SolverFailure(FailureKind.MULTIPLICITY, q, "a linear given is needed unrestrictedly"))
        elif k != 1:
            detail = "is never used" if k == 0 else f"is used {k} times"
            failures.append(SolverFailure(FailureKind.MULTIPLICITY, q, f"linear given {detail}"))
        out = out.remove_atom(q)
    if failures:
        raise min(failures, key=lambda f: f.atom.key)
    return out


# ---------------------------------------------------------------------------
# textual form: 1.q, w.q, Q1 * Q2, eps

_TOKEN = re.compile(r"\s*(?:(=o)|(eps)|([1w])\.|([A-Za-z_][A-Za-z0-9_'#]*)|(\S))")


def tokenize(text: str) -> list[str]:
    out: list[str] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        pos = m.end()
        tok = m.group(0).strip()
        if tok:
            out.append(tok)
    return out


class ConstraintSyntaxError(ValueError):
    pass


class _Reader:
    def __init__(self, tokens: list[str]):
        self.toks = tokens
        self.i = 0

    def peek(self) -> str | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, expect: str | None = None) -> str:
        t = self.peek()
        if t is None or (expect is not None and t != expect):
            raise ConstraintSyntaxError(f"expected {expect or 'token'}, got {t}")
        self.i += 1
        return t

    def at_end(self) -> bool:
        return self.i >= len(self.toks)


def _read_type_arg(r: _Reader) -> Type:
    t = r.take()
    if t == "(":
        head = r.take()
        args = []
        while r.peek() != ")":
            args.append(_read_type_arg(r))
        r.take(")")
        return _mk_type(head, args)
    return _mk_type(t, [])


def _mk_type(name: str, args: list[Type]) -> Type:
    if name[0].isupper():
        return TCon(name, tuple(args))
    if args:
        raise ConstraintSyntaxError(f"type variable {name} applied to arguments")
    return TVar(name)


def read_atom(r: _Reader) -> Atom:
    if r.peek() == "(":
        r.take("(")
        a = read_atom(r)
        r.take(")")
        return a
    name = r.take()
    if not name[0].isalpha():
        raise ConstraintSyntaxError(f"expected class name, got {name}")
    args = []
    while r.peek() not in (None, "*", "&", ")", "}", "=o"):
        args.append(_read_type_arg(r))
    return Atom(name, tuple(args))


def read_simple_factor(r: _Reader) -> SimpleConstraint:
    t = r.peek()
    if t == "eps":
        r.take()
        return EPS
    if t in ("1.", "w."):
        r.take()
        return SimpleConstraint.atom(read_atom(r), One if t == "1." else Many)
    if t == "(":
        r.take("(")
        q = read_simple(r)
        r.take(")")
        return q
    raise ConstraintSyntaxError(f"unexpected {t}")


def read_simple(r: _Reader) -> SimpleConstraint:
    q = read_simple_factor(r)
    while r.peek() == "*":
        r.take()
        q = q.tensor(read_simple_factor(r))
    return q


def parse_simple(text: str) -> SimpleConstraint:
    r = _Reader(tokenize(text))
    q = read_simple(r)
    if not r.at_end():
        raise ConstraintSyntaxError(f"trailing input at {r.peek()}")
    return q
