"""Wanted constraints, their scaling, and a bounded entailment oracle.

The oracle is a test-only decision procedure for ``Q |- C`` over a finite
universe of simple constraints: every atom that occurs in the question, with
per-atom linear counts up to a bound.  For each sub-constraint it computes the
set of universe elements that entail it, closing under C-DOM at every step.
A ``True`` answer always comes with a derivation; a ``False`` answer can be an
artifact of the bound.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Iterator, Mapping

import numpy as np

from linck.constraints import (
    EPS, Atom, ConstraintSyntaxError, DuplicableSet, SimpleConstraint, _Reader,
    entails_simple, read_atom, tokenize,
)
from linck.types import Many, Multiplicity, One, Type


class WantedConstraint:
    __slots__ = ()

    def __str__(self) -> str:
        return show_wanted(self)


@dataclass(frozen=True)
class Simple(WantedConstraint):
    q: SimpleConstraint
    origin: Any = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Tensor(WantedConstraint):
    left: WantedConstraint
    right: WantedConstraint


@dataclass(frozen=True)
class With(WantedConstraint):
    left: WantedConstraint
    right: WantedConstraint


@dataclass(frozen=True)
class Impl(WantedConstraint):
    mult: Multiplicity
    given: SimpleConstraint
    body: WantedConstraint
    origin: Any = field(default=None, compare=False, repr=False)


TRUE = Simple(EPS)


def scale_wanted(mult: Multiplicity, c: WantedConstraint) -> WantedConstraint:
    if mult is One:
        return c
    if isinstance(c, Simple):
        return Simple(c.q.scale(Many), c.origin)
    if isinstance(c, Tensor):
        return Tensor(scale_wanted(mult, c.left), scale_wanted(mult, c.right))
    if isinstance(c, With):
        return Tensor(scale_wanted(mult, c.left), scale_wanted(mult, c.right))
    if isinstance(c, Impl):
        return Impl(mult * c.mult, c.given, c.body, c.origin)
    raise TypeError(c)


def substitute_wanted(c: WantedConstraint, subst: Mapping[str, Type]) -> WantedConstraint:
    if isinstance(c, Simple):
        return Simple(c.q.substitute(subst), c.origin)
    if isinstance(c, Tensor):
        return Tensor(substitute_wanted(c.left, subst), substitute_wanted(c.right, subst))
    if isinstance(c, With):
        return With(substitute_wanted(c.left, subst), substitute_wanted(c.right, subst))
    if isinstance(c, Impl):
        return Impl(c.mult, c.given.substitute(subst), substitute_wanted(c.body, subst), c.origin)
    raise TypeError(c)


def tensor_all(cs: list[WantedConstraint]) -> WantedConstraint:
    if not cs:
        return TRUE
    out = cs[0]
    for c in cs[1:]:
        out = Tensor(out, c)
    return out


def with_all(cs: list[WantedConstraint]) -> WantedConstraint:
    out = cs[0]
    for c in cs[1:]:
        out = With(out, c)
    return out


def atoms_of(c: WantedConstraint) -> Iterator[Atom]:
    if isinstance(c, Simple):
        yield from c.q.atoms()
    elif isinstance(c, (Tensor, With)):
        yield from atoms_of(c.left)
        yield from atoms_of(c.right)
    elif isinstance(c, Impl):
        yield from c.given.atoms()
        yield from atoms_of(c.body)


def depth(c: WantedConstraint) -> int:
    if isinstance(c, Simple):
        return 0
    if isinstance(c, (Tensor, With)):
        return 1 + max(depth(c.left), depth(c.right))
    return 1 + depth(c.body)


# ---------------------------------------------------------------------------
# textual form


def show_wanted(c: WantedConstraint) -> str:
    if isinstance(c, Simple):
        return str(c.q)
    if isinstance(c, Tensor):
        return f"{_tensor_operand(c.left)} * {_tensor_operand(c.right)}"
    if isinstance(c, With):
        return f"{_with_operand(c.left)} & {_with_operand(c.right)}"
    if isinstance(c, Impl):
        return f"{c.mult}.({c.given} =o {show_wanted(c.body)})"
    raise TypeError(c)


def _tensor_operand(c: WantedConstraint) -> str:
    if isinstance(c, Simple):
        return "{" + str(c.q) + "}"
    if isinstance(c, Impl):
        return show_wanted(c)
    return f"({show_wanted(c)})"


def _with_operand(c: WantedConstraint) -> str:
    if isinstance(c, (Simple, Impl)):
        return show_wanted(c)
    return f"({show_wanted(c)})"


def parse_wanted(text: str) -> WantedConstraint:
    r = _Reader(tokenize(text))
    c = _read_with(r)
    if not r.at_end():
        raise ConstraintSyntaxError(f"trailing input at {r.peek()}")
    return c


def parse_wanted_lines(text: str) -> list[WantedConstraint]:
    """One constraint per line; blank lines and ``--`` comments are skipped."""
    out = []
    for line in text.splitlines():
        line = line.split("--", 1)[0].strip()
        if line:
            out.append(parse_wanted(line))
    return out


def _read_with(r: _Reader) -> WantedConstraint:
    c = _read_tensor(r)
    while r.peek() == "&":
        r.take()
        c = With(c, _read_tensor(r))
    return c


def _read_tensor(r: _Reader) -> WantedConstraint:
    factors = [_read_factor(r)]
    while r.peek() == "*":
        r.take()
        factors.append(_read_factor(r))
    if all(bare for _, bare in factors):
        q = EPS
        for f, _ in factors:
            q = q.tensor(f.q)
        return Simple(q)
    out = factors[0][0]
    for f, _ in factors[1:]:
        out = Tensor(out, f)
    return out


def _read_factor(r: _Reader) -> tuple[WantedConstraint, bool]:
    t = r.peek()
    if t == "eps":
        r.take()
        return Simple(EPS), True
    if t in ("1.", "w."):
        r.take()
        mult = One if t == "1." else Many
        if r.peek() == "(" and _is_impl_ahead(r):
            r.take("(")
            given = _read_given(r)
            r.take("=o")
            body = _read_with(r)
            r.take(")")
            return Impl(mult, given, body), False
        return Simple(SimpleConstraint.atom(read_atom(r), mult)), True
    if t == "{":
        r.take()
        c = _read_with(r)
        r.take("}")
        if not isinstance(c, Simple):
            raise ConstraintSyntaxError("braces enclose a simple constraint only")
        return c, False
    if t == "(":
        r.take()
        c = _read_with(r)
        r.take(")")
        return c, False
    raise ConstraintSyntaxError(f"unexpected {t}")


def _is_impl_ahead(r: _Reader) -> bool:
    depth_ = 0
    for tok in r.toks[r.i:]:
        if tok in ("(", "{"):
            depth_ += 1
        elif tok in (")", "}"):
            depth_ -= 1
            if depth_ == 0:
                return False
        elif tok == "=o" and depth_ == 1:
            return True
    return False


def _read_given(r: _Reader) -> SimpleConstraint:
    c = _read_tensor(r)
    if not isinstance(c, Simple):
        raise ConstraintSyntaxError("implication givens are simple constraints")
    return c.q


# ---------------------------------------------------------------------------
# bounded oracle


class _Universe:
    """Simple constraints over a list of atoms with per-atom linear count bounds.

    Element ``i`` has one digit per atom (mixed radix); digit = u * (bound + 1) + k
    where ``u`` says the atom is unrestricted and ``k`` is its linear count.
    """

    def __init__(self, bounds: tuple[int, ...], dup_mask: tuple[bool, ...]):
        self.n = len(bounds)
        self.bounds = np.array(bounds, dtype=np.int64)
        self.radix = 2 * (self.bounds + 1)
        self.size = int(np.prod(self.radix)) if self.n else 1
        # weight of atom a's digit: product of the radices to its right
        self.weights = np.array([int(np.prod(self.radix[a + 1:])) for a in range(self.n)], dtype=np.int64)
        idx = np.arange(self.size, dtype=np.int64)
        digits = (idx[:, None] // self.weights[None, :]) % self.radix[None, :]
        self.u = digits // (self.bounds + 1)
        self.k = digits % (self.bounds + 1)
        self.ent = self._entailment(dup_mask)
        self.strict = self.ent & ~self.ent.T
        self.omega = self._encode(self.u | (self.k > 0), np.zeros_like(self.k))

    def _encode(self, u: np.ndarray, k: np.ndarray) -> np.ndarray:
        digit = u * (self.bounds + 1) + k
        return (digit * self.weights).sum(axis=-1)

    def _entailment(self, dup_mask: tuple[bool, ...]) -> np.ndarray:
        # Concrete entailment is checked one atom at a time: every rule of the
        # relation inspects a single atom, so the full table is the conjunction
        # of single-atom tables.
        full = np.ones((1, 1), dtype=bool)
        q = Atom("Q")
        for a in range(self.n):
            d = DuplicableSet(frozenset({"Q"})) if dup_mask[a] else DuplicableSet()
            b = int(self.bounds[a])
            states = [SimpleConstraint.of([q] if s // (b + 1) else [], {q: s % (b + 1)})
                      for s in range(2 * (b + 1))]
            table = np.array([[entails_simple(x, y, d) for y in states] for x in states], dtype=bool)
            full = np.kron(full, table).astype(bool)
        return full

    def product(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        """Index of Q_i * Q_j (broadcast), or -1 when a count leaves the universe."""
        i, j = np.broadcast_arrays(np.asarray(i), np.asarray(j))
        u = self.u[i] | self.u[j]
        k = self.k[i] + self.k[j]
        ok = (k <= self.bounds).all(axis=-1)
        enc = self._encode(u, np.minimum(k, self.bounds))
        return np.where(ok, enc, -1)

    def index(self, q: SimpleConstraint, atoms: list[Atom]) -> int | None:
        counts = q.counts
        u = np.array([1 if a in q.unrestricted else 0 for a in atoms], dtype=np.int64)
        k = np.array([counts.get(a, 0) for a in atoms], dtype=np.int64)
        if (k > self.bounds).any() or set(q.atoms()) - set(atoms):
            return None
        return int(self._encode(u, k))

    def up(self, base: np.ndarray) -> np.ndarray:
        if not base.any():
            return np.zeros(self.size, dtype=bool)
        return self.ent[:, base].any(axis=1)

    def generators(self, s: np.ndarray) -> np.ndarray:
        """The weakest members of an upward-closed set; they generate it."""
        if not s.any():
            return np.zeros(0, dtype=np.int64)
        stronger_than_member = self.strict[:, s].any(axis=1)
        return np.nonzero(s & ~stronger_than_member)[0]


@lru_cache(maxsize=64)
def _universe(bounds: tuple[int, ...], dup_mask: tuple[bool, ...]) -> _Universe:
    return _Universe(bounds, dup_mask)


def _count_totals(c: WantedConstraint, acc: Counter) -> Counter:
    if isinstance(c, Simple):
        acc.update(c.q.counts)
    elif isinstance(c, (Tensor, With)):
        _count_totals(c.left, acc)
        _count_totals(c.right, acc)
    else:
        acc.update(c.given.counts)
        _count_totals(c.body, acc)
    return acc


def oracle_entails(q: SimpleConstraint, c: WantedConstraint, dup: DuplicableSet, depth_bound: int = 2) -> bool:
    """Bounded decision of ``q |- c`` by rules C-DOM, C-ID, C-TENSOR, C-WITH, C-IMPL.

    Per atom, the universe admits linear counts up to the larger of
    ``depth_bound``, the count in ``q``, and the total count of the atom over
    all simple nodes and givens of ``c``.  The weakest solutions of every
    sub-constraint stay within that total, so the bound is only hit by
    questions outside the intended scale.
    """
    if depth_bound < 1:
        raise ValueError("depth_bound must be at least 1")
    atoms = sorted(set(q.atoms()) | set(atoms_of(c)), key=lambda a: a.key)
    totals = _count_totals(c, Counter())
    bounds = tuple(max(depth_bound, q.count(a), totals[a]) for a in atoms)
    uni = _universe(bounds, tuple(a in dup for a in atoms))
    i = uni.index(q, atoms)
    if i is None:
        return False
    return bool(_solutions(uni, atoms, c)[i])


def _solutions(uni: _Universe, atoms: list[Atom], c: WantedConstraint) -> np.ndarray:
    """Boolean mask of universe elements Q with Q |- c (closed under C-DOM)."""
    if isinstance(c, Simple):
        base = np.zeros(uni.size, dtype=bool)
        j = uni.index(c.q, atoms)
        if j is not None:
            base[j] = True  # C-ID
        return uni.up(base)
    if isinstance(c, With):
        return _solutions(uni, atoms, c.left) & _solutions(uni, atoms, c.right)
    if isinstance(c, Tensor):
        g1 = uni.generators(_solutions(uni, atoms, c.left))
        g2 = uni.generators(_solutions(uni, atoms, c.right))
        base = np.zeros(uni.size, dtype=bool)
        if len(g1) and len(g2):
            prods = uni.product(g1[:, None], g2[None, :]).ravel()
            base[prods[prods >= 0]] = True
        return uni.up(base)
    if isinstance(c, Impl):
        body = _solutions(uni, atoms, c.body)
        j = uni.index(c.given, atoms)
        base = np.zeros(uni.size, dtype=bool)
        if j is not None:
            with_given = uni.product(np.arange(uni.size), np.full(uni.size, j))
            ok = (with_given >= 0) & body[np.maximum(with_given, 0)]
            q0 = np.nonzero(ok)[0]
            base[uni.omega[q0] if c.mult is Many else q0] = True
        return uni.up(base)
    raise TypeError(c)
