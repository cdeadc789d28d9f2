"""The guess-free solver, top-level acceptance, and a state-style variant.

``solve`` is the writer-style judgement: each node reports the demand it puts
on its environment, and implications subtract their givens with ``diff``.
Alongside the demand the solver keeps, per atom, the source spans of the
occurrences that produced it; that is what blame is computed from.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

from linck.constraints import (
    EPS, Atom, DuplicableSet, FailureKind, SimpleConstraint, SolverFailure, diff, meet,
)
from linck.types import Many, One
from linck.wanted import Impl, Simple, Tensor, WantedConstraint, With


@dataclass(frozen=True)
class Solved:
    q: SimpleConstraint

    ok = True


@dataclass(frozen=True)
class Failed:
    kind: FailureKind
    atom: Atom
    blame: Any = None
    detail: str = ""

    ok = False


SolverOutcome = Solved | Failed

Trace = Callable[[str], None]

# atom -> spans of the occurrences that demanded it, in source order
Provenance = dict[Atom, tuple]


def _span_key(span: Any) -> tuple:
    if span is None:
        return (-1, -1)
    return (getattr(span, "start_line", 0), getattr(span, "start_col", 0))


def _merge(a: Provenance, b: Provenance) -> Provenance:
    out = dict(a)
    for q, spans in b.items():
        out[q] = tuple(sorted(set(out.get(q, ())) | set(spans), key=_span_key))
    return out


class _Writer:
    def __init__(self, dup: DuplicableSet, trace: Trace | None):
        self.dup = dup
        self.trace = trace

    def log(self, rule: str, c: Any, out: SimpleConstraint) -> None:
        if self.trace is not None:
            self.trace(f"{rule}: {c} ~> {out}")

    def run(self, c: WantedConstraint) -> tuple[SimpleConstraint, Provenance]:
        if isinstance(c, Simple):
            out = EPS
            for mult, q in c.q.items():
                one = SimpleConstraint.atom(q, mult)
                self.log("S-ATOM", one, one)
                out = out.tensor(one)
            prov = {q: ((c.origin,) if c.origin is not None else ()) for q in c.q.atoms()}
            return out, prov
        if isinstance(c, Tensor):
            (q1, p1), (q2, p2) = self.both(c)
            out = q1.tensor(q2)
            self.log("S-TENSOR", c, out)
            return out, _merge(p1, p2)
        if isinstance(c, With):
            (q1, p1), (q2, p2) = self.both(c)
            out = meet(q1, q2, self.dup)
            self.log("S-WITH", c, out)
            return out, _merge(p1, p2)
        if isinstance(c, Impl):
            qi, prov = self.run(c.body)
            try:
                qo = diff(qi, c.given, self.dup)
            except SolverFailure as err:
                raise SolverFailure(err.kind, err.atom, err.detail, (self._blame(err, c, prov),)) from None
            out = qo.scale(c.mult)
            self.log("S-IMPL", c, out)
            bound = set(c.given.atoms())
            return out, {q: s for q, s in prov.items() if q not in bound}
        raise TypeError(c)

    def both(self, c: Tensor | With) -> tuple:
        """Solve both children; if both fail, report the canonically least failure."""
        results, failures = [], []
        for child in (c.left, c.right):
            try:
                results.append(self.run(child))
            except SolverFailure as err:
                failures.append(err)
        if failures:
            raise min(failures, key=lambda f: (f.kind.value, f.atom.key))
        return results

    def _blame(self, err: SolverFailure, c: Impl, prov: Provenance) -> Any:
        # An excess use coming from several distinct sites is blamed on the
        # last of them; anything else is the implication's own fault.
        spans = [s for s in prov.get(err.atom, ()) if s is not None]
        if err.kind is FailureKind.MULTIPLICITY and len(set(spans)) >= 2:
            return max(spans, key=_span_key)
        return c.origin


def solve(c: WantedConstraint, dup: DuplicableSet, trace: Trace | None = None) -> SolverOutcome:
    try:
        q, _ = _Writer(dup, trace).run(c)
    except SolverFailure as err:
        return Failed(err.kind, err.atom, err.spans[0] if err.spans else None, err.detail)
    return Solved(q)


def solve_with_provenance(c: WantedConstraint, dup: DuplicableSet) -> tuple[SimpleConstraint, Provenance]:
    """Like ``solve`` but returns the provenance map; raises SolverFailure."""
    return _Writer(dup, None).run(c)


def check_top_level(qg: SimpleConstraint, c: WantedConstraint, dup: DuplicableSet,
                    origin: Any = None, trace: Trace | None = None) -> SolverOutcome:
    """Accept iff ``1.(qg =o c)`` solves to the empty constraint."""
    wrapped = Impl(One, qg, c, origin)
    try:
        q, prov = _Writer(dup, trace).run(wrapped)
    except SolverFailure as err:
        return Failed(err.kind, err.atom, err.spans[0] if err.spans else origin, err.detail)
    if not q.is_empty():
        atom = q.atoms()[0]
        spans = prov.get(atom, ())
        return Failed(FailureKind.UNSOLVED, atom, spans[0] if spans else origin,
                      "no given in scope provides it")
    return Solved(EPS)


# ---------------------------------------------------------------------------
# state-style solver


class _StateFailure(Exception):
    def __init__(self, kind: FailureKind, atom: Atom, blame: Any, detail: str):
        super().__init__(detail)
        self.kind, self.atom, self.blame, self.detail = kind, atom, blame, detail


@dataclass
class _Given:
    atom: Atom
    level: int
    used: bool = False


class _State:
    """Linear givens are threaded left to right; lookup picks the innermost."""

    def __init__(self, dup: DuplicableSet, trace: Trace | None):
        self.dup = dup
        self.trace = trace

    def run(self, c: WantedConstraint, unr: frozenset, lin: list[_Given], level: int) -> None:
        if isinstance(c, Simple):
            for mult, q in c.q.items():
                self.atom(mult, q, unr, lin, c.origin)
        elif isinstance(c, Tensor):
            self.run(c.left, unr, lin, level)
            self.run(c.right, unr, lin, level)
        elif isinstance(c, With):
            before = [g.used for g in lin]
            self.run(c.left, unr, lin, level)
            after_left = [g.used for g in lin]
            for g, u in zip(lin, before):
                g.used = u
            self.run(c.right, unr, lin, level)
            if [g.used for g in lin] != after_left:
                diverging = next(g for g, a in zip(lin, after_left) if g.used != a)
                raise _StateFailure(FailureKind.MULTIPLICITY, diverging.atom, c_origin(c),
                                    "branches consume different linear givens")
        elif isinstance(c, Impl):
            counts = c.given.counts
            for q, n in counts.items():
                if n > 1 or q in c.given.unrestricted:
                    raise _StateFailure(FailureKind.AMBIGUITY, q, c.origin, "bound more than once by the same implication")
            inner_unr = unr | c.given.unrestricted
            fresh = [_Given(q, level + 1) for q in c.given.linear_atoms()]
            visible = fresh if c.mult is Many else lin + fresh
            self.run(c.body, inner_unr, visible, level + 1)
            for g in fresh:
                if not g.used and g.atom not in self.dup:
                    raise _StateFailure(FailureKind.MULTIPLICITY, g.atom, c.origin, "linear given is never used")
        else:
            raise TypeError(c)

    def atom(self, mult, q: Atom, unr: frozenset, lin: list[_Given], origin: Any) -> None:
        candidates = [g for g in lin if g.atom == q and (not g.used or q in self.dup)]
        if q in unr and any(g.atom == q for g in lin):
            raise _StateFailure(FailureKind.AMBIGUITY, q, origin, "available both linearly and unrestrictedly")
        if mult is Many:
            if q in unr:
                return
            if candidates:
                raise _StateFailure(FailureKind.MULTIPLICITY, q, origin, "a linear given is needed unrestrictedly")
            raise _StateFailure(FailureKind.UNSOLVED, q, origin, "no given in scope provides it")
        if candidates:
            g = max(candidates, key=lambda g: g.level)
            if q not in self.dup:
                g.used = True
            if self.trace is not None:
                self.trace(f"S-LIN: 1.{q} from level {g.level}")
            return
        if q in unr:
            return
        used = [g for g in lin if g.atom == q]
        if used:
            raise _StateFailure(FailureKind.MULTIPLICITY, q, origin, "used more than once")
        raise _StateFailure(FailureKind.UNSOLVED, q, origin, "no given in scope provides it")


def c_origin(c: WantedConstraint) -> Any:
    return getattr(c, "origin", None)


def solve_state_style(c: WantedConstraint, dup: DuplicableSet, trace: Trace | None = None) -> SolverOutcome:
    """Solve with no ambient givens; Solved(eps) means every atom was discharged."""
    try:
        _State(dup, trace).run(c, frozenset(), [], 0)
    except _StateFailure as err:
        return Failed(err.kind, err.atom, err.blame, err.detail)
    return Solved(EPS)


# ---------------------------------------------------------------------------
# diagnostics

def explain_failure(outcome: Failed) -> str:
    """Stable, human-readable text naming the atom, the failure kind and the blamed site."""
    atom, detail = outcome.atom, outcome.detail
    if outcome.kind is FailureKind.AMBIGUITY:
        text = f"constraint {atom} is ambiguous: more than one given could provide it"
    elif outcome.kind is FailureKind.UNSOLVED:
        text = f"constraint {atom} could not be discharged"
    elif "never" in detail or "unrestrict" in detail:
        text = f"linear constraint {atom} is not used exactly once"
    else:
        text = f"linear constraint {atom} is used more than once"
    if detail:
        text += f" ({detail})"
    if outcome.blame is not None:
        text = f"{outcome.blame}: {text}"
    return text
