import random

from hypothesis import given, settings

from linck.constraints import EPS, Atom, DuplicableSet, FailureKind, SimpleConstraint
from linck.solver import (
    Failed, Solved, check_top_level, explain_failure, solve, solve_state_style,
)
from linck.types import Many, One, TVar
from linck.wanted import Impl, Simple, Tensor, With, oracle_entails, parse_wanted

from strategies import dup_st, random_dup, random_wanted, wanted_st

q = Atom("q")
NO_D = DuplicableSet()


def one(*atoms):
    return SimpleConstraint.of([], list(atoms))


def many(*atoms):
    return SimpleConstraint.of(list(atoms), [])


COUNTING = Impl(One, one(q), Impl(One, one(q), Tensor(Simple(one(q)), Simple(one(q))), origin="inner"), origin="outer")
SHADOWED = Impl(One, many(q), Impl(One, one(q), Simple(one(q)), origin="inner"), origin="outer")


def test_examples():
    assert solve(Simple(one(q)), NO_D) == Solved(one(q))
    assert solve(Impl(One, one(q), Simple(one(q))), NO_D) == Solved(EPS)
    out = solve(COUNTING, NO_D)
    assert isinstance(out, Failed) and out.kind is FailureKind.MULTIPLICITY and out.atom == q
    assert out.blame == "inner"
    assert solve(SHADOWED, NO_D) == Solved(EPS)
    amb = solve(Impl(One, one(q, q), Simple(one(q)), origin="site"), NO_D)
    assert isinstance(amb, Failed) and amb.kind is FailureKind.AMBIGUITY and amb.blame == "site"


def test_mixed_simple_decomposes():
    mixed = SimpleConstraint.of([Atom("p")], [q, q])
    assert solve(Simple(mixed), NO_D) == Solved(mixed)


def test_state_style_differential():
    assert solve_state_style(COUNTING, NO_D) == Solved(EPS)
    bad = solve_state_style(SHADOWED, NO_D)
    assert isinstance(bad, Failed)
    assert solve_state_style(Simple(EPS), NO_D) == Solved(EPS)


def test_check_top_level():
    n = TVar("n")
    rd, wr = Atom("Read", (n,)), Atom("Write", (n,))
    rw = one(rd, wr)
    assert check_top_level(rw, Simple(rw), NO_D).ok
    twice = Tensor(Simple(rw), Simple(rw))
    out = check_top_level(rw, twice, NO_D)
    assert isinstance(out, Failed) and out.kind is FailureKind.MULTIPLICITY
    assert check_top_level(EPS, Simple(EPS), NO_D).ok
    unsolved = check_top_level(EPS, Simple(one(rd)), NO_D)
    assert isinstance(unsolved, Failed) and unsolved.kind is FailureKind.UNSOLVED and unsolved.atom == rd


def test_explain_wording():
    rw = Atom("RW", (TVar("n"),))
    assert "used more than once" in explain_failure(Failed(FailureKind.MULTIPLICITY, rw))
    assert "ambiguous" in explain_failure(Failed(FailureKind.AMBIGUITY, Atom("C")))
    assert "could not be discharged" in explain_failure(Failed(FailureKind.UNSOLVED, Atom("Read", (TVar("n"),))))


def test_trace_lines():
    lines = []
    solve(parse_wanted("1.(1.q =o 1.q)"), NO_D, trace=lines.append)
    assert lines == ["S-ATOM: 1.q ~> 1.q", "S-IMPL: 1.(1.q =o 1.q) ~> eps"]


def test_soundness_against_oracle():
    rng = random.Random(65)
    solved = 0
    for _ in range(1200):
        c, d = random_wanted(rng), random_dup(rng)
        out = solve(c, d)
        if isinstance(out, Solved):
            solved += 1
            assert oracle_entails(out.q, c, d), (str(c), str(out.q))
    assert solved > 300


def _kind(outcome):
    return outcome.q if isinstance(outcome, Solved) else outcome.kind


@settings(max_examples=300, deadline=None)
@given(wanted_st(), wanted_st(), dup_st)
def test_tensor_symmetry(c1, c2, d):
    assert _kind(solve(Tensor(c1, c2), d)) == _kind(solve(Tensor(c2, c1), d))


@settings(max_examples=200, deadline=None)
@given(wanted_st(), dup_st)
def test_scaling_commutes_with_solving(c, d):
    from linck.wanted import scale_wanted
    out = solve(c, d)
    if isinstance(out, Solved):
        again = solve(scale_wanted(Many, c), d)
        assert again == Solved(out.q.scale(Many))


def test_state_style_sound_when_both_succeed():
    rng = random.Random(4)
    both = 0
    for _ in range(3000):
        body, d = random_wanted(rng), random_dup(rng)
        given = SimpleConstraint.of([], [a for a in body_atoms(body)][:2])
        c = Impl(One, SimpleConstraint.of([], dict.fromkeys(given.atoms(), 1)), body)
        s1, s2 = solve(c, d), solve_state_style(c, d)
        if isinstance(s1, Solved) and isinstance(s2, Solved) and s1.q.is_empty():
            both += 1
            assert oracle_entails(EPS, c, d)
    assert both > 20


def body_atoms(c):
    from linck.wanted import atoms_of
    return sorted(set(atoms_of(c)), key=lambda a: a.key)
