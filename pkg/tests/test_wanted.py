import random

import numpy as np
from hypothesis import HealthCheck, assume, given, settings

from linck.constraints import EPS, Atom, DuplicableSet, SimpleConstraint, entails_simple, scale_simple
from linck.types import Many, One, TVar
from linck.wanted import (
    Impl, Simple, Tensor, With, _universe, depth, oracle_entails, parse_wanted, parse_wanted_lines,
    scale_wanted, show_wanted, substitute_wanted,
)

from strategies import ATOMS, dup_st, mult_st, random_dup, random_simple, random_wanted, simple_st, wanted_st

q, p = Atom("q"), Atom("p")
NO_D = DuplicableSet()
Q_IN_D = DuplicableSet(frozenset({"q"}))


def one(*atoms):
    return SimpleConstraint.of([], list(atoms))


def many(*atoms):
    return SimpleConstraint.of(list(atoms), [])


def test_scale_examples():
    c = Tensor(Simple(one(p)), With(Simple(one(q)), Simple(EPS)))
    assert scale_wanted(One, c) == c
    assert scale_wanted(Many, With(Simple(one(p)), Simple(one(q)))) == Tensor(Simple(many(p)), Simple(many(q)))
    assert scale_wanted(Many, Impl(One, one(q), Simple(one(q)))) == Impl(Many, one(q), Simple(one(q)))


def test_substitute_examples():
    n = TVar("n")
    sub = {"n": TVar("p")}
    assert substitute_wanted(Simple(one(Atom("RW", (n,)))), sub) == Simple(one(Atom("RW", (TVar("p"),))))
    assert substitute_wanted(Tensor(Simple(EPS), Simple(EPS)), sub) == Tensor(Simple(EPS), Simple(EPS))
    rd, rp = Atom("Read", (n,)), Atom("Read", (TVar("p"),))
    assert substitute_wanted(Impl(One, one(rd), Simple(one(rd))), sub) == Impl(One, one(rp), Simple(one(rp)))


def test_origin_excluded_from_equality():
    assert Simple(one(q), origin="a") == Simple(one(q), origin="b")
    assert Impl(One, EPS, Simple(EPS), origin=1) == Impl(One, EPS, Simple(EPS), origin=2)


def test_oracle_examples():
    assert oracle_entails(one(q), Simple(one(q)), NO_D, 2)
    assert oracle_entails(one(q), With(Simple(one(q)), Simple(one(q))), NO_D, 2)
    both = Tensor(Simple(one(q)), Simple(one(q)))
    assert not oracle_entails(one(q), both, NO_D, 2)
    assert oracle_entails(one(q), both, Q_IN_D, 2)


def test_oracle_implications():
    assert oracle_entails(EPS, Impl(One, one(q), Simple(one(q))), NO_D)
    assert oracle_entails(EPS, Impl(Many, one(q), Simple(one(q))), NO_D)
    # a linear given must be consumed
    assert not oracle_entails(EPS, Impl(One, one(q), Simple(EPS)), NO_D)
    # an unrestricted implication cannot capture linear assumptions
    assert not oracle_entails(one(p), Impl(Many, EPS, Simple(one(p))), NO_D)
    assert oracle_entails(many(p), Impl(Many, EPS, Simple(one(p))), NO_D)
    nested = Impl(One, one(q), Impl(One, one(q), Tensor(Simple(one(q)), Simple(one(q)))))
    assert oracle_entails(EPS, nested, NO_D)


def test_oracle_agrees_with_simple_entailment():
    rng = random.Random(1)
    for _ in range(300):
        a, b, d = random_simple(rng), random_simple(rng), random_dup(rng)
        assert oracle_entails(a, Simple(b), d) == entails_simple(a, b, d)


def test_kronecker_table_matches_direct_entailment():
    atoms = [ATOMS[0], ATOMS[1]]
    uni = _universe((2, 2), (False, True))
    d = DuplicableSet(frozenset({atoms[1].class_name}))
    elems = []
    for i in range(uni.size):
        unr = [a for a, u in zip(atoms, uni.u[i]) if u]
        elems.append(SimpleConstraint.of(unr, {a: int(k) for a, k in zip(atoms, uni.k[i])}))
    direct = np.array([[entails_simple(x, y, d) for y in elems] for x in elems])
    assert (direct == uni.ent).all()


def test_text_round_trip_examples():
    cases = [
        "1.q",
        "eps",
        "1.q * w.p",
        "{1.q} * {1.q}",
        "1.q & w.(Read n)",
        "1.(1.q =o 1.(1.q =o {1.q} * {1.q}))",
        "w.(w.q =o 1.q & eps)",
    ]
    for text in cases:
        c = parse_wanted(text)
        assert parse_wanted(show_wanted(c)) == c
    assert parse_wanted("{1.q} * {1.q}") == Tensor(Simple(one(q)), Simple(one(q)))
    assert parse_wanted("1.q * 1.q") == Simple(one(q, q))


def test_line_format():
    text = "-- corpus\n1.q\n\n1.(1.q =o 1.q)  -- trailing\n"
    assert parse_wanted_lines(text) == [Simple(one(q)), Impl(One, one(q), Simple(one(q)))]


def test_text_round_trip_random():
    rng = random.Random(9)
    for _ in range(300):
        c = random_wanted(rng)
        assert parse_wanted(show_wanted(c)) == c


RELAXED = settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@RELAXED
@given(simple_st, wanted_st(), dup_st, mult_st)
def test_scaling_preserves_entailment(qq, c, d, m):
    assume(depth(c) <= 3)
    if oracle_entails(qq, c, d):
        assert oracle_entails(scale_simple(m, qq), scale_wanted(m, c), d)


@RELAXED
@given(simple_st, wanted_st(max_depth=2), wanted_st(max_depth=2), dup_st)
def test_with_inversion(qq, c1, c2, d):
    if oracle_entails(qq, With(c1, c2), d):
        assert oracle_entails(qq, c1, d) and oracle_entails(qq, c2, d)


@RELAXED
@given(simple_st, wanted_st(), dup_st)
def test_scale_idempotent_up_to_oracle(qq, c, d):
    assume(depth(c) <= 3)
    once = scale_wanted(Many, c)
    twice = scale_wanted(Many, once)
    assert oracle_entails(qq, once, d) == oracle_entails(qq, twice, d)
    assert scale_wanted(One, c) == c
