import random

import numpy as np
import pytest
from hypothesis import given, settings

from linck.constraints import (
    EPS, Atom, DuplicableSet, FailureKind, SimpleConstraint, SolverFailure, UnboundTypeVariable,
    atom_order_shuffled, diff, entailment_derivation, entails_simple, meet, mult_add, mult_mul,
    parse_simple, scale_simple, substitute_simple, tensor,
)
from linck.types import Many, One, TVar

from strategies import ATOMS, D_R, P, Q, R, all_simple, dup_st, random_dup, random_simple, simple_st

q = Atom("q")
p = Atom("p")
NO_D = DuplicableSet()
Q_IN_D = DuplicableSet(frozenset({"q"}))


def one(*atoms):
    return SimpleConstraint.of([], list(atoms))


def many(*atoms):
    return SimpleConstraint.of(list(atoms), [])


# -- multiplicities ---------------------------------------------------------

@pytest.mark.parametrize("a,b,expected", [(One, One, Many), (One, Many, Many), (Many, Many, Many)])
def test_mult_add(a, b, expected):
    assert mult_add(a, b) is expected


@pytest.mark.parametrize("a,b,expected", [(One, One, One), (Many, One, Many), (One, Many, Many)])
def test_mult_mul(a, b, expected):
    assert mult_mul(a, b) is expected


def test_semiring_laws_exhaustive():
    ms = [One, Many]
    for a in ms:
        assert mult_mul(One, a) is a and mult_mul(a, One) is a
        for b in ms:
            assert mult_add(a, b) is mult_add(b, a)
            assert mult_mul(a, b) is mult_mul(b, a)
            for c in ms:
                assert mult_add(mult_add(a, b), c) is mult_add(a, mult_add(b, c))
                assert mult_mul(mult_mul(a, b), c) is mult_mul(a, mult_mul(b, c))
                assert mult_mul(a, mult_add(b, c)) is mult_add(mult_mul(a, b), mult_mul(a, c))


# -- scaling, tensor, substitution -------------------------------------------

def test_scale_examples():
    assert scale_simple(One, SimpleConstraint.of([p], [q])) == SimpleConstraint.of([p], [q])
    assert scale_simple(Many, one(q)) == many(q)
    assert scale_simple(Many, SimpleConstraint.of([p], [q, q])) == many(p, q)


def test_tensor_examples():
    x = SimpleConstraint.of([p], [q, q])
    assert tensor(EPS, x) == x
    assert tensor(one(q), one(q)) == SimpleConstraint.of([], {q: 2})
    assert tensor(many(q), many(q)) == many(q)


def test_substitute_examples():
    n, s7 = TVar("n"), TVar("s7")
    rw = Atom("RW", (n,))
    assert substitute_simple(one(rw), {"n": s7}) == one(Atom("RW", (s7,)))
    assert substitute_simple(EPS, {"n": s7}) == EPS
    both = SimpleConstraint.of([Atom("Read", (n,))], [Atom("Write", (n,))])
    out = substitute_simple(both, {"n": TVar("p")})
    assert out == SimpleConstraint.of([Atom("Read", (TVar("p"),))], [Atom("Write", (TVar("p"),))])


def test_substitute_unbound():
    with pytest.raises(UnboundTypeVariable):
        substitute_simple(one(Atom("RW", (TVar("n"),))), {})


@given(simple_st, simple_st, simple_st)
def test_tensor_monoid(a, b, c):
    assert tensor(a, b) == tensor(b, a)
    assert tensor(tensor(a, b), c) == tensor(a, tensor(b, c))
    assert tensor(a, EPS) == a


@given(simple_st, simple_st)
def test_scale_laws(a, b):
    assert scale_simple(Many, scale_simple(Many, a)) == scale_simple(Many, a)
    for m in (One, Many):
        assert scale_simple(m, tensor(a, b)) == tensor(scale_simple(m, a), scale_simple(m, b))


# -- entailment --------------------------------------------------------------

def test_entailment_examples():
    assert entails_simple(one(q), one(q), NO_D)
    assert entails_simple(one(q), one(q, q), Q_IN_D)
    assert not entails_simple(one(q), EPS, NO_D)
    assert not entails_simple(one(q), one(q, q), NO_D)
    assert entails_simple(many(q), one(q, q), NO_D)


def _vector_entails(u1, k1, u2, k2, dmask):
    """Closed-form entailment, vectorised over leading axes."""
    ur_ok = ~(u2 & ~u1)
    lin_ok = (k1 <= k2) & ((k1 == k2) | u1)
    dup_ok = (k1 >= 1) | (k2 == 0) | u1
    per_atom = ur_ok & np.where(dmask, dup_ok, lin_ok)
    return per_atom.all(axis=-1)


class TestEntailmentLaws:
    """Exhaustive over three atoms (two linear-only, one duplicable), counts <= 2."""

    universe = list(all_simple())
    D = D_R
    dmask = np.array([a in D_R for a in ATOMS])

    @classmethod
    def _vectors(cls):
        u = np.array([[a in c.unrestricted for a in ATOMS] for c in cls.universe])
        k = np.array([[c.count(a) for a in ATOMS] for c in cls.universe])
        return u, k

    @classmethod
    def _matrix(cls):
        if not hasattr(cls, "_E"):
            cls._E = np.array([[entails_simple(a, b, cls.D) for b in cls.universe] for a in cls.universe])
        return cls._E

    def test_universe_size(self):
        assert len(self.universe) == 6 ** 3

    def test_vector_form_matches_relation(self):
        u, k = self._vectors()
        vec = _vector_entails(u[:, None], k[:, None], u[None, :], k[None, :], self.dmask)
        assert (vec == self._matrix()).all()

    def test_derivation_agrees(self):
        E = self._matrix()
        for i, a in enumerate(self.universe[::7]):
            for j, b in enumerate(self.universe):
                assert (entailment_derivation(a, b, self.D) is not None) == E[i * 7, j]

    def test_law1_reflexivity(self):
        assert self._matrix().diagonal().all()

    def test_law2_transitivity(self):
        E = self._matrix().astype(np.int32)
        two_step = (E @ E) > 0
        assert not (two_step & ~self._matrix()).any()

    def test_law3_tensor_congruence(self):
        u, k = self._vectors()
        E = self._matrix()
        left, right = np.nonzero(E)
        for start in range(0, len(left), 400):
            a, a2 = left[start:start + 400], right[start:start + 400]
            # every entailed pair against every entailed pair
            ut = u[a][:, None] | u[left][None, :]
            kt = k[a][:, None] + k[left][None, :]
            ut2 = u[a2][:, None] | u[right][None, :]
            kt2 = k[a2][:, None] + k[right][None, :]
            assert _vector_entails(ut, kt, ut2, kt2, self.dmask).all()

    def test_law3_sample_with_relation(self):
        rng = random.Random(3)
        E = self._matrix()
        pairs = list(zip(*np.nonzero(E)))
        for _ in range(2000):
            i, i2 = rng.choice(pairs)
            j, j2 = rng.choice(pairs)
            U = self.universe
            assert entails_simple(tensor(U[i], U[j]), tensor(U[i2], U[j2]), self.D)

    def test_law4_scaling_congruence(self):
        E = self._matrix()
        for i, j in zip(*np.nonzero(E)):
            a, b = self.universe[i], self.universe[j]
            assert entails_simple(scale_simple(Many, a), scale_simple(Many, b), self.D)

    def test_law5_dereliction_and_law6_weakening(self):
        for c in self.universe:
            w = scale_simple(Many, c)
            assert entails_simple(w, c, self.D)
            assert entails_simple(w, EPS, self.D)

    def test_law7_law8_duplicable(self):
        for a in ATOMS:
            if a in self.D:
                assert entails_simple(one(a), one(a, a), self.D)
                assert entails_simple(one(a), EPS, self.D)
            else:
                assert not entails_simple(one(a), one(a, a), self.D)
                assert not entails_simple(one(a), EPS, self.D)


# -- meet ---------------------------------------------------------------------

def test_meet_examples():
    assert meet(one(q), one(q), NO_D) == one(q)
    assert meet(many(p), many(q), NO_D) == many(p, q)
    assert meet(one(q), EPS, NO_D) == many(q)
    assert meet(one(q), EPS, Q_IN_D) == one(q)


def test_meet_soundness_random():
    rng = random.Random(11)
    for _ in range(1500):
        a, b, d = random_simple(rng), random_simple(rng), random_dup(rng)
        m = meet(a, b, d)
        assert entails_simple(m, a, d) and entails_simple(m, b, d), (a, b, m)


@given(simple_st, simple_st, dup_st)
@settings(max_examples=300)
def test_meet_soundness_property(a, b, d):
    m = meet(a, b, d)
    assert entails_simple(m, a, d) and entails_simple(m, b, d)
    assert meet(a, b, d) == meet(b, a, d)


# -- diff ---------------------------------------------------------------------

def test_diff_examples():
    assert diff(one(q), one(q), NO_D) == EPS
    with pytest.raises(SolverFailure) as e:
        diff(one(q, q), one(q), NO_D)
    assert e.value.kind is FailureKind.MULTIPLICITY
    assert diff(SimpleConstraint.of([q], [q]), many(q), NO_D) == EPS


def test_diff_ambiguity():
    with pytest.raises(SolverFailure) as e:
        diff(one(q), one(q, q), NO_D)
    assert e.value.kind is FailureKind.AMBIGUITY and e.value.atom == q


def test_diff_keeps_unrelated():
    assert diff(tensor(one(p), one(q)), one(q), NO_D) == one(p)
    assert diff(one(q, q), one(q), Q_IN_D) == EPS


def test_diff_soundness_random():
    rng = random.Random(5)
    successes = 0
    for _ in range(5000):
        qi, qb, d = random_simple(rng), random_simple(rng, max_count=1), random_dup(rng)
        try:
            qo = diff(qi, qb, d)
        except SolverFailure:
            continue
        successes += 1
        assert entails_simple(tensor(qo, qb), qi, d), (qi, qb, qo)
    assert successes >= 1000


# -- order independence -------------------------------------------------------

def test_order_independence():
    rng = random.Random(7)
    for seed in range(300):
        a, b, d = random_simple(rng), random_simple(rng, max_count=1), random_dup(rng)
        base_meet = meet(a, b, d)
        try:
            base_diff = diff(a, b, d)
        except SolverFailure as err:
            base_diff = (err.kind, err.atom)
        with atom_order_shuffled(seed):
            assert meet(a, b, d) == base_meet
            try:
                again = diff(a, b, d)
            except SolverFailure as err:
                again = (err.kind, err.atom)
        assert again == base_diff


# -- text form ----------------------------------------------------------------

def test_text_round_trip():
    rng = random.Random(2)
    for _ in range(200):
        c = random_simple(rng)
        assert parse_simple(str(c)) == c
    assert str(EPS) == "eps"
    assert str(SimpleConstraint.of([Atom("Read", (TVar("n"),))], [q])) == "w.(Read n) * 1.q"
