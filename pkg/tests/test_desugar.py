import random

import pytest

from linck.constraints import EPS, Atom, DuplicableSet, SimpleConstraint, entails_simple
from linck.core import CApp, CCase, CLam, CVar, Binding, core_typecheck, flatten
from linck.core.terms import show_term
from linck.desugar import (
    EvLeaf, EvPair, EvUnit, ElaborationError, entailment_evidence, ev_tree, evidence_type, ur_coerce,
)
from linck.pipeline import compile_source
from linck.types import UNIT, Many, One, TArrow, TCon, TVar

from strategies import random_simple

p, q = Atom("Read", (TVar("n"),)), Atom("Write", (TVar("n"),))
L = Atom("Linearly")
NO_D = DuplicableSet()


def one(*atoms):
    return SimpleConstraint.of(linear=list(atoms))


def many(*atoms):
    return SimpleConstraint.of(unrestricted=list(atoms))


def ev(a: Atom):
    return TCon("Ev." + a.class_name, a.args)


@pytest.fixture(scope="module")
def core():
    """Prelude core extended with test classes P, Q (linear) and R (duplicable)."""
    cr = compile_source("class P\nclass Q\ndup class R n\n")
    assert cr.ok
    return cr.core


FIELDS = {"(,)": (One, One), "Ur": (Many,), "()": ()}


def lints_at(core, term, want):
    assert core_typecheck(core, {}, flatten(term, FIELDS)) == want


def test_evidence_type_examples():
    assert evidence_type(EPS) == UNIT
    assert evidence_type(many(q)) == TCon("Ur", (ev(q),))
    assert evidence_type(one(p, q)) == TCon("(,)", (ev(p), ev(q)))
    assert ev_tree(one(q, p)) == EvPair(EvLeaf(One, p), EvLeaf(One, q))
    assert ev_tree(EPS) is EvUnit


def test_identity_entailment(core):
    t = entailment_evidence(one(p), one(p), NO_D)
    assert isinstance(t, CLam) and t.body == CVar(t.name)
    lints_at(core, t, TArrow(One, ev(p), ev(p)))


def test_duplication_uses_dup_primitive(core):
    d = DuplicableSet(frozenset({"Linearly"}))
    t = entailment_evidence(one(L), one(L, L), d)
    assert "(prim dup@Linearly)" in show_term(t)
    pair = TCon("(,)", (ev(L), ev(L)))
    lints_at(core, t, TArrow(One, ev(L), pair))


def test_discarding_unrestricted(core):
    t = entailment_evidence(many(q), EPS, NO_D)
    assert isinstance(t.body, CCase) and t.body.scrut == CVar(t.name)
    lints_at(core, t, TArrow(One, TCon("Ur", (ev(q),)), UNIT))


def test_refuses_non_entailment():
    with pytest.raises(ElaborationError):
        entailment_evidence(one(p, p), one(p), NO_D)
    with pytest.raises(ElaborationError):
        entailment_evidence(one(p), one(p, p), NO_D)


def test_random_entailments_lint(core):
    """Evidence functions for valid pairs lint at [Q1] -o [Q2]."""
    P, Q, R = Atom("P"), Atom("Q"), Atom("R", (TVar("n"),))
    atoms = [P, Q, R]
    dup = DuplicableSet(frozenset({"R"}))
    rng = random.Random(7)
    checked = 0
    while checked < 500:
        q1 = random_simple(rng, atoms)
        q2 = random_simple(rng, atoms)
        if not entails_simple(q1, q2, dup):
            continue
        t = entailment_evidence(q1, q2, dup)
        lints_at(core, t, TArrow(One, evidence_type(q1), evidence_type(q2)))
        checked += 1


def test_ur_coerce_examples(core):
    z = CVar("z")
    assert ur_coerce(z, one(q), NO_D) == z
    eps = ur_coerce(z, EPS, NO_D)
    assert show_term(eps) == "(case 1 z (() ((@ Ur [()]) ())))"
    pq = ur_coerce(z, one(p, q), NO_D)
    want = TCon("Ur", (TCon("(,)", (ev(p), ev(q))),))
    ty = core_typecheck(core, {"z": Binding(One, evidence_type(many(p, q)))}, flatten(pq, FIELDS))
    assert ty == want


def test_var_applies_evidence():
    cr = compile_source("class C\nprimitive k :: C =o Int\nuse :: C =o Int\nuse = k\n")
    t = cr.core.bindings["use"].term
    assert isinstance(t, CLam)
    assert t.body == CApp(CVar("k"), CVar(t.name))


def test_unit_evidence_is_consumed():
    cr = compile_source("id :: forall a. a -o a\nid = \\x -> x\n")
    t = cr.core.bindings["id"].term
    assert isinstance(t, CLam) and isinstance(t.body, CCase)
    assert t.body.scrut == CVar(t.name) and isinstance(t.body.alts[0].body, CLam)


def test_elaboration_deterministic():
    from pathlib import Path

    src = (Path(__file__).resolve().parent.parent / "corpus/accept/sort.lq").read_text()
    a, b = compile_source(src), compile_source(src)
    for name in ("insertSort", "mergeSort", "merge"):
        assert show_term(a.core.bindings[name].term) == show_term(b.core.bindings[name].term)


def test_reordering_coercion_lints():
    # instantiating p := q1, q := q puts the callee's evidence out of canonical order
    src = (
        "swap2 :: forall p q. (RW p, RW q) =o UArray Int p -> UArray Int q -> () * (RW p, RW q)\n"
        "swap2 x y = pack ()\n"
        "call :: forall b a. (RW a, RW b) =o UArray Int b -> UArray Int a -> () * (RW a, RW b)\n"
        "call x y = swap2 x y\n"
    )
    cr = compile_source(src)
    assert cr.ok, [str(d) for d in cr.check.diagnostics + cr.diagnostics]
