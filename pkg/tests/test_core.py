import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linck.core import (
    Binding, CAlt, CApp, CCase, CCtor, CExists, CLam, CLet, CLit, ConV, ContextClashError, CoreLintError,
    CPCon, CPVar, CUnpack, CVar, Store, context_add, core_eval, core_typecheck, flatten, is_flat,
    lint_program, show_term,
)
from linck.core.store import RuntimeFault, wrap_int
from linck.pipeline import compile_source, run_entry, user_core_text
from linck.types import UNIT, Many, One, TArrow, TCon, TVar

ROOT = Path(__file__).resolve().parent.parent
ACCEPT = sorted((ROOT / "corpus" / "accept").glob("*.lq"))

a, b = TVar("a"), TVar("b")
T, V = TCon("Int"), TCon("Bool")


@pytest.fixture(scope="module")
def base():
    """Core program holding only the prelude."""
    cr = compile_source("")
    assert cr.ok
    return cr


def pair_t(x, y):
    return TCon("(,)", (x, y))


def mk_pair(x, y, tx=a, ty=a):
    return CApp(CApp(CCtor("(,)", (tx, ty)), x), y)


# -- contexts -------------------------------------------------------------------


def test_context_add():
    x1 = {"x": Binding(One, a)}
    assert context_add(x1, x1) == {"x": Binding(Many, a)}
    assert context_add(x1, {}) == x1
    with pytest.raises(ContextClashError):
        context_add(x1, {"x": Binding(One, b)})


# -- lint -----------------------------------------------------------------------


def test_lint_rejects_duplication(base):
    term = CLam("x", One, a, mk_pair(CVar("x"), CVar("x")))
    with pytest.raises(CoreLintError) as err:
        core_typecheck(base.core, {}, term)
    assert err.value.rule == "L-ABS"


def test_lint_ur_is_unrestricted(base):
    term = CLam("x", Many, a, CApp(CCtor("Ur", (a,)), CVar("x")))
    assert core_typecheck(base.core, {}, term) == TArrow(Many, a, TCon("Ur", (a,)))


def test_lint_ur_needs_unrestricted_argument(base):
    term = CLam("x", One, a, CApp(CCtor("Ur", (a,)), CVar("x")))
    with pytest.raises(CoreLintError):
        core_typecheck(base.core, {}, term)


def test_lint_unpack_order(base):
    p_t = CExists((), T, V)
    term = CUnpack((), "z", "x", CVar("p"), mk_pair(CVar("z"), CVar("x"), V, T))
    assert core_typecheck(base.core, {"p": Binding(One, p_t)}, term) == pair_t(V, T)


def test_lint_unpack_binders_are_linear(base):
    p_t = CExists((), T, V)
    term = CUnpack((), "z", "x", CVar("p"), CVar("x"))
    with pytest.raises(CoreLintError):
        core_typecheck(base.core, {"p": Binding(One, p_t)}, term)


def test_lint_case_branches_must_agree(base):
    term = CLam("x", One, a, CLam("c", Many, V, CCase(One, CVar("c"), (
        CAlt(CPCon("True"), CVar("x")),
        CAlt(CPCon("False"), CVar("x")),
    ))))
    assert core_typecheck(base.core, {}, term) == TArrow(One, a, TArrow(Many, V, a))
    bad = CLam("x", One, T, CLam("c", Many, V, CCase(One, CVar("c"), (
        CAlt(CPCon("True"), CVar("x")),
        CAlt(CPCon("False"), CLit(0)),
    ))))
    with pytest.raises(CoreLintError):
        core_typecheck(base.core, {}, bad)


def test_lint_case_exhaustive(base):
    term = CLam("c", Many, V, CCase(One, CVar("c"), (CAlt(CPCon("True"), CLit(1)),)))
    with pytest.raises(CoreLintError, match="missing"):
        core_typecheck(base.core, {}, term)


def test_lint_omega_case_binds_fields_unrestricted(base):
    term = CLam("p", Many, pair_t(T, T), CCase(Many, CVar("p"), (
        CAlt(CPCon("(,)", (CPVar("x"), CPVar("y"))), mk_pair(CVar("x"), CVar("x"), T, T)),
    )))
    core_typecheck(base.core, {}, term)


@pytest.mark.parametrize("path", ACCEPT, ids=lambda p: p.name)
def test_corpus_lints(path):
    cr = compile_source(path.read_text(), str(path))
    assert cr.check.ok
    assert lint_program(cr.core) == []


def test_prelude_lints(base):
    assert lint_program(base.core) == []


# -- flattening -----------------------------------------------------------------


def nested_term():
    # case p of (,) (Ur u) (,) v w -> (u, (v, w))
    pat = CPCon("(,)", (CPCon("Ur", (CPVar("u"),)), CPCon("(,)", (CPVar("v"), CPVar("w")))))
    body = mk_pair(CVar("u"), mk_pair(CVar("v"), CVar("w"), T, T), T, pair_t(T, T))
    return CCase(One, CVar("p"), (CAlt(pat, body),))


FIELDS = {"(,)": (One, One), "Ur": (Many,), "()": ()}


def test_flatten_nested():
    t = nested_term()
    assert not is_flat(t)
    f = flatten(t, FIELDS)
    assert is_flat(f)
    assert flatten(f, FIELDS) == f


def test_flattened_lints_and_evaluates(base):
    p_t = pair_t(TCon("Ur", (T,)), pair_t(T, T))
    f = flatten(nested_term(), FIELDS)
    ty = core_typecheck(base.core, {"p": Binding(One, p_t)}, f)
    assert ty == pair_t(T, pair_t(T, T))
    arg = mk_pair(CApp(CCtor("Ur", (T,)), CLit(1)), mk_pair(CLit(2), CLit(3), T, T), TCon("Ur", (T,)), pair_t(T, T))
    v, _ = core_eval(base.core, base.check.typed.env, CLet(One, "p", (), p_t, arg, f))
    assert v == ConV("(,)", (1, ConV("(,)", (2, 3))))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 4), st.integers(0, 10_000))
def test_flatten_idempotent_random(depth, seed):
    rng = random.Random(seed)

    def pat(d):
        if d == 0 or rng.random() < 0.3:
            return CPVar(f"v{rng.randrange(1000)}")
        kind = rng.choice(["(,)", "Ur", "()"])
        return CPCon(kind, tuple(pat(d - 1) for _ in FIELDS[kind]))

    t = CCase(One, CVar("s"), (CAlt(pat(depth), CLit(0)),))
    f = flatten(t, FIELDS)
    assert is_flat(f) and flatten(f, FIELDS) == f


# -- evaluation -----------------------------------------------------------------


def test_eval_ur(base):
    v, _ = core_eval(base.core, base.check.typed.env, CApp(CCtor("Ur", (T,)), CLit(5)))
    assert v == ConV("Ur", (5,))


def test_read2_and_discard():
    cr = compile_source((ROOT / "corpus/accept/read2AndDiscard.lq").read_text())
    rr = run_entry(cr, "read2AndDiscard", [[7, 9]])
    assert rr.ok and rr.text == "(7, 9)" and rr.arrays == []


@pytest.mark.parametrize("entry", ["mergeSort", "insertSort"])
def test_sort_small(entry):
    cr = compile_source((ROOT / "corpus/accept/sort.lq").read_text())
    rr = run_entry(cr, entry, [[3, 1, 2]])
    assert rr.ok and rr.arrays == [[1, 2, 3]] and rr.text == "[1, 2, 3]"


def test_evaluation_deterministic():
    cr = compile_source((ROOT / "corpus/accept/sort.lq").read_text())
    xs = [5, -2, 9, 0, 5, 3]
    r1, r2 = run_entry(cr, "mergeSort", [xs]), run_entry(cr, "mergeSort", [xs])
    assert (r1.text, r1.arrays, r1.faults) == (r2.text, r2.arrays, r2.faults)


def test_scoped_program_frees_its_array():
    cr = compile_source((ROOT / "corpus/accept/scoped.lq").read_text())
    rr = run_entry(cr, "f")
    assert rr.ok and rr.text == "()"


def test_leaking_program_rejected_statically():
    src = "leak :: Ur Int\nleak = linearly $ do {\n  Ur arr <- new 3;\n  dis;\n  Ur 1 }\n"
    cr = compile_source(src)
    assert [d.code for d in cr.check.diagnostics] == ["LQ-MULT"]


def test_store_reports_leaks():
    s = Store()
    s.new(3)
    s.from_list([1])
    assert s.leaks() == ["array #0 (new) is still live at exit"]


def test_core_printing_deterministic():
    src = (ROOT / "corpus/accept/sort.lq").read_text()
    assert user_core_text(compile_source(src)) == user_core_text(compile_source(src))


def test_identity_core_has_evidence_binder():
    cr = compile_source("id :: forall a. a -o a\nid x = x\n")
    text = user_core_text(cr)
    assert "(lambda 1 (%z1 ())" in text
    assert show_term(cr.core.bindings["id"].term).startswith("(lambda 1 (%z1 ()) (case 1 %z1 (()")


# -- integers -------------------------------------------------------------------


def test_int_wraps():
    assert wrap_int(2**63) == -(2**63)
    assert wrap_int(-(2**63) - 1) == 2**63 - 1


def test_division_floors():
    cr = compile_source("d :: Int\nd = (0 - 7) / 2\n")
    assert run_entry(cr, "d").text == "-4"


# -- store ----------------------------------------------------------------------


def test_store_faults():
    s = Store()
    h = s.new(2)
    s.free(h)
    with pytest.raises(RuntimeFault):
        s.read(h, 0)
    with pytest.raises(RuntimeFault):
        s.free(h)
    g = s.new(1)
    with pytest.raises(RuntimeFault):
        s.write(g, 5, 1)
    assert len(s.ledger) == 3


def test_store_slices_suspend_parent():
    s = Store()
    h = s.from_list([5, 6, 7])
    left, right = s.slice(h, 1)
    assert s.contents(left) == [5] and s.contents(right) == [6, 7]
    with pytest.raises(RuntimeFault):
        s.read(h, 0)
    s.write(right, 0, 60)
    s.release(h, (left, right))
    assert s.contents(h) == [5, 60, 7]
    with pytest.raises(RuntimeFault):
        s.read(left, 0)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10_000))
def test_window_aliasing_random_trees(seed):
    """Writes through nested windows (depth <= 3) show up in the root after release."""
    rng = random.Random(seed)
    n = rng.randint(0, 12)
    xs = [rng.randint(-50, 50) for _ in range(n)]
    s = Store()
    root = s.from_list(xs)
    model = list(xs)

    def visit(h, offset, depth):
        length = s.length(h)
        if depth < 3 and rng.random() < 0.6:
            k = rng.randint(0, length)
            left, right = s.slice(h, k)
            visit(left, offset, depth + 1)
            visit(right, offset + k, depth + 1)
            s.release(h, (left, right))
        for _ in range(rng.randint(0, 2)):
            if length:
                i = rng.randrange(length)
                v = rng.randint(-99, 99)
                s.write(h, i, v)
                model[offset + i] = v

    visit(root, 0, 0)
    assert s.contents(root) == model
    assert s.leaks() == [] and s.ledger == []
