import pytest

from linck.desugar import scheme_core_type
from linck.pipeline import compile_source, run_entry
from linck.prelude import load_prelude
from linck.surface import parse_scheme
from linck.surface.printer import show_scheme
from linck.types import TArrow, TCon, TExists, TQual


@pytest.fixture(scope="module")
def env():
    return load_prelude().env


@pytest.mark.parametrize("name", ["free", "dup", "slice", "new", "read", "write", "linearly", "restrict"])
def test_lookup(env, name):
    assert name in env.values


def test_synonym_expanded(env):
    assert show_scheme(env.values["free"]) == "forall a n. (Read n, Write n) =o UArray a n -> ()"
    assert show_scheme(env.values["dup"]) == "Linearly =o () * (Linearly, Linearly)"


def subterms(t):
    yield t
    if isinstance(t, TArrow):
        yield from subterms(t.dom)
        yield from subterms(t.cod)
    elif isinstance(t, TCon):
        for a in t.args:
            yield from subterms(a)
    elif isinstance(t, (TQual, TExists)):
        yield from subterms(t.body)


def test_schemes_round_trip(env):
    for name, s in env.values.items():
        assert parse_scheme(show_scheme(s)) == s, name


def test_core_types_are_plain(env):
    for name, s in env.values.items():
        t = scheme_core_type(s.given, s.body)
        assert not any(isinstance(x, (TQual, TExists)) for x in subterms(t)), name


def run(src, entry, arrays=()):
    cr = compile_source(src)
    assert cr.ok, [str(d) for d in cr.check.diagnostics + cr.diagnostics]
    rr = run_entry(cr, entry, list(arrays))
    assert rr.ok, rr.faults + [str(d) for d in rr.diagnostics]
    return rr


NEW_SRC = """
fresh :: Ur (Int, (Int, Int))
fresh = linearly $ do {
  Ur arr <- new 3;
  Ur a <- read arr 0;
  Ur b <- read arr 1;
  Ur c <- read arr 2;
  free arr;
  Ur (a, (b, c)) }
"""


def test_new_is_zeroed():
    assert run(NEW_SRC, "fresh").text == "(0, (0, 0))"


WRITE_SRC = """
wr :: RW n =o UArray Int n -> Ur Int
wr arr = do {
  write arr 1 42;
  x <- read arr 1;
  free arr;
  x }
"""


def test_write_then_read():
    assert run(WRITE_SRC, "wr", [[0, 0, 0]]).text == "42"


SLICE_SRC = """
halves :: RW n =o UArray Int n -> (Ur Int, Ur Int)
halves arr = do {
  (Ur (l, r), back) <- slice arr 1;
  x <- read l 0;
  y <- read r 1;
  back;
  free arr;
  (x, y) }
"""


def test_slice_windows():
    assert run(SLICE_SRC, "halves", [[5, 6, 7]]).text == "(5, 7)"


def test_slice_windows_store_level():
    from linck.core import Store

    s = Store()
    h = s.from_list([5, 6, 7])
    left, right = s.slice(h, 1)
    assert (s.contents(left), s.contents(right)) == ([5], [6, 7])
