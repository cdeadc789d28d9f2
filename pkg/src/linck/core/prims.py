"""Core types and runtime implementations of the prelude primitives.

Every primitive takes its evidence first, as the elaborated type
``forall a. [Q] -o t`` dictates, then its ordinary arguments one at a time.
"""

from __future__ import annotations

import itertools
from typing import Callable

from linck.core.store import RuntimeFault, Store, wrap_int
from linck.core.terms import CoreBinding
from linck.core.values import UNIT_V, ArrayH, ConV, Fn, PackV, Token, boolean, pair, ur
from linck.types import One, TExists

ARITY = {
    "linearly": 1, "new": 1, "read": 2, "write": 3, "free": 1, "length": 1, "slice": 2,
    "dup": 0, "dis": 0, "not": 1,
    "+": 2, "-": 2, "*": 2, "/": 2, "==": 2, "/=": 2, "<": 2, "<=": 2, ">": 2, ">=": 2, "&&": 2, "||": 2,
}


def prim_bindings(env) -> dict[str, CoreBinding]:
    from linck.desugar import scheme_core_type

    out = {}
    for name in sorted(env.prims):
        s = env.values[name]
        out[name] = CoreBinding(name, s.vars, scheme_core_type(s.given, s.body), None)
    return out


def _curry(n: int, f: Callable, label: str):
    if n == 0:
        return f()

    def go(args):
        if len(args) == n:
            return f(*args)
        return Fn(lambda v: go(args + (v,)), label)

    return go(())


def _truth(v) -> bool:
    return isinstance(v, ConV) and v.name == "True"


class Runtime:
    """Primitive values bound to one store."""

    def __init__(self, env, store: Store):
        self.env = env
        self.store = store
        self.tokens = itertools.count(1)

    def token(self, cls: str) -> Token:
        return Token(f"{cls}#{next(self.tokens)}")

    def evidence(self, given) -> object:
        """A fresh evidence value shaped like ``[given]``."""
        from linck.desugar import EvLeaf, EvPair, ev_tree

        def build(t):
            if isinstance(t, EvLeaf):
                tok = self.token(t.atom.class_name)
                return tok if t.mult is One else ur(tok)
            if isinstance(t, EvPair):
                return pair(build(t.left), build(t.right))
            return UNIT_V

        return build(ev_tree(given))

    def _result_given(self, name: str, args: int):
        t = self.env.values[name].body
        for _ in range(args):
            t = t.cod
        assert isinstance(t, TExists)
        return t.given

    def _arith(self, op: str) -> Callable:
        def div(a, b):
            if b == 0:
                self.store.fault("division by zero")
            return a // b

        fns = {
            "+": lambda a, b: wrap_int(a + b), "-": lambda a, b: wrap_int(a - b),
            "*": lambda a, b: wrap_int(a * b), "/": lambda a, b: wrap_int(div(a, b)),
            "==": lambda a, b: boolean(a == b), "/=": lambda a, b: boolean(a != b),
            "<": lambda a, b: boolean(a < b), "<=": lambda a, b: boolean(a <= b),
            ">": lambda a, b: boolean(a > b), ">=": lambda a, b: boolean(a >= b),
            "&&": lambda a, b: boolean(_truth(a) and _truth(b)),
            "||": lambda a, b: boolean(_truth(a) or _truth(b)),
        }
        return fns[op]

    def value(self, name: str):
        """The runtime value of a primitive: a function of its evidence."""
        st = self.store
        if name in ("+", "-", "*", "/", "==", "/=", "<", "<=", ">", ">=", "&&", "||"):
            f = self._arith(name)
            return Fn(lambda _ev: _curry(2, f, name), name)
        if name == "not":
            return Fn(lambda _ev: Fn(lambda b: boolean(not _truth(b)), name), name)
        if name == "length":
            return Fn(lambda _ev: Fn(lambda a: st.length(a.id), name), name)
        if name == "linearly":
            return Fn(lambda _ev: Fn(lambda k: k(self.token("Linearly")), name), name)
        if name == "new":
            given = self._result_given("new", 1)

            def new(n):
                h = st.new(n)
                return PackV(self.evidence(given), ur(ArrayH(h)))

            return Fn(lambda _ev: Fn(new, name), name)
        if name == "read":
            def read(ev):
                return _curry(2, lambda a, i: PackV(ev, ur(st.read(a.id, i))), name)
            return Fn(read, name)
        if name == "write":
            def write(ev):
                def go(a, i, v):
                    st.write(a.id, i, v)
                    return PackV(ev, UNIT_V)
                return _curry(3, go, name)
            return Fn(write, name)
        if name == "free":
            def free(a):
                st.free(a.id)
                return UNIT_V
            return Fn(lambda _ev: Fn(free, name), name)
        if name == "slice":
            given = self._result_given("slice", 2)

            def slice_(ev):
                def go(a, k):
                    left, right = st.slice(a.id, k)

                    def release(_ev):
                        st.release(a.id, (left, right))
                        return PackV(ev, UNIT_V)

                    payload = pair(ur(pair(ArrayH(left), ArrayH(right))), Fn(release, "release"))
                    return PackV(self.evidence(given), payload)
                return _curry(2, go, name)
            return Fn(slice_, name)
        if name == "dup":
            return Fn(lambda ev: PackV(pair(ev, self.token("Linearly")), UNIT_V), name)
        if name == "dis":
            return Fn(lambda _ev: UNIT_V, name)
        raise RuntimeFault(f"no runtime implementation for primitive {name}")

    def evidence_prim(self, name: str):
        op, _, cls = name.partition("@")
        if op == "dup":
            return Fn(lambda ev: pair(ev, self.token(cls)), name)
        if op == "dis":
            return Fn(lambda _ev: UNIT_V, name)
        raise RuntimeFault(f"unknown evidence primitive {name}")
