"""Call-by-value evaluator for flat core.

Terms are compiled once into Python closures over an environment tuple whose
slots are resolved at compile time.  Types are erased; evidence is not.
"""

from __future__ import annotations

import sys
import threading
from typing import Callable

from linck.core.prims import Runtime
from linck.core.store import RuntimeFault, Store
from linck.core.terms import (
    CApp, CCase, CCtor, CLam, CLet, CLit, CoreProgram, CPack, CPCon, CPrim, CPVar, CUnpack, CVar, Term,
)
from linck.core.values import ConV, Fn, PackV

Code = Callable[[tuple], object]


class Evaluator:
    def __init__(self, prog: CoreProgram, env, store: Store | None = None):
        self.prog = prog
        self.store = store if store is not None else Store()
        self.runtime = Runtime(env, self.store)
        self.globals: dict[str, object] = {}
        for name in prog.prims:
            self.globals[name] = self.runtime.value(name)
        self._compiled: dict[str, Code] = {}

    def global_value(self, name: str):
        v = self.globals.get(name)
        if v is None:
            b = self.prog.bindings.get(name)
            if b is None:
                raise RuntimeFault(f"unknown global {name}")
            v = self.compile(b.term, ())(())
            self.globals[name] = v
        return v

    def ctor_value(self, name: str):
        _, _, fields = self.prog.ctors[name]
        n = len(fields)
        if n == 0:
            return ConV(name)

        def go(args):
            if len(args) == n:
                return ConV(name, args)
            return Fn(lambda v: go(args + (v,)), name)

        return go(())

    # -- compilation ----------------------------------------------------------

    def compile(self, t: Term, scope: tuple[str, ...]) -> Code:
        if isinstance(t, CVar):
            if t.name in scope:
                i = len(scope) - 1 - scope[::-1].index(t.name)
                return lambda env: env[i]
            name = t.name
            return lambda env: self.global_value(name)
        if isinstance(t, CPrim):
            v = self.runtime.evidence_prim(t.name)
            return lambda env: v
        if isinstance(t, CCtor):
            v = self.ctor_value(t.name)
            return lambda env: v
        if isinstance(t, CLit):
            v = t.value
            return lambda env: v
        if isinstance(t, CLam):
            body = self.compile(t.body, scope + (t.name,))
            return lambda env: Fn(lambda v: body(env + (v,)))
        if isinstance(t, CApp):
            fn = self.compile(t.fn, scope)
            arg = self.compile(t.arg, scope)

            def app(env):
                f = fn(env)
                return f(arg(env))

            return app
        if isinstance(t, CPack):
            ev = self.compile(t.ev, scope)
            payload = self.compile(t.payload, scope)
            return lambda env: PackV(ev(env), payload(env))
        if isinstance(t, CUnpack):
            rhs = self.compile(t.rhs, scope)
            body = self.compile(t.body, scope + (t.evvar, t.var))

            def unpack(env):
                p = rhs(env)
                if not isinstance(p, PackV):
                    raise RuntimeFault(f"unpacking a non-package {p!r}")
                return body(env + (p.ev, p.payload))

            return unpack
        if isinstance(t, CLet):
            rhs = self.compile(t.rhs, scope)
            body = self.compile(t.body, scope + (t.name,))
            return lambda env: body(env + (rhs(env),))
        if isinstance(t, CCase):
            scrut = self.compile(t.scrut, scope)
            table: dict[str, tuple[int, Code]] = {}
            default = None
            for a in t.alts:
                p = a.pattern
                if isinstance(p, CPVar):
                    default = self.compile(a.body, scope + (p.name,))
                    continue
                names = tuple(q.name for q in p.args if isinstance(q, CPVar))
                if len(names) != len(p.args):
                    raise RuntimeFault("nested pattern reached the evaluator")
                table[p.name] = (len(names), self.compile(a.body, scope + names))

            def case(env):
                v = scrut(env)
                hit = table.get(v.name) if isinstance(v, ConV) else None
                if hit is None:
                    if default is not None:
                        return default(env + (v,))
                    raise RuntimeFault(f"no alternative matches {v!r}")
                return hit[1](env + v.fields)

            return case
        raise TypeError(t)


def run_in_big_stack(fn: Callable[[], object], stack_mb: int = 512, limit: int = 200_000):
    """Run ``fn`` on a thread with a deep stack; exceptions are re-raised here."""
    out: dict[str, object] = {}

    def target():
        try:
            out["value"] = fn()
        except BaseException as err:  # noqa: BLE001 - propagated below
            out["error"] = err

    old_limit = sys.getrecursionlimit()
    old_size = threading.stack_size()
    sys.setrecursionlimit(max(old_limit, limit))
    threading.stack_size(stack_mb * 1024 * 1024)
    try:
        th = threading.Thread(target=target)
        th.start()
        th.join()
    finally:
        threading.stack_size(old_size)
        sys.setrecursionlimit(old_limit)
    if "error" in out:
        raise out["error"]
    return out.get("value")


def core_eval(prog: CoreProgram, env, term: Term, store: Store | None = None):
    """Evaluate a closed term; returns (value, store)."""
    ev = Evaluator(prog, env, store)
    v = run_in_big_stack(lambda: ev.compile(term, ())(()))
    return v, ev.store
