"""Compile nested case patterns into cascades of flat ones.

Only single-alternative cases may nest (evidence patterns are built from
pairs, ``Ur`` and unit); a nested sub-pattern becomes a fresh variable that is
immediately scrutinised at the multiplicity its field was bound at.
"""

from __future__ import annotations

import itertools
from dataclasses import replace

from linck.core.terms import (
    CAlt, CApp, CCase, CLam, CLet, CPack, CPCon, CPVar, CUnpack, CVar, Term,
)
from linck.types import Many, Multiplicity, One


class FlattenError(Exception):
    pass


def _mul(a: Multiplicity, b: Multiplicity) -> Multiplicity:
    return One if a is One and b is One else Many


def is_flat(t: Term) -> bool:
    if isinstance(t, CCase):
        for a in t.alts:
            if isinstance(a.pattern, CPCon) and any(not isinstance(p, CPVar) for p in a.pattern.args):
                return False
            if not is_flat(a.body):
                return False
        return is_flat(t.scrut)
    return all(is_flat(c) for c in _children(t))


def _children(t: Term):
    if isinstance(t, CLam):
        return [t.body]
    if isinstance(t, CApp):
        return [t.fn, t.arg]
    if isinstance(t, CPack):
        return [t.ev, t.payload]
    if isinstance(t, CUnpack):
        return [t.rhs, t.body]
    if isinstance(t, CLet):
        return [t.rhs, t.body]
    if isinstance(t, CCase):
        return [t.scrut] + [a.body for a in t.alts]
    return []


class Flattener:
    def __init__(self, field_mults: dict[str, tuple[Multiplicity, ...]]):
        self.field_mults = field_mults
        self.counter = itertools.count(1)

    def term(self, t: Term) -> Term:
        if isinstance(t, CLam):
            return CLam(t.name, t.mult, t.type, self.term(t.body))
        if isinstance(t, CApp):
            return CApp(self.term(t.fn), self.term(t.arg))
        if isinstance(t, CPack):
            return CPack(t.exty, t.tyargs, self.term(t.ev), self.term(t.payload))
        if isinstance(t, CUnpack):
            return CUnpack(t.tyvars, t.evvar, t.var, self.term(t.rhs), self.term(t.body))
        if isinstance(t, CLet):
            return CLet(t.mult, t.name, t.tyvars, t.type, self.term(t.rhs), self.term(t.body))
        if isinstance(t, CCase):
            nested = any(isinstance(a.pattern, CPCon) and any(isinstance(p, CPCon) for p in a.pattern.args)
                         for a in t.alts)
            if nested and len(t.alts) != 1:
                raise FlattenError("nested patterns are only supported in single-alternative cases")
            return CCase(t.mult, self.term(t.scrut), tuple(self.alt(t.mult, a) for a in t.alts))
        return t

    def alt(self, mult: Multiplicity, a: CAlt) -> CAlt:
        body = self.term(a.body)
        p = a.pattern
        if not isinstance(p, CPCon):
            return CAlt(p, body)
        mults = self.field_mults.get(p.name, ())
        args = []
        inner = []
        for i, sub in enumerate(p.args):
            if isinstance(sub, CPVar):
                args.append(sub)
            else:
                x = f"%p{next(self.counter)}"
                args.append(CPVar(x))
                inner.append((x, _mul(mult, mults[i] if i < len(mults) else One), sub))
        for x, m, sub in reversed(inner):
            body = CCase(m, CVar(x), (self.alt(m, CAlt(sub, body)),))
        return CAlt(CPCon(p.name, tuple(args)), body)


def flatten(t: Term, field_mults: dict[str, tuple[Multiplicity, ...]]) -> Term:
    return Flattener(field_mults).term(t)


def flatten_program(prog):
    """Flatten every binding of a CoreProgram in place and return it."""
    mults = {name: tuple(m for m, _ in info[2]) for name, info in prog.ctors.items()}
    fl = Flattener(mults)
    for name, b in list(prog.bindings.items()):
        if b.term is not None:
            prog.bindings[name] = replace(b, term=fl.term(b.term))
    return prog
