"""Wanted-constraint generation from a derivation.

Empty simple constraints are dropped from tensors so the result mirrors only
the places where constraints actually arise.
"""

from __future__ import annotations

from linck.types import Multiplicity
from linck.typing.derivation import (
    D, DAbs, DApp, DCase, DCtor, DLet, DLetSig, DLit, DPack, DQual, DUnpack, DVar,
)
from linck.wanted import TRUE, Impl, Simple, Tensor, WantedConstraint, With, scale_wanted


def _tensor(a: WantedConstraint, b: WantedConstraint) -> WantedConstraint:
    if a == TRUE:
        return b
    if b == TRUE:
        return a
    return Tensor(a, b)


def _scale(m: Multiplicity, c: WantedConstraint) -> WantedConstraint:
    return c if c == TRUE else scale_wanted(m, c)


def _with_all(cs: list[WantedConstraint]) -> WantedConstraint:
    out = cs[0]
    for c in cs[1:]:
        out = With(out, c)
    return out


def generate_constraints(d: D) -> WantedConstraint:
    if isinstance(d, DVar):
        return Simple(d.emitted, d.span) if not d.emitted.is_empty() else TRUE
    if isinstance(d, (DCtor, DLit)):
        return TRUE
    if isinstance(d, DAbs):
        return generate_constraints(d.body)
    if isinstance(d, DApp):
        return _tensor(generate_constraints(d.fn), _scale(d.mult, generate_constraints(d.arg)))
    if isinstance(d, DPack):
        own = Simple(d.emitted, d.span) if not d.emitted.is_empty() else TRUE
        return _tensor(generate_constraints(d.body), own)
    if isinstance(d, DUnpack):
        return _tensor(generate_constraints(d.rhs), Impl(Multiplicity.ONE, d.given, generate_constraints(d.body), d.span))
    if isinstance(d, DCase):
        branches = _with_all([generate_constraints(a.body) for a in d.alts])
        return _tensor(_scale(d.mult, generate_constraints(d.scrut)), branches)
    if isinstance(d, DLet):
        return _tensor(_scale(d.mult, generate_constraints(d.rhs)), generate_constraints(d.body))
    if isinstance(d, DLetSig):
        inner = Impl(d.mult, d.scheme.given, generate_constraints(d.rhs), d.span)
        return _tensor(generate_constraints(d.body), inner)
    if isinstance(d, DQual):
        return Impl(Multiplicity.ONE, d.given, generate_constraints(d.inner), d.span)
    raise TypeError(d)

