"""Runtime values."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable


@dataclass(frozen=True)
class ConV:
    name: str
    fields: tuple = ()


@dataclass(frozen=True)
class PackV:
    ev: object
    payload: object


@dataclass(frozen=True)
class Token:
    """Evidence for one atomic constraint; carries no data beyond a label."""

    label: str


@dataclass(frozen=True)
class ArrayH:
    id: int


@dataclass(frozen=True)
class Fn:
    fn: Callable
    label: str = "<fun>"

    def __call__(self, v):
        return self.fn(v)


UNIT_V = ConV("()")
TRUE_V = ConV("True")
FALSE_V = ConV("False")


def pair(a, b) -> ConV:
    return ConV("(,)", (a, b))


def ur(v) -> ConV:
    return ConV("Ur", (v,))


def boolean(b: bool) -> ConV:
    return TRUE_V if b else FALSE_V


def show_value(v, store=None) -> str:
    """Stable textual form; ``Ur`` wrappers are transparent and evidence is hidden."""
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, (int, str)):
        return str(v) if isinstance(v, int) else repr(v)
    if isinstance(v, ConV):
        if v.name == "Ur":
            return show_value(v.fields[0], store)
        if v.name == "(,)":
            return f"({show_value(v.fields[0], store)}, {show_value(v.fields[1], store)})"
        if not v.fields:
            return v.name
        return "(" + " ".join([v.name] + [show_value(f, store) for f in v.fields]) + ")"
    if isinstance(v, PackV):
        return show_value(v.payload, store)
    if isinstance(v, ArrayH):
        if store is not None and v.id in store.arrays and store.arrays[v.id].live:
            return "[" + ", ".join(show_value(x) for x in store.contents(v.id)) + "]"
        return f"<array #{v.id}>"
    if isinstance(v, Token):
        return f"<{v.label}>"
    if isinstance(v, Fn):
        return "<function>"
    return repr(v)
