"""Mutable array store with window views and a fault ledger.

Slices share their parent's buffer.  While any window of an array is
outstanding the parent is suspended; releasing the windows kills them and
makes the parent usable again.  Every check that the type system should
already guarantee is re-done here and recorded in ``ledger`` when it fails.
"""

from __future__ import annotations

from dataclasses import dataclass, field

INT_BITS = 64
_MOD = 1 << INT_BITS
_HALF = 1 << (INT_BITS - 1)


def wrap_int(n: int) -> int:
    return ((n + _HALF) % _MOD) - _HALF


class RuntimeFault(Exception):
    pass


@dataclass
class Array:
    id: int
    buf: list
    offset: int
    length: int
    parent: int | None = None
    origin: str = "new"  # new | input | slice
    live: bool = True
    suspended: bool = False
    children: list[int] = field(default_factory=list)


class Store:
    def __init__(self):
        self.arrays: dict[int, Array] = {}
        self.ledger: list[str] = []
        self._next = 0

    def _add(self, buf: list, offset: int, length: int, parent: int | None, origin: str) -> int:
        i = self._next
        self._next += 1
        self.arrays[i] = Array(i, buf, offset, length, parent, origin)
        return i

    def fault(self, msg: str):
        self.ledger.append(msg)
        raise RuntimeFault(msg)

    def new(self, n: int, origin: str = "new") -> int:
        if n < 0:
            self.fault(f"new: negative length {n}")
        return self._add([0] * n, 0, n, None, origin)

    def from_list(self, xs: list[int]) -> int:
        return self._add(list(xs), 0, len(xs), None, "input")

    def usable(self, h: int, op: str) -> Array:
        a = self.arrays.get(h)
        if a is None:
            self.fault(f"{op}: unknown array #{h}")
        if not a.live:
            self.fault(f"{op}: array #{h} used after free")
        if a.suspended:
            self.fault(f"{op}: array #{h} used while sliced")
        return a

    def _index(self, a: Array, i: int, op: str) -> int:
        if not 0 <= i < a.length:
            self.fault(f"{op}: index {i} out of bounds for array #{a.id} of length {a.length}")
        return a.offset + i

    def read(self, h: int, i: int):
        a = self.usable(h, "read")
        return a.buf[self._index(a, i, "read")]

    def write(self, h: int, i: int, v) -> None:
        a = self.usable(h, "write")
        a.buf[self._index(a, i, "write")] = v

    def length(self, h: int) -> int:
        a = self.arrays.get(h)
        if a is None or not a.live:
            self.fault(f"length: array #{h} is not live")
        return a.length

    def free(self, h: int) -> None:
        a = self.usable(h, "free")
        if a.origin == "slice":
            self.fault(f"free: array #{h} is a window; release it instead")
        a.live = False

    def slice(self, h: int, k: int) -> tuple[int, int]:
        a = self.usable(h, "slice")
        if not 0 <= k <= a.length:
            self.fault(f"slice: split point {k} out of bounds for array #{h} of length {a.length}")
        left = self._add(a.buf, a.offset, k, h, "slice")
        right = self._add(a.buf, a.offset + k, a.length - k, h, "slice")
        a.suspended = True
        a.children = [left, right]
        return left, right

    def release(self, parent: int, windows: tuple[int, ...]) -> None:
        p = self.arrays[parent]
        for w in windows:
            self.usable(w, "release")
            self.arrays[w].live = False
        if not p.live or not p.suspended:
            self.fault(f"release: array #{parent} is not suspended")
        p.suspended = False
        p.children = []

    def contents(self, h: int) -> list:
        a = self.arrays[h]
        return a.buf[a.offset:a.offset + a.length]

    def leaks(self) -> list[str]:
        """Arrays from ``new`` never freed, and windows never released."""
        out = []
        for a in self.arrays.values():
            if a.live and a.origin in ("new", "slice"):
                out.append(f"array #{a.id} ({a.origin}) is still live at exit")
            elif a.live and a.suspended:
                out.append(f"array #{a.id} is still sliced at exit")
        return out
