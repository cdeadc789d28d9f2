"""The standard prelude, parsed and checked once per process."""

from __future__ import annotations

import functools
import os
from importlib import resources


def prelude_path() -> str:
    override = os.environ.get("LINCK_PRELUDE")
    if override:
        return override
    return str(resources.files("linck.prelude") / "prelude.lq")


def load_prelude(path: str | None = None):
    """Typecheck the prelude; returns the ``TypedProgram`` it produces."""
    return _load(path or prelude_path())


@functools.lru_cache(maxsize=4)
def _load(path: str):
    from linck.surface import desugar_program, parse_program
    from linck.typing import typecheck

    with open(path, encoding="utf-8") as f:
        text = f.read()
    return typecheck(desugar_program(parse_program(text, os.path.basename(path))))
