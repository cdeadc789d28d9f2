"""Tokenizer.  Unicode spellings are folded into their ASCII forms here.

Declarations are separated by layout: a token in column 1 outside any bracket
starts a new declaration, and the lexer inserts a ``;;`` token before it.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from linck.surface.syntax import Span


class ParseError(Exception):
    def __init__(self, message: str, span: Span | None = None, expected: frozenset[str] = frozenset()):
        self.message = message
        self.span = span
        self.expected = frozenset(expected)
        super().__init__(str(self))

    def __str__(self) -> str:
        where = f"{self.span}: " if self.span is not None else ""
        exp = ""
        if self.expected:
            exp = " (expected one of: " + ", ".join(sorted(self.expected)) + ")"
        return where + self.message + exp


UNICODE = {
    "⊸": "-o", "=∘": "=o", "⊗": "*", "∃": "exists ", "□": "pack ", "→": "->",
    "⇒": "=>", "λ": "\\", "∀": "forall ", "←": "<-", "ω": "w",
}

KEYWORDS = {
    "let", "in", "case", "of", "if", "then", "else", "do", "pack", "exists",
    "forall", "class", "data", "primitive", "constraint", "type",
}


@dataclass(frozen=True)
class Token:
    kind: str      # ident, conid, qual, int, string, kw, sym, eof, sep
    text: str
    span: Span
    value: object = None

    def __repr__(self) -> str:
        return f"{self.kind}:{self.text}"


_SPEC = [
    ("ws", r"[ \t\r]+"),
    ("nl", r"\n"),
    ("comment", r"--(?![!#$%&*+./<=>?@\\^|~:])[^\n]*"),
    ("string", r'"(?:[^"\\\n]|\\.)*"'),
    ("int", r"[0-9]+"),
    ("qual", r"[A-Z][A-Za-z0-9_']*\.[a-z_][A-Za-z0-9_']*"),
    ("conid", r"[A-Z][A-Za-z0-9_']*"),
    ("ident", r"[a-z_][A-Za-z0-9_']*"),
    ("sym", r"-o(?![A-Za-z0-9_'])|=o(?![A-Za-z0-9_'])|::|->|<-|=>|==|/=|<=|>=|&&|\|\||\(,\)|[-+*/<>$=\\(){},;.@_|]"),
]
_RE = re.compile("|".join(f"(?P<{k}>{p})" for k, p in _SPEC))


def fold_unicode(text: str) -> str:
    for u, a in UNICODE.items():
        text = text.replace(u, a)
    return text


def tokenize(text: str, file: str = "<input>") -> list[Token]:
    text = fold_unicode(text)
    out: list[Token] = []
    line, line_start, pos, depth = 1, 0, 0, 0
    while pos < len(text):
        m = _RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", Span(line, col, line, col, file))
        kind, s = m.lastgroup, m.group()
        pos = m.end()
        if kind == "nl":
            line, line_start = line + 1, pos
            continue
        if kind in ("ws", "comment"):
            continue
        span = Span(line, col, line, col + len(s), file)
        value: object = None
        if kind == "ident" and s in KEYWORDS:
            kind = "kw"
        elif kind == "ident" and s == "_":
            kind = "sym"
        elif kind == "int":
            value = int(s)
        elif kind == "string":
            value = json.loads(s)
        if col == 1 and depth == 0 and out:
            out.append(Token("sep", ";;", span))
        if s in ("(", "{", "(,)"):
            depth += s != "(,)"
        elif s in (")", "}"):
            depth = max(0, depth - 1)
        out.append(Token(kind, s, span, value))
    end = Span(line, pos - line_start + 1, line, pos - line_start + 1, file)
    out.append(Token("eof", "<end of input>", end))
    return out
