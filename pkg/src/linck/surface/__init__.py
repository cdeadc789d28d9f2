"""Surface language: syntax, parsing, printing and do-notation removal."""

from linck.surface.do import desugar_do, desugar_expr, desugar_program
from linck.surface.lexer import ParseError, tokenize
from linck.surface.parser import parse_expr, parse_program, parse_scheme, parse_type
from linck.surface.printer import pretty_print, show_decl, show_expr, show_scheme
from linck.surface.syntax import *  # noqa: F401,F403

__all__ = [
    "ParseError", "desugar_do", "desugar_expr", "desugar_program", "parse_expr", "parse_program",
    "parse_scheme", "parse_type", "pretty_print", "show_decl", "show_expr", "show_scheme", "tokenize",
]
