"""Core calculus: terms, linting, pattern flattening and evaluation."""

from linck.core.eval import Evaluator, core_eval, run_in_big_stack
from linck.core.flatten import FlattenError, flatten, flatten_program, is_flat
from linck.core.lint import Binding, ContextClashError, CoreLintError, context_add, core_typecheck, lint_program
from linck.core.store import RuntimeFault, Store
from linck.core.terms import (
    CAlt, CApp, CCase, CCtor, CExists, CLam, CLet, CLit, CoreBinding, CoreProgram, CPack, CPCon, CPrim,
    CPVar, CUnpack, CVar, Term, cequal, csubst, show_ctype, show_program, show_term,
)
from linck.core.values import ArrayH, ConV, Fn, PackV, Token, show_value

__all__ = [
    "ArrayH", "Binding", "CAlt", "CApp", "CCase", "CCtor", "CExists", "CLam", "CLet", "CLit", "ConV",
    "ContextClashError", "CoreBinding", "CoreLintError", "CoreProgram", "CPack", "CPCon", "CPrim", "CPVar",
    "CUnpack", "CVar", "Evaluator", "FlattenError", "Fn", "PackV", "RuntimeFault", "Store", "Term", "Token",
    "cequal", "context_add", "core_eval", "core_typecheck", "csubst", "flatten", "flatten_program", "is_flat",
    "lint_program", "run_in_big_stack", "show_ctype", "show_program", "show_term", "show_value",
]
