"""Type checking: derivations, usage tracking and constraint generation."""

from linck.typing.checker import Checker, Local, TypedProgram, instantiate_scheme, typecheck
from linck.typing.derivation import D, DDecl
from linck.typing.env import GlobalEnv, LinearityError, TypeCheckError
from linck.typing.generate import generate_constraints

__all__ = [
    "Checker", "D", "DDecl", "GlobalEnv", "LinearityError", "Local", "TypeCheckError", "TypedProgram",
    "generate_constraints", "instantiate_scheme", "typecheck",
]
