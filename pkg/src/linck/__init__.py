"""linck: a checker, elaborator and interpreter for a language with linear constraints."""

__version__ = "0.1.0"
