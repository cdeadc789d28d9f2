"""Front to back: parse, check, solve, elaborate, lint and run."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

from linck.constraints import FailureKind
from linck.solver import Failed, check_top_level, explain_failure, solve_state_style
from linck.surface import ParseError, desugar_program, parse_program
from linck.surface.syntax import Program
from linck.types import One
from linck.typing import TypeCheckError, TypedProgram, generate_constraints, typecheck
from linck.wanted import Impl, WantedConstraint

CODES = {
    FailureKind.MULTIPLICITY: "LQ-MULT",
    FailureKind.AMBIGUITY: "LQ-AMBIG",
    FailureKind.UNSOLVED: "LQ-UNSOLVED",
}


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    span: Any = None
    decl: str | None = None

    @property
    def line(self) -> int | None:
        return getattr(self.span, "start_line", None)

    def __str__(self) -> str:
        where = f"{self.span}: " if self.span is not None else ""
        return f"{where}error[{self.code}]: {self.message}"

    def to_json(self) -> dict:
        s = self.span
        return {
            "code": self.code,
            "message": self.message,
            "decl": self.decl,
            "file": getattr(s, "file", None),
            "line": getattr(s, "start_line", None),
            "col": getattr(s, "start_col", None),
        }


@dataclass
class CheckResult:
    file: str
    program: Program | None = None
    typed: TypedProgram | None = None
    wanted: dict[str, WantedConstraint] = field(default_factory=dict)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.diagnostics


def check_source(text: str, file: str = "<input>", state_solver: bool = False,
                 trace: Callable[[str], None] | None = None) -> CheckResult:
    from linck.prelude import load_prelude

    res = CheckResult(file)
    try:
        res.program = desugar_program(parse_program(text, file))
    except ParseError as err:
        res.diagnostics.append(Diagnostic("LQ-PARSE", err.message + _expected(err), err.span))
        return res
    base = load_prelude()
    try:
        res.typed = typecheck(res.program, base.env)
    except TypeCheckError as err:
        res.diagnostics.append(Diagnostic("LQ-TYPE", err.message, err.span))
        return res
    dup = res.typed.env.dup
    for d in res.typed.decls:
        c = generate_constraints(d.body)
        res.wanted[d.name] = c
        if trace is not None:
            trace(f"-- {d.name}")
        if state_solver:
            outcome = solve_state_style(Impl(One, d.scheme.given, c, d.span), dup, trace)
        else:
            outcome = check_top_level(d.scheme.given, c, dup, d.span, trace)
        if isinstance(outcome, Failed):
            res.diagnostics.append(Diagnostic(CODES[outcome.kind], explain_failure(_unblamed(outcome)),
                                              outcome.blame or d.span, d.name))
    return res


def _unblamed(f: Failed) -> Failed:
    return Failed(f.kind, f.atom, None, f.detail)


def _expected(err: ParseError) -> str:
    if not err.expected:
        return ""
    return " (expected one of: " + ", ".join(sorted(err.expected)) + ")"


def check_file(path: str, **kw) -> CheckResult:
    with open(path, encoding="utf-8") as f:
        return check_source(f.read(), path, **kw)


# ---------------------------------------------------------------------------
# elaboration, lint and execution


@dataclass
class CompileResult:
    check: CheckResult
    core: Any = None  # CoreProgram
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.check.ok and not self.diagnostics


def compile_checked(res: CheckResult, lint: bool = True) -> CompileResult:
    """Elaborate a checked program (with the prelude) to flat core and lint it."""
    from linck.core import flatten_program, lint_program
    from linck.desugar import core_program
    from linck.prelude import load_prelude

    out = CompileResult(res)
    if not res.ok:
        return out
    prog = flatten_program(core_program(res.typed, load_prelude()))
    out.core = prog
    if lint:
        for err in lint_program(prog):
            out.diagnostics.append(Diagnostic("LQ-CORELINT", str(err), err.span, err.where))
    return out


def compile_source(text: str, file: str = "<input>", **kw) -> CompileResult:
    return compile_checked(check_source(text, file, **kw))


def user_core_text(cr: CompileResult) -> str:
    """Core of the program's own declarations, in source order."""
    from linck.core.terms import CoreProgram, show_program

    names = [d.name for d in cr.check.typed.decls]
    sub = CoreProgram({n: cr.core.bindings[n] for n in names}, {}, {}, {})
    return show_program(sub) if names else ""


@dataclass
class RunResult:
    value: Any = None
    text: str = ""
    faults: list[str] = field(default_factory=list)
    arrays: list[list[int]] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.faults and not self.diagnostics


def run_entry(cr: CompileResult, entry: str, arrays: list[list[int]] = (), ints: list[int] = ()) -> RunResult:
    """Run ``entry`` with harness-supplied evidence, array and integer arguments.

    The entry may take arrays, integers and unit.  A unit result is shown as the
    contents of the argument arrays that are still live; anything else is shown
    as a value.  Arrays allocated by the program must be freed by the end.
    """
    from linck.core import Evaluator, RuntimeFault, run_in_big_stack, show_value
    from linck.core.values import UNIT_V, ArrayH, PackV
    from linck.types import TArrow, TCon, TExists, TQual

    out = RunResult()
    typed = cr.check.typed
    scheme = typed.env.values.get(entry)
    if scheme is None or entry in typed.env.prims:
        out.diagnostics.append(Diagnostic("LQ-TYPE", f"no declaration named {entry}"))
        return out
    ev = Evaluator(cr.core, typed.env)
    args = []
    arr_q, int_q = list(arrays), list(ints)
    t = scheme.body
    while isinstance(t, TArrow):
        d = t.dom
        if isinstance(d, TCon) and d.name == "UArray" and arr_q:
            args.append(ArrayH(ev.store.from_list(arr_q.pop(0))))
        elif d == TCon("Int") and int_q:
            args.append(int_q.pop(0))
        elif d == TCon("()"):
            args.append(UNIT_V)
        else:
            out.diagnostics.append(Diagnostic("LQ-TYPE", f"cannot supply an argument of type {d} to {entry}"))
            return out
        t = t.cod
    if isinstance(t, TQual) or arr_q or int_q:
        what = "a qualified result" if isinstance(t, TQual) else "extra arguments"
        out.diagnostics.append(Diagnostic("LQ-TYPE", f"{entry} cannot be run with {what}"))
        return out
    handles = [a for a in args if isinstance(a, ArrayH)]

    def go():
        f = ev.global_value(entry)(ev.runtime.evidence(scheme.given))
        for a in args:
            f = f(a)
        return f

    try:
        value = run_in_big_stack(go)
    except RuntimeFault:
        out.faults = list(ev.store.ledger)
        return out
    if isinstance(t, TExists) and isinstance(value, PackV):
        value = value.payload
    out.value = value
    for leak in ev.store.leaks():
        ev.store.ledger.append(leak)
    out.faults = list(ev.store.ledger)
    live = [h for h in handles if ev.store.arrays[h.id].live]
    out.arrays = [ev.store.contents(h.id) for h in live]
    if value == UNIT_V and live:
        out.text = "\n".join(show_value(h, ev.store) for h in live)
    else:
        out.text = show_value(value, ev.store)
    return out
