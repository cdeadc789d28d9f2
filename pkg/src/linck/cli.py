"""Command-line driver: ``linck check|core|run|corpus``.

Exit status: 0 success, 1 rejected program (or failed expectations), 2 usage
or I/O error, 3 runtime fault.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
from pathlib import Path

from linck.pipeline import CheckResult, Diagnostic, check_source, compile_checked, run_entry, user_core_text

EXIT_OK, EXIT_REJECT, EXIT_IO, EXIT_FAULT = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise UsageError(f"cannot read {path}: {err.strerror or err}") from err


def _stress():
    """Shuffle constraint processing order when LINCK_STRESS_SEED is set."""
    seed = os.environ.get("LINCK_STRESS_SEED")
    if not seed:
        return contextlib.nullcontext()
    from linck.constraints import atom_order_shuffled

    try:
        return atom_order_shuffled(int(seed))
    except ValueError as err:
        raise UsageError(f"LINCK_STRESS_SEED must be an integer, got {seed!r}") from err


def _sort_key(d: Diagnostic):
    s = d.span
    return (getattr(s, "file", "") or "", getattr(s, "start_line", 0) or 0, getattr(s, "start_col", 0) or 0)


def _emit(diags: list[Diagnostic], as_json: bool, out) -> None:
    for d in sorted(diags, key=_sort_key):
        print(json.dumps(d.to_json(), sort_keys=True) if as_json else str(d), file=out)


def _check(path: str, args) -> CheckResult:
    trace = (lambda line: print(line, file=sys.stderr)) if getattr(args, "trace_solver", False) else None
    return check_source(_read(path), path, state_solver=getattr(args, "state_solver", False), trace=trace)


def _parse_array(text: str) -> list[int]:
    text = text.strip().strip("[]")
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as err:
        raise UsageError(f"bad --array value {text!r}; expected comma-separated integers") from err


# ---------------------------------------------------------------------------
# expectations


def load_expectations(path: str) -> dict:
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as err:
        raise UsageError(f"{path}: invalid JSON: {err}") from err


def _expect_key(file: str, expectations: dict, base: Path) -> str | None:
    p = Path(file)
    for key in (p.as_posix(), _rel(p, base), f"{p.parent.name}/{p.name}", p.name):
        if key in expectations:
            return key
    return None


def _rel(p: Path, base: Path) -> str:
    try:
        return p.resolve().relative_to(base.resolve()).as_posix()
    except ValueError:
        return p.as_posix()


def compare(res: CheckResult, spec: dict | None) -> list[str]:
    """Mismatches between a check result and its expectation entry."""
    if spec is None:
        return [f"{res.file}: no expectation recorded"]
    if spec.get("status", "ok") == "ok":
        return [f"{res.file}: expected success, got {d}" for d in res.diagnostics]
    if not res.diagnostics:
        return [f"{res.file}: expected {spec.get('code')}, but the program was accepted"]
    first = sorted(res.diagnostics, key=_sort_key)[0]
    problems = []
    if spec.get("code") and first.code != spec["code"]:
        problems.append(f"{res.file}: expected {spec['code']}, got {first.code}")
    if spec.get("line") and first.line != spec["line"]:
        problems.append(f"{res.file}: expected blame on line {spec['line']}, got line {first.line}")
    return problems


# ---------------------------------------------------------------------------
# commands


def cmd_check(args) -> int:
    expectations = load_expectations(args.expect) if args.expect else None
    base = Path(args.expect).parent if args.expect else Path(".")
    diags: list[Diagnostic] = []
    problems: list[str] = []
    for path in sorted(args.paths):
        res = _check(path, args)
        diags += res.diagnostics
        if expectations is not None:
            problems += compare(res, expectations.get(_expect_key(path, expectations, base) or ""))
    _emit(diags, args.json, sys.stdout)
    if expectations is not None:
        for p in problems:
            print(f"mismatch: {p}", file=sys.stderr)
        return EXIT_REJECT if problems else EXIT_OK
    return EXIT_REJECT if diags else EXIT_OK


def cmd_core(args) -> int:
    res = _check(args.path, args)
    if not res.ok:
        _emit(res.diagnostics, args.json, sys.stderr)
        return EXIT_REJECT
    cr = compile_checked(res)
    if cr.diagnostics:
        _emit(cr.diagnostics, args.json, sys.stderr)
        return EXIT_REJECT
    sys.stdout.write(user_core_text(cr))
    return EXIT_OK


def cmd_run(args) -> int:
    res = _check(args.path, args)
    if not res.ok:
        _emit(res.diagnostics, args.json, sys.stderr)
        return EXIT_REJECT
    cr = compile_checked(res)
    if cr.diagnostics:
        _emit(cr.diagnostics, args.json, sys.stderr)
        return EXIT_REJECT
    rr = run_entry(cr, args.entry, [_parse_array(a) for a in args.array], args.int)
    if rr.diagnostics:
        _emit(rr.diagnostics, args.json, sys.stderr)
        return EXIT_REJECT
    if rr.faults:
        print("runtime fault (compiler bug: the program passed all static checks):", file=sys.stderr)
        for f in rr.faults:
            print(f"  {f}", file=sys.stderr)
        return EXIT_FAULT
    print(rr.text)
    return EXIT_OK


def cmd_corpus(args) -> int:
    root = Path(args.dir)
    exp_path = Path(args.expectations) if args.expectations else root / "expectations.json"
    expectations = load_expectations(str(exp_path))
    files = sorted(root.glob("*/*.lq"))
    if not files:
        raise UsageError(f"no .lq files under {root}")
    failures = 0
    faults = 0
    for f in files:
        key = _expect_key(str(f), expectations, exp_path.parent)
        spec = expectations.get(key) if key else None
        res = _check(str(f), args)
        problems = compare(res, spec)
        if not problems and res.ok:
            cr = compile_checked(res)
            problems += [f"{f}: {d}" for d in cr.diagnostics]
            for run in (spec or {}).get("runs", []) if not cr.diagnostics else []:
                rr = run_entry(cr, run["entry"], run.get("arrays", []), run.get("ints", []))
                if rr.faults:
                    faults += 1
                    problems += [f"{f}: {run['entry']}: runtime fault: {x}" for x in rr.faults]
                elif rr.diagnostics:
                    problems += [f"{f}: {run['entry']}: {d}" for d in rr.diagnostics]
                elif "output" in run and rr.text != run["output"]:
                    problems.append(f"{f}: {run['entry']}: printed {rr.text!r}, expected {run['output']!r}")
        label = _rel(f, root)
        if problems:
            failures += 1
            print(f"FAIL {label}")
            for p in problems:
                print(f"  {p}")
        else:
            what = "accepted" if res.ok else f"rejected {res.diagnostics[0].code} line {res.diagnostics[0].line}"
            print(f"ok   {label} ({what})")
    print(f"{len(files) - failures}/{len(files)} corpus files as expected")
    if faults:
        return EXIT_FAULT
    return EXIT_REJECT if failures else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="linck", description="Checker, elaborator and interpreter for linear-constraint programs.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="diagnostics as newline-delimited JSON")
    common.add_argument("--trace-solver", action="store_true", help="print the solver's rule trace to stderr")
    common.add_argument("--state-solver", action="store_true", help="use the state-style solver")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", parents=[common], help="type check programs")
    c.add_argument("paths", nargs="+")
    c.add_argument("--expect", metavar="FILE", help="compare against an expectations sidecar")
    c.set_defaults(func=cmd_check)

    k = sub.add_parser("core", parents=[common], help="print the elaborated core")
    k.add_argument("path")
    k.set_defaults(func=cmd_core)

    r = sub.add_parser("run", parents=[common], help="evaluate a declaration")
    r.add_argument("path")
    r.add_argument("--entry", required=True)
    r.add_argument("--array", action="append", default=[], metavar="1,2,3",
                   help="an array argument (repeatable)")
    r.add_argument("--int", action="append", default=[], type=int, metavar="N",
                   help="an integer argument (repeatable)")
    r.set_defaults(func=cmd_run)

    q = sub.add_parser("corpus", parents=[common], help="check, lint and run a corpus against its expectations")
    q.add_argument("dir", nargs="?", default="corpus")
    q.add_argument("--expectations", metavar="FILE")
    q.set_defaults(func=cmd_corpus)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_IO if err.code else EXIT_OK
    try:
        with _stress():
            return args.func(args)
    except UsageError as err:
        print(f"linck: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
