"""Command-line front end.

Exit codes: 0 success, 1 refuted / inconsistent / goals left open,
2 input error.  Results go to stdout as JSON, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from . import semantics
from .calculus import RuleError, load_script, run_script
from .choice import ChoiceConditionError, parse_cc
from .epsilon import EpsilonError, eliminate_all, eps_stats, qelim, qelim_parallel_homogeneous, reconstruct
from .parse import ParseError, Parser, Signature, parse_signature
from .syntax import Kind, Sequent, SortError, Symbol, free_bound
from .varcond import VarCond, VarCondError, describe_cycle, inconsistency, parse_vc, to_dot


class InputError(Exception):
    pass


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _signature(args) -> Signature | None:
    return parse_signature(_read(args.signature)) if args.signature else None


def _formula_texts(args, many: bool = False) -> list[str]:
    if args.formula is not None:
        return [args.formula]
    if args.file is None:
        raise InputError("give --formula or --file")
    text = _read(args.file)
    if not many:
        return [text]
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    return [ln for ln in lines if ln]


def _parse_all(texts: list[str], sig: Signature | None, env=None):
    env = dict(env or {})
    inferred = None
    out = []
    for t in texts:
        p = Parser(t, sig, env, inferred=inferred)
        out.append(p.formula())
        p.done()
        env, inferred = p.env, p.inferred
    return out, env


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _write_dot(path: str | None, vc: VarCond) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(to_dot(vc))


def _vc_json(vc: VarCond) -> dict:
    return {"P": [[str(a), str(b)] for a, b in vc.p_edges()],
            "N": [[str(a), str(b)] for a, b in vc.n_edges()]}


class _Fresh:
    def __init__(self, used: set[str]):
        self.used = set(used)
        self.counter = 0

    def __call__(self, base: str, sort) -> Symbol:
        name = base
        while name in self.used:
            name = f"{base}{self.counter}"
            self.counter += 1
        self.used.add(name)
        return Symbol(name, Kind.FREE_VAR, sort)


# ---------------------------------------------------------------- subcommands


def cmd_check(args) -> int:
    st, script = load_script(_read(args.script), _signature(args))
    report = run_script(st, script.steps)
    _emit(report.to_json())
    _write_dot(args.emit_dot, report.state.vc)
    if report.error:
        print(f"step {report.steps_applied + 1} (line {report.failed_step.line}) "
              f"'{report.failed_step}' failed: {report.error}", file=sys.stderr)
        return 1
    if report.state.goals:
        print(f"{len(report.state.goals)} goal(s) left open", file=sys.stderr)
        return 1
    return 0


def cmd_eliminate(args) -> int:
    (f,), env = _parse_all(_formula_texts(args), _signature(args))
    used = {n for (k, n) in env if k is Kind.FREE_VAR}
    res = eliminate_all([f], _Fresh(used), share=not args.fresh)
    vc = VarCond(res.p_delta)
    _emit({"formula": str(res.formula),
           "cc": [f"{y} := {e}" for y, e in res.cc_delta.items()],
           "vc": _vc_json(vc)})
    _write_dot(args.emit_dot, vc)
    return 0


def cmd_reconstruct(args) -> int:
    sig = _signature(args)
    cc = parse_cc(_read(args.cc), sig)
    env = {(y.kind, y.name): y for y in cc}
    (f,), _ = _parse_all(_formula_texts(args), sig, env)
    _emit({"formula": str(reconstruct(f, cc))})
    return 0


def cmd_qelim(args) -> int:
    (f,), _ = _parse_all(_formula_texts(args), _signature(args))
    g = qelim_parallel_homogeneous(f) if args.parallel else qelim(f)
    stats = eps_stats(g)
    out = stats.to_json()
    if args.print_formula:
        out["formula"] = str(g)
    _emit(out)
    if args.plot:
        from .plotting import plot_eps_stats

        plot_eps_stats(stats, args.plot)
    return 0


def cmd_validity(args) -> int:
    sig = _signature(args)
    formulas, env = _parse_all(_formula_texts(args, many=True), sig)
    for f in formulas:
        if free_bound(f):
            raise InputError(f"unbound bound atoms in {f}")
    vc = parse_vc(_read(args.vc)) if args.vc else VarCond()
    used = {n for (k, n) in env if k is Kind.FREE_VAR}
    res = eliminate_all(formulas, _Fresh(used), share=not args.fresh)
    cc = res.cc_delta
    vc = vc.with_p(res.p_delta)
    cycle = inconsistency(vc)
    if cycle is not None:
        raise InputError("inconsistent variable-condition: " + describe_cycle(cycle, vc))
    structures = semantics.load_structures(_read(args.structures))
    semantics.MAX_UNIVERSE = args.max_universe
    goals = [Sequent((f,)) for f in res.formulas]
    results = [semantics.is_valid(goals, cc, vc, s) for s in structures]
    _emit({"valid": all(results),
           "goals": [str(g) for g in goals],
           "cc": [f"{y} := {e}" for y, e in cc.items()],
           "vc": _vc_json(vc),
           "structures": [{"index": i, "valid": r} for i, r in enumerate(results)]})
    if not all(results):
        bad = [i for i, r in enumerate(results) if not r]
        print(f"refuted in structure(s) {bad}", file=sys.stderr)
        return 1
    return 0


def cmd_vc_check(args) -> int:
    vc = parse_vc(_read(args.file))
    cycle = inconsistency(vc)
    out = {"consistent": cycle is None, "vc": _vc_json(vc), "witness": None}
    if cycle is not None:
        out["witness"] = [[str(a), str(b), "N" if (a, b) in vc.N else "P"] for a, b in cycle]
        print("inconsistent: " + describe_cycle(cycle, vc), file=sys.stderr)
    _emit(out)
    _write_dot(args.emit_dot, vc)
    return 0 if cycle is None else 1


# ---------------------------------------------------------------- argument parsing


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="epsvc", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def formula_args(p):
        g = p.add_mutually_exclusive_group()
        g.add_argument("--formula", help="formula text")
        g.add_argument("--file", help="file holding the formula")
        p.add_argument("--signature", help="signature file (const/pred declarations)")

    p = sub.add_parser("check", help="replay a proof script")
    p.add_argument("script", nargs="?")
    p.add_argument("--script", dest="script_opt")
    p.add_argument("--signature")
    p.add_argument("--emit-dot", help="write the final variable-condition as Graphviz")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("eliminate", help="replace epsilon-terms by choice variables")
    formula_args(p)
    p.add_argument("--fresh", action="store_true", help="one variable per occurrence")
    p.add_argument("--emit-dot")
    p.set_defaults(func=cmd_eliminate)

    p = sub.add_parser("reconstruct", help="expand choice variables back into epsilon-terms")
    formula_args(p)
    p.add_argument("--cc", required=True, help="choice-condition file")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("qelim", help="eliminate quantifiers and report epsilon nesting")
    formula_args(p)
    p.add_argument("--parallel", action="store_true", help="one epsilon per homogeneous block")
    p.add_argument("--print-formula", action="store_true")
    p.add_argument("--plot", help="save a depth/binder chart to this image file")
    p.set_defaults(func=cmd_qelim)

    p = sub.add_parser("validity", help="decide validity on finite structures")
    formula_args(p)
    p.add_argument("--structures", required=True, help="JSON structure or list of structures")
    p.add_argument("--vc", help="variable-condition file (lines 'P a b' / 'N a b')")
    p.add_argument("--fresh", action="store_true")
    p.add_argument("--max-universe", type=int, default=semantics.MAX_UNIVERSE)
    p.set_defaults(func=cmd_validity)

    p = sub.add_parser("vc-check", help="check a variable-condition for consistency")
    p.add_argument("file")
    p.add_argument("--emit-dot")
    p.set_defaults(func=cmd_vc_check)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command == "check":
        args.script = args.script or args.script_opt
        if not args.script:
            print("error: check needs a script file", file=sys.stderr)
            return 2
    old_max = semantics.MAX_UNIVERSE
    try:
        return args.func(args)
    except (InputError, ParseError, EpsilonError, ChoiceConditionError, VarCondError,
            RuleError, SortError, semantics.OracleError, semantics.EvalError,
            json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    finally:
        semantics.MAX_UNIVERSE = old_max


if __name__ == "__main__":
    sys.exit(main())
