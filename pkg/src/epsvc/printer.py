"""Concrete syntax output.  ``parse(show(x))`` gives back ``x``."""

from __future__ import annotations

from .syntax import (
    And, App, Bot, Eps, Eq, Exists, Forall, Iff, Implies, Node, Not, Or, Pred,
    Sequent, Sym, Top,
)

_PREC = {Iff: 1, Implies: 2, Or: 3, And: 4}
_OP = {Iff: "<->", Implies: "->", Or: "|", And: "&"}
_QUANT = {Forall: "all", Exists: "ex"}


def show(x: Node | Sequent) -> str:
    if isinstance(x, Sequent):
        return str(x)
    if isinstance(x, Eps):
        return _eps(x)
    if isinstance(x, (Sym, App)):
        return _term(x)
    return _formula(x, 0)


def _term(t) -> str:
    match t:
        case Sym(s):
            return str(s)
        case App(h, args):
            return f"{h}({', '.join(_term(a) for a in args)})"
        case Eps():
            return f"({_eps(t)})"
    raise TypeError(f"not a term: {t!r}")


def _eps(t: Eps) -> str:
    return f"eps {t.bound}. {_formula(t.body, 5)}"


def _formula(f, ctx: int) -> str:
    match f:
        case Top():
            return "true"
        case Bot():
            return "false"
        case Pred(h, ()):
            return str(h)
        case Pred(h, args):
            return f"{h}({', '.join(_term(a) for a in args)})"
        case Eq(a, b):
            s = f"{_term(a)} = {_term(b)}"
            return f"({s})" if ctx >= 5 else s
        case Not(a):
            return "~" + _formula(a, 5)
        case Forall(v, body) | Exists(v, body):
            return f"{_QUANT[type(f)]} {v}. {_formula(body, 5)}"
        case And(a, b) | Or(a, b) | Implies(a, b) | Iff(a, b):
            p = _PREC[type(f)]
            if type(f) in (Implies, Iff):
                left, right = _formula(a, p + 1), _formula(b, p)
            else:
                left, right = _formula(a, p), _formula(b, p + 1)
            s = f"{left} {_OP[type(f)]} {right}"
            return f"({s})" if ctx > p else s
    raise TypeError(f"not a formula: {f!r}")
