"""Brute-force finite-model oracle.

Semantic valuations ``pi`` give each free variable a set of free atoms it
may read (its access set) and a table from those atoms' values to an
element.  Validity of a goal set asks for one compatible ``pi`` that makes
every goal true under every valuation of the free atoms.  Everything is
exhaustive, so keep universes, atoms and variables small.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Mapping

from .choice import ChoiceCondition
from .syntax import (
    And, App, Bot, Eps, Eq, Exists, Forall, Iff, Implies, Kind, Node, Not, Or,
    Pred, Sequent, Sym, Symbol, Top, free_atoms, free_vars, sort_arity, sym_key,
)
from .varcond import VarCond, is_consistent

MAX_UNIVERSE = 3
MAX_ATOMS = 3
MAX_VARS = 3


class EvalError(ValueError):
    pass


class OracleError(ValueError):
    """Input outside what the oracle handles (scale or higher-order entries)."""


@dataclass(frozen=True)
class FiniteStructure:
    universe: tuple[int, ...]
    preds: Mapping[str, frozenset[tuple[int, ...]]] = field(default_factory=dict)
    funs: Mapping[str, Mapping[tuple[int, ...], int]] = field(default_factory=dict)
    eps_default: int | None = None

    def __post_init__(self):
        u = tuple(sorted(set(self.universe)))
        if not u:
            raise ValueError("universe must be non-empty")
        object.__setattr__(self, "universe", u)
        if self.eps_default is None:
            object.__setattr__(self, "eps_default", u[0])
        if self.eps_default not in u:
            raise ValueError("eps_default must belong to the universe")
        elems = set(u)
        preds = {}
        for name, rel in self.preds.items():
            rel = frozenset(tuple(t) for t in rel)
            if any(not set(t) <= elems for t in rel):
                raise ValueError(f"relation {name} leaves the universe")
            if len({len(t) for t in rel}) > 1:
                raise ValueError(f"relation {name} mixes arities")
            preds[name] = rel
        funs = {}
        for name, table in self.funs.items():
            table = {tuple(k): v for k, v in table.items()}
            arities = {len(k) for k in table}
            if len(arities) != 1:
                raise ValueError(f"function {name} has no consistent arity")
            (k,) = arities
            if set(table) != set(itertools.product(u, repeat=k)):
                raise ValueError(f"function {name} is not total")
            if not set(table.values()) <= elems:
                raise ValueError(f"function {name} leaves the universe")
            funs[name] = table
        object.__setattr__(self, "preds", preds)
        object.__setattr__(self, "funs", funs)

    def to_json(self) -> dict:
        return {
            "universe": list(self.universe),
            "preds": {n: sorted(list(t) for t in r) for n, r in self.preds.items()},
            "funs": {n: {",".join(map(str, k)): v for k, v in sorted(t.items())}
                     for n, t in self.funs.items()},
            "eps_default": self.eps_default,
        }


def _key(text: str) -> tuple[int, ...]:
    text = text.strip()
    if text.startswith("["):
        return tuple(json.loads(text))
    text = text.strip("()")
    return tuple(int(p) for p in text.split(",") if p.strip())


def structure_from_json(obj: Mapping[str, Any]) -> FiniteStructure:
    funs = {name: {_key(k): v for k, v in table.items()} for name, table in obj.get("funs", {}).items()}
    preds = {name: [tuple(t) for t in rel] for name, rel in obj.get("preds", {}).items()}
    return FiniteStructure(tuple(obj["universe"]), preds, funs, obj.get("eps_default"))


def load_structures(text: str) -> list[FiniteStructure]:
    """A JSON object or a list of objects."""
    data = json.loads(text)
    if isinstance(data, dict):
        data = [data]
    return [structure_from_json(d) for d in data]


def all_structures(size: int, preds: Mapping[str, int] = {}, funs: Mapping[str, int] = {}) -> Iterator[FiniteStructure]:
    """Every structure over ``{0..size-1}`` for the given arities."""
    u = tuple(range(size))
    pred_choices = []
    for name, k in sorted(preds.items()):
        tuples = list(itertools.product(u, repeat=k))
        pred_choices.append([(name, frozenset(t for t, b in zip(tuples, bits) if b))
                             for bits in itertools.product((0, 1), repeat=len(tuples))])
    fun_choices = []
    for name, k in sorted(funs.items()):
        tuples = list(itertools.product(u, repeat=k))
        fun_choices.append([(name, dict(zip(tuples, vals)))
                            for vals in itertools.product(u, repeat=len(tuples))])
    for ps in itertools.product(*pred_choices):
        for fs in itertools.product(*fun_choices):
            yield FiniteStructure(u, dict(ps), dict(fs), u[0])


# ---------------------------------------------------------------- evaluation


def _apply(f, args):
    for a in args:
        f = f[a] if isinstance(f, Mapping) else f(a)
    return f


def evaluate(x: Node, st: FiniteStructure, d: Mapping[Symbol, Any]):
    """Element for a term, truth value for a formula.

    Epsilon-terms pick the least satisfying element, else ``eps_default``.
    """
    try:
        rule = _EVAL[type(x)]
    except KeyError:
        raise TypeError(f"cannot evaluate {x!r}") from None
    return rule(x, st, d)


def _eval_sym(x: Sym, st, d):
    s = x.symbol
    if s.kind is Kind.CONST:
        return _fun(st, s.name)[()]
    return _lookup(d, s)


def _eval_app(x: App, st, d):
    vals = tuple(evaluate(a, st, d) for a in x.args)
    if x.head.kind is Kind.CONST:
        return _fun(st, x.head.name)[vals]
    return _apply(_lookup(d, x.head), vals)


def _eval_eps(x: Eps, st, d):
    for u in st.universe:
        if evaluate(x.body, st, {**d, x.bound: u}):
            return u
    return st.eps_default


def _eval_pred(x: Pred, st, d):
    rel = st.preds.get(x.head.name)
    if rel is None:
        raise EvalError(f"structure does not interpret predicate {x.head.name}")
    return tuple(evaluate(a, st, d) for a in x.args) in rel


_EVAL = {
    Sym: _eval_sym,
    App: _eval_app,
    Eps: _eval_eps,
    Top: lambda x, st, d: True,
    Bot: lambda x, st, d: False,
    Pred: _eval_pred,
    Eq: lambda x, st, d: evaluate(x.left, st, d) == evaluate(x.right, st, d),
    Not: lambda x, st, d: not evaluate(x.arg, st, d),
    And: lambda x, st, d: evaluate(x.left, st, d) and evaluate(x.right, st, d),
    Or: lambda x, st, d: evaluate(x.left, st, d) or evaluate(x.right, st, d),
    Implies: lambda x, st, d: (not evaluate(x.left, st, d)) or evaluate(x.right, st, d),
    Iff: lambda x, st, d: evaluate(x.left, st, d) == evaluate(x.right, st, d),
    Forall: lambda x, st, d: all(evaluate(x.body, st, {**d, x.bound: u}) for u in st.universe),
    Exists: lambda x, st, d: any(evaluate(x.body, st, {**d, x.bound: u}) for u in st.universe),
}


def _lookup(d: Mapping[Symbol, Any], s: Symbol):
    try:
        return d[s]
    except KeyError:
        raise EvalError(f"unvalued free symbol {s}") from None


def _fun(st: FiniteStructure, name: str):
    try:
        return st.funs[name]
    except KeyError:
        raise EvalError(f"structure does not interpret function {name}") from None


def sequent_true(seq: Sequent, st: FiniteStructure, d: Mapping[Symbol, Any]) -> bool:
    return any(evaluate(f, st, d) for f in seq)


# ---------------------------------------------------------------- semantic valuations


@dataclass(frozen=True)
class SemValuation:
    access: Mapping[Symbol, frozenset[Symbol]]
    table: Mapping[Symbol, Mapping[tuple[int, ...], int]]

    def order(self, x: Symbol) -> list[Symbol]:
        return sorted(self.access[x], key=sym_key)

    def value(self, x: Symbol, tau: Mapping[Symbol, int]) -> int:
        return self.table[x][tuple(tau[a] for a in self.order(x))]

    def relation(self) -> frozenset[tuple[Symbol, Symbol]]:
        """``S_pi``: ``(a, x)`` for every atom ``a`` that ``x`` reads."""
        return frozenset((a, x) for x, acc in self.access.items() for a in acc)

    def __str__(self) -> str:
        parts = []
        for x in sorted(self.access, key=sym_key):
            names = ",".join(str(a) for a in self.order(x))
            parts.append(f"{x}[{names}]={dict(self.table[x])}")
        return "; ".join(parts)


def epsilon_combine(p: SemValuation, t: Mapping[Symbol, int]) -> dict[Symbol, int]:
    """Values of the free variables under atom valuation ``t``."""
    return {x: p.value(x, t) for x in p.access}


def atom_valuations(atoms: Iterable[Symbol], st: FiniteStructure) -> Iterator[dict[Symbol, int]]:
    atoms = sorted(atoms, key=sym_key)
    for vals in itertools.product(st.universe, repeat=len(atoms)):
        yield dict(zip(atoms, vals))


def _require_first_order(cc: ChoiceCondition) -> None:
    for y, e in cc.items():
        if e.prefix:
            raise OracleError(f"choice-condition of {y} has a lambda-prefix; the oracle handles l = 0 only")


def is_compatible(p: SemValuation, cc: ChoiceCondition, vc: VarCond, st: FiniteStructure) -> bool:
    _require_first_order(cc)
    if not is_consistent(VarCond(vc.P | p.relation(), vc.N)):
        return False
    for y, e in cc.items():
        needed = free_vars(e.body) | {y}
        missing = [x for x in needed if x not in p.access]
        if missing:
            raise OracleError(f"valuation does not cover {', '.join(map(str, missing))}")
        atoms = set(free_atoms(e.body))
        for x in needed:
            atoms |= p.access[x]
        for tau in atom_valuations(atoms, st):
            d = {x: p.value(x, tau) for x in needed}
            d.update(tau)
            if any(evaluate(e.body, st, {**d, e.bound: u}) for u in st.universe):
                if not evaluate(e.body, st, {**d, e.bound: d[y]}):
                    return False
    return True


def _scope(goals: Iterable[Sequent], cc: ChoiceCondition, vc: VarCond):
    goals = list(goals)
    vs = set(free_vars(goals)) | set(cc)
    ats = set(free_atoms(goals))
    for e in cc.values():
        vs |= free_vars(e.body)
        ats |= free_atoms(e.body)
    for a, b in vc.P | vc.N:
        (vs if a.kind is Kind.FREE_VAR else ats).add(a)
        (vs if b.kind is Kind.FREE_VAR else ats).add(b)
    return sorted(vs, key=sym_key), sorted(ats, key=sym_key)


def _check_scale(st: FiniteStructure, variables, atoms) -> None:
    if len(st.universe) > MAX_UNIVERSE:
        raise OracleError(f"universe of size {len(st.universe)} exceeds {MAX_UNIVERSE}")
    if len(atoms) > MAX_ATOMS:
        raise OracleError(f"{len(atoms)} free atoms exceed {MAX_ATOMS}")
    if len(variables) > MAX_VARS:
        raise OracleError(f"{len(variables)} free variables exceed {MAX_VARS}")
    for s in list(variables) + list(atoms):
        if sort_arity(s.sort):
            raise OracleError(f"{s} is higher-order")


def enumerate_compatible(cc: ChoiceCondition, vc: VarCond, st: FiniteStructure,
                         variables: Iterable[Symbol] | None = None,
                         atoms: Iterable[Symbol] | None = None,
                         maximal: bool = False) -> Iterator[SemValuation]:
    """Every compatible semantic valuation over the given scope.

    Access sets range over subsets of the atoms each variable may read
    without breaking consistency.  With ``maximal`` only the largest access
    set per variable is used; that is enough to decide validity, because a
    valuation reading more atoms can ignore them.
    """
    _require_first_order(cc)
    if variables is None or atoms is None:
        vs, ats = _scope((), cc, vc)
        variables = vs if variables is None else variables
        atoms = ats if atoms is None else atoms
    variables = sorted(set(variables), key=sym_key)
    atoms = sorted(set(atoms), key=sym_key)
    _check_scale(st, variables, atoms)
    per_var = []
    for x in variables:
        allowed = [a for a in atoms if is_consistent(VarCond(vc.P | {(a, x)}, vc.N))]
        if maximal:
            subsets = [tuple(allowed)]
        else:
            subsets = [c for k in range(len(allowed) + 1) for c in itertools.combinations(allowed, k)]
        options = []
        for acc in subsets:
            inputs = list(itertools.product(st.universe, repeat=len(acc)))
            for outs in itertools.product(st.universe, repeat=len(inputs)):
                options.append((frozenset(acc), dict(zip(inputs, outs))))
        per_var.append(options)
    for combo in itertools.product(*per_var):
        p = SemValuation({x: c[0] for x, c in zip(variables, combo)},
                         {x: c[1] for x, c in zip(variables, combo)})
        if is_compatible(p, cc, vc, st):
            yield p


def pi_valid(goals: Iterable[Sequent], p: SemValuation, st: FiniteStructure,
             atoms: Iterable[Symbol]) -> bool:
    """Every goal true under ``eps(pi)(tau)`` and ``tau`` for every ``tau``."""
    goals = list(goals)
    for tau in atom_valuations(atoms, st):
        d = epsilon_combine(p, tau)
        d.update(tau)
        if not all(sequent_true(g, st, d) for g in goals):
            return False
    return True


def is_valid(goals: Iterable[Sequent], cc: ChoiceCondition, vc: VarCond, st: FiniteStructure,
             maximal: bool = True) -> bool:
    """Some compatible ``pi`` makes every goal true under every atom valuation."""
    goals = list(goals)
    vs, ats = _scope(goals, cc, vc)
    return any(pi_valid(goals, p, st, ats)
               for p in enumerate_compatible(cc, vc, st, vs, ats, maximal=maximal))


def is_valid_in(goals: Iterable[Sequent], cc: ChoiceCondition, vc: VarCond,
                structures: Iterable[FiniteStructure]) -> bool:
    goals = list(goals)
    return all(is_valid(goals, cc, vc, st) for st in structures)


def reduces_to(g0: Iterable[Sequent], g1: Iterable[Sequent], cc: ChoiceCondition, vc: VarCond,
               st: FiniteStructure, extra: Iterable[Sequent] = ()) -> bool:
    """For every compatible ``pi``: ``g1`` pi-valid implies ``g0`` pi-valid.

    ``extra`` widens the scope (variables and atoms) without adding goals.
    """
    g0, g1 = list(g0), list(g1)
    vs, ats = _scope(g0 + g1 + list(extra), cc, vc)
    for p in enumerate_compatible(cc, vc, st, vs, ats):
        if pi_valid(g1, p, st, ats) and not pi_valid(g0, p, st, ats):
            return False
    return True


def mutually_reduce(g0: Iterable[Sequent], g1: Iterable[Sequent], cc: ChoiceCondition,
                    vc: VarCond, st: FiniteStructure, extra: Iterable[Sequent] = ()) -> bool:
    """``g0`` and ``g1`` are pi-valid for exactly the same compatible ``pi``."""
    g0, g1 = list(g0), list(g1)
    vs, ats = _scope(g0 + g1 + list(extra), cc, vc)
    return all(pi_valid(g0, p, st, ats) == pi_valid(g1, p, st, ats)
               for p in enumerate_compatible(cc, vc, st, vs, ats))
