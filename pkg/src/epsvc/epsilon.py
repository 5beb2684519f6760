"""Moving between epsilon-terms and free variables with choice-conditions.

``eliminate`` replaces each epsilon-term (innermost first) by a free
variable applied to the bound atoms it captures from its context and
records the term in the choice-condition.  ``reconstruct`` goes back.
``qelim`` removes quantifiers in favour of epsilon-terms and reports the
nesting statistics of the result.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Iterable

from .choice import CCEntry, ChoiceCondition
from .syntax import (
    App, Eps, Exists, Forall, Formula, Fun, I, Kind, Node, Not, Sort, Sym, Symbol,
    alpha_key, all_names, apply_subst, children, const, contains_eps,
    contains_quantifier, free_bound, free_varatoms, rebuild, term,
)
from .varcond import Edge, VarCond, reachable, successors

if TYPE_CHECKING:
    from .calculus import ProofState


class EpsilonError(ValueError):
    pass


@dataclass(frozen=True)
class ElimResult:
    formulas: tuple[Formula, ...]
    cc_delta: ChoiceCondition
    p_delta: frozenset[Edge]

    @property
    def formula(self) -> Formula:
        return self.formulas[0]


class _Eliminator:
    def __init__(self, fresh: Callable[[str, Sort], Symbol], share: bool):
        self.fresh = fresh
        self.share = share
        self.table: dict = {}
        self.entries: dict[Symbol, CCEntry] = {}
        self.edges: set[Edge] = set()
        self.memo: dict = {}

    def run(self, x: Node, env: tuple[Symbol, ...]) -> Node:
        if not contains_eps(x):
            return x
        if self.share:
            pos = {b: i for i, b in enumerate(env)}
            ctx = tuple(sorted((b for b in free_bound(x) if b in pos), key=pos.__getitem__))
            key = (x, ctx)
            hit = self.memo.get(key)
            if hit is not None:
                return hit
        if isinstance(x, Eps):
            out = self._eps(x, env)
        elif isinstance(x, (Forall, Exists)):
            out = type(x)(x.bound, self.run(x.body, env + (x.bound,)))
        else:
            out = rebuild(x, lambda c: self.run(c, env))
        if self.share:
            self.memo[key] = out
        return out

    def _eps(self, x: Eps, env: tuple[Symbol, ...]):
        body = self.run(x.body, env + (x.bound,))
        pos = {b: i for i, b in enumerate(env)}
        captured = free_bound(body) - {x.bound}
        unbound = captured - pos.keys()
        if unbound:
            names = ", ".join(sorted(s.name for s in unbound))
            raise EpsilonError(f"bound atoms {names} are not bound by any enclosing binder")
        prefix = tuple(sorted(captured, key=pos.__getitem__))
        entry = CCEntry(prefix, x.bound, body)
        key = (len(prefix), entry.key())
        y = self.table.get(key) if self.share else None
        if y is None:
            y = self.fresh(x.bound.name, entry.sort())
            self.table[key] = y
            self.entries[y] = entry
            self.edges.update((z, y) for z in free_varatoms(body))
        return term(y, *(Sym(v) for v in prefix))


def eliminate_all(formulas: Iterable[Node], fresh: Callable[[str, Sort], Symbol],
                  share: bool = True) -> ElimResult:
    """Eliminate epsilon-terms from several formulas with one shared table."""
    el = _Eliminator(fresh, share)
    out = tuple(el.run(f, ()) for f in formulas)
    return ElimResult(out, ChoiceCondition.of(el.entries), frozenset(el.edges))


def _with_state(formulas, st: "ProofState", share: bool):
    holder = [st]

    def fresh(base: str, sort: Sort) -> Symbol:
        sym, holder[0] = holder[0].fresh(base, Kind.FREE_VAR, sort)
        return sym

    res = eliminate_all(formulas, fresh, share)
    st2 = holder[0]
    st2 = st2.with_conditions(st2.cc.updated(res.cc_delta), st2.vc.with_p(res.p_delta))
    return res, st2


def eliminate(f: Formula, st: "ProofState"):
    """Committed choice: alpha-equal epsilon-terms share one variable."""
    res, st2 = _with_state([f], st, True)
    return res.formula, st2


def eliminate_fresh(f: Formula, st: "ProofState"):
    """Every epsilon occurrence gets its own variable."""
    res, st2 = _with_state([f], st, False)
    return res.formula, st2


# ---------------------------------------------------------------- reconstruction


class _Reconstructor:
    def __init__(self, cc: ChoiceCondition):
        self.cc = cc
        self.done: dict[Symbol, CCEntry] = {}
        self.active: set[Symbol] = set()
        self.memo: dict[Node, Node] = {}

    def template(self, y: Symbol) -> CCEntry:
        e = self.done.get(y)
        if e is not None:
            return e
        if y in self.active:
            raise EpsilonError(f"choice-condition of {y} refers to itself")
        self.active.add(y)
        src = self.cc[y]
        e = CCEntry(src.prefix, src.bound, self.run(src.body))
        self.active.discard(y)
        self.done[y] = e
        return e

    def run(self, x: Node) -> Node:
        hit = self.memo.get(x)
        if hit is not None:
            return hit
        match x:
            case Sym(y) if y in self.cc:
                out = self._expand(y, ())
            case App(y, args) if y in self.cc:
                out = self._expand(y, tuple(self.run(a) for a in args))
            case _:
                out = rebuild(x, self.run)
        self.memo[x] = out
        return out

    def _expand(self, y: Symbol, args):
        e = self.template(y)
        if len(args) != len(e.prefix):
            raise EpsilonError(f"{y} expects {len(e.prefix)} arguments, got {len(args)}")
        return apply_subst(Eps(e.bound, e.body), dict(zip(e.prefix, args)))


def reconstruct(f: Node, cc: ChoiceCondition) -> Node:
    """Replace choice variables by their epsilon-terms (beta-reduced)."""
    return _Reconstructor(cc).run(f)


# ---------------------------------------------------------------- quantifier elimination


def _require_closed(f: Node) -> None:
    if free_bound(f):
        names = ", ".join(sorted(s.name for s in free_bound(f)))
        raise EpsilonError(f"unbound bound atoms: {names}")
    if contains_eps(f):
        raise EpsilonError("input already contains epsilon-terms")


def qelim(f: Formula) -> Formula:
    """Inside-out: ``ex x. A`` becomes ``A{x -> eps x. A}``, ``all x. A`` becomes ``A{x -> eps x. ~A}``."""
    _require_closed(f)
    memo: dict[Node, Node] = {}

    def go(x: Node) -> Node:
        hit = memo.get(x)
        if hit is not None:
            return hit
        match x:
            case Exists(v, body):
                a = go(body)
                out = apply_subst(a, {v: Eps(v, a)})
            case Forall(v, body):
                a = go(body)
                out = apply_subst(a, {v: Eps(v, Not(a))})
            case _:
                out = rebuild(x, go) if contains_quantifier(x) else x
        memo[x] = out
        return out

    return go(f)


def qelim_parallel_homogeneous(f: Formula) -> Formula:
    """Eliminate a block of like quantifiers with one epsilon over tuples.

    The tuple components are read back with projection constants
    ``Proj1 .. Projk``.  A block of length one falls back to :func:`qelim`.
    """
    _require_closed(f)
    q = type(f)
    if q not in (Forall, Exists):
        raise EpsilonError("formula has no quantifier prefix")
    xs: list[Symbol] = []
    body = f
    while type(body) is q:
        xs.append(body.bound)
        body = body.body
    if contains_quantifier(body):
        raise EpsilonError("non-homogeneous prefix: quantifiers of the other kind remain")
    if len(set(xs)) != len(xs):
        raise EpsilonError("repeated bound atom in the quantifier block")
    if len(xs) == 1:
        return qelim(f)
    names = all_names(f)
    v_name = "v"
    while v_name in names:
        v_name += "_"
    v = Symbol(v_name, Kind.BOUND, I)
    projs = []
    for i in range(1, len(xs) + 1):
        name = f"Proj{i}"
        while name in names:
            name += "_"
        projs.append(const(name, Fun(I, I)))
    inner = apply_subst(body, {x: App(p, (Sym(v),)) for x, p in zip(xs, projs)})
    witness = Eps(v, Not(inner) if q is Forall else inner)
    return apply_subst(body, {x: App(p, (witness,)) for x, p in zip(xs, projs)})


@dataclass(frozen=True)
class SubtermStat:
    name: str
    depth: int
    binders: int
    term: Eps


@dataclass(frozen=True)
class EpsStats:
    depth: int
    binders: int
    subterms: tuple[SubtermStat, ...]

    def to_json(self) -> dict:
        return {
            "result_depth": self.depth,
            "result_binders": self.binders,
            "subterms": [{"name": s.name, "depth": s.depth, "binders": s.binders}
                         for s in self.subterms],
        }


class _Counter:
    def __init__(self):
        self.depths: dict[Node, int] = {}
        self.counts: dict[Node, int] = {}

    def depth(self, x: Node) -> int:
        r = self.depths.get(x)
        if r is None:
            r = max((self.depth(c) for c in children(x)), default=0)
            if isinstance(x, Eps):
                r += 1
            self.depths[x] = r
        return r

    def binders(self, x: Node) -> int:
        r = self.counts.get(x)
        if r is None:
            r = sum(self.binders(c) for c in children(x)) + isinstance(x, Eps)
            self.counts[x] = r
        return r


def eps_depth(x: Node) -> int:
    """Maximal number of nested epsilon-binders."""
    return _Counter().depth(x)


def eps_binders(x: Node) -> int:
    """Number of epsilon-binder occurrences, shared subterms counted with multiplicity."""
    return _Counter().binders(x)


def eps_stats(f: Node) -> EpsStats:
    """Depth and binder counts of ``f`` and of each distinct epsilon-subterm modulo alpha.

    Subterms are named ``<bound atom>_<letter>`` with letters assigned in
    order of increasing depth.
    """
    counter = _Counter()
    seen: set[Node] = set()
    classes: dict = {}
    stack = [f]
    while stack:
        x = stack.pop()
        if x in seen:
            continue
        seen.add(x)
        if isinstance(x, Eps):
            classes.setdefault(alpha_key(x), x)
        stack.extend(children(x))
    ordered = sorted(classes.values(),
                     key=lambda e: (counter.depth(e), counter.binders(e), e.bound.name))
    used: dict[str, int] = {}
    stats = []
    for e in ordered:
        k = used.get(e.bound.name, 0)
        used[e.bound.name] = k + 1
        letter = string.ascii_lowercase[k] if k < 26 else f"{k}"
        stats.append(SubtermStat(f"{e.bound.name}_{letter}", counter.depth(e), counter.binders(e), e))
    return EpsStats(counter.depth(f), counter.binders(f), tuple(stats))


def alternating_prefix(n: int, matrix_pred: str = "P") -> Formula:
    """``ex x1 all x2 ex x3 ... P(x1, ..., xn)`` with n alternating quantifiers."""
    from .syntax import O, Pred, bound, fun_sort

    xs = [bound(f"x{i}") for i in range(1, n + 1)]
    f: Formula = Pred(const(matrix_pred, fun_sort([I] * n, O)), tuple(Sym(x) for x in xs))
    for i in reversed(range(n)):
        f = (Exists if i % 2 == 0 else Forall)(xs[i], f)
    return f


def choice_graph(cc: ChoiceCondition) -> VarCond:
    """P-edges induced by the occurrences inside ``cc``."""
    return VarCond(frozenset((z, y) for y, e in cc.items() for z in e.free()), frozenset())


def depends_on(cc: ChoiceCondition, y: Symbol) -> set[Symbol]:
    succ = successors((y2, z) for y2, e in cc.items() for z in e.free())
    return reachable(succ, y)
