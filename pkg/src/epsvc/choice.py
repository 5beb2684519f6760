"""Choice-conditions: free variables standing for (lambda-abstracted) epsilon-terms.

An entry ``?y := \\v0. ... \\v(l-1). eps vl. B`` records that ``?y`` was
introduced for that epsilon-term.  Its only semantic content is the
Q-formula ``all v0 ... ((ex vl. B) -> B{vl -> ?y(v0, ...)})``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from .syntax import (
    Exists, Forall, Formula, Implies, Kind, Sequent, Sym, Symbol, Term, alpha_key,
    all_names, apply_subst, free_bound, free_varatoms, fresh_name, fun_sort,
    sym_key, term,
)
from .varcond import (
    VarCond, dependence, inconsistency, is_consistent, is_pn_substitution,
    p_closure, describe_cycle,
)


class ChoiceConditionError(ValueError):
    """A violated well-formedness item together with the offending symbol."""

    def __init__(self, item: str, symbol: Symbol | None, message: str):
        super().__init__(f"choice-condition item {item} violated at {symbol}: {message}")
        self.item = item
        self.symbol = symbol


@dataclass(frozen=True)
class CCEntry:
    prefix: tuple[Symbol, ...]
    bound: Symbol
    body: Formula

    def binders(self) -> tuple[Symbol, ...]:
        return self.prefix + (self.bound,)

    def free(self) -> frozenset[Symbol]:
        """Free variables and atoms of the lambda-epsilon term."""
        return free_varatoms(self.body)

    def sort(self):
        return fun_sort([v.sort for v in self.prefix], self.bound.sort)

    def key(self):
        return alpha_key(self.body, self.binders())

    def alpha_equal(self, other: "CCEntry") -> bool:
        return len(self.prefix) == len(other.prefix) and self.key() == other.key()

    def substitute(self, s: Mapping[Symbol, Term]) -> "CCEntry":
        """Apply a substitution under the binders, renaming them on capture."""
        s = {k: t for k, t in s.items() if k in free_varatoms(self.body)}
        if not s:
            return self
        binders = list(self.binders())
        clash = set().union(*(free_bound(t) for t in s.values()))
        if clash.intersection(binders):
            avoid = all_names(self.body) | {n.name for t in s.values() for n in free_bound(t)}
            ren: dict[Symbol, Term] = {}
            for i, b in enumerate(binders):
                if b in clash:
                    nb = Symbol(fresh_name(b.name, avoid), b.kind, b.sort)
                    avoid.add(nb.name)
                    ren[b] = Sym(nb)
                    binders[i] = nb
            body = apply_subst(self.body, ren)
        else:
            body = self.body
        return CCEntry(tuple(binders[:-1]), binders[-1], apply_subst(body, s))

    def __str__(self) -> str:
        lam = "".join(f"\\{v}. " for v in self.prefix)
        return f"{lam}eps {self.bound}. {self.body}"


@dataclass(frozen=True)
class ChoiceCondition(Mapping[Symbol, CCEntry]):
    entries: tuple[tuple[Symbol, CCEntry], ...] = ()

    @staticmethod
    def of(mapping: Mapping[Symbol, CCEntry] | Iterable[tuple[Symbol, CCEntry]] = ()) -> "ChoiceCondition":
        items = dict(mapping)
        for y in items:
            if y.kind is not Kind.FREE_VAR:
                raise ChoiceConditionError("domain", y, "only free variables may carry a choice-condition")
        return ChoiceCondition(tuple(sorted(items.items(), key=lambda kv: kv[0].key)))

    def __getitem__(self, y: Symbol) -> CCEntry:
        for k, e in self.entries:
            if k == y:
                return e
        raise KeyError(y)

    def __iter__(self) -> Iterator[Symbol]:
        return (k for k, _ in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, y) -> bool:
        return any(k == y for k, _ in self.entries)

    def symbol(self, y: Symbol) -> Symbol:
        """The stored key for ``y`` (which carries the sort)."""
        for k, _ in self.entries:
            if k == y:
                return k
        raise KeyError(y)

    def updated(self, more: Mapping[Symbol, CCEntry]) -> "ChoiceCondition":
        d = dict(self.entries)
        for k, e in more.items():
            d.pop(k, None)
            d[k] = e
        return ChoiceCondition.of(d)

    def __str__(self) -> str:
        return dump_cc(self)


def validate_cc(cc: ChoiceCondition, vc: VarCond) -> None:
    """Raise :class:`ChoiceConditionError` for the first violated item."""
    cycle = inconsistency(vc)
    if cycle is not None:
        raise ChoiceConditionError("0", cycle[0][0], "variable-condition inconsistent: "
                                   + describe_cycle(cycle, vc))
    closure = p_closure(vc)
    for y, e in cc.items():
        binders = e.binders()
        if len(set(binders)) != len(binders):
            raise ChoiceConditionError("1", y, "lambda prefix and epsilon binder are not distinct")
        stray = free_bound(e.body) - set(binders)
        if stray:
            names = ", ".join(sorted(str(s) for s in stray))
            raise ChoiceConditionError("1", y, f"unbound bound atoms {names} in the body")
        if y.sort != e.sort():
            raise ChoiceConditionError("2", y, f"sort {y.sort} differs from entry sort {e.sort()}")
        for z in sorted(e.free(), key=sym_key):
            if (z, y) not in closure:
                raise ChoiceConditionError("3", y, f"{z} occurs in the entry but ({z}, {y}) is not in P+")


def check_cc(cc: ChoiceCondition, vc: VarCond) -> bool:
    try:
        validate_cc(cc, vc)
    except ChoiceConditionError:
        return False
    return True


def q_formula(cc: ChoiceCondition, y: Symbol) -> Sequent:
    """``Q_C(y)``: ``all v0 ... ((ex vl. B) -> B{vl -> y(v0, ..., v(l-1))})``."""
    y = cc.symbol(y)
    e = cc[y]
    witness = term(y, *(Sym(v) for v in e.prefix))
    f: Formula = Implies(Exists(e.bound, e.body), apply_subst(e.body, {e.bound: witness}))
    for v in reversed(e.prefix):
        f = Forall(v, f)
    return Sequent((f,))


def extended_sigma_update(cc: ChoiceCondition, vc: VarCond, s: Mapping[Symbol, Term]):
    """Drop ``dom s`` from ``cc``, apply ``s`` to the rest and extend P by the dependence."""
    if not is_pn_substitution(vc, s):
        raise ChoiceConditionError("sigma", None, "not a (P,N)-substitution")
    kept = {y: e.substitute(s) for y, e in cc.items() if y not in s}
    return ChoiceCondition.of(kept), VarCond(vc.P | dependence(s), vc.N)


def is_extended_extension(base: tuple[ChoiceCondition, VarCond],
                          ext: tuple[ChoiceCondition, VarCond]) -> bool:
    """``C ⊆ C'`` as graphs, both well-formed, ``P ⊆ P'`` and ``N ⊆ N'``."""
    cc, vc = base
    cc2, vc2 = ext
    if not (check_cc(cc, vc) and check_cc(cc2, vc2)):
        return False
    for y, e in cc.items():
        if y not in cc2 or not e.alpha_equal(cc2[y]):
            return False
    return vc.P <= vc2.P and vc.N <= vc2.N and is_consistent(vc2)


def dump_cc(cc: ChoiceCondition) -> str:
    """One ``?y := \\v0. ... eps v. <formula>`` line per entry."""
    return "".join(f"{y} := {e}\n" for y, e in cc.items())


def parse_cc(text: str, signature=None, env=None) -> ChoiceCondition:
    """Inverse of :func:`dump_cc`."""
    from .parse import ParseError, Parser

    env = dict(env or {})
    entries: dict[Symbol, CCEntry] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.split("#", 1)[0].strip():
            continue
        p = Parser(raw, signature, env)
        try:
            head = p.ident()
            if not head.text.startswith("?"):
                raise p.error("choice-condition keys must be free variables", head)
            p.expect(":=")
            prefix = []
            while p.at("\\"):
                p.pos += 1
                prefix.append(p._binder())
            p.expect("eps")
            v = p._binder()
            body = p.unary()
            p.done()
        except ParseError as exc:
            raise ParseError(exc.message, lineno, exc.col) from None
        env.update(p.env)
        entry = CCEntry(tuple(prefix), v, body)
        y = Symbol(head.text[1:], Kind.FREE_VAR, entry.sort())
        entries[y] = entry
    return ChoiceCondition.of(entries)
