"""Terms, formulas and sequents with four disjoint symbol classes.

Free variables (``?x``) are rigid existential placeholders, free atoms
(``!x``) are universal parameters, bound atoms are the names bound by
``all``/``ex``/``eps`` and constants come from the signature.  Nodes are
immutable and cache their hash and free-symbol sets, so large shared
terms (as produced by quantifier elimination) stay cheap to handle.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Union


class Kind(enum.Enum):
    FREE_VAR = "var"
    FREE_ATOM = "atom"
    BOUND = "bound"
    CONST = "const"


_KIND_ORDER = {Kind.FREE_ATOM: 0, Kind.FREE_VAR: 1, Kind.BOUND: 2, Kind.CONST: 3}
_SIGIL = {Kind.FREE_VAR: "?", Kind.FREE_ATOM: "!", Kind.BOUND: "", Kind.CONST: ""}


@dataclass(frozen=True)
class Base:
    name: str = "i"

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Fun:
    arg: "Sort"
    result: "Sort"

    def __str__(self) -> str:
        left = f"({self.arg})" if isinstance(self.arg, Fun) else str(self.arg)
        return f"{left} -> {self.result}"


Sort = Union[Base, Fun]
I = Base("i")
O = Base("o")


def fun_sort(args: Iterable[Sort], result: Sort) -> Sort:
    """Curried sort ``a1 -> (a2 -> ... -> result)``."""
    out = result
    for a in reversed(list(args)):
        out = Fun(a, out)
    return out


def sort_arity(s: Sort) -> int:
    n = 0
    while isinstance(s, Fun):
        n += 1
        s = s.result
    return n


def apply_sort(s: Sort, n: int) -> Sort:
    for _ in range(n):
        if not isinstance(s, Fun):
            raise SortError(f"sort {s} cannot take {n} arguments")
        s = s.result
    return s


class SortError(ValueError):
    pass


@dataclass(frozen=True)
class Symbol:
    """A named symbol.  Identity is (name, kind); the sort is carried along."""

    name: str
    kind: Kind
    sort: Sort = field(default=I, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_h", hash((self.name, self.kind.value)))

    def __hash__(self) -> int:
        return self._h

    def __str__(self) -> str:
        return _SIGIL[self.kind] + self.name

    def __repr__(self) -> str:
        return f"Symbol({self})"

    @property
    def key(self) -> tuple[int, str]:
        return (_KIND_ORDER[self.kind], self.name)


def var(name: str, sort: Sort = I) -> Symbol:
    return Symbol(name, Kind.FREE_VAR, sort)


def atom(name: str, sort: Sort = I) -> Symbol:
    return Symbol(name, Kind.FREE_ATOM, sort)


def bound(name: str, sort: Sort = I) -> Symbol:
    return Symbol(name, Kind.BOUND, sort)


def const(name: str, sort: Sort = I) -> Symbol:
    return Symbol(name, Kind.CONST, sort)


def sym_key(s: Symbol) -> tuple[int, str]:
    return s.key


# ---------------------------------------------------------------- nodes


def _cache_hash(cls):
    generated = cls.__hash__

    def __hash__(self):
        d = self.__dict__
        h = d.get("_h")
        if h is None:
            h = generated(self)
            d["_h"] = h
        return h

    cls.__hash__ = __hash__
    return cls


class Node:
    def __str__(self) -> str:
        from .printer import show

        return show(self)

    def __repr__(self) -> str:
        return f"{type(self).__name__}<{self}>"


class Term(Node):
    pass


class Formula(Node):
    pass


@_cache_hash
@dataclass(frozen=True, repr=False)
class Sym(Term):
    symbol: Symbol


@_cache_hash
@dataclass(frozen=True, repr=False)
class App(Term):
    head: Symbol
    args: tuple[Term, ...]


@_cache_hash
@dataclass(frozen=True, repr=False)
class Eps(Term):
    bound: Symbol
    body: Formula


@_cache_hash
@dataclass(frozen=True, repr=False)
class Top(Formula):
    pass


@_cache_hash
@dataclass(frozen=True, repr=False)
class Bot(Formula):
    pass


@_cache_hash
@dataclass(frozen=True, repr=False)
class Pred(Formula):
    head: Symbol
    args: tuple[Term, ...] = ()


@_cache_hash
@dataclass(frozen=True, repr=False)
class Eq(Formula):
    left: Term
    right: Term


@_cache_hash
@dataclass(frozen=True, repr=False)
class Not(Formula):
    arg: Formula


@_cache_hash
@dataclass(frozen=True, repr=False)
class And(Formula):
    left: Formula
    right: Formula


@_cache_hash
@dataclass(frozen=True, repr=False)
class Or(Formula):
    left: Formula
    right: Formula


@_cache_hash
@dataclass(frozen=True, repr=False)
class Implies(Formula):
    left: Formula
    right: Formula


@_cache_hash
@dataclass(frozen=True, repr=False)
class Iff(Formula):
    left: Formula
    right: Formula


@_cache_hash
@dataclass(frozen=True, repr=False)
class Forall(Formula):
    bound: Symbol
    body: Formula


@_cache_hash
@dataclass(frozen=True, repr=False)
class Exists(Formula):
    bound: Symbol
    body: Formula


BINARY = (And, Or, Implies, Iff)
BINDERS = (Forall, Exists, Eps)


@dataclass(frozen=True)
class Sequent:
    """A finite list of formulas read disjunctively."""

    formulas: tuple[Formula, ...] = ()

    def __iter__(self) -> Iterator[Formula]:
        return iter(self.formulas)

    def __len__(self) -> int:
        return len(self.formulas)

    def __getitem__(self, i: int) -> Formula:
        return self.formulas[i]

    def __str__(self) -> str:
        return "[" + ", ".join(str(f) for f in self.formulas) + "]"


def term(s: Symbol, *args: Term) -> Term:
    """``Sym`` for a bare symbol, ``App`` otherwise."""
    return App(s, tuple(args)) if args else Sym(s)


def neg(f: Formula) -> Formula:
    return Not(f)


def children(x: Node) -> tuple[Node, ...]:
    match x:
        case Sym() | Top() | Bot():
            return ()
        case App(_, args) | Pred(_, args):
            return args
        case Eps(_, body) | Forall(_, body) | Exists(_, body):
            return (body,)
        case Eq(a, b):
            return (a, b)
        case Not(a):
            return (a,)
        case And(a, b) | Or(a, b) | Implies(a, b) | Iff(a, b):
            return (a, b)
    raise TypeError(f"not a syntax node: {x!r}")


# ---------------------------------------------------------------- free symbols


def _free(x: Node) -> frozenset[Symbol]:
    d = x.__dict__
    fs = d.get("_fs")
    if fs is not None:
        return fs
    match x:
        case Sym(s):
            fs = frozenset((s,))
        case App(h, args) | Pred(h, args):
            fs = frozenset((h,)).union(*(_free(a) for a in args))
        case Eps(v, body) | Forall(v, body) | Exists(v, body):
            fs = _free(body) - {v}
        case _:
            fs = frozenset().union(*(_free(c) for c in children(x)))
    d["_fs"] = fs
    return fs


def free_symbols(x: Node | Sequent | Iterable, kinds: Iterable[Kind] | None = None) -> frozenset[Symbol]:
    """Free symbols of a node, sequent or collection, optionally filtered by kind."""
    if isinstance(x, Node):
        fs = _free(x)
    else:
        items = x.formulas if isinstance(x, Sequent) else x
        fs = frozenset().union(*(free_symbols(y) for y in items))
    if kinds is None:
        return fs
    ks = set(kinds)
    return frozenset(s for s in fs if s.kind in ks)


def free_vars(x) -> frozenset[Symbol]:
    return free_symbols(x, (Kind.FREE_VAR,))


def free_atoms(x) -> frozenset[Symbol]:
    return free_symbols(x, (Kind.FREE_ATOM,))


def free_varatoms(x) -> frozenset[Symbol]:
    """Free variables and free atoms together."""
    return free_symbols(x, (Kind.FREE_VAR, Kind.FREE_ATOM))


def free_bound(x) -> frozenset[Symbol]:
    """Bound atoms occurring unbound (quasi-term positions)."""
    return free_symbols(x, (Kind.BOUND,))


def all_names(x: Node) -> set[str]:
    """Every symbol name occurring anywhere, binders included."""
    out: set[str] = set()
    seen: set[int] = set()
    stack = [x]
    while stack:
        n = stack.pop()
        if id(n) in seen:
            continue
        seen.add(id(n))
        match n:
            case Sym(s):
                out.add(s.name)
            case App(h, _) | Pred(h, _):
                out.add(h.name)
            case Eps(v, _) | Forall(v, _) | Exists(v, _):
                out.add(v.name)
        stack.extend(children(n))
    return out


# ---------------------------------------------------------------- sorts


def term_sort(t: Term) -> Sort:
    match t:
        case Sym(s):
            return s.sort
        case App(h, args):
            return apply_sort(h.sort, len(args))
        case Eps(v, _):
            return v.sort
    raise TypeError(f"not a term: {t!r}")


# ---------------------------------------------------------------- substitution


class Substitution(Mapping[Symbol, Term]):
    """Finite map whose domain is all free variables or all free atoms."""

    def __init__(self, mapping: Mapping[Symbol, Term] | Iterable[tuple[Symbol, Term]] = ()):
        items = dict(mapping)
        kinds = {s.kind for s in items}
        if len(kinds) > 1:
            raise ValueError("substitution domain mixes free variables and free atoms")
        if kinds and kinds.pop() not in (Kind.FREE_VAR, Kind.FREE_ATOM):
            raise ValueError("substitution domain must be free variables or free atoms")
        for s, t in items.items():
            if not isinstance(t, Term):
                raise TypeError(f"substitution value for {s} is not a term")
            if term_sort(t) != s.sort:
                raise SortError(f"{s} has sort {s.sort} but {t} has sort {term_sort(t)}")
        self._items = {s: t for s, t in sorted(items.items(), key=lambda kv: kv[0].key)}

    def __getitem__(self, s: Symbol) -> Term:
        return self._items[s]

    def __iter__(self):
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __hash__(self) -> int:
        return hash(tuple(self._items.items()))

    def __eq__(self, other) -> bool:
        if isinstance(other, Substitution):
            return self._items == other._items
        return NotImplemented

    def __str__(self) -> str:
        return "{" + ", ".join(f"{s} := {t}" for s, t in self._items.items()) + "}"

    __repr__ = __str__


_TRAILING_DIGITS = re.compile(r"\d+$")


def fresh_name(base: str, avoid: set[str]) -> str:
    stem = _TRAILING_DIGITS.sub("", base) or base
    k = 1
    while f"{stem}{k}" in avoid:
        k += 1
    return f"{stem}{k}"


def apply_subst(x, s: Mapping[Symbol, Term]):
    """Capture-avoiding simultaneous substitution.

    ``s`` may be a :class:`Substitution` or any mapping from symbols to
    terms; bound-atom keys are used internally to instantiate binders.
    Works on terms, formulas and sequents.
    """
    if isinstance(x, Sequent):
        return Sequent(tuple(apply_subst(f, s) for f in x.formulas))
    if not s:
        return x
    return _Subst(dict(s)).run(x)


class _Subst:
    def __init__(self, s: dict[Symbol, Term]):
        self.s = s
        self.memo: dict = {}

    def run(self, x: Node, s: dict[Symbol, Term] | None = None) -> Node:
        s = self.s if s is None else s
        keys = _free(x).intersection(s)
        if not keys:
            return x
        key = (x, tuple(sorted(((k, s[k]) for k in keys), key=lambda kv: kv[0].key)))
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        local = {k: s[k] for k in keys}
        out = self._go(x, local)
        self.memo[key] = out
        return out

    def _go(self, x: Node, s: dict[Symbol, Term]) -> Node:
        match x:
            case Sym(v):
                return s[v]
            case App(h, args):
                new_args = tuple(self.run(a, s) for a in args)
                if h in s:
                    return _apply_head(s[h], new_args)
                return App(h, new_args)
            case Pred(h, args):
                return Pred(h, tuple(self.run(a, s) for a in args))
            case Eps(v, body) | Forall(v, body) | Exists(v, body):
                v2, body2 = self._under(v, body, s)
                return type(x)(v2, body2)
            case Eq(a, b):
                return Eq(self.run(a, s), self.run(b, s))
            case Not(a):
                return Not(self.run(a, s))
            case And(a, b) | Or(a, b) | Implies(a, b) | Iff(a, b):
                return type(x)(self.run(a, s), self.run(b, s))
        raise TypeError(f"cannot substitute into {x!r}")

    def _under(self, v: Symbol, body: Node, s: dict[Symbol, Term]):
        inner = {k: t for k, t in s.items() if k != v}
        if any(v in _free(t) for t in inner.values()):
            avoid = all_names(body) | {k.name for k in inner}
            for t in inner.values():
                avoid |= all_names(t)
            v2 = Symbol(fresh_name(v.name, avoid), v.kind, v.sort)
            inner = dict(inner)
            inner[v] = Sym(v2)
            return v2, self.run(body, inner)
        return v, self.run(body, inner)


def _apply_head(head: Term, args: tuple[Term, ...]) -> Term:
    """Instantiate a higher-order head with argument terms."""
    match head:
        case Sym(h):
            return App(h, args)
        case App(h, more):
            return App(h, more + args)
    raise SortError(f"cannot apply {head} to arguments")


def instantiate(binder_body: Node, v: Symbol, t: Term) -> Node:
    """``body{v -> t}`` for a bound atom ``v``."""
    return apply_subst(binder_body, {v: t})


# ---------------------------------------------------------------- alpha equivalence


_INTERN: dict[tuple, int] = {}


def _intern(t: tuple) -> int:
    k = _INTERN.get(t)
    if k is None:
        k = len(_INTERN)
        _INTERN[t] = k
    return k


def alpha_key(x: Node, binders: tuple[Symbol, ...] = ()):
    """Hashable representative of the alpha-class of ``x``.

    ``binders`` lets callers treat a list of leading bound atoms (such as a
    lambda prefix) as bound.  Keys are interned, so shared subterms are
    visited once per binding context.
    """
    env: dict[Symbol, list[int]] = {}
    for i, b in enumerate(binders):
        env.setdefault(b, []).append(i)
    return ("B", len(binders), _akey(x, env, len(binders), {}))


def _akey(x: Node, env: dict[Symbol, list[int]], depth: int, memo: dict) -> int:
    ctx = tuple(sorted((s.key, depth - env[s][-1]) for s in _free(x) if env.get(s)))
    mk = (x, ctx)
    hit = memo.get(mk)
    if hit is not None:
        return hit

    def sym(s: Symbol):
        lv = env.get(s)
        if lv:
            return ("#", depth - lv[-1])
        return (s.kind.value, s.name)

    match x:
        case Sym(s):
            shallow = sym(s)
        case App(h, args):
            shallow = ("app", sym(h)) + tuple(_akey(a, env, depth, memo) for a in args)
        case Pred(h, args):
            shallow = ("pred", sym(h)) + tuple(_akey(a, env, depth, memo) for a in args)
        case Eps(v, body) | Forall(v, body) | Exists(v, body):
            env.setdefault(v, []).append(depth)
            try:
                inner = _akey(body, env, depth + 1, memo)
            finally:
                env[v].pop()
            shallow = (type(x).__name__, inner)
        case _:
            shallow = (type(x).__name__,) + tuple(_akey(c, env, depth, memo) for c in children(x))
    k = _intern(shallow)
    memo[mk] = k
    return k


def alpha_equal(a, b) -> bool:
    if isinstance(a, Sequent) and isinstance(b, Sequent):
        return len(a) == len(b) and all(alpha_equal(f, g) for f, g in zip(a, b))
    if a is b:
        return True
    return alpha_key(a) == alpha_key(b)


# ---------------------------------------------------------------- metrics


def size(x: Node) -> int:
    """Number of nodes in the tree (shared subterms counted with multiplicity)."""
    memo: dict[Node, int] = {}

    def go(n: Node) -> int:
        r = memo.get(n)
        if r is None:
            r = 1 + sum(go(c) for c in children(n))
            memo[n] = r
        return r

    return go(x)


def rebuild(x: Node, fn) -> Node:
    """Copy of ``x`` with ``fn`` applied to each child (binders kept)."""
    match x:
        case Sym() | Top() | Bot():
            return x
        case App(h, args):
            return App(h, tuple(fn(a) for a in args))
        case Pred(h, args):
            return Pred(h, tuple(fn(a) for a in args))
        case Eps(v, body) | Forall(v, body) | Exists(v, body):
            return type(x)(v, fn(body))
        case Eq(a, b):
            return Eq(fn(a), fn(b))
        case Not(a):
            return Not(fn(a))
        case And(a, b) | Or(a, b) | Implies(a, b) | Iff(a, b):
            return type(x)(fn(a), fn(b))
    raise TypeError(f"not a syntax node: {x!r}")


def contains_eps(x: Node) -> bool:
    d = x.__dict__
    r = d.get("_ce")
    if r is None:
        r = isinstance(x, Eps) or any(contains_eps(c) for c in children(x))
        d["_ce"] = r
    return r


def contains_quantifier(x: Node) -> bool:
    return isinstance(x, (Forall, Exists)) or any(contains_quantifier(c) for c in children(x))
