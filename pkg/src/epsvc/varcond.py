"""Variable-conditions: a positive relation P and a negative relation N.

``(a, y)`` in P says the value of ``y`` may read ``a``.  ``(x, a)`` in N
says ``x`` must not depend on the free atom ``a``.  A pair is consistent
when P is acyclic and no cycle of the combined graph uses exactly one
N-edge.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Iterable, Mapping

from .syntax import Kind, Symbol, Term, free_varatoms, sym_key

Edge = tuple[Symbol, Symbol]


class VarCondError(ValueError):
    pass


def _edge_key(e: Edge):
    return (e[0].key, e[1].key)


@dataclass(frozen=True)
class VarCond:
    P: frozenset[Edge] = field(default_factory=frozenset)
    N: frozenset[Edge] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "P", frozenset(self.P))
        object.__setattr__(self, "N", frozenset(self.N))
        for a, y in self.P:
            if a.kind not in (Kind.FREE_VAR, Kind.FREE_ATOM) or y.kind is not Kind.FREE_VAR:
                raise VarCondError(f"P-edge ({a}, {y}) must go from a variable or atom to a variable")
        for x, a in self.N:
            if x.kind is not Kind.FREE_VAR or a.kind is not Kind.FREE_ATOM:
                raise VarCondError(f"N-edge ({x}, {a}) must go from a variable to an atom")

    def with_p(self, edges: Iterable[Edge]) -> "VarCond":
        return VarCond(self.P | set(edges), self.N)

    def with_n(self, edges: Iterable[Edge]) -> "VarCond":
        return VarCond(self.P, self.N | set(edges))

    def p_edges(self) -> list[Edge]:
        return sorted(self.P, key=_edge_key)

    def n_edges(self) -> list[Edge]:
        return sorted(self.N, key=_edge_key)

    def symbols(self) -> set[Symbol]:
        return {s for e in self.P | self.N for s in e}

    def __str__(self) -> str:
        p = ", ".join(f"({a}, {b})" for a, b in self.p_edges())
        n = ", ".join(f"({a}, {b})" for a, b in self.n_edges())
        return f"P = {{{p}}}, N = {{{n}}}"


def successors(edges: Iterable[Edge]) -> dict[Symbol, set[Symbol]]:
    out: dict[Symbol, set[Symbol]] = {}
    for a, b in edges:
        out.setdefault(a, set()).add(b)
    return out


def reachable(succ: Mapping[Symbol, Iterable[Symbol]], start: Symbol) -> set[Symbol]:
    """Nodes reachable from ``start`` in one or more steps."""
    seen: set[Symbol] = set()
    todo = deque(succ.get(start, ()))
    while todo:
        n = todo.popleft()
        if n not in seen:
            seen.add(n)
            todo.extend(succ.get(n, ()))
    return seen


def _path(succ: Mapping[Symbol, Iterable[Symbol]], src: Symbol, dst: Symbol) -> list[Symbol]:
    """Shortest path ``src .. dst`` (``dst`` must be reachable, ``src != dst``)."""
    prev: dict[Symbol, Symbol] = {src: src}
    todo = deque([src])
    while dst not in prev:
        n = todo.popleft()
        for m in sorted(succ.get(n, ()), key=sym_key):
            if m not in prev:
                prev[m] = n
                todo.append(m)
    path = [dst]
    while path[-1] != src:
        path.append(prev[path[-1]])
    return path[::-1]


def p_closure(vc: VarCond) -> frozenset[Edge]:
    """Transitive closure P⁺."""
    succ = successors(vc.P)
    return frozenset((a, b) for a in list(succ) for b in reachable(succ, a))


def inconsistency(vc: VarCond) -> list[Edge] | None:
    """A witness cycle if ``vc`` is inconsistent, else ``None``.

    The witness is either a P-cycle or a cycle whose only N-edge is last.
    """
    succ = successors(vc.P)
    ts = TopologicalSorter({n: () for n in succ})
    for a, b in vc.P:
        ts.add(b, a)
    try:
        ts.prepare()
    except CycleError as exc:
        nodes = list(exc.args[1])
        if (nodes[0], nodes[1]) not in vc.P:
            nodes.reverse()
        return [(nodes[i], nodes[i + 1]) for i in range(len(nodes) - 1)]
    cache: dict[Symbol, set[Symbol]] = {}
    for x, a in sorted(vc.N, key=_edge_key):
        if a not in cache:
            cache[a] = reachable(succ, a)
        if x in cache[a]:
            path = _path(succ, a, x)
            return [(path[i], path[i + 1]) for i in range(len(path) - 1)] + [(x, a)]
    return None


def is_consistent(vc: VarCond) -> bool:
    return inconsistency(vc) is None


def describe_cycle(cycle: list[Edge], vc: VarCond) -> str:
    parts = []
    for a, b in cycle:
        tag = "N" if (a, b) in vc.N else "P"
        parts.append(f"{a} -{tag}-> {b}")
    return ", ".join(parts)


def require_consistent(vc: VarCond) -> None:
    cycle = inconsistency(vc)
    if cycle is not None:
        n = sum(1 for e in cycle if e in vc.N)
        what = "P-cycle" if n == 0 else "cycle with a single N-edge"
        raise VarCondError(f"inconsistent variable-condition: {what}: {describe_cycle(cycle, vc)}")


def dependence(s: Mapping[Symbol, Term]) -> frozenset[Edge]:
    """``{(z, x) | x in dom s, z a free variable or atom of s(x)}``."""
    return frozenset((z, x) for x, t in s.items() for z in free_varatoms(t))


def sigma_update(vc: VarCond, s: Mapping[Symbol, Term]) -> VarCond:
    return VarCond(vc.P | dependence(s), vc.N)


def is_pn_substitution(vc: VarCond, s: Mapping[Symbol, Term]) -> bool:
    """Whether the substitution's update of ``vc`` stays consistent."""
    if any(x.kind is not Kind.FREE_VAR for x in s):
        return False
    return is_consistent(sigma_update(vc, s))


def is_weak_extension(base: VarCond, ext: VarCond) -> bool:
    """``base.P ⊆ ext.P⁺`` and ``base.N ⊆ ext.N``; consistency is not required."""
    return base.P <= p_closure(ext) and base.N <= ext.N


def is_extension(base: VarCond, ext: VarCond) -> bool:
    return base.P <= ext.P and base.N <= ext.N


def to_dot(vc: VarCond, name: str = "vc") -> str:
    """Graphviz rendering: P-edges solid, N-edges dashed."""
    lines = [f"digraph {name} {{"]
    for s in sorted(vc.symbols(), key=sym_key):
        shape = "ellipse" if s.kind is Kind.FREE_VAR else "box"
        lines.append(f'  "{s}" [shape={shape}];')
    for a, b in vc.p_edges():
        lines.append(f'  "{a}" -> "{b}" [style=solid];')
    for a, b in vc.n_edges():
        lines.append(f'  "{a}" -> "{b}" [style=dashed];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def parse_vc(text: str) -> VarCond:
    """Lines ``P src dst`` or ``N src dst``; ``#`` starts a comment."""
    from .parse import ParseError

    p, n = set(), set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 3 or parts[0] not in ("P", "N"):
            raise ParseError("expected 'P src dst' or 'N src dst'", lineno, 1)
        syms = []
        for word in parts[1:]:
            if len(word) < 2 or word[0] not in "?!":
                raise ParseError(f"{word!r} is not a free variable or atom", lineno, 1)
            kind = Kind.FREE_VAR if word[0] == "?" else Kind.FREE_ATOM
            syms.append(Symbol(word[1:], kind))
        (p if parts[0] == "P" else n).add(tuple(syms))
    try:
        return VarCond(frozenset(p), frozenset(n))
    except VarCondError as exc:
        raise ParseError(str(exc)) from None


def dump_vc(vc: VarCond) -> str:
    lines = [f"P {a} {b}" for a, b in vc.p_edges()] + [f"N {a} {b}" for a, b in vc.n_edges()]
    return "\n".join(lines) + ("\n" if lines else "")
