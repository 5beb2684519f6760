"""Proof states and the sequent rules over them.

Goals are sequents with stable integer ids.  Every rule returns a new
state; the old one is never mutated.  After every step the
variable-condition is consistent and the choice-condition well-formed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .choice import (
    CCEntry, ChoiceCondition, ChoiceConditionError, extended_sigma_update,
    q_formula, validate_cc,
)
from .parse import Parser, ParseError, Signature
from .syntax import (
    And, Bot, Eq, Exists, Forall, Formula, Iff, Implies, Kind, Not, Or, Sequent,
    Sort, Substitution, Sym, Symbol, Term, Top, alpha_equal, apply_subst,
    free_bound, free_symbols, free_varatoms, free_vars, instantiate, rebuild,
    sym_key, term_sort,
)
from .varcond import (
    VarCond, dependence, describe_cycle, inconsistency, reachable, successors,
)


class RuleError(ValueError):
    pass


@dataclass(frozen=True)
class ProofState:
    goals: tuple[tuple[int, Sequent], ...] = ()
    vc: VarCond = field(default_factory=VarCond)
    cc: ChoiceCondition = field(default_factory=ChoiceCondition)
    counter: int = 0
    next_goal: int = 0
    symbols: tuple[Symbol, ...] = ()
    signature: Signature | None = field(default=None, compare=False)
    strict: bool = False
    axioms: tuple[Formula, ...] = ()
    trace: tuple[dict, ...] = ()

    # -- lookups
    def goal(self, g: int) -> Sequent:
        for gid, seq in self.goals:
            if gid == g:
                return seq
        raise RuleError(f"no open goal {g}")

    def goal_ids(self) -> list[int]:
        return [g for g, _ in self.goals]

    def sequents(self) -> list[Sequent]:
        return [s for _, s in self.goals]

    def env(self) -> dict[tuple[Kind, str], Symbol]:
        env = {(s.kind, s.name): s for s in self.symbols}
        for y in self.cc:
            env[(y.kind, y.name)] = y
        return env

    def parser(self, text: str) -> Parser:
        if self.strict:
            return Parser(text, self.signature, self.env())
        return Parser(text, None, self.env(), inferred=self.signature)

    # -- construction helpers
    def register(self, syms: Iterable[Symbol]) -> "ProofState":
        known = {(s.kind, s.name) for s in self.symbols}
        new = [s for s in syms if s.kind in (Kind.FREE_VAR, Kind.FREE_ATOM)
               and (s.kind, s.name) not in known]
        if not new:
            return self
        merged = {(s.kind, s.name): s for s in self.symbols + tuple(new)}
        return replace(self, symbols=tuple(sorted(merged.values(), key=sym_key)))

    def fresh(self, base: str, kind: Kind, sort: Sort) -> tuple[Symbol, "ProofState"]:
        """A never-used free variable or atom named after ``base``."""
        used = {s.name for s in self.symbols if s.kind is kind}
        used |= {y.name for y in self.cc} if kind is Kind.FREE_VAR else set()
        counter = self.counter
        name = base
        while name in used:
            name = f"{base}{counter}"
            counter += 1
        sym = Symbol(name, kind, sort)
        return sym, replace(self, counter=counter).register([sym])

    def with_conditions(self, cc: ChoiceCondition, vc: VarCond) -> "ProofState":
        st = replace(self, cc=cc, vc=vc).register(cc)
        return st.register(vc.symbols())

    def replace_goal(self, g: int, new: list[Sequent]) -> "ProofState":
        out = []
        nxt = self.next_goal
        for gid, seq in self.goals:
            if gid != g:
                out.append((gid, seq))
                continue
            for k, s in enumerate(new):
                if k == 0:
                    out.append((g, s))
                else:
                    out.append((nxt, s))
                    nxt += 1
        st = replace(self, goals=tuple(out), next_goal=nxt)
        return st.register(free_symbols(new))

    def add_goals(self, new: list[Sequent]) -> tuple["ProofState", list[int]]:
        ids = list(range(self.next_goal, self.next_goal + len(new)))
        st = replace(self, goals=self.goals + tuple(zip(ids, new)),
                     next_goal=self.next_goal + len(new))
        return st.register(free_symbols(new)), ids

    def log(self, entry: dict) -> "ProofState":
        return replace(self, trace=self.trace + (entry,))

    def check_invariants(self) -> None:
        cycle = inconsistency(self.vc)
        if cycle is not None:
            raise RuleError("variable-condition became inconsistent: " + describe_cycle(cycle, self.vc))
        validate_cc(self.cc, self.vc)


def initial_state(problem: Iterable[Formula], *, axioms: Iterable[Formula] = (),
                  signature: Signature | None = None, strict: bool = False,
                  fresh_choice: bool = False, vc: VarCond | None = None,
                  cc: ChoiceCondition | None = None) -> ProofState:
    """One goal per problem formula, epsilon-terms replaced by choice variables."""
    from .epsilon import eliminate_all

    problem = list(problem)
    axioms = tuple(axioms)
    for f in problem + list(axioms):
        if free_bound(f):
            names = ", ".join(sorted(s.name for s in free_bound(f)))
            raise RuleError(f"unbound bound atoms {names} in {f}")
    for a in axioms:
        if free_varatoms(a):
            raise RuleError(f"axiom {a} must not contain free variables or atoms")
    st = ProofState(signature=signature, strict=strict, axioms=axioms,
                    vc=vc or VarCond(), cc=cc or ChoiceCondition())
    st = st.register(free_symbols(problem)).register(st.vc.symbols()).register(st.cc)
    holder = [st]

    def fresh(base: str, sort: Sort) -> Symbol:
        sym, holder[0] = holder[0].fresh(base, Kind.FREE_VAR, sort)
        return sym

    res = eliminate_all(problem, fresh, share=not fresh_choice)
    st = holder[0]
    st = replace(st, cc=st.cc.updated(res.cc_delta), vc=st.vc.with_p(res.p_delta))
    st, _ = st.add_goals([Sequent((f,)) for f in res.formulas])
    st.check_invariants()
    return st


# ---------------------------------------------------------------- rules


def _principal(st: ProofState, g: int, i: int) -> tuple[Sequent, Formula]:
    seq = st.goal(g)
    if not 0 <= i < len(seq):
        raise RuleError(f"goal {g} has no formula {i}")
    return seq, seq[i]


def _without(seq: Sequent, i: int) -> tuple[Formula, ...]:
    return seq.formulas[:i] + seq.formulas[i + 1:]


def gamma(st: ProofState, g: int, i: int, t: Term) -> ProofState:
    """``ex y. A`` (or ``~all y. A``): prepend ``A{y -> t}``, keep the principal formula."""
    seq, f = _principal(st, g, i)
    match f:
        case Exists(v, body):
            inst = instantiate(body, v, t)
        case Not(Forall(v, body)):
            inst = Not(instantiate(body, v, t))
        case _:
            raise RuleError(f"gamma needs an existential formula, got {f}")
    if free_bound(t):
        raise RuleError(f"term {t} contains unbound bound atoms")
    if term_sort(t) != v.sort:
        raise RuleError(f"term {t} has sort {term_sort(t)}, expected {v.sort}")
    st = st.replace_goal(g, [Sequent((inst,) + seq.formulas)])
    return st.log({"rule": "gamma", "goal": g, "index": i, "term": str(t)})


def delta_minus(st: ProofState, g: int, i: int) -> tuple[ProofState, Symbol]:
    """``all x. A``: a fresh free atom, with N-edges from every variable of the sequent."""
    seq, f = _principal(st, g, i)
    match f:
        case Forall(v, body):
            make = lambda t: instantiate(body, v, t)
        case Not(Exists(v, body)):
            make = lambda t: Not(instantiate(body, v, t))
        case _:
            raise RuleError(f"delta- needs a universal formula, got {f}")
    a, st = st.fresh(v.name, Kind.FREE_ATOM, v.sort)
    edges = {(x, a) for x in free_vars(seq)}
    st = replace(st, vc=st.vc.with_n(edges))
    st = st.replace_goal(g, [Sequent((make(Sym(a)),) + _without(seq, i))])
    st = st.log({"rule": "delta-", "goal": g, "index": i, "atom": str(a),
                 "N": sorted([str(x), str(y)] for x, y in edges)})
    return st, a


def delta_plus(st: ProofState, g: int, i: int) -> tuple[ProofState, Symbol]:
    """``all x. A``: a fresh free variable standing for ``eps x. ~A``."""
    seq, f = _principal(st, g, i)
    match f:
        case Forall(v, body):
            make = lambda t: instantiate(body, v, t)
            entry = CCEntry((), v, Not(body))
        case Not(Exists(v, body)):
            make = lambda t: Not(instantiate(body, v, t))
            entry = CCEntry((), v, body)
        case _:
            raise RuleError(f"delta+ needs a universal formula, got {f}")
    x, st = st.fresh(v.name, Kind.FREE_VAR, v.sort)
    edges = {(z, x) for z in free_varatoms(f)}
    st = replace(st, vc=st.vc.with_p(edges), cc=st.cc.updated({x: entry}))
    st = st.replace_goal(g, [Sequent((make(Sym(x)),) + _without(seq, i))])
    st.check_invariants()
    st = st.log({"rule": "delta+", "goal": g, "index": i, "var": str(x),
                 "choice": str(entry), "P": sorted([str(a), str(b)] for a, b in edges)})
    return st, x


def decompose(f: Formula) -> tuple[str, list[list[Formula]]] | None:
    """Classify ``f`` as an alpha (one subgoal) or beta (two subgoals) formula."""
    match f:
        case Not(Not(a)):
            return "alpha", [[a]]
        case Or(a, b):
            return "alpha", [[a, b]]
        case Not(And(a, b)):
            return "alpha", [[Not(a), Not(b)]]
        case Implies(a, b):
            return "alpha", [[Not(a), b]]
        case Bot() | Not(Top()):
            return "alpha", [[]]
        case And(a, b):
            return "beta", [[a], [b]]
        case Not(Or(a, b)):
            return "beta", [[Not(a)], [Not(b)]]
        case Not(Implies(a, b)):
            return "beta", [[a], [Not(b)]]
        case Iff(a, b):
            return "beta", [[Not(a), b], [a, Not(b)]]
        case Not(Iff(a, b)):
            return "beta", [[a, b], [Not(a), Not(b)]]
    return None


def alpha_beta(st: ProofState, g: int, i: int, expect: str | None = None) -> ProofState:
    seq, f = _principal(st, g, i)
    shape = decompose(f)
    if shape is None:
        raise RuleError(f"{f} is neither an alpha nor a beta formula")
    kind, parts = shape
    if expect is not None and expect != kind:
        raise RuleError(f"{f} is a {kind} formula, not {expect}")
    rest = _without(seq, i)
    st = st.replace_goal(g, [Sequent(tuple(p) + rest) for p in parts])
    return st.log({"rule": kind, "goal": g, "index": i})


def closing_reason(seq: Sequent) -> str | None:
    for k, f in enumerate(seq):
        match f:
            case Top() | Not(Bot()):
                return f"formula {k} is trivially true"
            case Eq(a, b) if alpha_equal(a, b):
                return f"formula {k} is a reflexive equation"
            case Not(a):
                for j, h in enumerate(seq):
                    if alpha_equal(a, h):
                        return f"formulas {j} and {k} are complementary"
    return None


def close(st: ProofState, g: int) -> ProofState:
    seq = st.goal(g)
    why = closing_reason(seq)
    if why is None:
        raise RuleError(f"goal {g} {seq} cannot be closed")
    st = replace(st, goals=tuple((gid, s) for gid, s in st.goals if gid != g))
    return st.log({"rule": "close", "goal": g, "reason": why})


def instantiate_vars(st: ProofState, s: Mapping[Symbol, Term]) -> ProofState:
    """Globally instantiate free variables, adding Q-obligations where needed.

    Obligations are generated for the choice variables in ``dom s`` whose
    values can reach the remaining goals through P*; the other
    instantiated choice variables are checked to be disconnected from the
    goals and dropped.
    """
    s = Substitution(s)
    if any(x.kind is not Kind.FREE_VAR for x in s):
        raise RuleError("subst instantiates free variables only")
    for x, t in s.items():
        if free_bound(t):
            raise RuleError(f"term {t} contains unbound bound atoms")
    updated = VarCond(st.vc.P | dependence(s), st.vc.N)
    cycle = inconsistency(updated)
    if cycle is not None:
        raise RuleError("not a (P,N)-substitution: " + describe_cycle(cycle, updated))
    goal_vars = free_vars(st.sequents())
    succ = successors(st.vc.P)
    m = {y for y in s if y in st.cc}
    o = {y for y in m if y in goal_vars or reachable(succ, y) & goal_vars}
    o_prime = set()
    for y in m - o:
        o_prime |= ({y} | reachable(succ, y)) & set(st.cc)
    if o & o_prime or o_prime & goal_vars:
        raise RuleError("internal: obligation split is not disjoint")
    obligations = [apply_subst(q_formula(st.cc, y), s) for y in sorted(o, key=sym_key)]
    cc2, vc2 = extended_sigma_update(st.cc, st.vc, s)
    goals = tuple((gid, apply_subst(seq, s)) for gid, seq in st.goals)
    st = replace(st, goals=goals, cc=cc2, vc=vc2).register(free_symbols(list(s.values())))
    st, ids = st.add_goals(obligations)
    st.check_invariants()
    return st.log({"rule": "subst", "sigma": str(s),
                   "O": [str(y) for y in sorted(o, key=sym_key)],
                   "O_prime": [str(y) for y in sorted(o_prime, key=sym_key)],
                   "obligations": [{"goal": k, "sequent": str(q)} for k, q in zip(ids, obligations)]})


def _abstract(x, table: dict[Term, Symbol]):
    hit = table.get(x)
    if hit is not None:
        return Sym(hit)
    if isinstance(x, Sym):
        return x
    return rebuild(x, lambda c: _abstract(c, table))


def instantiate_atoms(st: ProofState, g: int, n: Mapping[Symbol, Term]) -> ProofState:
    """Replace goal ``g`` by a generalisation whose ``n``-instance it is.

    Occurrences of each term ``n(a)`` are abstracted to the free atom ``a``.
    The new goal reduces the old one provided every free variable of the
    new goal has an N-edge to every atom in ``dom n``; a missing edge is
    reported (``nedge`` adds one).
    """
    n = Substitution(n)
    if any(a.kind is not Kind.FREE_ATOM for a in n):
        raise RuleError("asubst instantiates free atoms only")
    seq = st.goal(g)
    present = free_symbols(seq)
    for a, t in n.items():
        if a in present:
            raise RuleError(f"atom {a} already occurs in goal {g}")
        if free_bound(t):
            raise RuleError(f"term {t} contains unbound bound atoms")
    table = {t: a for a, t in n.items()}
    if len(table) != len(n):
        raise RuleError("two atoms abstract the same term")
    general = Sequent(tuple(_abstract(f, table) for f in seq))
    if not alpha_equal(apply_subst(general, n), seq):
        raise RuleError("abstraction does not reproduce the goal")
    for x in sorted(free_vars(general), key=sym_key):
        for a in n:
            if (x, a) not in st.vc.N:
                raise RuleError(f"missing N-edge ({x}, {a})")
    st = st.replace_goal(g, [general])
    return st.log({"rule": "asubst", "goal": g, "nu": str(n), "general": str(general)})


def add_n_edge(st: ProofState, x: Symbol, a: Symbol) -> ProofState:
    """Strengthen the variable-condition by an N-edge (always sound if consistent)."""
    if x.kind is not Kind.FREE_VAR or a.kind is not Kind.FREE_ATOM:
        raise RuleError("nedge goes from a free variable to a free atom")
    st = replace(st, vc=st.vc.with_n({(x, a)})).register([x, a])
    st.check_invariants()
    return st.log({"rule": "nedge", "edge": [str(x), str(a)]})


def add_p_edge(st: ProofState, a: Symbol, y: Symbol) -> ProofState:
    if a.kind not in (Kind.FREE_VAR, Kind.FREE_ATOM) or y.kind is not Kind.FREE_VAR:
        raise RuleError("pedge goes from a free variable or atom to a free variable")
    st = replace(st, vc=st.vc.with_p({(a, y)})).register([a, y])
    st.check_invariants()
    return st.log({"rule": "pedge", "edge": [str(a), str(y)]})


def use_axiom(st: ProofState, g: int, k: int) -> ProofState:
    """Prepend the negation of axiom ``k`` to goal ``g``."""
    if not 0 <= k < len(st.axioms):
        raise RuleError(f"no axiom {k}")
    seq = st.goal(g)
    st = st.replace_goal(g, [Sequent((Not(st.axioms[k]),) + seq.formulas)])
    return st.log({"rule": "use", "goal": g, "axiom": k})


# ---------------------------------------------------------------- scripts


@dataclass(frozen=True)
class ProofStep:
    kind: str
    goal: int | None = None
    index: int | None = None
    payload: str = ""
    line: int = 0

    def __str__(self) -> str:
        parts = [self.kind]
        if self.goal is not None:
            parts.append(str(self.goal))
        if self.index is not None:
            parts.append(str(self.index))
        if self.payload:
            parts.append(self.payload)
        return " ".join(parts)


@dataclass(frozen=True)
class Script:
    problem: tuple[str, ...]
    axioms: tuple[str, ...]
    fresh_choice: bool
    steps: tuple[ProofStep, ...]


_GOAL_INDEX = {"gamma", "delta-", "delta+", "alpha", "beta"}


def parse_script(text: str) -> Script:
    """Read a proof script.

    Header lines (``problem <formula>``, ``axiom <formula>``,
    ``choice shared|fresh``) precede the steps.  Steps::

        gamma <goal> <idx> <term>      delta- <goal> <idx>
        delta+ <goal> <idx>            alpha <goal> <idx>
        beta <goal> <idx>              close <goal>
        subst ?x := <term>, ...        asubst <goal> !a := <term>, ...
        nedge ?x !a                    pedge <?x|!a> ?y
        use <goal> <axiom-idx>
    """
    problem, axioms, steps = [], [], []
    fresh = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        word, _, rest = line.partition(" ")
        rest = rest.strip()
        if word in ("problem", "axiom", "choice"):
            if steps:
                raise ParseError(f"'{word}' must come before the first step", lineno, 1)
            if word == "problem":
                problem.append(rest)
            elif word == "axiom":
                axioms.append(rest)
            elif rest in ("shared", "fresh"):
                fresh = rest == "fresh"
            else:
                raise ParseError("expected 'choice shared' or 'choice fresh'", lineno, 1)
            continue
        try:
            steps.append(_parse_step(word, rest, lineno))
        except ValueError:
            raise ParseError(f"malformed step: {line}", lineno, 1) from None
    return Script(tuple(problem), tuple(axioms), fresh, tuple(steps))


def _parse_step(word: str, rest: str, lineno: int) -> ProofStep:
    args = rest.split()
    if word in _GOAL_INDEX:
        if word == "gamma":
            g, i, payload = rest.split(None, 2)
            return ProofStep(word, int(g), int(i), payload.strip(), lineno)
        g, i = args
        return ProofStep(word, int(g), int(i), "", lineno)
    if word == "close":
        (g,) = args
        return ProofStep(word, int(g), None, "", lineno)
    if word == "use":
        g, k = args
        return ProofStep(word, int(g), int(k), "", lineno)
    if word == "subst":
        if not rest:
            raise ValueError(rest)
        return ProofStep(word, None, None, rest, lineno)
    if word == "asubst":
        g, payload = rest.split(None, 1)
        return ProofStep(word, int(g), None, payload.strip(), lineno)
    if word in ("nedge", "pedge"):
        if len(args) != 2:
            raise ValueError(rest)
        return ProofStep(word, None, None, rest, lineno)
    raise ValueError(word)


def _bindings(st: ProofState, text: str, kind: Kind) -> dict[Symbol, Term]:
    p = st.parser(text)
    out: dict[Symbol, Term] = {}
    while True:
        tok = p.ident()
        sigil = "?" if kind is Kind.FREE_VAR else "!"
        if not tok.text.startswith(sigil):
            raise p.error(f"expected a name starting with {sigil}", tok)
        key = (kind, tok.text[1:])
        lhs = p.env.get(key) or Symbol(tok.text[1:], kind)
        p.expect(":=")
        t = p.term()
        if lhs in out:
            raise p.error(f"{lhs} bound twice", tok)
        out[lhs] = t
        if not p.at(","):
            break
        p.pos += 1
    p.done()
    return out


def _symbol(st: ProofState, word: str) -> Symbol:
    if len(word) < 2 or word[0] not in "?!":
        raise RuleError(f"{word} is not a free variable or atom")
    kind = Kind.FREE_VAR if word[0] == "?" else Kind.FREE_ATOM
    return st.env().get((kind, word[1:])) or Symbol(word[1:], kind)


def apply_step(st: ProofState, step: ProofStep) -> ProofState:
    k = step.kind
    if k == "gamma":
        p = st.parser(step.payload)
        t = p.term()
        p.done()
        return gamma(st, step.goal, step.index, t)
    if k == "delta-":
        return delta_minus(st, step.goal, step.index)[0]
    if k == "delta+":
        return delta_plus(st, step.goal, step.index)[0]
    if k in ("alpha", "beta"):
        return alpha_beta(st, step.goal, step.index, expect=k)
    if k == "close":
        return close(st, step.goal)
    if k == "subst":
        return instantiate_vars(st, _bindings(st, step.payload, Kind.FREE_VAR))
    if k == "asubst":
        return instantiate_atoms(st, step.goal, _bindings(st, step.payload, Kind.FREE_ATOM))
    if k == "nedge":
        x, a = step.payload.split()
        return add_n_edge(st, _symbol(st, x), _symbol(st, a))
    if k == "pedge":
        a, y = step.payload.split()
        return add_p_edge(st, _symbol(st, a), _symbol(st, y))
    if k == "use":
        return use_axiom(st, step.goal, step.index)
    raise RuleError(f"unknown step {k}")


@dataclass(frozen=True)
class ScriptReport:
    state: ProofState
    steps_applied: int
    failed_step: ProofStep | None = None
    error: str | None = None

    @property
    def success(self) -> bool:
        return self.error is None and not self.state.goals

    @property
    def open_goals(self) -> list[tuple[int, Sequent]]:
        return list(self.state.goals)

    def to_json(self) -> dict:
        st = self.state
        out = {
            "success": self.success,
            "steps_applied": self.steps_applied,
            "goals": [{"id": g, "sequent": str(s)} for g, s in st.goals],
            "vc": {"P": [[str(a), str(b)] for a, b in st.vc.p_edges()],
                   "N": [[str(a), str(b)] for a, b in st.vc.n_edges()]},
            "cc": [{"var": str(y), "entry": str(e)} for y, e in st.cc.items()],
            "trace": list(st.trace),
            "error": None,
        }
        if self.error is not None:
            out["error"] = {"step": self.steps_applied + 1,
                            "line": self.failed_step.line if self.failed_step else None,
                            "command": str(self.failed_step) if self.failed_step else None,
                            "message": self.error}
        return out


def run_script(problem: ProofState | Iterable[Formula], script: Iterable[ProofStep]) -> ScriptReport:
    """Replay ``script``; a failing step stops the run and is reported."""
    st = problem if isinstance(problem, ProofState) else initial_state(problem)
    done = 0
    for step in script:
        try:
            st = apply_step(st, step)
        except (RuleError, ParseError, ChoiceConditionError, ValueError) as exc:
            return ScriptReport(st, done, step, str(exc))
        done += 1
    return ScriptReport(st, done)


def load_script(text: str, signature: Signature | None = None) -> tuple[ProofState, Script]:
    """Parse a script file and build its initial state."""
    script = parse_script(text)
    if not script.problem:
        raise ParseError("script declares no problem")
    env: dict = {}
    inferred = None
    formulas = []
    for src in script.problem + script.axioms:
        p = Parser(src, signature, env, inferred=inferred)
        formulas.append(p.formula())
        p.done()
        env, inferred = p.env, p.inferred
    k = len(script.problem)
    st = initial_state(formulas[:k], axioms=formulas[k:],
                       signature=signature if signature is not None else inferred,
                       strict=signature is not None, fresh_choice=script.fresh_choice)
    return st, script


def run_script_text(text: str, signature: Signature | None = None) -> ScriptReport:
    st, script = load_script(text, signature)
    return run_script(st, script.steps)
