"""Recursive-descent parser for formulas, terms and signature files.

Grammar (``~`` binds tightest, then ``&``, ``|``, ``->``, ``<->``; the
arrows associate to the right, ``&`` and ``|`` to the left; a quantifier
scopes over a single unary formula)::

    formula := iff
    iff     := imp ("<->" imp)*
    imp     := or ("->" or)*
    or      := and ("|" and)*
    and     := unary ("&" unary)*
    unary   := "~" unary | quant | atom
    quant   := ("all" | "ex") ident "." unary
    atom    := "true" | "false" | term ("=" | "!=") term | ident args? | "(" formula ")"
    term    := "eps" ident "." unary | ident args? | "(" term ")"
    args    := "(" term ("," term)* ")"
    ident   := [?!]?[A-Za-z][A-Za-z0-9_]*
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .syntax import (
    And, App, Bot, Eps, Eq, Exists, Forall, Formula, I, Iff, Implies, Kind, Not,
    O, Or, Pred, Sort, SortError, Sym, Symbol, Term, Top, apply_sort, fun_sort,
    sort_arity, term_sort,
)

KEYWORDS = {"all", "ex", "eps", "true", "false"}

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r\n]+)|(?P<comment>#[^\n]*)"
    r"|(?P<ident>[?!]?[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<op><->|->|!=|:=|[~&|=(),.\\])"
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 1, col: int = 1):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Tok]:
    out: list[Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "comment"):
            out.append(Tok(kind, chunk, line, pos - line_start + 1))
        for i, ch in enumerate(chunk):
            if ch == "\n":
                line += 1
                line_start = pos + i + 1
        pos = m.end()
    out.append(Tok("eof", "", line, pos - line_start + 1))
    return out


@dataclass
class Signature:
    """Declared function and predicate constants with their arities."""

    functions: dict[str, int] = field(default_factory=dict)
    predicates: dict[str, int] = field(default_factory=dict)

    def declare_function(self, name: str, arity: int) -> None:
        self._check_new(name)
        self.functions[name] = arity

    def declare_predicate(self, name: str, arity: int) -> None:
        self._check_new(name)
        self.predicates[name] = arity

    def _check_new(self, name: str) -> None:
        if name in self.functions or name in self.predicates:
            raise ValueError(f"{name} declared twice")

    def function(self, name: str) -> Symbol:
        return Symbol(name, Kind.CONST, fun_sort([I] * self.functions[name], I))

    def predicate(self, name: str) -> Symbol:
        return Symbol(name, Kind.CONST, fun_sort([I] * self.predicates[name], O))

    def __contains__(self, name: str) -> bool:
        return name in self.functions or name in self.predicates

    def copy(self) -> "Signature":
        return Signature(dict(self.functions), dict(self.predicates))


_SIG_LINE = re.compile(
    r"^(?P<kind>const|pred)\s+(?P<name>[A-Za-z][A-Za-z0-9_]*)\s*:\s*(?P<sort>.+?)\s*$"
)
_POWER = re.compile(r"^i(?:\^(\d+))?$")


def _arity(text: str) -> int:
    if text in ("", "o"):
        return 0
    m = _POWER.match(text.replace(" ", ""))
    if m is None:
        parts = [p.strip() for p in text.split("*")]
        if all(p == "i" for p in parts):
            return len(parts)
        raise ValueError(text)
    return int(m.group(1)) if m.group(1) else 1


def parse_signature(text: str) -> Signature:
    """Read ``const Name : i^k -> i`` and ``pred Name : i^k`` declarations."""
    sig = Signature()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SIG_LINE.match(line)
        if m is None:
            raise ParseError("expected 'const Name : sort' or 'pred Name : sort'", lineno, 1)
        name, sort = m.group("name"), m.group("sort")
        if name in KEYWORDS:
            raise ParseError(f"{name} is a keyword", lineno, 1)
        try:
            if m.group("kind") == "const":
                if "->" in sort:
                    dom, _, cod = sort.rpartition("->")
                    if cod.strip() != "i":
                        raise ValueError(sort)
                    arity = _arity(dom.strip())
                else:
                    if sort.strip() != "i":
                        raise ValueError(sort)
                    arity = 0
                sig.declare_function(name, arity)
            else:
                sig.declare_predicate(name, _arity(sort.strip()))
        except ValueError as exc:
            raise ParseError(f"bad declaration: {exc}", lineno, 1) from None
    return sig


class Parser:
    """One parse over a token stream.

    ``env`` supplies sorts for free variables and atoms already known to
    the caller.  Without a signature, capitalised names are constants
    whose arities are inferred from use.
    """

    def __init__(self, text: str, signature: Signature | None = None,
                 env: dict[tuple[Kind, str], Symbol] | None = None,
                 inferred: Signature | None = None):
        self.toks = tokenize(text)
        self.pos = 0
        self.signature = signature
        self.inferred = None
        if signature is None:
            self.inferred = inferred.copy() if inferred is not None else Signature()
        self.env = dict(env or {})
        self.scope: list[Symbol] = []

    # -- token helpers
    @property
    def tok(self) -> Tok:
        return self.toks[self.pos]

    def error(self, msg: str, tok: Tok | None = None) -> ParseError:
        t = tok or self.tok
        return ParseError(msg, t.line, t.col)

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "ident") and self.tok.text == text

    def expect(self, text: str) -> Tok:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        t = self.tok
        self.pos += 1
        return t

    def ident(self) -> Tok:
        t = self.tok
        if t.kind != "ident" or t.text in KEYWORDS:
            raise self.error(f"expected identifier, found {t.text or 'end of input'!r}")
        self.pos += 1
        return t

    def done(self) -> None:
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")

    def _save(self):
        inferred = self.inferred.copy() if self.inferred is not None else None
        return self.pos, inferred, dict(self.env)

    def _restore(self, state) -> None:
        self.pos, self.inferred, self.env = state[0], state[1], state[2]

    # -- formulas
    def formula(self) -> Formula:
        return self._iff()

    def _iff(self) -> Formula:
        left = self._imp()
        if self.at("<->"):
            self.pos += 1
            return Iff(left, self._iff())
        return left

    def _imp(self) -> Formula:
        left = self._or()
        if self.at("->"):
            self.pos += 1
            return Implies(left, self._imp())
        return left

    def _or(self) -> Formula:
        f = self._and()
        while self.at("|"):
            self.pos += 1
            f = Or(f, self._and())
        return f

    def _and(self) -> Formula:
        f = self.unary()
        while self.at("&"):
            self.pos += 1
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        if self.at("~"):
            self.pos += 1
            return Not(self.unary())
        if self.at("all") or self.at("ex"):
            q = Forall if self.tok.text == "all" else Exists
            self.pos += 1
            v = self._binder()
            try:
                return q(v, self.unary())
            finally:
                self.scope.pop()
        return self.atom()

    def _binder(self) -> Symbol:
        t = self.ident()
        if t.text[0] in "?!":
            raise self.error("binders must be bare names", t)
        self.expect(".")
        v = Symbol(t.text, Kind.BOUND, I)
        self.scope.append(v)
        return v

    def atom(self) -> Formula:
        if self.at("true"):
            self.pos += 1
            return Top()
        if self.at("false"):
            self.pos += 1
            return Bot()
        saved = self._save()
        try:
            left = self.term(as_formula_head=True)
        except ParseError:
            left = None
        if left is not None and (self.at("=") or self.at("!=")):
            negated = self.tok.text == "!="
            self.pos += 1
            right = self.term()
            eq = Eq(left, right)
            return Not(eq) if negated else eq
        self._restore(saved)
        if self.at("("):
            self.pos += 1
            f = self.formula()
            self.expect(")")
            return f
        name = self.ident()
        args = self._args() if self.at("(") else ()
        return Pred(self._predicate(name, len(args)), args)

    # -- terms
    def term(self, as_formula_head: bool = False) -> Term:
        if self.at("eps"):
            self.pos += 1
            v = self._binder()
            try:
                return Eps(v, self.unary())
            finally:
                self.scope.pop()
        if self.at("("):
            self.pos += 1
            t = self.term()
            self.expect(")")
            return t
        tok = self.ident()
        args = self._args() if self.at("(") else ()
        if as_formula_head and not (self.at("=") or self.at("!=")):
            raise self.error("not an equation")
        head = self._term_head(tok, len(args))
        return App(head, args) if args else Sym(head)

    def _args(self) -> tuple[Term, ...]:
        self.expect("(")
        out = [self.term()]
        while self.at(","):
            self.pos += 1
            out.append(self.term())
        self.expect(")")
        return tuple(out)

    # -- symbol resolution
    def _term_head(self, tok: Tok, nargs: int) -> Symbol:
        name = tok.text
        if name[0] in "?!":
            kind = Kind.FREE_VAR if name[0] == "?" else Kind.FREE_ATOM
            return self._free(tok, kind, name[1:], nargs)
        for b in reversed(self.scope):
            if b.name == name:
                if nargs:
                    raise self.error(f"bound atom {name} applied to arguments", tok)
                return b
        if self.signature is not None:
            if name in self.signature.predicates:
                raise self.error(f"predicate {name} used as a term", tok)
            if name in self.signature.functions:
                return self._check_arity(tok, self.signature.function(name), nargs)
            if name[0].isupper():
                raise self.error(f"undeclared constant {name}", tok)
        elif name[0].isupper():
            sig = self.inferred
            if name in sig.predicates:
                raise self.error(f"predicate {name} used as a term", tok)
            if name not in sig.functions:
                sig.declare_function(name, nargs)
            return self._check_arity(tok, sig.function(name), nargs)
        return self._free(tok, Kind.BOUND, name, nargs)

    def _predicate(self, tok: Tok, nargs: int) -> Symbol:
        name = tok.text
        if name[0] in "?!":
            raise self.error(f"{name} is not a predicate", tok)
        sig = self.signature if self.signature is not None else self.inferred
        if name in sig.predicates:
            return self._check_arity(tok, sig.predicate(name), nargs)
        if name in sig.functions:
            raise self.error(f"function {name} used as a predicate", tok)
        if self.signature is not None:
            raise self.error(f"undeclared predicate {name}", tok)
        sig.declare_predicate(name, nargs)
        return sig.predicate(name)

    def _check_arity(self, tok: Tok, s: Symbol, nargs: int) -> Symbol:
        if sort_arity(s.sort) != nargs:
            raise self.error(
                f"sort mismatch: {s.name} takes {sort_arity(s.sort)} arguments, got {nargs}", tok)
        return s

    def _free(self, tok: Tok, kind: Kind, name: str, nargs: int) -> Symbol:
        key = (kind, name)
        known = self.env.get(key)
        if known is not None:
            try:
                apply_sort(known.sort, nargs)
            except SortError:
                raise self.error(f"sort mismatch: {tok.text} has sort {known.sort}", tok) from None
            if nargs and sort_arity(known.sort) < nargs:
                raise self.error(f"sort mismatch for {tok.text}", tok)
            return known
        s = Symbol(name, kind, fun_sort([I] * nargs, I))
        self.env[key] = s
        return s


def parse_formula(text: str, signature: Signature | None = None,
                  env: dict[tuple[Kind, str], Symbol] | None = None) -> Formula:
    """Parse a formula; raises :class:`ParseError` with line and column."""
    p = Parser(text, signature, env)
    f = p.formula()
    p.done()
    return f


def parse_term(text: str, signature: Signature | None = None,
               env: dict[tuple[Kind, str], Symbol] | None = None) -> Term:
    p = Parser(text, signature, env)
    t = p.term()
    p.done()
    return t


def parse_node(text: str, signature: Signature | None = None):
    """A term if the text is one, otherwise a formula."""
    try:
        return parse_term(text, signature)
    except ParseError:
        return parse_formula(text, signature)


def check_term_sort(t: Term, expected: Sort) -> None:
    if term_sort(t) != expected:
        raise SortError(f"{t} has sort {term_sort(t)}, expected {expected}")
