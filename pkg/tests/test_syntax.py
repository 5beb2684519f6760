import pytest
from hypothesis import given

from gen import formulas
from epsvc.parse import ParseError, parse_formula, parse_signature, parse_term
from epsvc.syntax import (
    App, Eps, Eq, Exists, Forall, Fun, I, Kind, Not, O, Pred, Sequent, SortError,
    Substitution, Sym, alpha_equal, apply_subst, atom, bound, const, free_bound,
    free_symbols, free_vars, fun_sort, var,
)

x, y_b, z = bound("x"), bound("y"), bound("z")
y = var("y")
a = atom("a")


def test_parse_forall_equation():
    assert parse_formula("all x. (?y = x)") == Forall(x, Eq(Sym(y), Sym(x)))


def test_parse_committed_choice_formula():
    assert parse_formula("ex x. ~(x = x)") == Exists(x, Not(Eq(Sym(x), Sym(x))))


def test_parse_canossa_epsilon():
    t = parse_term("eps z. F(z, Jesus)")
    F = const("F", fun_sort([I, I], O))
    assert t == Eps(z, Pred(F, (Sym(z), Sym(const("Jesus")))))


def test_symbol_classes_are_disjoint():
    f = parse_formula("?x = !x & all x. x = x")
    kinds = {s.kind for s in free_symbols(f) if s.name == "x"}
    assert kinds == {Kind.FREE_VAR, Kind.FREE_ATOM}
    assert var("x") != atom("x") != bound("x")


def test_syntax_error_has_position():
    with pytest.raises(ParseError) as exc:
        parse_formula("all x. (x = )")
    assert exc.value.line == 1 and exc.value.col > 1


def test_undeclared_constant_with_signature():
    sig = parse_signature("const Zero : i\npred Q : i^2\n")
    parse_formula("Q(Zero, Zero)", sig)
    with pytest.raises(ParseError):
        parse_formula("Q(One, Zero)", sig)


def test_arity_mismatch_is_rejected():
    sig = parse_signature("pred Q : i^2\n")
    with pytest.raises((ParseError, SortError)):
        parse_formula("Q(!a)", sig)


def test_free_symbols_examples():
    assert free_symbols(Forall(x, Eq(Sym(y), Sym(x))), {Kind.FREE_VAR}) == {y}
    assert free_symbols(Eq(Sym(a), Sym(y)), {Kind.FREE_ATOM}) == {a}
    w = bound("w")
    P = const("P", fun_sort([I, I], O))
    assert free_symbols(Eps(z, Pred(P, (Sym(w), Sym(z)))), {Kind.BOUND}) == {w}


def test_apply_subst_examples():
    assert apply_subst(Eq(Sym(y), Sym(a)), {y: Sym(a)}) == Eq(Sym(a), Sym(a))
    f = parse_formula("all x. P(x)")
    assert apply_subst(f, {}) == f


def test_apply_subst_renames_to_avoid_capture():
    f = Forall(x, Eq(Sym(x), Sym(y)))
    t = Sym(x)
    out = apply_subst(f, {y: t})
    assert isinstance(out, Forall) and out.bound != x
    assert out.body == Eq(Sym(out.bound), Sym(x))


def test_apply_subst_epsilon_replacement():
    f = Forall(x, Eq(Sym(x), Sym(y)))
    e = Eps(x, Eq(Sym(x), Sym(x)))
    out = apply_subst(f, {y: e})
    # the epsilon-term is closed, so nothing can be captured
    assert alpha_equal(out, Forall(bound("v"), Eq(Sym(bound("v")), e)))


def test_substitution_kinds_do_not_mix():
    with pytest.raises((ValueError, SortError)):
        Substitution({y: Sym(a), a: Sym(y)})


def test_substitution_is_sort_preserving():
    f = var("f", Fun(I, I))
    with pytest.raises(SortError):
        Substitution({f: Sym(a)})


def test_alpha_equal_examples():
    assert alpha_equal(parse_formula("all x. P(x)"), parse_formula("all y. P(y)"))
    assert not alpha_equal(parse_formula("all x. P(x)"), parse_formula("all x. Q(x)"))
    assert alpha_equal(parse_term("eps z0. F(z0, C)"), parse_term("eps z1. F(z1, C)"))


def test_alpha_equal_respects_free_bound_atoms():
    assert not alpha_equal(parse_formula("P(x)"), parse_formula("P(y)"))
    assert not alpha_equal(parse_formula("all x. Q(x, y)"), parse_formula("all y. Q(y, y)"))


def test_sequent_prints_as_list():
    s = Sequent((parse_formula("?y = ?y"), parse_formula("~P(C)")))
    assert str(s) == "[?y = ?y, ~P(C)]"


def test_application_of_free_variable():
    f = var("f", Fun(I, I))
    t = parse_term("?f(!a)", env={(Kind.FREE_VAR, "f"): f})
    assert t == App(f, (Sym(a),))


@given(formulas(max_depth=4))
def test_print_parse_round_trip(f):
    again = parse_formula(str(f))
    assert alpha_equal(again, f)
    assert str(again) == str(f)


@given(formulas(), formulas())
def test_subst_free_variable_bound(f, g):
    # free variables after substitution come from the untouched part or from the images
    s = {y: Sym(var("z")), var("z"): Sym(a)}
    out = apply_subst(f, s)
    expected = (free_vars(f) - set(s)) | {v for k, t in s.items() if k in free_vars(f) for v in free_vars(t)}
    assert free_vars(out) <= expected


@given(formulas())
def test_subst_composition(f):
    s1 = {y: Sym(var("z"))}
    s2 = {var("z"): Sym(const("C"))}
    composed = {y: Sym(const("C")), var("z"): Sym(const("C"))}
    assert alpha_equal(apply_subst(apply_subst(f, s1), s2), apply_subst(f, composed))


@given(formulas())
def test_substituting_bound_capturing_term_keeps_meaning(f):
    # after replacing ?y by the bound atom x no quantifier may capture it
    out = apply_subst(f, {y: Sym(x)})
    if y in free_vars(f):
        assert x in free_bound(out)
