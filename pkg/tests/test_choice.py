import random

import pytest
from hypothesis import given, strategies as hs

from gen import rand_state, rand_substitution
from test_acceptance import LISTING
from epsvc.choice import (
    CCEntry, ChoiceCondition, ChoiceConditionError, check_cc, dump_cc,
    extended_sigma_update, is_extended_extension, parse_cc, q_formula, validate_cc,
)
from epsvc.calculus import delta_plus
from epsvc.parse import parse_formula
from epsvc.syntax import (
    Kind, Sym, Top, bound, const, free_bound, free_symbols, var,
)
from epsvc.varcond import VarCond, is_consistent, is_pn_substitution, p_closure

x, y = var("x"), var("y")


def chain_vc(cc: ChoiceCondition) -> VarCond:
    return VarCond(frozenset((z, k) for k, e in cc.items() for z in e.free()))


def test_empty_choice_condition():
    assert check_cc(ChoiceCondition(), VarCond())


def test_vicious_circle_rejected():
    cc = parse_cc("?x := eps x. x = ?y\n?y := eps y. ~(?x = y)\n")
    # item 3 needs ?y P+ ?x and ?x P+ ?y, which is a P-cycle
    assert not check_cc(cc, chain_vc(cc))
    assert not check_cc(cc, VarCond())


def test_higher_order_listing_accepted():
    cc = parse_cc(LISTING)
    assert len(cc) == 15
    assert check_cc(cc, chain_vc(cc))


def test_flat_listing_rejected():
    # dropping the lambdas makes ?w_a and ?x_a mention each other
    flat = parse_cc("?w_a := eps w_a. P(w_a, ?x_a, ?y_b, ?z_d)\n"
                    "?x_a := eps x_a. ~P(?w_a, x_a, ?y_a, ?z_b)\n")
    assert not check_cc(flat, chain_vc(flat))


def test_error_names_item_and_symbol():
    cc = parse_cc("?x := eps x. x = ?y\n")
    with pytest.raises(ChoiceConditionError) as exc:
        validate_cc(cc, VarCond())
    assert exc.value.item == "3" and exc.value.symbol == x


def test_stray_bound_atom_rejected():
    cc = ChoiceCondition.of({x: CCEntry((), bound("x"), parse_formula("x = u"))})
    with pytest.raises(ChoiceConditionError) as exc:
        validate_cc(cc, VarCond())
    assert exc.value.item == "1"


def test_sort_mismatch_rejected():
    # a one-place lambda needs a function-sorted variable
    cc = ChoiceCondition.of({var("x"): CCEntry((bound("v"),), bound("x"), parse_formula("x = v"))})
    with pytest.raises(ChoiceConditionError) as exc:
        validate_cc(cc, VarCond())
    assert exc.value.item == "2"


def test_q_formula_trivial():
    cc = ChoiceCondition.of({x: CCEntry((), bound("v"), Top())})
    assert str(q_formula(cc, x)) == "[ex v. true -> true]"


def test_q_formula_unknown_variable():
    with pytest.raises(KeyError):
        q_formula(ChoiceCondition(), x)


def test_extended_sigma_update_examples():
    cc = parse_cc("?z0 := eps z. F(z, J)\n?z1 := eps z. F(z, J)\n")
    vc = chain_vc(cc)
    cc2, vc2 = extended_sigma_update(cc, vc, {var("z0"): Sym(const("HG"))})
    assert list(cc2) == [var("z1")] and cc2[var("z1")] == cc[var("z1")]
    assert extended_sigma_update(cc, vc, {}) == (cc, vc)

    cc = parse_cc("?x := eps x. x = ?y\n")
    vc = chain_vc(cc)
    cc2, vc2 = extended_sigma_update(cc, vc, {y: Sym(const("C"))})
    assert str(cc2[x]) == "eps x. x = C"
    assert check_cc(cc2, vc2)


def test_extended_sigma_update_rejects_bad_substitution():
    cc = parse_cc("?x := eps x. x = ?y\n")
    with pytest.raises(ChoiceConditionError):
        extended_sigma_update(cc, chain_vc(cc), {y: Sym(x)})


def test_extended_extension_examples():
    st = rand_state(random.Random(3))
    base = (st.cc, st.vc)
    assert is_extended_extension(base, base)
    goal = parse_formula("all x. ?y = x")
    from epsvc.calculus import initial_state
    s0 = initial_state([goal])
    s1, _ = delta_plus(s0, 0, 0)
    assert is_extended_extension((s0.cc, s0.vc), (s1.cc, s1.vc))
    assert not is_extended_extension((s1.cc, s1.vc), (s0.cc, s1.vc))


def test_dump_parse_round_trip():
    cc = parse_cc(LISTING)
    again = parse_cc(dump_cc(cc))
    assert list(again) == list(cc)
    assert all(again[k].alpha_equal(cc[k]) for k in cc)


@given(hs.integers(0, 2**32 - 1))
def test_extended_sigma_update_keeps_well_formedness(seed):
    rng = random.Random(seed)
    st = rand_state(rng)
    s = rand_substitution(rng, st)
    if not is_pn_substitution(st.vc, s):
        return
    cc2, vc2 = extended_sigma_update(st.cc, st.vc, s)
    assert check_cc(cc2, vc2)


@given(hs.integers(0, 2**32 - 1))
def test_q_formula_is_closed_over_entry(seed):
    st = rand_state(random.Random(seed))
    for y_ in st.cc:
        q = q_formula(st.cc, y_)
        assert not free_bound(q)
        allowed = st.cc[y_].free() | {st.cc.symbol(y_)}
        assert free_symbols(q, {Kind.FREE_VAR, Kind.FREE_ATOM}) <= allowed


@given(hs.integers(0, 2**32 - 1))
def test_item_three_forces_acyclicity(seed):
    rng = random.Random(seed)
    st = rand_state(rng)
    vc = st.vc
    if check_cc(st.cc, vc):
        closure = p_closure(vc)
        assert all((z, k) in closure for k, e in st.cc.items() for z in e.free())
        assert is_consistent(vc)
