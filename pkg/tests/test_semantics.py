import json
import random

import pytest
from hypothesis import given, settings, strategies as hs

from gen import FUNS, PREDS, rand_state
from epsvc.choice import ChoiceCondition, parse_cc
from epsvc.parse import parse_formula, parse_term
from epsvc.semantics import (
    EvalError, FiniteStructure, OracleError, SemValuation, all_structures,
    enumerate_compatible, epsilon_combine, evaluate, is_compatible, is_valid,
    is_valid_in, load_structures, mutually_reduce, reduces_to, sequent_true,
)
from epsvc.syntax import Sequent, atom, var
from epsvc.varcond import VarCond

x, y = var("x"), atom("y")
TWO = FiniteStructure((0, 1))
P1 = FiniteStructure((0, 1), {"P": {(1,)}})


def seq(*texts):
    return Sequent(tuple(parse_formula(t) for t in texts))


@pytest.mark.parametrize("text, want", [
    ("P(C)", False),
    ("ex x. P(x)", True),
    ("all x. P(x)", False),
    ("P(eps x. P(x))", True),
    ("P(eps x. ~P(x))", False),
    ("ex x. P(x) & ~P(eps y. P(y))", False),
    ("(all x. P(x)) <-> P(eps x. ~P(x))", True),
    ("C = C & ~(C != C)", True),
])
def test_evaluate_examples(text, want):
    st = FiniteStructure((0, 1), {"P": {(1,)}}, {"C": {(): 0}})
    assert evaluate(parse_formula(text), st, {}) is want


def test_evaluate_free_symbols_from_valuation():
    f = parse_formula("?x = !y")
    assert evaluate(f, TWO, {x: 1, y: 1})
    assert not evaluate(f, TWO, {x: 0, y: 1})
    with pytest.raises(EvalError):
        evaluate(f, TWO, {x: 0})


def test_missing_predicate_is_an_error():
    with pytest.raises(EvalError):
        evaluate(parse_formula("R(C)"), TWO, {})


def test_empty_epsilon_falls_back_to_default():
    st = FiniteStructure((0, 1, 2), eps_default=2)
    assert evaluate(parse_term("eps x. false"), st, {}) == 2
    assert evaluate(parse_term("eps x. true"), st, {}) == 0


def test_structure_validation():
    with pytest.raises(ValueError):
        FiniteStructure(())
    with pytest.raises(ValueError):
        FiniteStructure((0, 1), {"P": {(2,)}})
    with pytest.raises(ValueError):
        FiniteStructure((0, 1), {}, {"C": {(0,): 1}})


def test_structures_json_round_trip():
    st = FiniteStructure((0, 1), {"R": {(0, 1)}}, {"C": {(): 1}, "S": {(0,): 1, (1,): 0}})
    again = load_structures(json.dumps(st.to_json()))
    assert again == [st]


def test_all_structures_counts():
    assert len(list(all_structures(2, {"R": 2}))) == 16
    assert len(list(all_structures(2, {"P": 1}, {"C": 0}))) == 8


def test_epsilon_combine_examples():
    p = SemValuation({x: frozenset({y})}, {x: {(0,): 1, (1,): 0}})
    assert epsilon_combine(p, {y: 0}) == {x: 1}
    assert epsilon_combine(p, {y: 1}) == {x: 0}
    const = SemValuation({x: frozenset()}, {x: {(): 1}})
    assert epsilon_combine(const, {y: 0}) == {x: 1}


def test_compatibility_follows_choice_condition():
    cc = parse_cc("?x := eps x. P(x)\n")
    zero = SemValuation({x: frozenset()}, {x: {(): 0}})
    one = SemValuation({x: frozenset()}, {x: {(): 1}})
    assert not is_compatible(zero, cc, VarCond(), P1)
    assert is_compatible(one, cc, VarCond(), P1)
    # with no witness any value will do
    empty = FiniteStructure((0, 1), {"P": set()})
    assert is_compatible(zero, cc, VarCond(), empty)


def test_compatibility_respects_n_edges():
    reads = SemValuation({x: frozenset({y})}, {x: {(0,): 0, (1,): 1}})
    assert is_compatible(reads, ChoiceCondition(), VarCond(), TWO)
    assert not is_compatible(reads, ChoiceCondition(), VarCond(frozenset(), frozenset({(x, y)})), TWO)


def test_enumeration_counts():
    # access {} gives 2 constant functions, access {!y} gives 4 unary ones
    assert len(list(enumerate_compatible(ChoiceCondition(), VarCond(), TWO, [x], [y]))) == 6
    assert len(list(enumerate_compatible(ChoiceCondition(), VarCond(), TWO, [x], [y], maximal=True))) == 4
    blocked = VarCond(frozenset(), frozenset({(x, y)}))
    assert len(list(enumerate_compatible(ChoiceCondition(), blocked, TWO, [x], [y]))) == 2


def test_is_valid_examples():
    goal = [seq("?x = !y")]
    assert is_valid(goal, ChoiceCondition(), VarCond(), TWO)
    assert not is_valid(goal, ChoiceCondition(), VarCond(frozenset(), frozenset({(x, y)})), TWO)
    assert is_valid([seq("?x = !y")], ChoiceCondition(), VarCond(frozenset(), frozenset({(x, y)})),
                    FiniteStructure((0,)))
    cc = parse_cc("?x := eps x. P(x)\n")
    assert is_valid([seq("P(?x)")], cc, VarCond(), P1)
    assert not is_valid([seq("~P(?x)")], cc, VarCond(), P1)
    assert is_valid_in([seq("ex x. P(x) -> P(?x)")], cc, VarCond(), all_structures(2, {"P": 1}))


def test_sequent_truth_is_disjunction():
    assert sequent_true(seq("P(C)", "~P(C)"), FiniteStructure((0,), {"P": set()}, {"C": {(): 0}}), {})
    assert not sequent_true(Sequent(()), TWO, {})


def test_scale_limits():
    big = FiniteStructure(tuple(range(4)))
    with pytest.raises(OracleError):
        is_valid([seq("?x = !y")], ChoiceCondition(), VarCond(), big)
    many = [seq("?a = !a | ?b = !b | ?c = !c | ?d = !d")]
    with pytest.raises(OracleError):
        is_valid(many, ChoiceCondition(), VarCond(), TWO)


def test_lambda_prefix_rejected():
    cc = parse_cc("?y := \\x. eps y. Q(x, y)\n")
    with pytest.raises(OracleError):
        list(enumerate_compatible(cc, VarCond(), TWO))


def test_reduction_examples():
    cc, vc = ChoiceCondition(), VarCond()
    g0, g1 = [seq("?x = !y")], [seq("?x = !y", "P(!y)")]
    # the weaker goal reduces to the stronger one, not the other way round
    assert reduces_to(g1, g0, cc, vc, P1)
    assert not reduces_to(g0, g1, cc, vc, P1)
    assert mutually_reduce(g0, [seq("!y = ?x")], cc, vc, P1)


@settings(max_examples=40)
@given(hs.integers(0, 2**32 - 1))
def test_maximal_access_sets_decide_validity(seed):
    rng = random.Random(seed)
    st = rand_state(rng, goal_depth=1)
    for s in rng.sample(list(all_structures(2, PREDS, FUNS)), 3):
        assert (is_valid(st.sequents(), st.cc, st.vc, s)
                == is_valid(st.sequents(), st.cc, st.vc, s, maximal=False))


@settings(max_examples=40)
@given(hs.integers(0, 2**32 - 1))
def test_reduction_is_reflexive_and_transitive(seed):
    rng = random.Random(seed)
    a = rand_state(rng, goal_depth=1)
    b = rand_state(rng, goal_depth=1)
    c = rand_state(rng, goal_depth=1)
    cc, vc = a.cc, a.vc
    gs = [a.sequents(), b.sequents(), c.sequents()]
    extra = [s for g in gs for s in g]
    s = rng.choice(list(all_structures(2, PREDS, FUNS)))
    assert reduces_to(gs[0], gs[0], cc, vc, s, extra)
    if reduces_to(gs[0], gs[1], cc, vc, s, extra) and reduces_to(gs[1], gs[2], cc, vc, s, extra):
        assert reduces_to(gs[0], gs[2], cc, vc, s, extra)
