import itertools
from collections import Counter

import pytest
from hypothesis import given, settings

from gen import PREDS, formulas
from epsvc.calculus import initial_state
from epsvc.epsilon import (
    EpsilonError, alternating_prefix, eliminate, eliminate_fresh, eps_binders,
    eps_depth, eps_stats, qelim, qelim_parallel_homogeneous, reconstruct,
)
from epsvc.parse import parse_formula
from epsvc.semantics import FiniteStructure, all_structures, evaluate
from epsvc.syntax import (
    Pred, alpha_equal, children, contains_eps, contains_quantifier, free_bound, var,
)

EMPTY = initial_state([])


def _elim(text: str, fresh: bool = False):
    f, st = (eliminate_fresh if fresh else eliminate)(parse_formula(text), EMPTY)
    return f, st


def test_committed_choice_shares_variable():
    f, st = _elim("~((eps x. true) = (eps x. true))")
    assert str(f) == "~(?x = ?x)" and list(map(str, st.cc)) == ["?x"]


def test_fresh_choice_splits_occurrences():
    f, st = _elim("~((eps x. true) = (eps x. true))", fresh=True)
    assert str(f) == "~(?x = ?x0)" and list(map(str, st.cc)) == ["?x", "?x0"]


def test_alpha_variants_share_variable():
    f, st = _elim("(eps x. P(x)) = (eps y. P(y))")
    assert str(f) == "?x = ?x"


def test_captured_bound_atoms_become_prefix():
    f, st = _elim("all x. P(eps y. Q(x, y))")
    assert str(f) == "all x. P(?y(x))"
    assert str(st.cc[var("y")]) == "\\x. eps y. Q(x, y)"


def test_prefix_lists_only_captured_atoms():
    f, st = _elim("all x. all u. Q(eps y. Q(u, y), x)")
    assert str(f) == "all x. all u. Q(?y(u), x)"


def test_nested_terms_add_p_edges():
    f, st = _elim("P(eps y. Q(y, eps z. P(z)))")
    assert str(f) == "P(?y)"
    assert str(st.cc[var("y")]) == "eps y. Q(y, ?z)"
    assert st.vc.P == {(var("z"), var("y"))}


def test_unbound_atom_rejected():
    with pytest.raises(EpsilonError):
        eliminate(parse_formula("P(eps y. Q(x, y))"), EMPTY)


@pytest.mark.parametrize("text", [
    "all x. P(eps y. Q(x, y))",
    "P(eps y. Q(y, eps z. P(z)))",
    "ex u. all x. Q(eps y. Q(u, y), eps z. Q(x, z))",
])
def test_reconstruct_examples(text):
    f = parse_formula(text)
    g, st = eliminate(f, EMPTY)
    assert alpha_equal(reconstruct(g, st.cc), f)


def test_qelim_examples():
    assert str(qelim(parse_formula("ex x. P(x)"))) == "P((eps x. P(x)))"
    assert str(qelim(parse_formula("all x. P(x)"))) == "P((eps x. ~P(x)))"
    assert str(qelim(parse_formula("ex x. all y. Q(x, y)"))) == (
        "Q((eps x. Q(x, (eps y. ~Q(x, y)))), (eps y. ~Q((eps x. Q(x, (eps y. ~Q(x, y)))), y)))")


def test_qelim_rejects_epsilon_input():
    with pytest.raises(EpsilonError):
        qelim(parse_formula("ex x. x = (eps y. P(y))"))


def test_alternating_depth_recurrence():
    # each new outer quantifier doubles the nesting and adds one
    depths = [eps_depth(qelim(alternating_prefix(n))) for n in range(1, 6)]
    assert depths == [1, 3, 7, 15, 31]
    assert all(b == 2 * a + 1 for a, b in zip(depths, depths[1:]))


def test_stats_name_subterms_by_depth():
    stats = eps_stats(qelim(parse_formula("ex x. all y. Q(x, y)")))
    assert [(s.name, s.depth) for s in stats.subterms] == [("y_a", 1), ("x_a", 2), ("y_b", 3)]
    assert stats.depth == 3 and stats.binders == eps_binders(qelim(parse_formula("ex x. all y. Q(x, y)")))


def test_parallel_homogeneous_blocks():
    ex = qelim_parallel_homogeneous(parse_formula("ex x. ex y. Q(x, y)"))
    assert str(ex) == "Q(Proj1((eps v. Q(Proj1(v), Proj2(v)))), Proj2((eps v. Q(Proj1(v), Proj2(v)))))"
    al = qelim_parallel_homogeneous(parse_formula("all x. all y. Q(x, y)"))
    assert "eps v. ~Q(Proj1(v), Proj2(v))" in str(al)
    assert eps_depth(ex) == eps_depth(al) == 1


def test_parallel_homogeneous_single_quantifier_is_qelim():
    f = parse_formula("all x. Q(x, x)")
    assert qelim_parallel_homogeneous(f) == qelim(f)


def test_parallel_homogeneous_rejects_mixed_prefix():
    with pytest.raises(EpsilonError):
        qelim_parallel_homogeneous(parse_formula("all x. ex y. Q(x, y)"))


def test_parallel_homogeneous_meaning_with_pairing():
    # elements 0..3 encode the pairs over {0, 1}; Q lives on {0, 1}
    proj = {"Proj1": {(v,): v // 2 for v in range(4)}, "Proj2": {(v,): v % 2 for v in range(4)}}
    f = parse_formula("ex x. ex y. Q(x, y)")
    g = qelim_parallel_homogeneous(f)
    pairs = list(itertools.product((0, 1), repeat=2))
    for bits in itertools.product((0, 1), repeat=4):
        q = {p for p, b in zip(pairs, bits) if b}
        st = FiniteStructure((0, 1, 2, 3), {"Q": q}, proj)
        assert evaluate(f, st, {}) == evaluate(g, st, {})


def _closed(f):
    return not free_bound(f)


def _pred_counts(x):
    out = Counter()
    stack = [x]
    while stack:
        n = stack.pop()
        if isinstance(n, Pred):
            out[n.head.name] += 1
        stack.extend(children(n))
    return out


@given(formulas(max_depth=3))
def test_eliminate_reconstruct_round_trip(f):
    g = qelim(f) if _closed(f) else f
    h, st = eliminate(g, EMPTY)
    assert not contains_eps(h)
    assert alpha_equal(reconstruct(h, st.cc), g)


@given(formulas(max_depth=3))
def test_fresh_elimination_round_trip(f):
    g = qelim(f) if _closed(f) else f
    h, st = eliminate_fresh(g, EMPTY)
    assert not contains_eps(h)
    assert alpha_equal(reconstruct(h, st.cc), g)
    # each occurrence moves its body into exactly one entry
    moved = sum((_pred_counts(e.body) for e in st.cc.values()), Counter())
    assert _pred_counts(h) + moved == _pred_counts(g)


@settings(max_examples=60)
@given(formulas(max_depth=3, fvars=(), fatoms=()))
def test_qelim_preserves_meaning(f):
    # the evaluator picks the least witness, which is a choice function
    g = qelim(f)
    assert not _pred_counts(g).keys() - _pred_counts(f).keys()
    for n in (1, 2):
        for st in all_structures(n, PREDS, {"C": 0}):
            assert evaluate(f, st, {}) == evaluate(g, st, {})


@given(formulas(max_depth=3, fvars=(), fatoms=()))
def test_qelim_output_is_quantifier_free(f):
    g = qelim(f)
    assert not contains_quantifier(g)
    assert not free_bound(g)
