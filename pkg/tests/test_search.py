import time

import pytest
from hypothesis import given, settings

from nestedigl.calculus import check_proof
from nestedigl.corpus import AXIOM_SETS, EMPTY, axiom_instances, cube_goals
from nestedigl.formula import Char, parse_formula
from nestedigl.search import NoProofWithinBudget, SearchBudget, prove, prove_formula
from nestedigl.semantics import find_countermodel, find_sequent_countermodel
from nestedigl.sequent import parse_sequent
from strategies import formulas, nested

import hypothesis.strategies as st

small = SearchBudget(max_noninvertible=4, max_new_components=3, time_limit=1.0)
one_char = st.sampled_from([Char("a"), Char("a", True)])


@pytest.mark.parametrize("name,f", axiom_instances(), ids=[n for n, _ in axiom_instances()])
def test_axiom_instances(name, f):
    proof = prove_formula(f, EMPTY, SearchBudget(max_noninvertible=12, time_limit=5.0))
    assert proof
    check_proof(proof, EMPTY)


@pytest.mark.parametrize("goal", cube_goals(), ids=lambda g: g.name)
def test_cube_goal_needs_its_axiom(goal):
    assert prove_formula(goal.formula, goal.axioms)
    miss = prove_formula(goal.formula, EMPTY)
    assert isinstance(miss, NoProofWithinBudget) and not miss
    assert find_countermodel(goal.formula, EMPTY, 3) is not None


@pytest.mark.parametrize("text", ["p | (p -> false)", "((p -> q) -> p) -> p", "((p -> false) -> false) -> p",
                                  "(<a>p -> [a]q) | <a>(p & q -> false)"])
def test_classical_principles_fail(text):
    f = parse_formula(text)
    assert not prove_formula(f, EMPTY, small)
    assert find_countermodel(f, EMPTY, 3) is not None


def test_nested_goal():
    g = parse_sequent("[a]p, [a](p -> q) => -, (a)[- => q]")
    proof = prove(g, EMPTY)
    check_proof(proof, EMPTY)
    assert proof.conclusion == g


def test_budget_validation():
    with pytest.raises(ValueError):
        SearchBudget(max_noninvertible=-1)


def test_failure_report():
    miss = prove_formula(parse_formula("p | (p -> false)"), EMPTY, small)
    assert "no proof within budget" in str(miss)
    assert miss.nodes > 0


def test_time_limit():
    f = parse_formula("((p -> q) -> r) & ((q -> p) -> r) & ((p -> r) -> q) -> ((r -> q) -> p) | r | q")
    budget = SearchBudget(max_noninvertible=40, max_impl_uses=6, time_limit=0.3)
    t = time.perf_counter()
    res = prove_formula(f, EMPTY, budget)
    assert time.perf_counter() - t < 3.0
    if not res:
        assert res.timed_out or res.nodes > 0


@settings(max_examples=60, deadline=None)
@given(formulas(6, chars=one_char), st.sampled_from(sorted(AXIOM_SETS)))
def test_proved_formulas_are_checked_and_valid(f, key):
    ax = AXIOM_SETS[key]
    proof = prove_formula(f, ax, small)
    if proof:
        check_proof(proof, ax)
        assert find_countermodel(f, ax, 2) is None


@settings(max_examples=40, deadline=None)
@given(nested(2, fs=formulas(3, chars=one_char), chars=one_char))
def test_proved_sequents_are_valid(g):
    proof = prove(g, EMPTY, small)
    if proof:
        check_proof(proof, EMPTY)
        assert find_sequent_countermodel(g, EMPTY, 2) is None
