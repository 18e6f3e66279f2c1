import random

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from nestedigl.calculus import RuleInstance, check_proof, instance
from nestedigl.corpus import AXIOM_SETS, EMPTY, cut_instances, random_formula, random_proofs
from nestedigl.formula import Atom, Char, parse_formula
from nestedigl.search import SearchBudget, prove
from nestedigl.sequent import parse_sequent
from nestedigl.transform import (
    CutMonitor, TransformError, apply_admissible, cut_conclusion, eliminate_cut, invert_rule, realign,
    replay, shift,
)

budget = SearchBudget(time_limit=5.0)
CORPUS = random_proofs(seed=3, count=25)


def _proof(text, ax):
    p = prove(parse_sequent(text), ax, budget)
    assert p, text
    return p


CUTS = [
    # left conclusion, right conclusion, cut formula, axiom set, a case the reduction must pass through
    ("p => p | q", "p | q, p => q | p", "p | q", "K", "covered"),
    ("p & q => q & p", "q & p, p & q => q", "q & p", "K", "left-andL"),
    ("q, q -> p => p | r", "p | r, q, q -> p => r | p", "p | r", "K", "principal-Or"),
    ("q, q -> p => r | p", "r | p, q, q -> p => p | r", "r | p", "K", "principal-Or"),
    ("q, q -> p => p & p", "p & p, q, q -> p => p", "p & p", "K", "principal-And"),
    ("[a](q -> p), <a>q => <a>p", "<a>p, [a](q -> p), <a>q => <a>(p | r)", "<a>p", "K", "principal-Dia"),
    ("[a](q -> p), [a]q => <a>p", "<a>p, [a](q -> p), [a]q => <a>(p | r)", "<a>p", "D", "left-dX"),
    ("[a]p => [a](p | q)", "[a](p | q), [a]p => p | q", "[a](p | q)", "T", "principal-Box"),
    ("[a]p => [a](p | q)", "[a](p | q), [a]p => <a>(q | p)", "[a](p | q)", "D", "right-dX"),
    ("[a]p => [a][a]p", "[a][a]p, [a]p => [a][a][a]p", "[a][a]p", "4", "principal-Box"),
    ("r, r -> q => p -> q", "p -> q, r, r -> q => p -> q & q", "p -> q", "K", "principal-Imp"),
    ("p => -, (a)[- => <a^>p]", "p => -, (a)[<a^>p => <a^>p | q]", "<a^>p", "K", "covered"),
]


@pytest.mark.parametrize("left,right,formula,key,case", CUTS)
def test_targeted_cuts(left, right, formula, key, case):
    ax = AXIOM_SETS[key]
    lp, rp = _proof(left, ax), _proof(right, ax)
    f = parse_formula(formula)
    at = next(n.name for n in rp.conclusion.walk() if f in n.ant)
    mon = CutMonitor()
    out = eliminate_cut(lp, rp, at, f, ax, mon)
    check_proof(out, ax)
    assert out.conclusion.shape == cut_conclusion(rp.conclusion, at, f).shape
    assert mon.calls and not mon.violations
    assert all(later < mon.calls[0] for later in mon.calls[1:])
    assert mon.cases[case] > 0


def test_random_cuts():
    for c in cut_instances(seed=5, count=30):
        mon = CutMonitor()
        out = eliminate_cut(c.left, c.right, c.at, c.formula, c.axioms, mon)
        check_proof(out, c.axioms)
        assert not mon.violations


def test_cut_context_mismatch():
    lp = _proof("p => p", EMPTY)
    rp = _proof("p, q => p", EMPTY)
    with pytest.raises(TransformError):
        eliminate_cut(lp, rp, "w0", Atom("q"), EMPTY)
    with pytest.raises(TransformError):
        eliminate_cut(lp, rp, "w0", Atom("r"), EMPTY)


def test_invert_rule_rejects_non_invertible():
    p = _proof("p -> q, p => q", EMPTY)
    inst = instance(p.conclusion, "impL", "w0", parse_formula("p -> q"))
    with pytest.raises(TransformError):
        invert_rule("impL", 0, p, inst, EMPTY)


def test_invert_or_left_both_premises():
    p = _proof("p | q => q | p", EMPTY)
    inst = instance(p.conclusion, "orL", "w0", parse_formula("p | q"))
    for k, atom in enumerate("pq"):
        q = invert_rule("orL", k, p, inst, EMPTY)
        check_proof(q, EMPTY)
        assert Atom(atom) in q.conclusion["w0"].ant
        assert q.height <= p.height


def test_shift_side_condition():
    # under T an a-child may be merged into its parent
    p = _proof("[a]p => -, (a)[- => p]", EMPTY)
    moved = shift(p, "w1", "w0", AXIOM_SETS["T"])
    check_proof(moved, AXIOM_SETS["T"])
    assert moved.conclusion.shape == parse_sequent("[a]p => p").shape
    assert moved.height <= p.height
    with pytest.raises(TransformError):
        shift(p, "w1", "w0", EMPTY)


def test_wr_and_botr_preconditions():
    p = _proof("p => p", EMPTY)
    with pytest.raises(TransformError):
        apply_admissible("wR", p, {"at": "w0", "formula": Atom("q")}, EMPTY)
    with pytest.raises(TransformError):
        apply_admissible("botR", p, {}, EMPTY)
    with pytest.raises(TransformError):
        apply_admissible("nope", p, {}, EMPTY)


def test_replay_rejects_non_embedding():
    p = _proof("p => p", EMPTY)
    with pytest.raises(TransformError):
        replay(p, parse_sequent("q => p"), {"w0": "w0"}, EMPTY)


def test_realign_renames():
    p = _proof("p => -, (a)[- => <a^>p]", EMPTY)
    t = parse_sequent("x: p => -, (a)[y: - => <a^>p]")
    q = realign(p, t, EMPTY)
    check_proof(q, EMPTY)
    assert q.conclusion == t


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(range(len(CORPUS))), st.integers(0, 2**16))
def test_weakening_preserves_height(k, seed):
    item = CORPUS[k]
    rng = random.Random(seed)
    at = rng.choice(sorted(item.proof.conclusion.names))
    f = random_formula(rng, 2)
    q = apply_admissible("wL", item.proof, {"at": at, "formulas": [f]}, item.axioms)
    check_proof(q, item.axioms)
    assert q.height <= item.proof.height
    n = apply_admissible("necX", item.proof, {"char": "a"}, item.axioms)
    check_proof(n, item.axioms)
    assert n.height <= item.proof.height
