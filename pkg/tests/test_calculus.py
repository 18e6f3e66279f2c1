import json

import pytest

from nestedigl.calculus import (
    CheckError, Proof, RuleError, RuleInstance, SideConditionError, apply_backward, build, check_proof,
    instance, is_valid, proof_from_json, proof_to_json, render,
)
from nestedigl.corpus import AXIOM_SETS, EMPTY, ipa_example_proof
from nestedigl.formula import Atom, BOT, Char, parse_formula
from nestedigl.grammar import AxiomSet
from nestedigl.search import prove_formula
from nestedigl.sequent import flat, parse_sequent

p = Atom("p")
a = Char("a")


@pytest.mark.parametrize("word", [("x1",), ("x1", "x2"), ("x1", "x2", "x3")])
def test_ipa_example_checks(word):
    proof, ax = ipa_example_proof(word, "x")
    check_proof(proof, ax)
    # the same proof is rejected without the path axiom
    assert not is_valid(proof, EMPTY)


def test_ipa_example_shape():
    proof, _ = ipa_example_proof(("x1", "x2"), "x")
    left, right = proof.premises
    assert [n.rule.rule for n in left.nodes()] == ["impR", "diaL", "diaL", "diaRprop", "id"]
    assert [n.rule.rule for n in right.nodes()] == ["impR", "boxR", "boxR", "boxLprop", "id"]


def test_initial_rules():
    g = flat((p,), (p,))
    assert apply_backward(g, instance(g, "id", "w0", p), EMPTY) == []
    g = flat((BOT,), (p,))
    assert apply_backward(g, instance(g, "botL", "w0", BOT), EMPTY) == []
    g = flat((Atom("q"),), (p,))
    with pytest.raises(RuleError):
        apply_backward(g, RuleInstance("id", "w0", ("out", 0)), EMPTY)


def test_propagation_side_condition():
    g = parse_sequent("[a]p => -, (a^)[- => p]")
    with pytest.raises(SideConditionError):
        apply_backward(g, RuleInstance("boxLprop", "w0", ("ant", 0), target="w1"), EMPTY)
    g = parse_sequent("[a]p => -, (a)[- => p]")
    (prem,) = apply_backward(g, RuleInstance("boxLprop", "w0", ("ant", 0), target="w1"), EMPTY)
    assert prem["w1"].ant == (p,)


def test_propagation_to_self_needs_t():
    g = parse_sequent("[a]p => p")
    inst = RuleInstance("boxLprop", "w0", ("ant", 0), target="w0")
    with pytest.raises(SideConditionError):
        apply_backward(g, inst, EMPTY)
    apply_backward(g, inst, AXIOM_SETS["T"])


def test_dx_needs_seriality():
    g = parse_sequent("[a]p => <a>p")
    inst = RuleInstance("dX", "w0", character=a)
    with pytest.raises(RuleError):
        apply_backward(g, inst, EMPTY)
    (prem,) = apply_backward(g, inst, AXIOM_SETS["D"])
    assert len(prem.children) == 1


def test_impl_left_strips_output():
    g = parse_sequent("p -> q => r, (a)[- => -]")
    left, right = apply_backward(g, instance(g, "impL", "w0", parse_formula("p -> q")), EMPTY)
    assert left.output == ("w0", p)
    assert right.output == ("w0", Atom("r"))


def test_build_rejects_wrong_premise():
    g = flat((p,), (parse_formula("p | q"),))
    inst = instance(g, "orR1", "w0", g.con[0])
    bad = Proof(flat((p,), (Atom("q"),)), RuleInstance("id", "w0", ("out", 0)))
    with pytest.raises(RuleError):
        build(g, inst, [bad], EMPTY)


def test_checker_reports_location():
    proof = prove_formula(parse_formula("p & q -> q"), EMPTY)
    leaf = list(proof.nodes())[-1]
    broken = Proof(leaf.conclusion, RuleInstance("botL", leaf.rule.at, ("ant", 0)))

    def swap(node):
        if node is leaf:
            return broken
        return Proof(node.conclusion, node.rule, tuple(swap(s) for s in node.premises))

    with pytest.raises(CheckError) as e:
        check_proof(swap(proof), EMPTY)
    assert e.value.rule == "botL"
    assert len(e.value.path) == proof.height


@pytest.mark.parametrize("compact", [False, True])
def test_json_roundtrip(compact):
    proof, ax = ipa_example_proof(("x", "y"), "z")
    data = json.loads(json.dumps(proof_to_json(proof, compact)))
    back = proof_from_json(data, ax)
    check_proof(back, ax)
    assert back.conclusion == proof.conclusion
    assert back.height == proof.height and back.size == proof.size


def test_compact_json_needs_axioms():
    proof, _ = ipa_example_proof()
    with pytest.raises(ValueError):
        proof_from_json(proof_to_json(proof, compact=True))


def test_render_mentions_every_rule():
    proof, _ = ipa_example_proof()
    text = render(proof)
    assert text.count("\n") + 1 == proof.size
    assert "[diaRprop @w0 -> u2]" in text
