import random

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from nestedigl.calculus import check_proof
from nestedigl.corpus import AXIOM_SETS, EMPTY, interpolation_cases, random_proofs
from nestedigl.formula import BOT, TOP, And, Atom, Box, Char, Dia, Imp, Or, flip, parse_formula, to_text
from nestedigl.interpolate import (
    BiasedSequent, Interpolant, InterpolationError, combine, derive_interpolation_proof, extract_side_proofs,
    invariant_check, lyndon_interpolant, modal_lift, normalize, signature_ok, swap_bias,
)
from nestedigl.search import SearchBudget, prove, prove_formula
from nestedigl.sequent import parse_sequent
from strategies import formulas, nested

p, q, r = Atom("p"), Atom("q"), Atom("r")
a = Char("a")
budget = SearchBudget(time_limit=5.0)
CASES = interpolation_cases()
RANDOM = random_proofs(seed=21, count=40)

pairs = st.frozensets(st.tuples(st.sampled_from(["w0", "w1", "w2"]), formulas(4)), max_size=3)
interpolants = pairs.map(Interpolant)


def _interpolate(text, ax=EMPTY, **kw):
    f = parse_formula(text)
    return f, lyndon_interpolant(prove_formula(f, ax, budget), ax, **kw)


# -- interpolant algebra --------------------------------------------------------


def test_combine_examples():
    i = Interpolant.of(("w", p))
    j = Interpolant.of(("w", q), ("u", r))
    assert combine("implies", i, j, {"w", "u"}) == Interpolant.of(("w", Imp(p, q)), ("u", Imp(TOP, r)))
    assert combine("or", i, j, {"w", "u", "v"}) == Interpolant.of(("w", Or(p, q)), ("u", r), ("v", BOT))
    assert combine("and", i, Interpolant(), {"w", "v"}) == Interpolant.of(("w", p), ("v", TOP))
    assert combine("implies", i, Interpolant(), {"w"}) == Interpolant.of(("w", Imp(p, BOT)))
    with pytest.raises(ValueError):
        combine("xor", i, j, {"w"})


def test_modal_lift_examples():
    i = Interpolant.of(("u", p), ("u", q), ("w", r))
    assert modal_lift("box", a, i, "w", "u") == Interpolant.of(("w", Box(a, Or(p, q))), ("w", r))
    assert modal_lift("dia", a, i, "w", "u") == Interpolant.of(("w", Dia(a, And(p, q))), ("w", r))
    assert modal_lift("box", a, Interpolant.of(("w", r)), "w", "u") == Interpolant.of(("w", r))


@given(interpolants, interpolants)
def test_signature_algebra(i, j):
    names = {"w0"}
    for pol in ("+", "-"):
        assert combine("implies", i, j, names).sig(pol) == i.sig(flip(pol)) | j.sig(pol)
        assert combine("or", i, j, names).sig(pol) == i.sig(pol) | j.sig(pol)
        assert combine("and", i, j, names).sig(pol) == i.sig(pol) | j.sig(pol)
        assert modal_lift("box", a, i, "w0", "w1").sig(pol) == i.sig(pol)
        assert modal_lift("dia", a, i, "w0", "w1").sig(pol) == i.sig(pol)


@given(interpolants, interpolants)
def test_combine_names(i, j):
    names = {"w0", "w1", "w2"}
    for kind in ("implies", "or", "and"):
        assert combine(kind, i, j, names).names == names


# -- biased sequents ------------------------------------------------------------


@st.composite
def biased(draw):
    g = draw(nested(3, fs=formulas(3)))
    left = {n.name: [f for f in n.ant if draw(st.booleans())] for n in g.walk()}
    return BiasedSequent.of(g, left)


@given(biased())
def test_swap_is_involution(b):
    assert swap_bias(swap_bias(b)) == b


@given(biased())
def test_parts_partition_antecedents(b):
    from collections import Counter

    lp, rp = b.lpart(), b.rpart()
    for n in b.seq.walk():
        assert Counter(lp[n.name].ant) + Counter(rp[n.name].ant) == Counter(n.ant)
        assert lp[n.name].con == ()
        assert rp[n.name].con == n.con


def test_biasing_must_fit():
    g = parse_sequent("p => q")
    with pytest.raises(InterpolationError):
        BiasedSequent.of(g, {"w0": [q]})
    with pytest.raises(InterpolationError):
        BiasedSequent.of(g, {"zz": [p]})


# -- interpolation proofs -------------------------------------------------------


@pytest.mark.parametrize("text,expected", [
    ("p & q -> q | r", "q"),
    ("false -> p", "false"),
    ("p -> (q -> p)", "p"),
])
def test_required_interpolants(text, expected):
    f, (i, pa, pb) = _interpolate(text)
    assert to_text(i) == expected
    assert pa.conclusion.con[0] == Imp(f.left, i)
    assert pb.conclusion.con[0] == Imp(i, f.right)


@pytest.mark.parametrize("name,f,ax", CASES, ids=[c[0] for c in CASES])
@pytest.mark.parametrize("mode", ["meet", "join"])
def test_corpus_interpolants(name, f, ax, mode):
    i, pa, pb = lyndon_interpolant(prove_formula(f, ax, budget), ax, mode=mode)
    check_proof(pa, ax)
    check_proof(pb, ax)
    assert signature_ok(i, f.left, f.right)


def test_modal_interpolants():
    _, (i, _, _) = _interpolate("[a]p -> p", AXIOM_SETS["T"])
    assert to_text(i) == "p"
    _, (i, _, _) = _interpolate("[a]p -> [a][a]p", AXIOM_SETS["4"])
    assert to_text(i) == "[a][a]p"


def test_simplify_reproves():
    _, (i, pa, pb) = _interpolate("p -> ((p -> false) -> false)", simplify=True)
    assert to_text(i) == "p"
    check_proof(pa, EMPTY)
    check_proof(pb, EMPTY)


def test_normalize():
    assert normalize(And(TOP, Or(BOT, p))) == p
    assert normalize(Box(a, And(q, TOP))) == Box(a, q)


def test_bad_inputs():
    proof = prove_formula(parse_formula("p -> p"), EMPTY)
    with pytest.raises(ValueError):
        lyndon_interpolant(proof, EMPTY, mode="both")
    flat = prove(parse_sequent("p => p"), EMPTY)
    with pytest.raises(InterpolationError):
        lyndon_interpolant(flat, EMPTY)
    with pytest.raises(InterpolationError):
        derive_interpolation_proof(flat, {"w0": [q]}, EMPTY)


@pytest.mark.parametrize("k", range(len(RANDOM)))
def test_invariants_on_random_proofs(k):
    item = RANDOM[k]
    rng = random.Random(k)
    g = item.proof.conclusion
    left = {n.name: [f for f in n.ant if rng.random() < 0.5] for n in g.walk()}
    for biasing in (left, {}, {n.name: n.ant for n in g.walk()}):
        ip, raw = derive_interpolation_proof(item.proof, biasing, item.axioms)
        rep = invariant_check(ip)
        assert rep.ok, rep.failures
        assert raw.names <= g.names
        for n in ip.nodes():
            assert n.kept.names <= n.sequent.seq.names


def test_side_proofs_check_and_reprove():
    small = SearchBudget(max_noninvertible=6, time_limit=2.0)
    seen = 0
    for item in RANDOM[:15]:
        sub = item.proof.premises[0] if item.proof.rule.rule == "impR" else item.proof
        g = sub.conclusion
        biasing = {"w0": g["w0"].ant[:1]}
        ip, _ = derive_interpolation_proof(sub, biasing, item.axioms)
        for (v, c), (pl, pr) in extract_side_proofs(ip, item.axioms).items():
            check_proof(pl, item.axioms)
            check_proof(pr, item.axioms)
            assert pl.conclusion.output == (v, c)
            assert c in pr.conclusion[v].ant
            # independent confirmation of both roots
            assert prove(pl.conclusion, item.axioms, small)
            assert prove(pr.conclusion, item.axioms, small)
            seen += 1
    assert seen > 0
