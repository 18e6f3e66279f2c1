import pytest
from hypothesis import given
import hypothesis.strategies as st

from nestedigl.formula import (
    BOT, TOP, And, Atom, Box, Char, Dia, Imp, Or, ParseError, AlphabetError, atom_signature,
    close_alphabet, converse_string, length, parse_formula, signature, subformulas, to_text,
)
from strategies import chars, formulas

p, q, r = Atom("p"), Atom("q"), Atom("r")
a = Char("a")


def test_parse_precedence():
    assert parse_formula("p & q -> q | r") == Imp(And(p, q), Or(q, r))
    assert parse_formula("p -> q -> r") == Imp(p, Imp(q, r))
    assert parse_formula("[a]<a^>p") == Box(a, Dia(a.converse, p))
    assert parse_formula("true") == TOP
    assert parse_formula("false") == BOT


@pytest.mark.parametrize("text", ["p &", "(p", "[a p", "p q", "<>p", "p -> ", "[1]p"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_formula(text)


def test_alphabet_is_enforced():
    with pytest.raises(AlphabetError):
        parse_formula("[b]p", alphabet=close_alphabet(["a"]))
    assert parse_formula("[a^]p", alphabet=close_alphabet(["a"])) == Box(a.converse, p)


@given(formulas())
def test_print_parse_roundtrip(f):
    assert parse_formula(to_text(f)) == f


@given(st.lists(chars, max_size=6))
def test_converse_string_involution(s):
    s = tuple(s)
    assert converse_string(converse_string(s)) == s
    assert len(converse_string(s)) == len(s)


def test_converse_string_examples():
    b = Char("b")
    assert converse_string(()) == ()
    assert converse_string((a, b.converse)) == (b, a.converse)


@given(formulas())
def test_length_decreases_on_subformulas(f):
    for g in list(subformulas(f))[1:]:
        assert length(g) < length(f)


def test_signature_examples():
    assert signature(p, "+") == {p, BOT, TOP}
    assert signature(p, "-") == {BOT, TOP}
    assert signature(Imp(p, q), "+") == {Imp(p, q), q, BOT, TOP}
    assert signature(Imp(p, q), "-") == {Imp(p, q), p, BOT, TOP}


@given(formulas(), formulas())
def test_signature_implication_flips(f, g):
    for pol, opp in (("+", "-"), ("-", "+")):
        assert atom_signature(Imp(f, g), pol) == atom_signature(f, opp) | atom_signature(g, pol)
        assert atom_signature(And(f, g), pol) == atom_signature(f, pol) | atom_signature(g, pol)
        assert atom_signature(Box(a, f), pol) == atom_signature(f, pol)


@given(formulas())
def test_atoms_split_by_polarity(f):
    from nestedigl.formula import atoms

    assert atom_signature(f, "+") | atom_signature(f, "-") == atoms(f)
