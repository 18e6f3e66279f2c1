import pytest
from hypothesis import given

from nestedigl.formula import Atom, Char, ParseError
from nestedigl.sequent import (
    Nested, SequentError, add_ant, add_child, flat, iso_map, merge_odot, parse_sequent, propagation_graph,
    remove_ant, remove_child, rename, set_output, strip_output, to_sequent_text,
)
from strategies import nested

p, q = Atom("p"), Atom("q")
a = Char("a")


def test_parse_names_and_children():
    g = parse_sequent("p => -, (a)[q => p], (a^)[-  => -]")
    assert g.name == "w0"
    assert [k.name for _, k in g.children] == ["w1", "w2"]
    assert g.output == ("w1", p)
    assert g.parent["w2"] == ("w0", a.converse)


def test_explicit_names():
    g = parse_sequent("r: p => -, (a)[s: - => q]")
    assert g.names == {"r", "s"}


def test_single_conclusion():
    with pytest.raises(ParseError):
        parse_sequent("- => p, (a)[- => q]")
    with pytest.raises(SequentError):
        Nested("w", (), (p, q))


def test_duplicate_names_rejected():
    with pytest.raises(ParseError):
        parse_sequent("w: - => -, (a)[w: - => -]")


@given(nested())
def test_text_roundtrip(g):
    assert parse_sequent(to_sequent_text(g, names=True)) == g
    assert parse_sequent(to_sequent_text(g)).shape == g.shape


@given(nested())
def test_propagation_graph_has_converses(g):
    pg = propagation_graph(g)
    assert pg.nodes == g.names
    for u, c, v in g.tree_edges():
        assert (u, c, v) in pg.edges and (v, c.converse, u) in pg.edges
    assert len(pg.edges) == 2 * (len(g.names) - 1)


@given(nested())
def test_rename_and_iso(g):
    m = {n: n + "x" for n in g.names}
    h = rename(g, m)
    assert h.shape == g.shape
    iso = iso_map(g, h)
    assert all(g[n].shape == h[iso[n]].shape for n in g.names)


def test_antecedents_are_multisets():
    g = flat((p, q), ())
    assert g == flat((q, p), ())
    assert add_ant(g, "w0", (p,)) != g
    assert remove_ant(add_ant(g, "w0", (p,)), "w0", p) == g


def test_child_edit_roundtrip():
    g = flat((p,), (q,))
    h = add_child(g, "w0", a, Nested("u", (q,)))
    rest, c, sub = remove_child(h, "u")
    assert rest == g and c == a and sub == Nested("u", (q,))


def test_output_moves():
    g = parse_sequent("p => q, (a)[- => -]")
    h = set_output(strip_output(g), "w1", p)
    assert h.output == ("w1", p)
    with pytest.raises(SequentError):
        set_output(g, "w1", p)


def test_merge_odot():
    g = Nested("w", (p,), (), ((a, Nested("u")),))
    k = Nested("w", (q,), (), ((a, Nested("v", (q,))),))
    m = merge_odot(g, k)
    assert sorted(map(str, m.ant)) == ["p", "q"]
    assert {n.name for _, n in m.children} == {"u", "v"}
