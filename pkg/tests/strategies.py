import hypothesis.strategies as st

from nestedigl.formula import And, Atom, BOT, Box, Char, Dia, Imp, Or
from nestedigl.sequent import Nested

chars = st.sampled_from([Char("a"), Char("a", True), Char("b"), Char("b", True)])
atoms = st.sampled_from(["p", "q", "r"]).map(Atom)


def formulas(max_leaves=8, chars=chars):
    leaves = st.one_of(atoms, st.just(BOT))
    return st.recursive(
        leaves,
        lambda sub: st.one_of(
            st.builds(And, sub, sub),
            st.builds(Or, sub, sub),
            st.builds(Imp, sub, sub),
            st.builds(Dia, chars, sub),
            st.builds(Box, chars, sub),
        ),
        max_leaves=max_leaves,
    )


@st.composite
def nested(draw, max_nodes=3, fs=None, chars=chars):
    """A nested sequent with at most one output; components are w0, w1, ..."""
    fs = formulas(4) if fs is None else fs
    n = draw(st.integers(1, max_nodes))
    parents = [None] + [draw(st.integers(0, i - 1)) for i in range(1, n)]
    edge = [None] + [draw(chars) for _ in range(1, n)]
    out_at = draw(st.one_of(st.none(), st.integers(0, n - 1)))
    ants = [tuple(draw(st.lists(fs, max_size=2))) for _ in range(n)]
    outs = [(draw(fs),) if i == out_at else () for i in range(n)]

    def build(i):
        kids = tuple((edge[j], build(j)) for j in range(n) if parents[j] == i)
        return Nested(f"w{i}", ants[i], outs[i], kids)

    return build(0)
