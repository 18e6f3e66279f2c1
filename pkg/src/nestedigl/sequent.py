"""Nested sequents: trees of named single-conclusion Gentzen sequents."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Iterable, Iterator, Sequence

from .formula import Char, Formula, ParseError, TokenStream, key, to_text
from .grammar import PropagationGraph


class SequentError(ValueError):
    """Violation of the nested-sequent invariants."""


@dataclass(frozen=True)
class Gentzen:
    ant: tuple[Formula, ...] = ()
    con: tuple[Formula, ...] = ()

    def __post_init__(self):
        if len(self.con) > 1:
            raise SequentError("a Gentzen sequent has at most one consequent")


@dataclass(frozen=True, eq=False)
class Nested:
    """A component with its name, antecedent, consequent and children.

    Equality is structural with names, antecedents compared as multisets and
    children as a multiset; use ``shape`` to compare up to renaming.
    """

    name: str
    ant: tuple[Formula, ...] = ()
    con: tuple[Formula, ...] = ()
    children: tuple[tuple[Char, "Nested"], ...] = ()

    def __post_init__(self):
        if len(self.con) > 1:
            raise SequentError("a component has at most one consequent")

    @cached_property
    def named_key(self) -> tuple:
        return (
            self.name,
            tuple(sorted(key(f) for f in self.ant)),
            tuple(key(f) for f in self.con),
            tuple(sorted((str(c), k.named_key) for c, k in self.children)),
        )

    @cached_property
    def shape(self) -> tuple:
        """Canonical key up to renaming and reordering."""
        return (
            tuple(sorted(key(f) for f in self.ant)),
            tuple(key(f) for f in self.con),
            tuple(sorted((str(c), k.shape) for c, k in self.children)),
        )

    def __eq__(self, other) -> bool:
        return isinstance(other, Nested) and self.named_key == other.named_key

    def __hash__(self) -> int:
        return hash(self.named_key)

    def __str__(self) -> str:
        return to_sequent_text(self)

    def __repr__(self) -> str:
        return f"Nested({to_sequent_text(self, names=True)!r})"

    @property
    def gentzen(self) -> Gentzen:
        return Gentzen(self.ant, self.con)

    def walk(self) -> Iterator["Nested"]:
        yield self
        for _, c in self.children:
            yield from c.walk()

    @cached_property
    def index(self) -> dict[str, "Nested"]:
        out = {}
        for n in self.walk():
            if n.name in out:
                raise SequentError(f"duplicate component name {n.name}")
            out[n.name] = n
        return out

    @cached_property
    def names(self) -> frozenset[str]:
        return frozenset(self.index)

    def __getitem__(self, name: str) -> "Nested":
        try:
            return self.index[name]
        except KeyError:
            raise SequentError(f"no component named {name}") from None

    @cached_property
    def output(self) -> tuple[str, Formula] | None:
        found = [(n.name, n.con[0]) for n in self.walk() if n.con]
        if len(found) > 1:
            raise SequentError("more than one output formula")
        return found[0] if found else None

    @cached_property
    def parent(self) -> dict[str, tuple[str, Char]]:
        out = {}
        for n in self.walk():
            for c, k in n.children:
                out[k.name] = (n.name, c)
        return out

    def tree_edges(self) -> Iterator[tuple[str, Char, str]]:
        for n in self.walk():
            for c, k in n.children:
                yield (n.name, c, k.name)


def check_sequent(g: Nested) -> None:
    """Raise SequentError unless names are distinct and there is one output at most."""
    g.index
    g.output


def components(g: Nested) -> list[tuple[str, Gentzen]]:
    return [(n.name, n.gentzen) for n in g.walk()]


def propagation_graph(g: Nested) -> PropagationGraph:
    return _pg_cache(g)


def _pg_cache(g: Nested) -> PropagationGraph:
    pg = g.__dict__.get("_pg")
    if pg is None:
        pg = PropagationGraph.from_tree_edges(g.names, g.tree_edges())
        g.__dict__["_pg"] = pg
    return pg


# -- editing ----------------------------------------------------------------


def update(g: Nested, name: str, fn: Callable[[Nested], Nested]) -> Nested:
    """Rebuild g with the component called ``name`` replaced by fn(component)."""
    if g.name == name:
        return fn(g)
    if name not in g.names:
        raise SequentError(f"no component named {name}")
    kids = tuple(
        (c, update(k, name, fn)) if name in k.names else (c, k) for c, k in g.children
    )
    return replace(g, children=kids)


def add_ant(g: Nested, name: str, formulas: Iterable[Formula]) -> Nested:
    fs = tuple(formulas)
    if not fs:
        return g
    return update(g, name, lambda n: replace(n, ant=n.ant + fs))


def remove_ant(g: Nested, name: str, f: Formula) -> Nested:
    def drop(n: Nested) -> Nested:
        if f not in n.ant:
            raise SequentError(f"{to_text(f)} not in antecedent of {name}")
        i = n.ant.index(f)
        return replace(n, ant=n.ant[:i] + n.ant[i + 1:])

    return update(g, name, drop)


def set_output(g: Nested, name: str, f: Formula | None) -> Nested:
    """Put f (or nothing) as the consequent of ``name``; other consequents must be empty."""
    con = (f,) if f is not None else ()
    out = update(g, name, lambda n: replace(n, con=con))
    check_sequent(out)
    return out


def add_child(g: Nested, name: str, c: Char, child: Nested) -> Nested:
    if child.names & g.names:
        raise SequentError("child names clash with the sequent")
    out = update(g, name, lambda n: replace(n, children=n.children + ((c, child),)))
    check_sequent(out)
    return out


def remove_child(g: Nested, name: str) -> tuple[Nested, Char, Nested]:
    """Detach the subtree rooted at ``name``; returns (rest, its character, subtree)."""
    if name not in g.parent:
        raise SequentError(f"{name} is not a child component")
    par, c = g.parent[name]
    sub = g[name]
    rest = update(g, par, lambda n: replace(n, children=tuple(p for p in n.children if p[1].name != name)))
    return rest, c, sub


def strip_output(g: Nested) -> Nested:
    out = g.output
    if out is None:
        return g
    return update(g, out[0], lambda n: replace(n, con=()))


def merge_odot(g: Nested, k: Nested) -> Nested:
    """Merge two roots: antecedents and consequents joined, children concatenated.

    The result keeps the name of g's root.
    """
    if g.output is not None and k.output is not None:
        raise SequentError("both operands are right-filled")
    out = Nested(g.name, g.ant + k.ant, g.con + k.con, g.children + k.children)
    check_sequent(out)
    return out


def graft(g: Nested, w: str, s: Gentzen) -> Nested:
    """Add s's antecedent and consequent to component w."""
    if s.con and g.output is not None:
        raise SequentError("graft would create a second output formula")
    return update(g, w, lambda n: replace(n, ant=n.ant + s.ant, con=n.con + s.con))


def fresh_name(used: Iterable[str], prefix: str = "w") -> str:
    used = set(used)
    i = 0
    while f"{prefix}{i}" in used:
        i += 1
    return f"{prefix}{i}"


def rename(g: Nested, mapping: dict[str, str]) -> Nested:
    return Nested(
        mapping.get(g.name, g.name),
        g.ant,
        g.con,
        tuple((c, rename(k, mapping)) for c, k in g.children),
    )


def preorder_names(g: Nested, prefix: str = "w") -> Nested:
    """Rename components w0, w1, ... in preorder."""
    order = [n.name for n in g.walk()]
    return rename(g, {n: f"{prefix}{i}" for i, n in enumerate(order)})


def iso_map(a: Nested, b: Nested) -> dict[str, str]:
    """A name map witnessing that a and b have the same shape."""
    if a.shape != b.shape:
        raise SequentError("sequents differ up to renaming")
    out = {a.name: b.name}
    pool = list(b.children)
    for c, k in a.children:
        for i, (d, m) in enumerate(pool):
            if d == c and m.shape == k.shape:
                out.update(iso_map(k, m))
                del pool[i]
                break
    return out


def same_shape(a: Nested, b: Nested) -> bool:
    return a.shape == b.shape


def ant_counter(n: Nested) -> Counter:
    return Counter(n.ant)


def sequent_formulas(g: Nested) -> Iterator[Formula]:
    for n in g.walk():
        yield from n.ant
        yield from n.con


def flat(ant: Sequence[Formula] = (), con: Sequence[Formula] = (), name: str = "w0") -> Nested:
    return Nested(name, tuple(ant), tuple(con))


# -- text syntax ------------------------------------------------------------


def _flist(fs: Sequence[Formula]) -> str:
    return ", ".join(to_text(f) for f in fs) if fs else "-"


def to_sequent_text(g: Nested, names: bool = False) -> str:
    """``A, B => C, (x)[...]``; empty lists print as ``-``."""
    head = f"{g.name}: " if names else ""
    s = f"{head}{_flist(g.ant)} => {_flist(g.con)}"
    for c, k in g.children:
        s += f", ({c})[{to_sequent_text(k, names)}]"
    return s


class _SequentParser:
    def __init__(self, text: str, alphabet=None):
        self.ts = TokenStream(text, alphabet)
        self.count = 0

    def _is_nest(self) -> bool:
        ts = self.ts
        if not ts.at("("):
            return False
        k1 = ts.peek_at(1)
        k2 = ts.peek_at(2)
        j = 2
        if k2[0] == "sym" and k2[1] == "^":
            j = 3
        close, brack = ts.peek_at(j), ts.peek_at(j + 1)
        return (
            k1[0] == "id"
            and close[:2] == ("sym", ")")
            and brack[:2] == ("sym", "[")
        )

    def _named(self) -> str | None:
        ts = self.ts
        k0, k1 = ts.peek, ts.peek_at(1)
        if k0[0] == "id" and k1[:2] == ("sym", ":"):
            ts.next()
            ts.next()
            return k0[1]
        return None

    def flist(self, allow_nest: bool) -> list[Formula]:
        ts = self.ts
        if ts.at("-"):
            ts.next()
            return []
        if allow_nest and self._is_nest():
            return []
        if ts.at("=>") or ts.at("]") or ts.peek[0] == "end":
            return []
        out = [ts.formula()]
        while ts.at(","):
            save = ts.i
            ts.next()
            if allow_nest and self._is_nest():
                ts.i = save
                break
            out.append(ts.formula())
        return out

    def sequent(self) -> Nested:
        ts = self.ts
        name = self._named()
        if name is None:
            name = f"w{self.count}"
        self.count += 1
        ant = self.flist(False)
        ts.expect("=>")
        con = self.flist(True)
        kids = []
        while True:
            if ts.at(","):
                save = ts.i
                ts.next()
                if not self._is_nest():
                    ts.i = save
                    break
            elif not self._is_nest():
                break
            ts.expect("(")
            c = ts.char()
            ts.expect(")")
            ts.expect("[")
            kids.append((c, self.sequent()))
            ts.expect("]")
        if len(con) > 1:
            raise ParseError("at most one consequent formula", ts.peek[2])
        return Nested(name, tuple(ant), tuple(con), tuple(kids))


def parse_sequent(text: str, alphabet=None) -> Nested:
    """Parse the sequent syntax; components are named w0, w1, ... in preorder
    unless written with an explicit ``name:`` prefix."""
    p = _SequentParser(text, alphabet)
    g = p.sequent()
    p.ts.done()
    try:
        check_sequent(g)
    except SequentError as e:
        raise ParseError(str(e), 0) from None
    return g
