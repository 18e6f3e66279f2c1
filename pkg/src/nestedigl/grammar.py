"""Axiom sets, their grammars, and path-language reachability.

A path axiom ``(x, s)`` stands for ``(<s>A -> <x>A) & ([x]A -> [s]A)`` and
compiles to the productions ``x -> s`` and ``x^ -> conv(s)``.  Every
production has a single character on the left, so the language ``L(x)`` of
strings derivable from ``x`` is context-free, and the propagation side
condition "some path from w to u spells a word of L(x)" is a
CFL-reachability query on the propagation graph.
"""

from __future__ import annotations

import json
from collections import defaultdict, deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

from .formula import AlphabetError, Char, close_alphabet, converse_string

Production = tuple[Char, tuple[Char, ...]]


def _char(c: Char | str) -> Char:
    return Char.parse(c) if isinstance(c, str) else c


@dataclass(frozen=True)
class AxiomSet:
    """Seriality axioms and path axioms over a converse-closed alphabet.

    An empty alphabet means "any character".
    """

    serial: frozenset[Char] = frozenset()
    paths: frozenset[Production] = frozenset()
    alphabet: frozenset[Char] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "serial", frozenset(_char(c) for c in self.serial))
        object.__setattr__(
            self, "paths", frozenset((_char(x), tuple(_char(c) for c in s)) for x, s in self.paths)
        )
        object.__setattr__(self, "alphabet", close_alphabet(self.alphabet))
        if self.alphabet:
            for c in self.mentioned():
                if c not in self.alphabet:
                    raise AlphabetError(f"character {c} not in alphabet")

    def mentioned(self) -> frozenset[Char]:
        out = set(self.serial)
        for x, s in self.paths:
            out.add(x)
            out.update(s)
        return frozenset(out)

    @staticmethod
    def of(serial: Iterable[str] = (), paths: Iterable[tuple[str, Sequence[str]]] = (),
           alphabet: Iterable[str] = ()) -> "AxiomSet":
        return AxiomSet(
            frozenset(Char.parse(c) for c in serial),
            frozenset((Char.parse(x), tuple(Char.parse(c) for c in s)) for x, s in paths),
            close_alphabet(alphabet),
        )

    def to_json(self) -> dict:
        fwd = sorted({str(c.forward) for c in self.alphabet})
        return {
            "alphabet": fwd,
            "serial": sorted(str(c) for c in self.serial),
            "paths": [
                {"lhs": str(x), "rhs": [str(c) for c in s]}
                for x, s in sorted(self.paths, key=lambda p: (str(p[0]), [str(c) for c in p[1]]))
            ],
        }

    @staticmethod
    def from_json(data: dict | str) -> "AxiomSet":
        if isinstance(data, str):
            data = json.loads(data)
        if not isinstance(data, dict):
            raise ValueError("axiom file must hold a JSON object")
        unknown = set(data) - {"alphabet", "serial", "paths"}
        if unknown:
            raise ValueError(f"unknown axiom keys: {sorted(unknown)}")
        paths = []
        for p in data.get("paths", []):
            if not isinstance(p, dict) or "lhs" not in p or "rhs" not in p:
                raise ValueError(f"bad path axiom {p!r}")
            paths.append((p["lhs"], p["rhs"]))
        return AxiomSet.of(data.get("serial", []), paths, data.get("alphabet", []))


# -- named axioms of the modal cube ---------------------------------------


def axiom_T(x: str = "a") -> Production:
    return (Char.parse(x), ())


def axiom_4(x: str = "a") -> Production:
    c = Char.parse(x)
    return (c, (c, c))


def axiom_B(x: str = "a") -> Production:
    c = Char.parse(x)
    return (c, (c.converse,))


def axiom_5(x: str = "a") -> Production:
    c = Char.parse(x)
    return (c, (c.converse, c))


# -- grammars --------------------------------------------------------------


@dataclass(frozen=True)
class Grammar:
    productions: frozenset[Production] = field(default_factory=frozenset)

    def rules_for(self, x: Char) -> list[tuple[Char, ...]]:
        return sorted(
            (s for lhs, s in self.productions if lhs == x), key=lambda s: [str(c) for c in s]
        )

    def __str__(self) -> str:
        rows = []
        for x, s in sorted(self.productions, key=lambda p: (str(p[0]), [str(c) for c in p[1]])):
            rhs = " ".join(str(c) for c in s) or "eps"
            rows.append(f"{x} -> {rhs}")
        return "\n".join(rows)


def build_grammar(axioms: AxiomSet) -> Grammar:
    prods = set()
    for x, s in axioms.paths:
        prods.add((x, tuple(s)))
        prods.add((x.converse, converse_string(s)))
    return Grammar(frozenset(prods))


def _successors(g: Grammar, form: tuple[Char, ...]) -> Iterator[tuple[Char, ...]]:
    for i, c in enumerate(form):
        for lhs, rhs in g.productions:
            if lhs == c:
                yield form[:i] + rhs + form[i + 1:]


def derivation_costs(g: Grammar, s: Sequence[Char]) -> dict[tuple[Char, int, int], int]:
    """Fewest rewrite steps deriving each substring s[i:j] from each character.

    Relaxation to a fixpoint over (character, span) entries.  A derivation
    of s[i:j] from x starts with some x -> r1...rm and splits the span into
    m (possibly empty) pieces derived from the ri, so its cost is one plus
    the sum of the piece costs.  Costs only decrease and are bounded below,
    so the loop terminates.
    """
    s = tuple(s)
    n = len(s)
    inf = float("inf")
    symbols = {c for c in s} | {lhs for lhs, _ in g.productions}
    symbols |= {c for _, rhs in g.productions for c in rhs}
    cost: dict = {}
    for i, c in enumerate(s):
        cost[(c, i, i + 1)] = 0
    spans = [(i, j) for i in range(n + 1) for j in range(i, n + 1)]

    def best(rhs: tuple, i: int, j: int) -> float:
        # cheapest split of s[i:j] among the symbols of rhs
        if not rhs:
            return 0 if i == j else inf
        head, rest = rhs[0], rhs[1:]
        out = inf
        for k in range(i, j + 1):
            c = cost.get((head, i, k), inf)
            if c < out:
                out = min(out, c + best(rest, k, j))
        return out

    changed = True
    while changed:
        changed = False
        for lhs, rhs in sorted(g.productions, key=lambda p: (str(p[0]), [str(c) for c in p[1]])):
            for i, j in spans:
                c = 1 + best(rhs, i, j)
                if c < cost.get((lhs, i, j), inf):
                    cost[(lhs, i, j)] = c
                    changed = True
    return {k: v for k, v in cost.items() if k[0] in symbols}


def derives_bounded(g: Grammar, x: Char, s: Sequence[Char], bound: int) -> bool:
    """Is there a derivation x => ... => s of at most ``bound`` rewrite steps?"""
    if bound < 0:
        raise ValueError("bound must be non-negative")
    s = tuple(s)
    if s == (x,):
        return True
    return _costs(g, s).get((x, 0, len(s)), bound + 1) <= bound


@lru_cache(maxsize=65536)
def _costs(g: Grammar, s: tuple[Char, ...]) -> dict:
    return derivation_costs(g, s)


def derives_by_rewriting(g: Grammar, x: Char, s: Sequence[Char], bound: int) -> bool:
    """derives_bounded by breadth-first rewriting of sentential forms.

    A form longer than ``len(s)`` by more than the remaining step count can
    never shrink back to ``s`` (each step deletes at most one character), so
    it is pruned.  Exponential; meant for small bounds.
    """
    if bound < 0:
        raise ValueError("bound must be non-negative")
    target = tuple(s)
    start = (x,)
    if start == target:
        return True
    seen = {start}
    frontier = [start]
    for step in range(1, bound + 1):
        left = bound - step
        nxt = []
        for form in frontier:
            for f in _successors(g, form):
                if f == target:
                    return True
                if f in seen or len(f) - len(target) > left:
                    continue
                seen.add(f)
                nxt.append(f)
        frontier = nxt
    return False


def language_bounded(g: Grammar, x: Char, max_len: int, bound: int) -> frozenset[tuple[Char, ...]]:
    """All strings of length <= max_len derivable from x in <= bound steps."""
    start = (x,)
    depth = {start: 0}
    frontier = [start]
    for step in range(1, bound + 1):
        left = bound - step
        nxt = []
        for form in frontier:
            for f in _successors(g, form):
                if f in depth or len(f) - max_len > left:
                    continue
                depth[f] = step
                nxt.append(f)
        frontier = nxt
    return frozenset(f for f in depth if len(f) <= max_len)


# -- propagation graphs and CFL-reachability --------------------------------


@dataclass(frozen=True)
class PropagationGraph:
    nodes: frozenset[str]
    edges: frozenset[tuple[str, Char, str]]

    def __post_init__(self):
        for u, c, v in self.edges:
            if (v, c.converse, u) not in self.edges:
                raise ValueError(f"edge ({u},{c},{v}) lacks its converse")

    @staticmethod
    def from_tree_edges(nodes: Iterable[str], tree_edges: Iterable[tuple[str, Char, str]]):
        es = set()
        for u, c, v in tree_edges:
            es.add((u, c, v))
            es.add((v, c.converse, u))
        return PropagationGraph(frozenset(nodes), frozenset(es))

    def follow(self, u: str, s: Sequence[Char]) -> set[str]:
        """Endpoints of paths from u spelling s."""
        cur = {u}
        for c in s:
            cur = {v for (a, d, v) in self.edges if a in cur and d == c}
        return cur


class _Binarized:
    """Grammar in a normal form with right-hand sides of length <= 2.

    Nonterminals are characters (each deriving itself as a terminal) plus
    fresh integers introduced by binarization.
    """

    def __init__(self, g: Grammar):
        self.eps: set = set()
        self.unit: dict = defaultdict(set)  # B -> {A : A -> B}
        self.by_left: dict = defaultdict(set)  # B -> {(A, C) : A -> B C}
        self.by_right: dict = defaultdict(set)  # C -> {(A, B) : A -> B C}
        fresh = 0
        for lhs, rhs in sorted(g.productions, key=lambda p: (str(p[0]), [str(c) for c in p[1]])):
            if len(rhs) == 0:
                self.eps.add(lhs)
            elif len(rhs) == 1:
                self.unit[rhs[0]].add(lhs)
            else:
                head = lhs
                rest = list(rhs)
                while len(rest) > 2:
                    fresh += 1
                    self._binary(head, rest[0], fresh)
                    head, rest = fresh, rest[1:]
                self._binary(head, rest[0], rest[1])

    def _binary(self, a, b, c):
        self.by_left[b].add((a, c))
        self.by_right[c].add((a, b))


@lru_cache(maxsize=4096)
def _binarize(g: Grammar) -> _Binarized:
    return _Binarized(g)


@lru_cache(maxsize=8192)
def reach_relation(g: Grammar, pg: PropagationGraph) -> dict[tuple[Char, str], frozenset[str]]:
    """Map (x, u) to all v such that some path u ~> v spells a word of L(x).

    The returned mapping is shared through the cache and must not be mutated.
    """
    b = _binarize(g)
    facts: set = set()
    out_idx: dict = defaultdict(set)  # (X, u) -> {v}
    in_idx: dict = defaultdict(set)  # (X, v) -> {u}
    work: deque = deque()

    def add(x, u, v):
        if (x, u, v) not in facts:
            facts.add((x, u, v))
            out_idx[(x, u)].add(v)
            in_idx[(x, v)].add(u)
            work.append((x, u, v))

    for u, c, v in sorted(pg.edges, key=lambda e: (e[0], str(e[1]), e[2])):
        add(c, u, v)
    for x in b.eps:
        for u in sorted(pg.nodes):
            add(x, u, u)
    while work:
        x, u, v = work.popleft()
        for a in b.unit.get(x, ()):
            add(a, u, v)
        for a, c in b.by_left.get(x, ()):
            for w in list(out_idx.get((c, v), ())):
                add(a, u, w)
        for a, c in b.by_right.get(x, ()):
            for w in list(in_idx.get((c, u), ())):
                add(a, w, v)
    return {k: frozenset(vs) for k, vs in out_idx.items() if isinstance(k[0], Char)}


def reach(g: Grammar, pg: PropagationGraph, source: str, x: Char) -> frozenset[str]:
    """Nodes u such that some path from source to u spells a word of L(x).

    The empty word is in L(x) only through epsilon productions, so
    ``source`` itself is included only when such a derivation exists.
    """
    if source not in pg.nodes:
        raise KeyError(f"{source} is not a node of the graph")
    return reach_relation(g, pg).get((x, source), frozenset())
