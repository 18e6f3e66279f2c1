"""Finite bi-relational models: validation, evaluation and countermodel search.

Two evaluation routes are kept apart on purpose.  ``eval_formula`` and
``eval_sequent`` follow the satisfaction clauses literally over Python sets
and serve as the reference.  The enumeration machinery evaluates whole
batches of frames and valuations at once with worlds encoded as bitmasks;
it is what makes exhaustive search over small models affordable.  The test
suite cross-checks the two.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from math import prod
from typing import Hashable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .formula import (
    And, Atom, Bot, Box, Char, Dia, Formula, Imp, Or, atoms, big_and, big_or, chars,
)
from .grammar import AxiomSet
from .sequent import Nested

World = Hashable
MAX_WORLDS = 4
MAX_CHARS = 2
_BATCH = 1 << 21  # cells per (frames x valuations) block


@dataclass(frozen=True, eq=False)
class Model:
    worlds: tuple[World, ...]
    leq: frozenset[tuple[World, World]]
    rel: Mapping[Char, frozenset[tuple[World, World]]]
    valuation: Mapping[World, frozenset[str]]

    def R(self, x: Char) -> frozenset:
        return self.rel.get(x, frozenset())

    @cached_property
    def up(self) -> dict[World, frozenset]:
        return {w: frozenset(u for u in self.worlds if (w, u) in self.leq) for w in self.worlds}

    @cached_property
    def succ(self) -> dict[tuple[Char, World], frozenset]:
        out: dict = {}
        for x, pairs in self.rel.items():
            for w, u in pairs:
                out.setdefault((x, w), set()).add(u)
        return {k: frozenset(v) for k, v in out.items()}

    def successors(self, x: Char, w: World) -> frozenset:
        return self.succ.get((x, w), frozenset())

    def to_json(self) -> dict:
        return {
            "worlds": list(self.worlds),
            "leq": sorted([list(p) for p in self.leq], key=str),
            "rel": {str(x): sorted([list(p) for p in ps], key=str)
                    for x, ps in sorted(self.rel.items())},
            "valuation": {str(w): sorted(self.valuation.get(w, ())) for w in self.worlds},
        }

    @staticmethod
    def from_json(data: dict | str) -> "Model":
        if isinstance(data, str):
            data = json.loads(data)
        worlds = tuple(data["worlds"])
        by_text = {str(w): w for w in worlds}
        val = {by_text[k]: frozenset(v) for k, v in data.get("valuation", {}).items()}
        return Model(
            worlds,
            frozenset((a, b) for a, b in data.get("leq", [])),
            {Char.parse(x): frozenset((a, b) for a, b in ps) for x, ps in data.get("rel", {}).items()},
            {w: val.get(w, frozenset()) for w in worlds},
        )


@dataclass(frozen=True)
class Violation:
    condition: str
    witness: tuple
    message: str

    def __str__(self) -> str:
        return f"{self.condition}: {self.message}"


def _compose(m: Model, word: Sequence[Char]) -> set[tuple[World, World]]:
    cur = {(w, w) for w in m.worlds}
    for c in word:
        cur = {(a, v) for a, b in cur for v in m.successors(c, b)}
    return cur


def validate_model(m: Model, axioms: AxiomSet) -> list[Violation]:
    """All violated frame, model and axiom conditions; empty when m is an A-model."""
    out: list[Violation] = []
    W = set(m.worlds)
    add = lambda cond, wit, msg: out.append(Violation(cond, tuple(wit), msg))

    for a, b in m.leq:
        if a not in W or b not in W:
            add("domain", (a, b), f"leq pair ({a},{b}) leaves the world set")
    for x, ps in m.rel.items():
        for a, b in ps:
            if a not in W or b not in W:
                add("domain", (x, a, b), f"R_{x} pair ({a},{b}) leaves the world set")
    for w in m.valuation:
        if w not in W:
            add("domain", (w,), f"valuation mentions unknown world {w}")
    if out:
        return out

    for w in m.worlds:
        if (w, w) not in m.leq:
            add("preorder", (w,), f"leq is not reflexive at {w}")
    for a, b in m.leq:
        for c in m.up[b]:
            if (a, c) not in m.leq:
                add("preorder", (a, b, c), f"leq is not transitive: {a}<={b}<={c}")

    xs = set(m.rel) | {x.converse for x in m.rel} | axioms.serial | axioms.mentioned()
    for x in sorted(xs):
        for a, b in m.R(x):
            if (b, a) not in m.R(x.converse):
                add("F3", (x, a, b), f"{a} R_{x} {b} but not {b} R_{x.converse} {a}")
    for x in sorted(xs):
        for w, v in m.R(x):
            for w2 in m.up[w]:
                if not any(v2 in m.up[v] for v2 in m.successors(x, w2)):
                    add("F1", (x, w, w2, v), f"{w}<={w2}, {w} R_{x} {v}: no matching successor of {w2}")
            for v2 in m.up[v]:
                if not any((w2, v2) in m.R(x) for w2 in m.up[w]):
                    add("F2", (x, w, v, v2), f"{w} R_{x} {v}<={v2}: no matching predecessor above {w}")

    for a, b in m.leq:
        missing = m.valuation.get(a, frozenset()) - m.valuation.get(b, frozenset())
        if missing:
            add("monotonicity", (a, b), f"{sorted(missing)} true at {a} but not at {b}")

    for x in sorted(axioms.serial):
        for w in m.worlds:
            if not m.successors(x, w):
                add("seriality", (x, w), f"{w} has no {x}-successor")
    for x, s in sorted(axioms.paths, key=lambda p: (p[0], p[1])):
        for a, b in sorted(_compose(m, s) - set(m.R(x)), key=str):
            word = "".join(str(c) for c in s) or "eps"
            add("path", (x, s, a, b), f"{a} R_{word} {b} but not {a} R_{x} {b}")
    return out


# -- reference evaluation -----------------------------------------------------


def eval_formula(m: Model, w: World, a: Formula) -> bool:
    if isinstance(a, Atom):
        return a.name in m.valuation.get(w, ())
    if isinstance(a, Bot):
        return False
    if isinstance(a, Or):
        return eval_formula(m, w, a.left) or eval_formula(m, w, a.right)
    if isinstance(a, And):
        return eval_formula(m, w, a.left) and eval_formula(m, w, a.right)
    if isinstance(a, Imp):
        return all(
            not eval_formula(m, u, a.left) or eval_formula(m, u, a.right) for u in m.up[w]
        )
    if isinstance(a, Dia):
        return any(eval_formula(m, u, a.body) for u in m.successors(a.char, w))
    if isinstance(a, Box):
        return all(
            eval_formula(m, v, a.body) for u in m.up[w] for v in m.successors(a.char, u)
        )
    raise TypeError(a)


def component_formula(n: Nested) -> Formula:
    return Imp(big_and(list(n.ant)), big_or(list(n.con)))


READINGS = ("local", "formula")


def _reading(reading: str) -> str:
    if reading not in READINGS:
        raise ValueError(f"reading must be one of {READINGS}")
    return reading


def eval_sequent(m: Model, interp: Mapping[str, World], g: Nested, reading: str = "local") -> bool:
    """Is g satisfied on m with the interpretation?

    When every tree edge holds under the interpretation, some component must
    hold at its world.  With the "local" reading a component holds at u when
    one of its antecedents fails at u or its output holds at u; this is the
    reading under which the rules are sound.  The "formula" reading asks
    instead for the intuitionistic implication (and A) -> (or D) at u, which
    also looks at worlds above u.  The two agree on single components up to
    validity but not on nested sequents.
    """
    _reading(reading)
    missing = g.names - set(interp)
    if missing:
        raise ValueError(f"interpretation misses {sorted(missing)}")
    if not all((interp[u], interp[v]) in m.R(x) for u, x, v in g.tree_edges()):
        return True
    if reading == "formula":
        return any(eval_formula(m, interp[n.name], component_formula(n)) for n in g.walk())
    return any(
        not all(eval_formula(m, interp[n.name], f) for f in n.ant)
        or any(eval_formula(m, interp[n.name], f) for f in n.con)
        for n in g.walk()
    )


# -- bitmask frames -------------------------------------------------------------


def _bits(m: int, n: int) -> list[int]:
    return [v for v in range(n) if m >> v & 1]


@dataclass(frozen=True)
class Preorder:
    n: int
    up: tuple[int, ...]
    automorphisms: tuple[tuple[int, ...], ...]


def _perm_mask(m: int, pi: Sequence[int]) -> int:
    out = 0
    for v, t in enumerate(pi):
        if m >> v & 1:
            out |= 1 << t
    return out


@lru_cache(maxsize=None)
def canonical_preorders(n: int) -> tuple[Preorder, ...]:
    """One preorder on range(n) per isomorphism class, with its automorphisms."""
    off = [(a, b) for a in range(n) for b in range(n) if a != b]
    perms = list(itertools.permutations(range(n)))
    seen: set = set()
    out = []
    for bits in range(1 << len(off)):
        up = [1 << w for w in range(n)]
        for i, (a, b) in enumerate(off):
            if bits >> i & 1:
                up[a] |= 1 << b
        # transitive iff every successor's up-set is contained in one's own
        if any(up[b] & ~up[a] for a in range(n) for b in _bits(up[a], n)):
            continue
        variants = []
        for pi in perms:
            q = [0] * n
            for w in range(n):
                q[pi[w]] = _perm_mask(up[w], pi)
            variants.append(tuple(q))
        canon = min(variants)
        if canon in seen:
            continue
        seen.add(canon)
        autos = tuple(
            pi for pi in perms
            if all(_perm_mask(canon[w], pi) == canon[pi[w]] for w in range(n))
        )
        out.append(Preorder(n, canon, autos))
    return tuple(out)


def up_sets(p: Preorder) -> list[int]:
    return [m for m in range(1 << p.n) if all(p.up[w] & ~m == 0 for w in _bits(m, p.n))]


def _decode(codes: np.ndarray, n: int) -> np.ndarray:
    full = (1 << n) - 1
    return np.stack([(codes >> (w * n)) & full for w in range(n)], axis=1)


def _converse(R: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros_like(R)
    for w in range(n):
        for v in range(n):
            out[:, v] |= ((R[:, w] >> v) & 1) << w
    return out


def _sat_f1_f2(R: np.ndarray, p: Preorder) -> np.ndarray:
    n = p.n
    ok = np.ones(len(R), dtype=bool)
    S = [np.bitwise_or.reduce(R[:, _bits(p.up[w], n)], axis=1) for w in range(n)]
    for w in range(n):
        for v in range(n):
            has = ((R[:, w] >> v) & 1).astype(bool)
            for w2 in _bits(p.up[w], n):
                if w2 != w:
                    ok &= ~has | ((R[:, w2] & p.up[v]) != 0)
            ok &= ~has | ((p.up[v] & ~S[w]) == 0)
    return ok


def _path_ok(rel: Mapping[Char, np.ndarray], n: int, x: Char, s: Sequence[Char]) -> np.ndarray:
    F = len(next(iter(rel.values())))
    cur = np.tile(np.array([1 << w for w in range(n)], dtype=np.int64), (F, 1))
    for c in s:
        nxt = np.zeros_like(cur)
        for w in range(n):
            for v in range(n):
                nxt[:, w] |= np.where((cur[:, w] >> v) & 1, rel[c][:, v], 0)
        cur = nxt
    return np.all((cur & ~rel[x]) == 0, axis=1)


def _letters(x: Char, s: Sequence[Char]) -> set[Char]:
    return {c.forward for c in (x, *s)}


def _char_candidates(p: Preorder, x: Char, axioms: AxiomSet) -> np.ndarray:
    """Codes of relations R_x on p meeting F1/F2 in both directions and the
    axioms that mention x alone."""
    n = p.n
    codes = np.arange(1 << (n * n), dtype=np.int64)
    R = _decode(codes, n)
    Rc = _converse(R, n)
    ok = _sat_f1_f2(R, p) & _sat_f1_f2(Rc, p)
    if x in axioms.serial:
        ok &= np.all(R != 0, axis=1)
    if x.converse in axioms.serial:
        ok &= np.all(Rc != 0, axis=1)
    rel = {x: R, x.converse: Rc}
    for y, s in axioms.paths:
        if _letters(y, s) == {x}:
            ok &= _path_ok(rel, n, y, s)
    return codes[ok]


def _permute_codes(codes: np.ndarray, n: int, pi: Sequence[int]) -> np.ndarray:
    full = (1 << n) - 1
    out = np.zeros_like(codes)
    for w in range(n):
        m = (codes >> (w * n)) & full
        pm = np.zeros_like(m)
        for v in range(n):
            pm |= ((m >> v) & 1) << pi[v]
        out |= pm << (pi[w] * n)
    return out


@dataclass
class FrameBatch:
    """Frames sharing one preorder; ``rel[x]`` has shape (frames, worlds)."""

    pre: Preorder
    fwd: tuple[Char, ...]
    rel: dict[Char, np.ndarray]
    size: int

    def frame_model(self, f: int, valuation: Mapping[int, frozenset[str]]) -> Model:
        n = self.pre.n
        leq = frozenset((w, u) for w in range(n) for u in _bits(self.pre.up[w], n))
        rel = {
            x: frozenset((w, u) for w in range(n) for u in _bits(int(R[f, w]), n))
            for x, R in self.rel.items()
        }
        return Model(tuple(range(n)), leq, rel, {w: valuation.get(w, frozenset()) for w in range(n)})


def frame_batches(n: int, fwd: Sequence[Char], axioms: AxiomSet,
                  chunk: int = 1 << 16) -> Iterator[FrameBatch]:
    """All A-frames on n worlds over the given forward characters, one per
    isomorphism class (up to relabelling that fixes the preorder)."""
    fwd = tuple(sorted(set(fwd)))
    multi = [(y, s) for y, s in axioms.paths if len(_letters(y, s)) > 1]
    for p in canonical_preorders(n):
        cands = [_char_candidates(p, x, axioms) for x in fwd]
        if any(len(c) == 0 for c in cands):
            continue
        sizes = [len(c) for c in cands]
        total = prod(sizes)
        for start in range(0, total, chunk):
            flat = np.arange(start, min(total, start + chunk), dtype=np.int64)
            if fwd:
                idx = np.unravel_index(flat, sizes)
                codes = [c[i] for c, i in zip(cands, idx)]
            else:
                codes = []
            F = len(flat)
            keep = np.ones(F, dtype=bool)
            if len(p.automorphisms) > 1 and codes:
                joint = sum(c << (i * n * n) for i, c in enumerate(codes))
                for pi in p.automorphisms:
                    pj = sum(_permute_codes(c, n, pi) << (i * n * n) for i, c in enumerate(codes))
                    keep &= joint <= pj
            rel: dict[Char, np.ndarray] = {}
            for x, c in zip(fwd, codes):
                R = _decode(c, n)
                rel[x] = R
                rel[x.converse] = _converse(R, n)
            if multi and codes:
                for y, s in multi:
                    keep &= _path_ok(rel, n, y, s)
            if not keep.all():
                rel = {x: R[keep] for x, R in rel.items()}
            size = int(keep.sum())
            if size:
                yield FrameBatch(p, fwd, rel, size)


# -- batch evaluation -------------------------------------------------------------


class _Evaluator:
    """Evaluates formulas to world masks of shape (frames, valuations)."""

    def __init__(self, batch: FrameBatch, val: Mapping[str, np.ndarray]):
        self.b = batch
        self.n = batch.pre.n
        self.full = (1 << self.n) - 1
        self.val = val
        self.memo: dict = {}
        self._boxreach: dict = {}

    def _R(self, x: Char) -> np.ndarray:
        R = self.b.rel.get(x)
        if R is None:
            return np.zeros((self.b.size, self.n), dtype=np.int64)
        return R

    def dia(self, x: Char, A: np.ndarray) -> np.ndarray:
        R = self._R(x)
        out = np.zeros(np.broadcast_shapes(A.shape, (self.b.size, 1)), dtype=np.int64)
        for w in range(self.n):
            out |= ((R[:, w:w + 1] & A) != 0).astype(np.int64) << w
        return out

    def box(self, x: Char, A: np.ndarray) -> np.ndarray:
        if x not in self._boxreach:
            R = self._R(x)
            up = self.b.pre.up
            self._boxreach[x] = [
                np.bitwise_or.reduce(R[:, _bits(up[w], self.n)], axis=1)[:, None] for w in range(self.n)
            ]
        S = self._boxreach[x]
        notA = ~A & self.full
        out = np.zeros(np.broadcast_shapes(A.shape, (self.b.size, 1)), dtype=np.int64)
        for w in range(self.n):
            out |= ((S[w] & notA) == 0).astype(np.int64) << w
        return out

    def imp(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        bad = A & ~B & self.full
        out = np.zeros(bad.shape, dtype=np.int64)
        for w in range(self.n):
            out |= ((bad & self.b.pre.up[w]) == 0).astype(np.int64) << w
        return out

    def __call__(self, a: Formula) -> np.ndarray:
        hit = self.memo.get(a)
        if hit is not None:
            return hit
        if isinstance(a, Atom):
            out = self.val[a.name]
        elif isinstance(a, Bot):
            out = np.zeros((1, 1), dtype=np.int64)
        elif isinstance(a, Or):
            out = self(a.left) | self(a.right)
        elif isinstance(a, And):
            out = self(a.left) & self(a.right)
        elif isinstance(a, Imp):
            out = self.imp(self(a.left), self(a.right))
        elif isinstance(a, Dia):
            out = self.dia(a.char, self(a.body))
        elif isinstance(a, Box):
            out = self.box(a.char, self(a.body))
        else:
            raise TypeError(a)
        self.memo[a] = out
        return out

    def refutes(self, k: Nested, reading: str) -> np.ndarray:
        """Worlds where component k fails under the given reading."""
        if reading == "formula":
            return ~self(component_formula(k)) & self.full
        m = np.full((1, 1), self.full, dtype=np.int64)
        for f in k.ant:
            m = m & self(f)
        for f in k.con:
            m = m & ~self(f)
        return m & self.full

    def falsifiers(self, g: Nested, reading: str = "local") -> dict[str, np.ndarray]:
        """ok[n]: worlds where component n fails and every child subtree can
        be falsified along a matching edge."""
        ok: dict[str, np.ndarray] = {}

        def go(k: Nested) -> np.ndarray:
            m = self.refutes(k, reading)
            for x, c in k.children:
                m = m & self.dia(x, go(c))
            ok[k.name] = m
            return m

        go(g)
        return ok


def _valuation_chunks(p: Preorder, names: Sequence[str], limit: int) -> Iterator[dict[str, np.ndarray]]:
    U = np.array(up_sets(p), dtype=np.int64)
    k = len(names)
    total = len(U) ** k
    for start in range(0, total, limit):
        flat = np.arange(start, min(total, start + limit), dtype=np.int64)
        idx = np.unravel_index(flat, (len(U),) * k) if k else ()
        yield {a: U[i][None, :] for a, i in zip(names, idx)}


def _chunks(batch: FrameBatch, step: int) -> Iterator[FrameBatch]:
    for s in range(0, batch.size, step):
        e = min(batch.size, s + step)
        yield FrameBatch(batch.pre, batch.fwd, {x: R[s:e] for x, R in batch.rel.items()}, e - s)


def _valuation_at(val: Mapping[str, np.ndarray], v: int, n: int) -> dict[int, frozenset[str]]:
    out: dict[int, set] = {w: set() for w in range(n)}
    for a, arr in val.items():
        m = int(arr[0, v])
        for w in _bits(m, n):
            out[w].add(a)
    return {w: frozenset(s) for w, s in out.items()}


def _forward_chars(items: Iterable[Char], axioms: AxiomSet) -> tuple[Char, ...]:
    return tuple(sorted({c.forward for c in items} | {c.forward for c in axioms.mentioned()}))


def _check_caps(max_worlds: int, fwd: Sequence[Char], char_cap: int = MAX_CHARS) -> None:
    if max_worlds > MAX_WORLDS:
        raise ValueError(f"model enumeration is capped at {MAX_WORLDS} worlds")
    if len(fwd) > char_cap:
        raise ValueError(
            f"model enumeration is capped at {char_cap} forward characters, got {len(fwd)}"
        )


@dataclass(frozen=True)
class Countermodel:
    model: Model
    world: World | None = None
    interpretation: Mapping[str, World] | None = None


def _search(g: Nested, axioms: AxiomSet, max_worlds: int, min_worlds: int = 1, char_cap: int = MAX_CHARS,
            reading: str = "local") -> Countermodel | None:
    _reading(reading)
    used = {c for n in g.walk() for f in (*n.ant, *n.con) for c in chars(f)}
    used |= {x for _, x, _ in g.tree_edges()}
    fwd = _forward_chars(used, axioms)
    _check_caps(max_worlds, fwd, char_cap)
    names = sorted({a for n in g.walk() for f in (*n.ant, *n.con) for a in atoms(f)})
    for n in range(min_worlds, max_worlds + 1):
        for batch in frame_batches(n, fwd, axioms):
            nU = len(up_sets(batch.pre))
            per_val = max(1, _BATCH // max(1, nU ** len(names)))
            for sub in _chunks(batch, per_val):
                for val in _valuation_chunks(batch.pre, names, _BATCH):
                    V = next(iter(val.values())).shape[1] if val else 1
                    ev = _Evaluator(sub, val)
                    ok = ev.falsifiers(g, reading)
                    hits = np.argwhere(np.broadcast_to(ok[g.name], (sub.size, V)) != 0)
                    if len(hits):
                        f, v = map(int, hits[0])
                        return _extract(ev, ok, g, sub, val, f, v)
    return None


def _extract(ev: _Evaluator, ok, g: Nested, batch: FrameBatch, val, f: int, v: int) -> Countermodel:
    n = batch.pre.n
    valuation = _valuation_at(val, v, n) if val else {w: frozenset() for w in range(n)}
    model = batch.frame_model(f, valuation)

    def cell(arr: np.ndarray) -> int:
        arr = np.broadcast_to(arr, (batch.size, max(1, arr.shape[1])))
        return int(arr[f, min(v, arr.shape[1] - 1)])

    interp: dict[str, int] = {}

    def place(k: Nested, w: int) -> None:
        interp[k.name] = w
        for x, c in k.children:
            R = ev._R(x)
            choices = int(R[f, w]) & cell(ok[c.name])
            place(c, _bits(choices, n)[0])

    place(g, _bits(cell(ok[g.name]), n)[0])
    return Countermodel(model, interp[g.name], interp)


def find_countermodel(a: Formula, axioms: AxiomSet, max_worlds: int = 3) -> Countermodel | None:
    """Smallest A-model (up to max_worlds) with a world refuting a, or None."""
    from .sequent import flat

    return _search(flat((), (a,)), axioms, max_worlds)


def find_sequent_countermodel(g: Nested, axioms: AxiomSet, max_worlds: int = 3,
                              char_cap: int = MAX_CHARS, reading: str = "local") -> Countermodel | None:
    """A-model and interpretation falsifying g, or None if none exists up to max_worlds.

    ``char_cap`` may be raised above the default only for tiny world counts;
    the caller owns the cost.
    """
    return _search(g, axioms, max_worlds, char_cap=char_cap, reading=reading)


def is_valid_up_to(g: Nested, axioms: AxiomSet, max_worlds: int = 3, reading: str = "local") -> bool:
    return find_sequent_countermodel(g, axioms, max_worlds, reading=reading) is None


def enumerate_models(n: int, fwd: Sequence[Char], axioms: AxiomSet,
                     atom_names: Sequence[str]) -> Iterator[Model]:
    """Every A-model on n worlds (frames up to isomorphism, all valuations)."""
    _check_caps(n, fwd)
    for batch in frame_batches(n, fwd, axioms):
        U = up_sets(batch.pre)
        for f in range(batch.size):
            for choice in itertools.product(U, repeat=len(atom_names)):
                valuation = {w: frozenset(a for a, m in zip(atom_names, choice) if m >> w & 1)
                             for w in range(n)}
                yield batch.frame_model(f, valuation)
