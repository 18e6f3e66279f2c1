"""Lyndon interpolation over biased nested sequents.

A proof is replayed bottom-up over a biasing of its conclusion (each
antecedent split into a left and a right part, the output always on the
right).  Every node gets an interpolant: a finite set of ``name: formula``
pairs computed by the meta-operators ``combine`` and ``modal_lift``.

Alongside the interpolant, every pair w:C gets two side proofs, of
L(G)|>w(- => C) and of R(G)|>w(C => -), assembled from the side proofs of
the premises.  Some combination clauses (those where one premise has no pair
at a name) come with no such construction, so the pairs whose side proofs
cannot be built are dropped.  A node therefore carries two interpolants: the
one the calculus assigns (``interpolant``) and the one rebuilt from the
surviving pairs of the premises (``kept``).  Only ``kept`` is used to
produce checkable output.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Mapping

from .calculus import (
    CheckError, Proof, RuleError, RuleInstance, apply_backward, build, check_proof, instance,
)
from .formula import (
    BOT, NEG, POS, TOP, And, Atom, Bot, Box, Char, Dia, Formula, Imp, Or,
    atom_signature, big_and, big_or, flip, key, to_text,
)
from .grammar import AxiomSet
from .sequent import Nested, SequentError, add_ant, remove_child, set_output, strip_output
from .transform import TransformError, realign, weaken_left

Pair = tuple[str, Formula]


class InterpolationError(ValueError):
    """Bad input to the interpolation procedure, or no usable interpolant."""


# -- interpolants -------------------------------------------------------------


def _fkey(f: Formula) -> str:
    return key(f)


@dataclass(frozen=True)
class Interpolant:
    pairs: frozenset[Pair] = frozenset()

    @classmethod
    def of(cls, *pairs: Pair) -> "Interpolant":
        return cls(frozenset(pairs))

    def __iter__(self) -> Iterator[Pair]:
        return iter(self.ordered())

    def __len__(self) -> int:
        return len(self.pairs)

    def __contains__(self, pair) -> bool:
        return pair in self.pairs

    def ordered(self) -> list[Pair]:
        return sorted(self.pairs, key=lambda p: (p[0], _fkey(p[1])))

    def at(self, w: str) -> list[Formula]:
        """I(w), in canonical order."""
        return sorted((f for v, f in self.pairs if v == w), key=_fkey)

    @property
    def names(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.pairs)

    def sig(self, polarity: str) -> frozenset[str]:
        out: set[str] = set()
        for _, f in self.pairs:
            out |= atom_signature(f, polarity)
        return frozenset(out)

    def to_text(self) -> str:
        return "{" + ", ".join(f"{v}: {to_text(f)}" for v, f in self.ordered()) + "}"

    def to_json(self) -> list[dict]:
        return [{"name": v, "formula": to_text(f)} for v, f in self.ordered()]

    def __str__(self) -> str:
        return self.to_text()


COMBINE_KINDS = ("implies", "or", "and")


def combine(kind: str, i: Interpolant, j: Interpolant, names: Iterable[str]) -> Interpolant:
    """I => J, I (or) J or I (and) J, name by name over ``names``."""
    if kind not in COMBINE_KINDS:
        raise ValueError(f"combine kind must be one of {COMBINE_KINDS}")
    out: set[Pair] = set()
    for w in sorted(set(names) | i.names | j.names):
        cs, ds = i.at(w), j.at(w)
        if not cs and not ds:
            out.add((w, {"implies": Imp(TOP, BOT), "or": BOT, "and": TOP}[kind]))
        elif not ds:
            out.update((w, Imp(c, BOT) if kind == "implies" else c) for c in cs)
        elif not cs:
            out.update((w, Imp(TOP, d) if kind == "implies" else d) for d in ds)
        else:
            op = {"implies": Imp, "or": Or, "and": And}[kind]
            out.update((w, op(c, d)) for c in cs for d in ds)
    return Interpolant(frozenset(out))


def modal_lift(kind: str, x: Char, i: Interpolant, w: str, u: str) -> Interpolant:
    """[x]I^w_u (kind "box") or <x>I^w_u (kind "dia")."""
    if kind not in ("box", "dia"):
        raise ValueError("modal_lift kind must be 'box' or 'dia'")
    cs = i.at(u)
    if not cs:
        return i
    body = big_or(cs) if kind == "box" else big_and(cs)
    lifted = Box(x, body) if kind == "box" else Dia(x, body)
    return Interpolant(frozenset({(v, f) for v, f in i.pairs if v != u} | {(w, lifted)}))


# -- biased sequents ------------------------------------------------------------


def _msub(a: Iterable[Formula], b: Iterable[Formula]) -> tuple[Formula, ...]:
    """Multiset difference a - b, keeping a's order."""
    drop = Counter(b)
    out = []
    for f in a:
        if drop[f]:
            drop[f] -= 1
        else:
            out.append(f)
    return tuple(out)


def sequent_sig(g: Nested, polarity: str) -> frozenset[str]:
    """Atoms of g with the given polarity: the output keeps it, antecedents flip it."""
    out: set[str] = set()
    for n in g.walk():
        for f in n.ant:
            out |= atom_signature(f, flip(polarity))
        for f in n.con:
            out |= atom_signature(f, polarity)
    return frozenset(out)


@dataclass(frozen=True)
class BiasedSequent:
    """A nested sequent whose antecedents are split into a left and a right part.

    ``left`` maps component names to the left part (a sub-multiset of that
    antecedent); everything else, outputs included, is on the right.
    """

    seq: Nested
    left: tuple[tuple[str, tuple[Formula, ...]], ...] = ()

    def __post_init__(self):
        for w, fs in self.left:
            if w not in self.seq.names:
                raise InterpolationError(f"biasing names unknown component {w}")
            if Counter(fs) - Counter(self.seq[w].ant):
                raise InterpolationError(f"left part at {w} is not part of its antecedent")

    @classmethod
    def of(cls, seq: Nested, left: Mapping[str, Iterable[Formula]] | None = None) -> "BiasedSequent":
        items = []
        for w, fs in sorted((left or {}).items()):
            fs = tuple(sorted(fs, key=_fkey))
            if fs:
                items.append((w, fs))
        return cls(seq, tuple(items))

    @classmethod
    def all_left(cls, seq: Nested) -> "BiasedSequent":
        return cls.of(seq, {n.name: n.ant for n in seq.walk()})

    @property
    def left_map(self) -> dict[str, tuple[Formula, ...]]:
        return dict(self.left)

    def left_at(self, w: str) -> tuple[Formula, ...]:
        return self.left_map.get(w, ())

    def right_at(self, w: str) -> tuple[Formula, ...]:
        return _msub(self.seq[w].ant, self.left_at(w))

    def _part(self, n: Nested, left: bool) -> Nested:
        ant = self.left_at(n.name) if left else self.right_at(n.name)
        con = () if left else n.con
        return Nested(n.name, tuple(ant), con, tuple((c, self._part(k, left)) for c, k in n.children))

    def lpart(self) -> Nested:
        return self._part(self.seq, True)

    def rpart(self) -> Nested:
        return self._part(self.seq, False)

    def swap(self) -> "BiasedSequent":
        return BiasedSequent.of(self.seq, {n.name: self.right_at(n.name) for n in self.seq.walk()})

    def down(self) -> "BiasedSequent":
        return BiasedSequent(strip_output(self.seq), self.left)

    def with_seq(self, seq: Nested, extra_left: Mapping[str, Iterable[Formula]] | None = None,
                 drop_left: Mapping[str, Iterable[Formula]] | None = None) -> "BiasedSequent":
        m = {w: list(fs) for w, fs in self.left}
        for w, fs in (drop_left or {}).items():
            m[w] = list(_msub(m.get(w, ()), fs))
        for w, fs in (extra_left or {}).items():
            m.setdefault(w, []).extend(fs)
        return BiasedSequent.of(seq, m)

    def sig(self, polarity: str) -> frozenset[str]:
        """sig of a biased sequent: the left part counts with flipped polarity."""
        return sequent_sig(self.lpart(), flip(polarity)) | sequent_sig(self.rpart(), polarity)

    def to_text(self, names: bool = False) -> str:
        def fl(fs):
            return ", ".join(to_text(f) for f in fs) if fs else "-"

        def go(n: Nested) -> str:
            head = f"{n.name}: " if names else ""
            s = f"{head}{fl(self.left_at(n.name))} | {fl(self.right_at(n.name))} => {fl(n.con)}"
            for c, k in n.children:
                s += f", ({c})[{go(k)}]"
            return s

        return go(self.seq)

    def __str__(self) -> str:
        return self.to_text()


def swap_bias(g: BiasedSequent) -> BiasedSequent:
    return g.swap()


# -- proof-building helpers -------------------------------------------------------


def _ext(g: Nested, v: str, ant: Iterable[Formula] = (), out: Formula | None = None) -> Nested:
    """g |>v (ant => out)."""
    g = add_ant(g, v, tuple(ant))
    if out is not None:
        g = set_output(g, v, out)
    return g


class _Fail(Exception):
    """A side proof cannot be assembled."""


class _Builder:
    def __init__(self, axioms: AxiomSet):
        self.axioms = axioms

    def node(self, g: Nested, rule: str, at: str, f: Formula | None, subs, *,
             target: str | None = None, character: Char | None = None) -> Proof:
        try:
            inst = instance(g, rule, at, f, target=target, character=character)
            return build(g, inst, list(subs), self.axioms)
        except (RuleError, SequentError) as e:
            raise _Fail(str(e)) from None

    def prems(self, g: Nested, rule: str, at: str, f: Formula | None = None, *,
              target: str | None = None, character: Char | None = None) -> list[Nested]:
        try:
            if rule == "dX":
                inst = RuleInstance("dX", at, None, target, character)
            else:
                inst = instance(g, rule, at, f, target=target, character=character)
            return apply_backward(g, inst, self.axioms)
        except (RuleError, SequentError) as e:
            raise _Fail(str(e)) from None

    def fit(self, p: Proof, want: Nested) -> Proof:
        """p itself when it proves ``want``; a renamed copy when only names differ."""
        if p.conclusion == want:
            return p
        if p.conclusion.shape != want.shape:
            raise _Fail(f"expected a proof of {want}, got one of {p.conclusion}")
        try:
            return realign(p, want, self.axioms)
        except TransformError as e:
            raise _Fail(str(e)) from None

    def wl(self, p: Proof, v: str, fs: Iterable[Formula]) -> Proof:
        fs = tuple(fs)
        if not fs:
            return p
        try:
            return weaken_left(p, v, fs, self.axioms)
        except TransformError as e:
            raise _Fail(str(e)) from None

    def top(self, g: Nested, v: str) -> Proof:
        """Proof of g |>v (- => T) for g without output."""
        concl = _ext(g, v, out=TOP)
        (prem,) = self.prems(concl, "impR", v, TOP)
        return self.node(concl, "impR", v, TOP, [self.node(prem, "botL", v, BOT, [])])

    def or_intro(self, g: Nested, v: str, cs: list[Formula], k: int, leaf: Proof) -> Proof:
        """From a proof of g|>v(=> cs[k]) to one of g|>v(=> big_or(cs)); g has no output."""
        f = big_or(cs)
        concl = _ext(g, v, out=f)
        if len(cs) == 1:
            return self.fit(leaf, concl)
        if k == len(cs) - 1:
            (prem,) = self.prems(concl, "orR2", v, f)
            return self.node(concl, "orR2", v, f, [self.fit(leaf, prem)])
        sub = self.or_intro(g, v, cs[:-1], k, leaf)
        return self.node(concl, "orR1", v, f, [sub])

    def or_elim(self, g: Nested, v: str, cs: list[Formula], leaves: Mapping[int, Proof],
                offset: int = 0) -> Proof:
        """Proof of g|>v(big_or(cs) =>) from proofs of g|>v(c =>) for every c."""
        f = big_or(cs)
        concl = _ext(g, v, ant=(f,))
        if len(cs) == 1:
            return self.fit(leaves[offset], concl)
        left = self.or_elim(g, v, cs[:-1], leaves, offset)
        right = self.fit(leaves[offset + len(cs) - 1], _ext(g, v, ant=(cs[-1],)))
        return self.node(concl, "orL", v, f, [left, right])

    def and_intro(self, g: Nested, v: str, cs: list[Formula], leaves: Mapping[int, Proof],
                  offset: int = 0) -> Proof:
        """Proof of g|>v(=> big_and(cs)) from proofs of g|>v(=> c) for every c."""
        f = big_and(cs)
        concl = _ext(g, v, out=f)
        if len(cs) == 1:
            return self.fit(leaves[offset], concl)
        left = self.and_intro(g, v, cs[:-1], leaves, offset)
        right = self.fit(leaves[offset + len(cs) - 1], _ext(g, v, out=cs[-1]))
        return self.node(concl, "andR", v, f, [left, right])

    def and_elim(self, g: Nested, v: str, cs: list[Formula], k: int, leaf: Proof) -> Proof:
        """From a proof of g|>v(cs[k] =>) to one of g|>v(big_and(cs) =>)."""
        f = big_and(cs)
        concl = _ext(g, v, ant=(f,))
        if len(cs) == 1:
            return self.fit(leaf, concl)
        (prem,) = self.prems(concl, "andL", v, f)
        rest = self.and_elim(g, v, cs[:-1], k, leaf) if k < len(cs) - 1 else None
        if rest is not None:
            sub = self.wl(rest, v, (cs[-1],))
        else:
            sub = self.wl(leaf, v, (big_and(cs[:-1]),))
        return self.node(concl, "andL", v, f, [self.fit(sub, prem)])

    def strengthen(self, p: Proof, u: str) -> Proof:
        """Drop the component u (and everything later created inside it) from p.

        Fails when p closes a branch inside u, moves the output into u, or
        needs a path through u to satisfy a side condition.
        """
        g = p.conclusion
        if u not in g.names or g.parent.get(u) is None:
            raise _Fail(f"{u} is not a child component")
        if g[u].children or g.output is not None and g.output[0] == u:
            raise _Fail(f"{u} is not a removable leaf")
        t, _, _ = remove_child(g, u)
        return self._strengthen(p, t, {u})

    def _strengthen(self, p: Proof, t: Nested, dropped: set[str]) -> Proof:
        inst = p.rule
        r = inst.rule
        g = p.conclusion
        if inst.at in dropped:
            if r in ("id", "botL") or g.output is not None and g.output[0] in dropped and r in (
                "orR1", "orR2", "andR", "impR", "diaRprop", "boxR"
            ):
                raise _Fail(f"{r} works inside the dropped component")
            new = set(dropped)
            if r in ("diaL", "boxR", "dX"):
                new |= p.premises[0].conclusion.names - g.names
            last: _Fail | None = None
            for sub in p.premises:
                try:
                    return self._strengthen(sub, t, new)
                except _Fail as e:
                    last = e
            raise last or _Fail("no premise")
        if r == "boxLprop" and inst.target in dropped:
            return self._strengthen(p.premises[0], t, dropped)
        if r == "diaRprop" and inst.target in dropped:
            raise _Fail("output moves into the dropped component")
        f = None
        if inst.principal is not None:
            side, i = inst.principal
            f = g[inst.at].ant[i] if side == "ant" else g[inst.at].con[i]
        target = inst.target
        if r in ("diaL", "boxR", "dX"):
            (target,) = p.premises[0].conclusion.names - g.names
        ps = self.prems(t, r, inst.at, f, target=target, character=inst.character)
        subs = [self._strengthen(sub, tt, dropped) for sub, tt in zip(p.premises, ps)]
        if r == "dX":
            try:
                return build(t, RuleInstance("dX", inst.at, None, target, inst.character), subs, self.axioms)
            except RuleError as e:
                raise _Fail(str(e)) from None
        return self.node(t, r, inst.at, f, subs, target=target, character=inst.character)


# -- interpolation proofs ---------------------------------------------------------


Sides = dict[Pair, tuple[Proof, Proof]]


@dataclass(frozen=True, eq=False)
class InterpolationProof:
    """A node of an interpolation proof.

    ``interpolant`` is the one the calculus assigns; ``kept`` is the
    interpolant recomputed from the premises' kept pairs, restricted to the
    pairs with side proofs, which ``sides`` holds: for w:C the proofs of
    L|>w(=> C) and R|>w(C =>).
    """

    rule: str
    sequent: BiasedSequent
    interpolant: Interpolant
    premises: tuple["InterpolationProof", ...]
    source: Proof
    kept: Interpolant = Interpolant()
    sides: Mapping[Pair, tuple[Proof, Proof]] = field(default_factory=dict)
    dropped: tuple[tuple[Pair, str], ...] = ()

    def nodes(self) -> Iterator["InterpolationProof"]:
        stack = [self]
        while stack:
            n = stack.pop()
            yield n
            stack.extend(reversed(n.premises))

    @property
    def height(self) -> int:
        return 0 if not self.premises else 1 + max(p.height for p in self.premises)


def _principal(g: Nested, inst: RuleInstance) -> Formula | None:
    if inst.principal is None:
        return None
    side, i = inst.principal
    n = g[inst.at]
    return n.ant[i] if side == "ant" else n.con[i]


def _normalize(p: Proof, axioms: AxiomSet) -> Proof:
    """Rename premises so that every premise is literally the rule's output."""
    want = apply_backward(p.conclusion, p.rule, axioms)
    subs = []
    for w, sub in zip(want, p.premises):
        if sub.conclusion != w:
            sub = realign(sub, w, axioms)
        subs.append(_normalize(sub, axioms))
    return Proof(p.conclusion, p.rule, tuple(subs))


def _new_name(p: Proof) -> str:
    (u,) = p.premises[0].conclusion.names - p.conclusion.names
    return u


class _Interpolator:
    def __init__(self, axioms: AxiomSet):
        self.axioms = axioms
        self.b = _Builder(axioms)

    # premises' biasings -------------------------------------------------

    def premise_biasings(self, p: Proof, bs: BiasedSequent) -> tuple[str, list[BiasedSequent]]:
        """Interpolation rule name and the biasings of p's premises."""
        g = p.conclusion
        inst = p.rule
        r, w = inst.rule, inst.at
        f = _principal(g, inst)
        prems = [q.conclusion for q in p.premises]
        in_left = f is not None and inst.principal[0] == "ant" and f in bs.left_at(w)
        part = {w: (f,)} if in_left else None

        if r == "id":
            return ("idI1" if f in bs.left_at(w) else "idI2"), []
        if r == "botL":
            return ("botLI1" if in_left else "botLI2"), []
        if r == "andL":
            add = {w: (f.left, f.right)} if in_left else None
            return "andLI", [bs.with_seq(prems[0], add, part)]
        if r == "orL":
            name = "orLI1" if in_left else "orLI2"
            return name, [
                bs.with_seq(prems[0], {w: (f.left,)} if in_left else None, part),
                bs.with_seq(prems[1], {w: (f.right,)} if in_left else None, part),
            ]
        if r in ("orR1", "orR2", "andR", "impR", "diaRprop"):
            name = {"orR1": "orR1I", "orR2": "orR2I", "andR": "andRI", "impR": "impRI",
                    "diaRprop": "diaRpropI"}[r]
            return name, [bs.with_seq(q) for q in prems]
        if r == "impL":
            if in_left:
                sw = bs.swap()
                return "impLI1", [
                    BiasedSequent(prems[0], sw.left),
                    bs.with_seq(prems[1], {w: (f.right,)}),
                ]
            return "impLI2", [bs.with_seq(prems[0]), bs.with_seq(prems[1])]
        if r == "boxLprop":
            add = {inst.target: (f.body,)} if in_left else None
            return "boxLpropI", [bs.with_seq(prems[0], add)]
        if r == "diaL":
            u = _new_name(p)
            if in_left:
                return "diaLI1", [bs.with_seq(prems[0], {u: (f.body,)}, part)]
            return "diaLI2", [bs.with_seq(prems[0])]
        if r == "boxR":
            return "boxRI", [bs.with_seq(prems[0])]
        if r == "dX":
            return "dXI", [bs.with_seq(prems[0])]
        raise InterpolationError(f"unknown rule {r}")

    # the main recursion -------------------------------------------------

    def derive(self, p: Proof, bs: BiasedSequent) -> InterpolationProof:
        name, pbs = self.premise_biasings(p, bs)
        subs = tuple(self.derive(q, b) for q, b in zip(p.premises, pbs))
        raw = self.assign(name, p, [s.interpolant for s in subs])
        cand = self.assign(name, p, [s.kept for s in subs], spread=True)
        sides: Sides = {}
        dropped = []
        for pair in cand.ordered():
            try:
                pl, pr = self.side(name, p, bs, subs, pair)
                sides[pair] = (pl, pr)
            except _Fail as e:
                dropped.append((pair, str(e)))
        kept = Interpolant(frozenset(sides))
        return InterpolationProof(name, bs, raw, subs, p, kept, sides, tuple(dropped))

    def assign(self, name: str, p: Proof, ints: list[Interpolant], spread: bool = False) -> Interpolant:
        """The interpolant the rule assigns given the premises' interpolants.

        With ``spread`` the constant leaf pairs (w:T and w:bot) are put at
        every name; their side proofs do not depend on the name.
        """
        g = p.conclusion
        inst = p.rule
        w = inst.at
        if name == "idI1":
            return Interpolant.of((w, _principal(g, inst)))
        if name in ("idI2", "botLI1", "botLI2"):
            c = BOT if name == "botLI1" else TOP
            return Interpolant(frozenset((v, c) for v in (g.names if spread else (w,))))
        names = g.names
        if name == "orLI1":
            return combine("or", ints[0], ints[1], names)
        if name in ("orLI2", "andRI", "impLI2"):
            return combine("and", ints[0], ints[1], names)
        if name == "impLI1":
            return combine("implies", ints[0], ints[1], names)
        if name in ("boxRI", "diaLI2", "dXI"):
            x = inst.character if name == "dXI" else _principal(g, inst).char
            return modal_lift("box", x, ints[0], w, _new_name(p))
        if name == "diaLI1":
            return modal_lift("dia", _principal(g, inst).char, ints[0], w, _new_name(p))
        return ints[0]

    # side proofs --------------------------------------------------------

    def side(self, name: str, p: Proof, bs: BiasedSequent, subs, pair: Pair) -> tuple[Proof, Proof]:
        v, a = pair
        b = self.b
        g = p.conclusion
        inst = p.rule
        w = inst.at
        f = _principal(g, inst)
        L, R = bs.lpart(), bs.rpart()
        lq = _ext(L, v, out=a)
        rq = _ext(R, v, ant=(a,))

        def ih(k: int, pr: Pair) -> tuple[Proof, Proof]:
            s = subs[k].sides.get(pr)
            if s is None:
                raise _Fail(f"premise {k} has no side proofs for {pr[0]}: {to_text(pr[1])}")
            return s

        def same_rule(concl: Nested, sub: Proof) -> Proof:
            ps = b.prems(concl, inst.rule, w, f, target=inst.target, character=inst.character)
            return b.node(concl, inst.rule, w, f, [b.fit(sub, ps[0])], target=inst.target,
                          character=inst.character)

        if name == "idI1":
            return b.node(lq, "id", w, f, []), b.node(rq, "id", w, f, [])
        if name == "idI2":
            return b.top(L, v), b.node(rq, "id", w, f, [])
        if name == "botLI1":
            return b.node(lq, "botL", w, BOT, []), b.node(rq, "botL", v, BOT, [])
        if name == "botLI2":
            return b.top(L, v), b.node(rq, "botL", w, BOT, [])

        if name in ("andLI", "boxLpropI"):
            pl, pr = ih(0, pair)
            if f in bs.left_at(w):
                return same_rule(lq, pl), pr
            return pl, same_rule(rq, pr)
        if name in ("orR1I", "orR2I", "impRI", "diaRpropI"):
            pl, pr = ih(0, pair)
            return pl, same_rule(rq, pr)

        if name in ("orLI1", "orLI2", "andRI", "impLI1", "impLI2"):
            return self.binary(name, p, bs, subs, pair, ih)

        u = _new_name(p)
        if pair == (w, self._lift_formula(name, p, subs[0].kept.at(u))):
            try:
                return self.lifted(name, p, bs, subs, pair, u)
            except _Fail:
                if pair not in subs[0].kept:
                    raise
        return self.rest(name, p, bs, subs, pair, ih, u)

    @staticmethod
    def _lift_formula(name: str, p: Proof, cs: list[Formula]) -> Formula | None:
        if not cs:
            return None
        if name == "diaLI1":
            return Dia(_principal(p.conclusion, p.rule).char, big_and(cs))
        x = p.rule.character if name == "dXI" else _principal(p.conclusion, p.rule).char
        return Box(x, big_or(cs))

    def binary(self, name, p, bs, subs, pair, ih):
        b = self.b
        v, a = pair
        g = p.conclusion
        w = p.rule.at
        f = _principal(g, p.rule)
        L, R = bs.lpart(), bs.rpart()
        lq = _ext(L, v, out=a)
        rq = _ext(R, v, ant=(a,))
        op = {"orLI1": Or, "impLI1": Imp}.get(name, And)
        if not isinstance(a, op):
            # an empty-side clause: one premise contributes no pair at v, so
            # the side proof that needs it has nothing to start from
            raise _Fail(f"{name}: no pair at {v} in one premise")
        c, d = a.left, a.right
        if (v, c) not in subs[0].kept or (v, d) not in subs[1].kept:
            raise _Fail(f"{name}: {to_text(a)} does not come from premise pairs")
        pl1, pr1 = ih(0, (v, c))
        pl2, pr2 = ih(1, (v, d))

        if name == "orLI1":
            l1, l2 = b.prems(lq, "orL", w, f)
            left = b.node(l1, "orR1", v, a, [b.fit(pl1, _ext(subs[0].sequent.lpart(), v, out=c))])
            right = b.node(l2, "orR2", v, a, [b.fit(pl2, _ext(subs[1].sequent.lpart(), v, out=d))])
            pl = b.node(lq, "orL", w, f, [left, right])
            pr = b.node(rq, "orL", v, a, [b.fit(pr1, _ext(R, v, ant=(c,))), b.fit(pr2, _ext(R, v, ant=(d,)))])
            return pl, pr

        if name in ("orLI2", "andRI", "impLI2"):
            pl = b.node(lq, "andR", v, a, [b.fit(pl1, _ext(L, v, out=c)), b.fit(pl2, _ext(L, v, out=d))])
            (mid,) = b.prems(rq, "andL", v, a)
            rule = {"orLI2": "orL", "andRI": "andR", "impLI2": "impL"}[name]
            p1, p2 = b.prems(mid, rule, w, f)
            inner = b.node(mid, rule, w, f, [
                b.fit(b.wl(pr1, v, (d,)), p1),
                b.fit(b.wl(pr2, v, (c,)), p2),
            ])
            return pl, b.node(rq, "andL", v, a, [inner])

        # impLI1: the left premise carries the swapped biasing
        r_left, r_right = b.prems(rq, "impL", v, a)
        pr = b.node(rq, "impL", v, a, [b.fit(b.wl(pl1, v, (a,)), r_left), b.fit(b.wl(pr2, v, (a,)), r_right)])
        (mid,) = b.prems(lq, "impR", v, a)
        m_left, m_right = b.prems(mid, "impL", w, f)
        inner = b.node(mid, "impL", w, f, [b.fit(pr1, m_left), b.fit(b.wl(pl2, v, (c,)), m_right)])
        return b.node(lq, "impR", v, a, [inner]), pr

    def lifted(self, name, p, bs, subs, pair, u):
        b = self.b
        w, a = pair
        g = p.conclusion
        inst = p.rule
        f = _principal(g, inst)
        x = a.char
        L, R = bs.lpart(), bs.rpart()
        lq = _ext(L, w, out=a)
        rq = _ext(R, w, ant=(a,))
        cs = subs[0].kept.at(u)
        sides = [subs[0].sides[(u, c)] for c in cs]
        L1, R1 = subs[0].sequent.lpart(), subs[0].sequent.rpart()

        if name == "diaLI1":
            # diaL on <x>A, propagate the diamond to the new child, split the conjunction
            (l1,) = b.prems(lq, "diaL", w, f, target=u)
            (l2,) = b.prems(l1, "diaRprop", w, a, target=u)
            conj = b.and_intro(L1, u, cs, {k: s[0] for k, s in enumerate(sides)})
            pl = b.node(lq, "diaL", w, f, [b.node(l1, "diaRprop", w, a, [b.fit(conj, l2)], target=u)],
                        target=u)
            (r1,) = b.prems(rq, "diaL", w, a, target=u)
            elim = b.and_elim(R1, u, cs, 0, sides[0][1])
            pr = b.node(rq, "diaL", w, a, [b.fit(elim, r1)], target=u)
            return pl, pr

        # box lifts: boxR on the left, then pick the first disjunct
        (l1,) = b.prems(lq, "boxR", w, a, target=u)
        disj = b.or_intro(L1, u, cs, 0, sides[0][0])
        pl = b.node(lq, "boxR", w, a, [b.fit(disj, l1)], target=u)
        # on the right: recreate u, push the box into it, split the disjunction
        if name == "boxRI":
            rule, rf, kw = "boxR", g.output[1], {}
        elif name == "diaLI2":
            rule, rf, kw = "diaL", f, {}
        else:
            rule, rf, kw = "dX", None, {"character": inst.character}
        (r1,) = b.prems(rq, rule, w, rf, target=u, **kw)
        (r2,) = b.prems(r1, "boxLprop", w, a, target=u)
        leaves = {k: b.wl(s[1], w, (a,)) for k, s in enumerate(sides)}
        elim = b.or_elim(add_ant(R1, w, (a,)), u, cs, leaves)
        prop = b.node(r1, "boxLprop", w, a, [b.fit(elim, r2)], target=u)
        if rule == "dX":
            try:
                top = build(rq, RuleInstance("dX", w, None, u, inst.character), [prop], self.axioms)
            except RuleError as e:
                raise _Fail(str(e)) from None
        else:
            top = b.node(rq, rule, w, rf, [prop], target=u)
        return pl, top

    def rest(self, name, p, bs, subs, pair, ih, u):
        """Pairs away from the new child: replay the creating rule, or strengthen."""
        b = self.b
        v, a = pair
        g = p.conclusion
        inst = p.rule
        w = inst.at
        f = _principal(g, inst)
        L, R = bs.lpart(), bs.rpart()
        lq = _ext(L, v, out=a)
        rq = _ext(R, v, ant=(a,))
        pl1, pr1 = ih(0, pair)

        def again(concl: Nested, sub: Proof) -> Proof:
            if inst.rule == "dX":
                (prem,) = b.prems(concl, "dX", w, target=u, character=inst.character)
                try:
                    return build(concl, RuleInstance("dX", w, None, u, inst.character),
                                 [b.fit(sub, prem)], self.axioms)
                except RuleError as e:
                    raise _Fail(str(e)) from None
            rf = g.output[1] if inst.rule == "boxR" else f
            (prem,) = b.prems(concl, inst.rule, w, rf, target=u)
            return b.node(concl, inst.rule, w, rf, [b.fit(sub, prem)], target=u)

        def strong(sub: Proof, want: Nested) -> Proof:
            return b.fit(b.strengthen(sub, u), want)

        if name == "dXI":
            return again(lq, pl1), again(rq, pr1)
        if name == "boxRI":
            return strong(pl1, lq), again(rq, pr1)
        if name == "diaLI1":
            return again(lq, pl1), strong(pr1, rq)
        # diaLI2
        return strong(pl1, lq), again(rq, pr1)


# -- public API -------------------------------------------------------------------


@dataclass(frozen=True)
class InvariantReport:
    names_ok: bool
    signature_ok: bool
    failures: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.names_ok and self.signature_ok


def invariant_check(ip: InterpolationProof) -> InvariantReport:
    """Names(I) within Names(G) and sig(I) within sig-bar(L) and sig(R), at every node."""
    failures = []
    names_ok = sig_ok = True
    for n in ip.nodes():
        L, R = n.sequent.lpart(), n.sequent.rpart()
        for label, i in (("interpolant", n.interpolant), ("kept", n.kept)):
            if not i.names <= n.sequent.seq.names:
                names_ok = False
                failures.append(f"{n.rule}: {label} names {sorted(i.names - n.sequent.seq.names)} unknown")
            for pol in (POS, NEG):
                allowed = sequent_sig(L, flip(pol)) & sequent_sig(R, pol)
                extra = i.sig(pol) - allowed
                if extra:
                    sig_ok = False
                    failures.append(f"{n.rule}: {label} sig{pol} has {sorted(extra)}")
    return InvariantReport(names_ok, sig_ok, tuple(failures))


def derive_interpolation_proof(p: Proof, biasing: BiasedSequent | Mapping[str, Iterable[Formula]],
                               axioms: AxiomSet) -> tuple[InterpolationProof, Interpolant]:
    """Interpolation proof over a biasing of p's conclusion, and its root interpolant.

    ``biasing`` is a BiasedSequent over p's conclusion or a map from
    component names to left parts.  The name and signature invariants are checked at
    every node; a failure raises InterpolationError.
    """
    if not isinstance(biasing, BiasedSequent):
        biasing = BiasedSequent.of(p.conclusion, biasing)
    if biasing.seq != p.conclusion:
        raise InterpolationError("biasing does not match the proof's conclusion")
    try:
        check_proof(p, axioms)
    except CheckError as e:
        raise InterpolationError(f"input is not a valid proof: {e}") from None
    p = _normalize(p, axioms)
    ip = _Interpolator(axioms).derive(p, biasing)
    rep = invariant_check(ip)
    if not rep.ok:
        raise InterpolationError("; ".join(rep.failures))
    return ip, ip.interpolant


def extract_side_proofs(ip: InterpolationProof, axioms: AxiomSet) -> dict[Pair, tuple[Proof, Proof]]:
    """Checked side proofs for every pair of the root's kept interpolant."""
    out = {}
    L, R = ip.sequent.lpart(), ip.sequent.rpart()
    for pair in ip.kept.ordered():
        if pair not in ip.sides:
            raise InterpolationError(f"no side proofs for {pair[0]}: {to_text(pair[1])}")
        pl, pr = ip.sides[pair]
        v, a = pair
        if pl.conclusion.shape != _ext(L, v, out=a).shape or pr.conclusion.shape != _ext(R, v, ant=(a,)).shape:
            raise InterpolationError(f"side proofs for {v}: {to_text(a)} have the wrong conclusions")
        try:
            check_proof(pl, axioms)
            check_proof(pr, axioms)
        except CheckError as e:
            raise InterpolationError(f"side proof for {v}: {to_text(a)} rejected: {e}") from None
        out[pair] = (pl, pr)
    return out


def signature_ok(i: Formula, a: Formula, b: Formula) -> bool:
    """sig(I) within sig(A) and sig(B), for both polarities, on atoms."""
    return all(
        atom_signature(i, pol) <= atom_signature(a, pol) & atom_signature(b, pol) for pol in (POS, NEG)
    )


def normalize(f: Formula) -> Formula:
    """Collapse T & C, C & T, bot | C and C | bot, bottom-up."""
    if isinstance(f, (And, Or, Imp)):
        l, r = normalize(f.left), normalize(f.right)
        if isinstance(f, And):
            if l == TOP:
                return r
            if r == TOP:
                return l
        if isinstance(f, Or):
            if isinstance(l, Bot):
                return r
            if isinstance(r, Bot):
                return l
        return type(f)(l, r)
    if isinstance(f, (Box, Dia)):
        return type(f)(f.char, normalize(f.body))
    return f


def lyndon_interpolant(p: Proof, axioms: AxiomSet, mode: str = "meet", simplify: bool = False,
                       ) -> tuple[Formula, Proof, Proof]:
    """Interpolant I of A and B from a proof of => A -> B, with proofs of => A -> I and => I -> B.

    With ``simplify`` the interpolant is normalized and both implications
    are re-proved by bounded search.
    """
    if mode not in ("meet", "join"):
        raise ValueError("mode must be 'meet' or 'join'")
    g = p.conclusion
    if g.children or g.ant or not g.con or not isinstance(g.con[0], Imp):
        raise InterpolationError("conclusion must be a single component => A -> B")
    if p.rule.rule != "impR":
        raise InterpolationError("the last rule must be impR")
    a, bf = g.con[0].left, g.con[0].right
    try:
        check_proof(p, axioms)
    except CheckError as e:
        raise InterpolationError(f"input is not a valid proof: {e}") from None
    sub = _normalize(p, axioms).premises[0]
    w = g.name
    bs = BiasedSequent.of(sub.conclusion, {w: (a,)})
    ip, _ = derive_interpolation_proof(sub, bs, axioms)
    sides = extract_side_proofs(ip, axioms)
    cs = ip.kept.at(w)
    if not cs:
        raise InterpolationError("no interpolant pair has constructible side proofs")
    b = _Builder(axioms)
    L, R = bs.lpart(), bs.rpart()
    pls = {k: sides[(w, c)][0] for k, c in enumerate(cs)}
    prs = {k: sides[(w, c)][1] for k, c in enumerate(cs)}
    try:
        if mode == "meet":
            i = big_and(cs)
            to_i = b.and_intro(L, w, cs, pls)
            from_i = b.and_elim(R, w, cs, 0, prs[0])
        else:
            i = big_or(cs)
            to_i = b.or_intro(L, w, cs, 0, pls[0])
            from_i = b.or_elim(R, w, cs, prs)
        pa = b.node(Nested(w, (), (Imp(a, i),)), "impR", w, Imp(a, i), [to_i])
        pb = b.node(Nested(w, (), (Imp(i, bf),)), "impR", w, Imp(i, bf), [from_i])
    except _Fail as e:
        raise InterpolationError(f"could not assemble the final proofs: {e}") from None
    if simplify:
        i, pa, pb = _simplified(i, a, bf, axioms, pa, pb)
    check_proof(pa, axioms)
    check_proof(pb, axioms)
    if not signature_ok(i, a, bf):
        raise InterpolationError(f"signature check failed for {to_text(i)}")
    return i, pa, pb


def _simplified(i, a, bf, axioms, pa, pb):
    from .search import SearchBudget, prove_formula

    j = normalize(i)
    if j == i:
        return i, pa, pb
    budget = SearchBudget(max_noninvertible=8, time_limit=5.0)
    qa = prove_formula(Imp(a, j), axioms, budget)
    qb = prove_formula(Imp(j, bf), axioms, budget)
    if not qa or not qb:
        raise InterpolationError(f"could not re-prove the simplified interpolant {to_text(j)}")
    return j, qa, qb
