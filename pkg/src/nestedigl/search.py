"""Bounded backward proof search.

Iterative deepening on the number of non-invertible choices per branch
(disjunct choice on the right, diamond propagation target, implication on
the left).  Between choices the sequent is saturated with the invertible
rules.  Box propagation and seriality are invertible too but could run
forever, so they are rationed: a box is propagated to a given target only
while its body is missing there and at most ``max_propagations_per_pair``
times, and seriality fires once per component and character, only where a
box or a diamond goal could use the new child and no edge with that
character leaves the component.  A failed search reports ``NoProofWithinBudget``, which says
nothing about provability.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterator

from .calculus import Proof, RuleInstance, apply_backward, grammar_of
from .formula import And, Atom, Bot, Box, Char, Dia, Formula, Imp, Or
from .grammar import AxiomSet, reach
from .sequent import Nested, propagation_graph


@dataclass(frozen=True)
class SearchBudget:
    max_noninvertible: int = 12
    max_propagations_per_pair: int = 1
    max_new_components: int = 8
    max_impl_uses: int = 2
    time_limit: float | None = None

    def __post_init__(self):
        for k in ("max_noninvertible", "max_propagations_per_pair", "max_new_components", "max_impl_uses"):
            if getattr(self, k) < 0:
                raise ValueError(f"{k} must be non-negative")


@dataclass
class NoProofWithinBudget:
    goal: Nested
    budget: SearchBudget
    nodes: int = 0
    timed_out: bool = False

    def __bool__(self) -> bool:
        return False

    def __str__(self) -> str:
        why = "time limit reached" if self.timed_out else "budget exhausted"
        return f"no proof within budget ({why}, {self.nodes} nodes explored)"


class _Timeout(Exception):
    pass


@dataclass
class _Branch:
    """Per-branch bookkeeping; copied at branch points."""

    fresh: int
    props: dict = field(default_factory=dict)
    serial: set = field(default_factory=set)
    impl: dict = field(default_factory=dict)
    seen: set = field(default_factory=set)

    def copy(self) -> "_Branch":
        return _Branch(self.fresh, dict(self.props), set(self.serial), dict(self.impl), set(self.seen))

    def frozen(self) -> tuple:
        return (
            self.fresh,
            frozenset(self.props.items()),
            frozenset(self.serial),
            frozenset(self.impl.items()),
        )


def _ant_items(g: Nested) -> Iterator[tuple[str, int, Formula]]:
    for n in g.walk():
        for i, f in enumerate(n.ant):
            yield n.name, i, f


class _Search:
    def __init__(self, axioms: AxiomSet, budget: SearchBudget):
        self.axioms = axioms
        self.budget = budget
        self.grammar = grammar_of(axioms)
        self.solved: dict[tuple, Proof] = {}
        self.failed: set = set()
        self.nodes = 0
        self.deadline = None if budget.time_limit is None else time.monotonic() + budget.time_limit

    # -- rule selection -----------------------------------------------------

    def _closing(self, g: Nested) -> RuleInstance | None:
        for w, i, f in _ant_items(g):
            if isinstance(f, Bot):
                return RuleInstance("botL", w, ("ant", i))
        out = g.output
        if out is not None:
            w, f = out
            if isinstance(f, Atom) and f in g[w].ant:
                return RuleInstance("id", w, ("out", 0))
        return None

    def _reach(self, g: Nested, w: str, x: Char) -> list[str]:
        return sorted(reach(self.grammar, propagation_graph(g), w, x))

    def _invertible(self, g: Nested, st: _Branch) -> RuleInstance | None:
        for w, i, f in _ant_items(g):
            if isinstance(f, And):
                return RuleInstance("andL", w, ("ant", i))
        out = g.output
        if out is not None:
            w, f = out
            if isinstance(f, Imp):
                return RuleInstance("impR", w, ("out", 0))
            if isinstance(f, And):
                return RuleInstance("andR", w, ("out", 0))
        for w, i, f in _ant_items(g):
            if isinstance(f, Or):
                return RuleInstance("orL", w, ("ant", i))
        if st.fresh > 0:
            for w, i, f in _ant_items(g):
                if isinstance(f, Dia):
                    return RuleInstance("diaL", w, ("ant", i), character=f.char)
            if out is not None and isinstance(out[1], Box):
                return RuleInstance("boxR", out[0], ("out", 0), character=out[1].char)
        for w, i, f in _ant_items(g):
            if isinstance(f, Box):
                for u in self._reach(g, w, f.char):
                    k = (w, f, u)
                    if f.body not in g[u].ant and st.props.get(k, 0) < self.budget.max_propagations_per_pair:
                        return RuleInstance("boxLprop", w, ("ant", i), target=u, character=f.char)
        if st.fresh > 0:
            pg = propagation_graph(g)
            for x in sorted(self.axioms.serial):
                for n in g.walk():
                    if (n.name, x) in st.serial:
                        continue
                    if any(a == n.name and c == x for a, c, _ in pg.edges):
                        continue
                    wants = any(isinstance(f, Box) for f in n.ant) or (
                        out is not None and out[0] == n.name and isinstance(out[1], Dia)
                    )
                    if wants:
                        return RuleInstance("dX", n.name, None, character=x)
        return None

    def _choices(self, g: Nested, st: _Branch) -> Iterator[RuleInstance]:
        out = g.output
        if out is not None:
            w, f = out
            if isinstance(f, Or):
                yield RuleInstance("orR1", w, ("out", 0))
                yield RuleInstance("orR2", w, ("out", 0))
            elif isinstance(f, Dia):
                for u in self._reach(g, w, f.char):
                    yield RuleInstance("diaRprop", w, ("out", 0), target=u, character=f.char)
        for w, i, f in _ant_items(g):
            if isinstance(f, Imp) and f.right not in g[w].ant:
                if st.impl.get((w, f), 0) < self.budget.max_impl_uses:
                    yield RuleInstance("impL", w, ("ant", i))

    # -- bookkeeping ----------------------------------------------------------

    def _advance(self, g: Nested, inst: RuleInstance, st: _Branch) -> None:
        r = inst.rule
        if r in ("diaL", "boxR", "dX"):
            st.fresh -= 1
        if r == "dX":
            st.serial.add((inst.at, inst.character))
        elif r == "boxLprop":
            f = g[inst.at].ant[inst.principal[1]]
            k = (inst.at, f, inst.target)
            st.props[k] = st.props.get(k, 0) + 1
        elif r == "impL":
            f = g[inst.at].ant[inst.principal[1]]
            st.impl[(inst.at, f)] = st.impl.get((inst.at, f), 0) + 1

    # -- search ---------------------------------------------------------------

    def run(self, g: Nested, k: int, st: _Branch) -> Proof | None:
        chain: list[tuple[Nested, RuleInstance]] = []
        while True:
            self.nodes += 1
            if self.deadline is not None and self.nodes % 256 == 0 and time.monotonic() > self.deadline:
                raise _Timeout
            hit = self.solved.get(g.named_key)
            if hit is not None:
                return self._wrap(chain, hit)
            fkey = (g.named_key, k, st.frozen())
            if fkey in self.failed or g.named_key in st.seen:
                return None
            st.seen.add(g.named_key)
            inst = self._closing(g)
            if inst is not None:
                return self._wrap(chain, self._remember(Proof(g, inst, ())))
            inst = self._invertible(g, st)
            if inst is None:
                break
            premises = apply_backward(g, inst, self.axioms)
            self._advance(g, inst, st)
            if len(premises) == 1:
                chain.append((g, inst))
                g = premises[0]
                continue
            subs = []
            for prem in premises:
                p = self.run(prem, k, st.copy())
                if p is None:
                    self.failed.add(fkey)
                    return None
                subs.append(p)
            return self._wrap(chain, self._remember(Proof(g, inst, tuple(subs))))

        if k > 0:
            for inst in self._choices(g, st):
                premises = apply_backward(g, inst, self.axioms)
                subs = []
                for prem in premises:
                    nst = st.copy()
                    self._advance(g, inst, nst)
                    p = self.run(prem, k - 1, nst)
                    if p is None:
                        break
                    subs.append(p)
                else:
                    return self._wrap(chain, self._remember(Proof(g, inst, tuple(subs))))
        self.failed.add((g.named_key, k, st.frozen()))
        return None

    def _remember(self, p: Proof) -> Proof:
        self.solved[p.conclusion.named_key] = p
        return p

    def _wrap(self, chain: list[tuple[Nested, RuleInstance]], top: Proof) -> Proof:
        for g, inst in reversed(chain):
            top = self._remember(Proof(g, inst, (top,)))
        return top


def prove(g: Nested, axioms: AxiomSet, budget: SearchBudget | None = None) -> Proof | NoProofWithinBudget:
    """Search for a proof of g; deterministic for a fixed input and budget."""
    budget = budget or SearchBudget()
    s = _Search(axioms, budget)
    try:
        for k in range(budget.max_noninvertible + 1):
            p = s.run(g, k, _Branch(budget.max_new_components))
            if p is not None:
                return p
    except _Timeout:
        return NoProofWithinBudget(g, budget, s.nodes, timed_out=True)
    return NoProofWithinBudget(g, budget, s.nodes)


def prove_formula(a: Formula, axioms: AxiomSet, budget: SearchBudget | None = None):
    from .sequent import flat

    return prove(flat((), (a,)), axioms, budget)
