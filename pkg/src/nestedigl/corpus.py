"""Goal corpora and generators used by the tests and the experiment scripts."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .calculus import Proof, RuleInstance, apply_backward, build, check_proof, instance
from .formula import (
    And, Atom, BOT, Box, Char, Dia, Formula, Imp, Or, TOP, length, parse_formula, subformulas,
)
from .grammar import AxiomSet, axiom_4, axiom_5, axiom_B, axiom_T
from .search import SearchBudget, prove
from .sequent import Nested, add_ant, flat, remove_ant, set_output, strip_output

EMPTY = AxiomSet()


def iff(a: Formula, b: Formula) -> Formula:
    return And(Imp(a, b), Imp(b, a))


def axiom_instances(x: str = "a", p: str = "p", q: str = "q") -> list[tuple[str, Formula]]:
    """Atomic instances of the modal axioms valid in every frame."""
    c = Char.parse(x)
    cv = c.converse
    A, B = Atom(p), Atom(q)
    box = lambda f, ch=c: Box(ch, f)
    dia = lambda f, ch=c: Dia(ch, f)
    return [
        ("A1", Imp(box(Imp(A, B)), Imp(box(A), box(B)))),
        ("A2", iff(box(And(A, B)), And(box(A), box(B)))),
        ("A3", iff(dia(Or(A, B)), Or(dia(A), dia(B)))),
        ("A4", Imp(box(Imp(A, B)), Imp(dia(A), dia(B)))),
        ("A5", Imp(And(box(A), dia(B)), dia(And(A, B)))),
        ("A6", Imp(dia(BOT), BOT)),
        ("A7", And(Imp(A, box(dia(A, cv))), Imp(dia(box(A, cv)), A))),
        ("A8", Imp(Imp(dia(A), box(B)), box(Imp(A, B)))),
        ("A9", Imp(dia(Imp(A, B)), Imp(box(A), dia(B)))),
    ]


@dataclass(frozen=True)
class Goal:
    name: str
    formula: Formula
    axioms: AxiomSet


def cube_goals(x: str = "a") -> list[Goal]:
    """T, B, 4, 5 and D instances, each with its matching axiom."""
    P = lambda s: parse_formula(s.replace("a", x))
    return [
        Goal("T", P("[a]p -> p"), AxiomSet(paths=frozenset({axiom_T(x)}))),
        Goal("4", P("[a]p -> [a][a]p"), AxiomSet(paths=frozenset({axiom_4(x)}))),
        Goal("B", P("<a^>p -> <a>p"), AxiomSet(paths=frozenset({axiom_B(x)}))),
        Goal("5", P("<a^><a>p -> <a>p"), AxiomSet(paths=frozenset({axiom_5(x)}))),
        Goal("D", P("[a]p -> <a>p"), AxiomSet(serial=frozenset({Char.parse(x)}))),
    ]


def ipa_formula(word: Sequence[str], x: str, atom: str = "p") -> Formula:
    """(<x1>...<xn>p -> <x>p) & ([x]p -> [x1]...[xn]p)."""
    cs = [Char.parse(c) for c in word]
    dias, boxes = Atom(atom), Atom(atom)
    for c in reversed(cs):
        dias, boxes = Dia(c, dias), Box(c, boxes)
    X = Char.parse(x)
    return And(Imp(dias, Dia(X, Atom(atom))), Imp(Box(X, Atom(atom)), boxes))


def ipa_axioms(word: Sequence[str], x: str) -> AxiomSet:
    return AxiomSet.of(paths=[(x, list(word))])


def ipa_example_proof(word: Sequence[str] = ("x1", "x2"), x: str = "x") -> tuple[Proof, AxiomSet]:
    """The two-branch proof of an intuitionistic path axiom, built rule by rule.

    Left branch: ->R, <xi>L n times, <x>R into the innermost component, id.
    Right branch: ->R, [xi]R n times, [x]L into the innermost component, id.
    """
    ax = ipa_axioms(word, x)
    goal = flat((), (ipa_formula(word, x),))
    a = goal.con[0]
    root = "w0"

    def branch(f: Imp, left: bool) -> Proof:
        g = set_output(goal, root, f)
        steps: list[tuple[Nested, RuleInstance]] = []
        inst = instance(g, "impR", root, f)
        steps.append((g, inst))
        (g,) = apply_backward(g, inst, ax)
        at = root
        for i in range(len(word)):
            child = f"u{i + 1}"
            if left:
                fm = g[at].ant[0]
                inst = instance(g, "diaL", at, fm, target=child)
            else:
                inst = instance(g, "boxR", at, g[at].con[0], target=child)
            steps.append((g, inst))
            (g,) = apply_backward(g, inst, ax)
            at = child
        if left:
            inst = instance(g, "diaRprop", root, g[root].con[0], target=at)
        else:
            inst = instance(g, "boxLprop", root, g[root].ant[0], target=at)
        steps.append((g, inst))
        (g,) = apply_backward(g, inst, ax)
        top = build(g, instance(g, "id", at, Atom("p")), [], ax)
        for gg, ii in reversed(steps):
            top = build(gg, ii, [top], ax)
        return top

    inst = instance(goal, "andR", root, a)
    p = build(goal, inst, [branch(a.left, True), branch(a.right, False)], ax)
    return p, ax


# -- random generation ---------------------------------------------------------


def random_formula(rng: random.Random, depth: int, atoms: Sequence[str] = ("p", "q"),
                   chars: Sequence[str] = ("a",), modal: bool = True) -> Formula:
    if depth <= 0 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.08:
            return BOT
        return Atom(rng.choice(list(atoms)))
    kinds = ["and", "or", "imp"] + (["dia", "box"] if modal and chars else [])
    k = rng.choice(kinds)
    if k in ("dia", "box"):
        c = Char.parse(rng.choice(list(chars)))
        if rng.random() < 0.3:
            c = c.converse
        body = random_formula(rng, depth - 1, atoms, chars, modal)
        return Dia(c, body) if k == "dia" else Box(c, body)
    a = random_formula(rng, depth - 1, atoms, chars, modal)
    b = random_formula(rng, depth - 1, atoms, chars, modal)
    return {"and": And, "or": Or, "imp": Imp}[k](a, b)


AXIOM_SETS = {
    "K": EMPTY,
    "T": AxiomSet(paths=frozenset({axiom_T("a")})),
    "4": AxiomSet(paths=frozenset({axiom_4("a")})),
    "B": AxiomSet(paths=frozenset({axiom_B("a")})),
    "D": AxiomSet(serial=frozenset({Char.parse("a")})),
    "S4": AxiomSet(paths=frozenset({axiom_T("a"), axiom_4("a")})),
    "5": AxiomSet(paths=frozenset({axiom_5("a")})),
}

QUICK = SearchBudget(max_noninvertible=4, max_propagations_per_pair=1, max_new_components=4, time_limit=1.0)


@dataclass
class CorpusItem:
    name: str
    proof: Proof
    axioms: AxiomSet


def named_proofs(budget: SearchBudget | None = None) -> list[CorpusItem]:
    """Proofs of the axiom instances, the cube goals and the IPA example."""
    budget = budget or SearchBudget(time_limit=5.0)
    out = []
    for name, f in axiom_instances():
        p = prove(flat((), (f,)), EMPTY, budget)
        if p:
            out.append(CorpusItem(name, p, EMPTY))
    for g in cube_goals():
        p = prove(flat((), (g.formula,)), g.axioms, budget)
        if p:
            out.append(CorpusItem(g.name, p, g.axioms))
    p, ax = ipa_example_proof(("x", "y"), "z")
    out.append(CorpusItem("IPA", p, ax))
    return out


def random_proofs(seed: int, count: int, depth: int = 3, max_tries: int = 4000) -> list[CorpusItem]:
    """Proofs of random provable implications over the small axiom sets."""
    rng = random.Random(seed)
    keys = sorted(AXIOM_SETS)
    out: list[CorpusItem] = []
    tries = 0
    while len(out) < count and tries < max_tries:
        tries += 1
        key = rng.choice(keys)
        ax = AXIOM_SETS[key]
        a = random_formula(rng, depth)
        b = random_formula(rng, depth)
        goal = rng.choice([Imp(a, b), Imp(a, Or(a, b)), Imp(And(a, b), b), Imp(a, a)])
        p = prove(flat((), (goal,)), ax, QUICK)
        if p and p.height > 0:
            out.append(CorpusItem(f"rand-{key}-{len(out)}", p, ax))
    return out


def sub_proofs(items: Sequence[CorpusItem], min_height: int = 1) -> Iterator[CorpusItem]:
    """Every proof node of every item, as a standalone proof."""
    for it in items:
        for k, node in enumerate(it.proof.nodes()):
            if node.height >= min_height:
                yield CorpusItem(f"{it.name}@{k}", node, it.axioms)


@dataclass
class CutInstance:
    name: str
    left: Proof
    right: Proof
    at: str
    formula: Formula
    axioms: AxiomSet


def _consequence(rng: random.Random, a: Formula) -> Formula:
    """A formula that follows from a by a short argument using a's main connective."""
    r = Atom("r")
    if isinstance(a, And):
        return rng.choice([And(a.right, a.left), Or(a.right, r), a.left])
    if isinstance(a, Or):
        return rng.choice([Or(a.right, a.left), Or(Or(a.left, r), a.right)])
    if isinstance(a, Imp):
        return rng.choice([Imp(a.left, Or(a.right, r)), Imp(And(a.left, r), a.right)])
    if isinstance(a, Dia):
        return rng.choice([Dia(a.char, Or(a.body, r)), Dia(a.char, Or(r, a.body))])
    if isinstance(a, Box):
        return rng.choice([Box(a.char, Or(a.body, r)), Box(a.char, And(a.body, a.body))])
    return Or(a, r)


def _premise(rng: random.Random, a: Formula) -> list[Formula]:
    """Antecedent formulas from which a follows, without a being among them."""
    q = Atom("q")
    if isinstance(a, And):
        return [And(a.right, a.left)]
    if isinstance(a, Or):
        return rng.choice([[a.left], [a.right], [Or(a.right, a.left)]])
    if isinstance(a, Imp):
        return rng.choice([[a.right], [Imp(a.left, And(a.right, a.right))], [And(q, Imp(a.left, a.right))]])
    if isinstance(a, Dia):
        return [Dia(a.char, And(a.body, q))]
    if isinstance(a, Box):
        return rng.choice([[Box(a.char, And(a.body, q))], [And(Box(a.char, a.body), q)]])
    return [And(a, q)]


def cut_instances(seed: int, count: int, max_tries: int = 4000) -> list[CutInstance]:
    """Pairs of proofs glued on a shared formula A at a component w.

    The right proof has A in the antecedent of w and the left proof has A as
    its output at w, over the same context.  A is put first in the right
    antecedent so that the search tends to decompose it.
    """
    rng = random.Random(seed)
    keys = sorted(AXIOM_SETS)
    out: list[CutInstance] = []
    tries = 0
    while len(out) < count and tries < max_tries:
        tries += 1
        key = rng.choice(keys)
        ax = AXIOM_SETS[key]
        a = random_formula(rng, 2)
        while isinstance(a, Atom) and rng.random() < 0.7:
            a = random_formula(rng, 2)
        gam = _premise(rng, a) + [random_formula(rng, 1) for _ in range(rng.randint(0, 1))]
        rng.shuffle(gam)
        d = _consequence(rng, a)
        right_goal = Nested("w0", (a, *gam), (d,))
        left_goal = Nested("w0", tuple(gam), (a,))
        lp = prove(left_goal, ax, QUICK)
        if not lp:
            continue
        rp = prove(right_goal, ax, QUICK)
        if not rp or rp.height == 0 and lp.height == 0:
            continue
        out.append(CutInstance(f"cut-{key}-{len(out)}", lp, rp, "w0", a, ax))
    return out


def interpolation_cases() -> list[tuple[str, Formula, AxiomSet]]:
    """Provable implications A -> B for interpolation, with their axiom sets."""
    P = parse_formula
    T = AXIOM_SETS["T"]
    F = AXIOM_SETS["4"]
    S4 = AXIOM_SETS["S4"]
    D = AXIOM_SETS["D"]
    cases = [
        ("and-or", P("p & q -> q | r"), EMPTY),
        ("falsum", P("false -> p"), EMPTY),
        ("k-combinator", P("p -> (q -> p)"), EMPTY),
        ("id", P("p -> p"), EMPTY),
        ("and-elim", P("p & q -> p"), EMPTY),
        ("or-intro", P("p -> p | q"), EMPTY),
        ("modus-ponens", P("p & (p -> q) -> q | r"), EMPTY),
        ("curry", P("(p & q -> r) -> (p -> q -> r)"), EMPTY),
        ("uncurry", P("(p -> q -> r) -> (p & q -> r)"), EMPTY),
        ("dneg", P("p -> ((p -> false) -> false)"), EMPTY),
        ("contra", P("(p -> q) & (q -> false) -> (p -> false)"), EMPTY),
        ("or-comm", P("p | q -> q | p"), EMPTY),
        ("and-comm", P("p & q -> q & p"), EMPTY),
        ("distrib", P("p & (q | r) -> (p & q) | (p & r)"), EMPTY),
        ("box-k", P("[a](p -> q) & [a]p -> [a]q | [a]r"), EMPTY),
        ("box-and", P("[a]p & [a]q -> [a](p & q)"), EMPTY),
        ("dia-or", P("<a>(p | q) -> <a>p | <a>q"), EMPTY),
        ("dia-mono", P("[a](p -> q) & <a>p -> <a>q"), EMPTY),
        ("a5", P("[a]p & <a>q -> <a>(p & q)"), EMPTY),
        ("a6", P("<a>false -> r"), EMPTY),
        ("a7", P("p -> [a]<a^>p"), EMPTY),
        ("a7b", P("<a>[a^]p -> p | q"), EMPTY),
        ("a8", P("(<a>p -> [a]q) -> [a](p -> q)"), EMPTY),
        ("a9", P("<a>(p -> q) -> ([a]p -> <a>q)"), EMPTY),
        ("T", P("[a]p -> p"), T),
        ("T-and", P("[a](p & q) -> q | r"), T),
        ("T-dia", P("p & s -> <a>p"), T),
        ("4", P("[a]p -> [a][a]p"), F),
        ("4-dia", P("<a><a>p -> <a>p"), F),
        ("4-and", P("[a]p & [a]q -> [a][a](p & q)"), F),
        ("S4", P("[a]p -> [a][a]p & p"), S4),
        ("D", P("[a]p -> <a>p"), D),
        ("D-and", P("[a](p & q) -> <a>q"), D),
    ]
    return cases
