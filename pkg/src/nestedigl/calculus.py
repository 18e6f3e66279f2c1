"""Backward rule application, proof objects and an independent proof checker.

Rules are read bottom-up: ``apply_backward`` maps a conclusion and a rule
instance to the list of premises.  Propagation rules (``diaRprop`` and
``boxLprop``) carry a target component; the side condition that the target
is reachable along a path spelling a word of L(x) is decided by
CFL-reachability every time, so stored witnesses are never trusted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterator, Sequence

from .formula import And, Atom, Bot, Box, Char, Dia, Formula, Imp, Or, parse_formula, to_text
from .grammar import AxiomSet, Grammar, build_grammar, reach
from .sequent import (
    Nested,
    SequentError,
    add_ant,
    add_child,
    check_sequent,
    fresh_name,
    parse_sequent,
    propagation_graph,
    remove_ant,
    set_output,
    strip_output,
    to_sequent_text,
)

RULES = (
    "id", "botL", "orL", "orR1", "orR2", "andL", "andR", "impL", "impR",
    "diaRprop", "boxLprop", "diaL", "boxR", "dX",
)
INITIAL = ("id", "botL")
PROPAGATION = ("diaRprop", "boxLprop")
CREATING = ("diaL", "boxR", "dX")
LEFT_RULES = ("botL", "orL", "andL", "impL", "boxLprop", "diaL")
RIGHT_RULES = ("id", "orR1", "orR2", "andR", "impR", "diaRprop", "boxR")


class RuleError(ValueError):
    """A rule instance does not fit the sequent it is applied to."""


class SideConditionError(RuleError):
    """The propagation side condition fails."""


@dataclass(frozen=True)
class RuleInstance:
    rule: str
    at: str
    principal: tuple[str, int] | None = None
    target: str | None = None
    character: Char | None = None
    witness: tuple[Char, ...] | None = None

    def __post_init__(self):
        if self.rule not in RULES:
            raise RuleError(f"unknown rule {self.rule!r}")
        if self.rule in PROPAGATION and self.target is None:
            raise RuleError(f"{self.rule} needs a target component")


@dataclass(frozen=True, eq=False)
class Proof:
    conclusion: Nested
    rule: RuleInstance
    premises: tuple["Proof", ...] = ()

    @cached_property
    def height(self) -> int:
        if not self.premises:
            return 0
        return 1 + max(p.height for p in self.premises)

    @cached_property
    def size(self) -> int:
        return 1 + sum(p.size for p in self.premises)

    def nodes(self) -> Iterator["Proof"]:
        stack = [self]
        while stack:
            p = stack.pop()
            yield p
            stack.extend(reversed(p.premises))

    def rules_used(self) -> set[str]:
        return {p.rule.rule for p in self.nodes()}


@lru_cache(maxsize=256)
def grammar_of(axioms: AxiomSet) -> Grammar:
    return build_grammar(axioms)


def principal_formula(g: Nested, inst: RuleInstance) -> Formula:
    if inst.principal is None:
        raise RuleError(f"{inst.rule} needs a principal formula")
    side, i = inst.principal
    n = g[inst.at]
    seq = n.ant if side == "ant" else n.con if side == "out" else None
    if seq is None:
        raise RuleError(f"bad principal side {side!r}")
    if not 0 <= i < len(seq):
        raise RuleError(f"no formula at {side}[{i}] of {inst.at}")
    return seq[i]


def _drop_at(g: Nested, name: str, i: int) -> Nested:
    from dataclasses import replace

    from .sequent import update

    return update(g, name, lambda n: replace(n, ant=n.ant[:i] + n.ant[i + 1:]))


def _expect(f: Formula, cls, rule: str) -> None:
    if not isinstance(f, cls):
        raise RuleError(f"{rule} expects a {cls.__name__} formula, got {to_text(f)}")


def _side(inst: RuleInstance, side: str) -> None:
    if inst.principal is None or inst.principal[0] != side:
        raise RuleError(f"{inst.rule} works on the {'antecedent' if side == 'ant' else 'output'}")


def _child_name(g: Nested, inst: RuleInstance) -> str:
    if inst.target is not None:
        if inst.target in g.names:
            raise RuleError(f"new component name {inst.target} already used")
        return inst.target
    return fresh_name(g.names)


def check_reach(g: Nested, w: str, x: Char, u: str, axioms: AxiomSet) -> None:
    if u not in g.names:
        raise RuleError(f"no component named {u}")
    targets = reach(grammar_of(axioms), propagation_graph(g), w, x)
    if u not in targets:
        raise SideConditionError(f"no path {w} ~> {u} spelling a word of L({x})")


def apply_backward(g: Nested, inst: RuleInstance, axioms: AxiomSet) -> list[Nested]:
    """Premises of ``inst`` applied to conclusion g, read bottom-up."""
    try:
        return _apply(g, inst, axioms)
    except SequentError as e:
        raise RuleError(str(e)) from None


def _apply(g: Nested, inst: RuleInstance, axioms: AxiomSet) -> list[Nested]:
    r, w = inst.rule, inst.at
    if w not in g.names:
        raise RuleError(f"no component named {w}")
    n = g[w]

    if r == "dX":
        x = inst.character
        if x is None:
            raise RuleError("dX needs a character")
        if x not in axioms.serial:
            raise RuleError(f"dX for {x} needs the seriality axiom D{x}")
        return [add_child(g, w, x, Nested(_child_name(g, inst)))]

    f = principal_formula(g, inst)
    i = inst.principal[1]

    if r == "id":
        _side(inst, "out")
        _expect(f, Atom, r)
        if f not in n.ant:
            raise RuleError(f"id needs {to_text(f)} in the antecedent of {w}")
        return []
    if r == "botL":
        _side(inst, "ant")
        _expect(f, Bot, r)
        return []
    if r == "andL":
        _side(inst, "ant")
        _expect(f, And, r)
        return [add_ant(_drop_at(g, w, i), w, (f.left, f.right))]
    if r == "orL":
        _side(inst, "ant")
        _expect(f, Or, r)
        rest = _drop_at(g, w, i)
        return [add_ant(rest, w, (f.left,)), add_ant(rest, w, (f.right,))]
    if r in ("orR1", "orR2"):
        _side(inst, "out")
        _expect(f, Or, r)
        return [set_output(g, w, f.left if r == "orR1" else f.right)]
    if r == "andR":
        _side(inst, "out")
        _expect(f, And, r)
        return [set_output(g, w, f.left), set_output(g, w, f.right)]
    if r == "impR":
        _side(inst, "out")
        _expect(f, Imp, r)
        return [set_output(add_ant(g, w, (f.left,)), w, f.right)]
    if r == "impL":
        _side(inst, "ant")
        _expect(f, Imp, r)
        left = set_output(strip_output(g), w, f.left)
        return [left, add_ant(g, w, (f.right,))]
    if r == "diaRprop":
        _side(inst, "out")
        _expect(f, Dia, r)
        if inst.character is not None and inst.character != f.char:
            raise RuleError("character does not match the principal formula")
        check_reach(g, w, f.char, inst.target, axioms)
        return [set_output(set_output(g, w, None), inst.target, f.body)]
    if r == "boxLprop":
        _side(inst, "ant")
        _expect(f, Box, r)
        if inst.character is not None and inst.character != f.char:
            raise RuleError("character does not match the principal formula")
        check_reach(g, w, f.char, inst.target, axioms)
        return [add_ant(g, inst.target, (f.body,))]
    if r == "diaL":
        _side(inst, "ant")
        _expect(f, Dia, r)
        child = Nested(_child_name(g, inst), (f.body,), ())
        return [add_child(_drop_at(g, w, i), w, f.char, child)]
    if r == "boxR":
        _side(inst, "out")
        _expect(f, Box, r)
        child = Nested(_child_name(g, inst), (), (f.body,))
        return [add_child(set_output(g, w, None), w, f.char, child)]
    raise RuleError(f"unknown rule {r!r}")


# -- convenience constructors ----------------------------------------------


def locate(g: Nested, at: str, side: str, f: Formula) -> tuple[str, int]:
    """Address of (one occurrence of) f in component ``at``."""
    n = g[at]
    seq = n.ant if side == "ant" else n.con
    try:
        return (side, seq.index(f))
    except ValueError:
        raise RuleError(f"{to_text(f)} not found on side {side} of {at}") from None


def instance(g: Nested, rule: str, at: str, f: Formula | None = None, *,
             target: str | None = None, character: Char | None = None) -> RuleInstance:
    """Build an instance addressing formula f by value."""
    principal = None
    if f is not None:
        side = "out" if rule in RIGHT_RULES else "ant"
        principal = locate(g, at, side, f)
        if character is None and isinstance(f, (Dia, Box)):
            character = f.char
    return RuleInstance(rule, at, principal, target, character)


# -- checking ---------------------------------------------------------------


class CheckError(Exception):
    def __init__(self, path: tuple[int, ...], rule: str, reason: str):
        where = "root" if not path else "root/" + "/".join(map(str, path))
        super().__init__(f"{where} [{rule}]: {reason}")
        self.path = path
        self.rule = rule
        self.reason = reason


def check_proof(p: Proof, axioms: AxiomSet) -> None:
    """Raise CheckError at the first bad node; return None if the proof is valid.

    Premises are compared with the recomputed ones up to renaming of
    components and reordering of antecedents and siblings.
    """
    stack: list[tuple[Proof, tuple[int, ...]]] = [(p, ())]
    while stack:
        node, path = stack.pop()
        r = node.rule.rule
        try:
            check_sequent(node.conclusion)
        except SequentError as e:
            raise CheckError(path, r, f"ill-formed conclusion: {e}") from None
        try:
            expected = apply_backward(node.conclusion, node.rule, axioms)
        except RuleError as e:
            raise CheckError(path, r, str(e)) from None
        if len(expected) != len(node.premises):
            raise CheckError(path, r, f"expected {len(expected)} premises, found {len(node.premises)}")
        for k, (want, sub) in enumerate(zip(expected, node.premises)):
            try:
                check_sequent(sub.conclusion)
            except SequentError as e:
                raise CheckError(path + (k,), sub.rule.rule, f"ill-formed conclusion: {e}") from None
            if want.shape != sub.conclusion.shape:
                raise CheckError(
                    path, r,
                    f"premise {k} is {to_sequent_text(sub.conclusion)}, expected {to_sequent_text(want)}",
                )
            stack.append((sub, path + (k,)))


def is_valid(p: Proof, axioms: AxiomSet) -> bool:
    try:
        check_proof(p, axioms)
        return True
    except CheckError:
        return False


def build(conclusion: Nested, inst: RuleInstance, premises: Sequence[Proof], axioms: AxiomSet) -> Proof:
    """A proof node whose premises are checked against the rule right away."""
    expected = apply_backward(conclusion, inst, axioms)
    if len(expected) != len(premises):
        raise RuleError(f"{inst.rule} has {len(expected)} premises, got {len(premises)}")
    for want, sub in zip(expected, premises):
        if want.shape != sub.conclusion.shape:
            raise RuleError(
                f"{inst.rule}: premise {to_sequent_text(sub.conclusion)} "
                f"does not match {to_sequent_text(want)}"
            )
    return Proof(conclusion, inst, tuple(premises))


# -- JSON -------------------------------------------------------------------


def _inst_json(inst: RuleInstance) -> dict:
    return {
        "rule": inst.rule,
        "at": inst.at,
        "principal": None if inst.principal is None
        else {"side": inst.principal[0], "index": inst.principal[1]},
        "character": None if inst.character is None else str(inst.character),
        "target": inst.target,
    }


def proof_to_json(p: Proof, compact: bool = False) -> dict:
    """Serialize; component names are written into the sequent text.

    In compact mode only the root stores its conclusion and the loader
    rebuilds premises with ``apply_backward``.
    """

    def go(node: Proof, root: bool) -> dict:
        d = _inst_json(node.rule)
        if node.rule.witness is not None:
            d["witness"] = [str(c) for c in node.rule.witness]
        if root or not compact:
            d["conclusion"] = to_sequent_text(node.conclusion, names=True)
        d["premises"] = [go(s, False) for s in node.premises]
        return d

    return go(p, True)


def proof_from_json(data: dict | str, axioms: AxiomSet | None = None) -> Proof:
    if isinstance(data, str):
        data = json.loads(data)

    def inst_of(d: dict) -> RuleInstance:
        try:
            pr = d.get("principal")
            ch = d.get("character")
            wit = d.get("witness")
            return RuleInstance(
                d["rule"],
                d["at"],
                None if pr is None else (pr["side"], int(pr["index"])),
                d.get("target"),
                None if ch is None else Char.parse(ch),
                None if wit is None else tuple(Char.parse(c) for c in wit),
            )
        except (KeyError, TypeError) as e:
            raise ValueError(f"malformed proof node: {e}") from None

    def go(d: dict, concl: Nested | None) -> Proof:
        if not isinstance(d, dict):
            raise ValueError("proof node must be an object")
        inst = inst_of(d)
        if "conclusion" in d:
            concl = parse_sequent(d["conclusion"])
        if concl is None:
            raise ValueError("proof node without a conclusion")
        subs = d.get("premises", [])
        if subs and any("conclusion" not in s for s in subs):
            if axioms is None:
                raise ValueError("compact proofs need the axiom set to rebuild premises")
            want = apply_backward(concl, inst, axioms)
            if len(want) != len(subs):
                raise ValueError("premise count does not match the rule")
            return Proof(concl, inst, tuple(go(s, c) for s, c in zip(subs, want)))
        return Proof(concl, inst, tuple(go(s, None) for s in subs))

    return go(data, None)


def render(p: Proof, indent: int = 0) -> str:
    """Plain-text proof tree, conclusion first."""
    pad = "  " * indent
    r = p.rule
    extra = f" -> {r.target}" if r.target and r.rule in PROPAGATION else ""
    lines = [f"{pad}{to_sequent_text(p.conclusion, names=True)}   [{r.rule} @{r.at}{extra}]"]
    for s in p.premises:
        lines.append(render(s, indent + 1))
    return "\n".join(lines)
