"""Formulas of the multi-modal intuitionistic language.

Characters come from a converse-closed alphabet: every forward character
``a`` has a backward partner ``a^``.  Formulas are immutable trees built from
atoms, falsum, the binary connectives and the two modalities.  Verum is the
derived formula ``false -> false`` and is printed as ``true``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence


class ParseError(ValueError):
    """Malformed concrete syntax; ``pos`` is the character offset."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at offset {pos}")
        self.pos = pos


class AlphabetError(ValueError):
    """A character outside the declared alphabet."""


@dataclass(frozen=True, order=True)
class Char:
    name: str
    backward: bool = False

    @property
    def converse(self) -> "Char":
        return Char(self.name, not self.backward)

    @property
    def forward(self) -> "Char":
        return Char(self.name, False)

    def __str__(self) -> str:
        return self.name + ("^" if self.backward else "")

    def __repr__(self) -> str:
        return f"Char({str(self)!r})"

    @staticmethod
    def parse(text: str) -> "Char":
        text = text.strip()
        backward = text.endswith("^")
        name = text[:-1] if backward else text
        if not name or not (name[0].isalpha() or name[0] == "_") or not all(
            c.isalnum() or c == "_" for c in name
        ):
            raise ParseError(f"bad character {text!r}", 0)
        return Char(name, backward)


def close_alphabet(chars: Iterable[Char | str]) -> frozenset[Char]:
    out = set()
    for c in chars:
        c = Char.parse(c) if isinstance(c, str) else c
        out.add(c)
        out.add(c.converse)
    return frozenset(out)


def converse_string(s: Sequence[Char]) -> tuple[Char, ...]:
    return tuple(c.converse for c in reversed(s))


class Formula:
    __slots__ = ()

    def __str__(self) -> str:
        return to_text(self)

    def __repr__(self) -> str:
        return f"<{to_text(self)}>"


@dataclass(frozen=True, repr=False)
class Atom(Formula):
    name: str


@dataclass(frozen=True, repr=False)
class Bot(Formula):
    pass


@dataclass(frozen=True, repr=False)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, repr=False)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, repr=False)
class Imp(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, repr=False)
class Dia(Formula):
    char: Char
    body: Formula


@dataclass(frozen=True, repr=False)
class Box(Formula):
    char: Char
    body: Formula


BOT = Bot()
TOP = Imp(BOT, BOT)

Binary = (Or, And, Imp)
Modal = (Dia, Box)


def neg(a: Formula) -> Formula:
    return Imp(a, BOT)


def big_or(items: Sequence[Formula]) -> Formula:
    """Left-nested disjunction; the empty disjunction is falsum."""
    if not items:
        return BOT
    out = items[0]
    for f in items[1:]:
        out = Or(out, f)
    return out


def big_and(items: Sequence[Formula]) -> Formula:
    if not items:
        return TOP
    out = items[0]
    for f in items[1:]:
        out = And(out, f)
    return out


def length(a: Formula) -> int:
    """Number of nodes of the syntax tree."""
    if isinstance(a, Binary):
        return 1 + length(a.left) + length(a.right)
    if isinstance(a, Modal):
        return 1 + length(a.body)
    return 1


def subformulas(a: Formula) -> Iterator[Formula]:
    yield a
    if isinstance(a, Binary):
        yield from subformulas(a.left)
        yield from subformulas(a.right)
    elif isinstance(a, Modal):
        yield from subformulas(a.body)


def atoms(a: Formula) -> frozenset[str]:
    return frozenset(f.name for f in subformulas(a) if isinstance(f, Atom))


def chars(a: Formula) -> frozenset[Char]:
    return frozenset(f.char for f in subformulas(a) if isinstance(f, Modal))


# -- signatures ------------------------------------------------------------

POS, NEG = "+", "-"


def flip(polarity: str) -> str:
    return NEG if polarity == POS else POS


def _check_polarity(polarity: str) -> None:
    if polarity not in (POS, NEG):
        raise ValueError(f"polarity must be '+' or '-', got {polarity!r}")


@lru_cache(maxsize=1 << 16)
def signature(a: Formula, polarity: str) -> frozenset[Formula]:
    """Polarity signature as a set of formulas, bottom and top included.

    Atoms contribute only to the positive signature; compound formulas
    contribute themselves to both.
    """
    _check_polarity(polarity)
    if isinstance(a, Atom):
        return frozenset({a, BOT, TOP}) if polarity == POS else frozenset({BOT, TOP})
    if isinstance(a, Bot):
        return frozenset({BOT, TOP})
    if a == TOP:
        return frozenset({BOT, TOP})
    if isinstance(a, (Or, And)):
        return frozenset({a}) | signature(a.left, polarity) | signature(a.right, polarity)
    if isinstance(a, Imp):
        return frozenset({a}) | signature(a.left, flip(polarity)) | signature(a.right, polarity)
    if isinstance(a, Modal):
        return frozenset({a}) | signature(a.body, polarity)
    raise TypeError(a)


def atom_signature(a: Formula, polarity: str) -> frozenset[str]:
    """Atoms occurring in ``a`` with the given polarity."""
    return frozenset(f.name for f in signature(a, polarity) if isinstance(f, Atom))


# -- printing --------------------------------------------------------------

_PREC = {Imp: 1, Or: 2, And: 3}
_OPS = {Imp: " -> ", Or: " | ", And: " & "}


def _prec(a: Formula) -> int:
    if a == TOP:
        return 4
    return _PREC.get(type(a), 4)


@lru_cache(maxsize=1 << 16)
def to_text(a: Formula) -> str:
    if isinstance(a, Atom):
        return a.name
    if isinstance(a, Bot):
        return "false"
    if a == TOP:
        return "true"
    if isinstance(a, Modal):
        body = to_text(a.body)
        if _prec(a.body) < 4:
            body = f"({body})"
        return (f"<{a.char}>" if isinstance(a, Dia) else f"[{a.char}]") + body
    p = _prec(a)
    left, right = to_text(a.left), to_text(a.right)
    if isinstance(a, Imp):
        # right-associative
        if _prec(a.left) <= p:
            left = f"({left})"
        if _prec(a.right) < p:
            right = f"({right})"
    else:
        # left-associative
        if _prec(a.left) < p:
            left = f"({left})"
        if _prec(a.right) <= p:
            right = f"({right})"
    return left + _OPS[type(a)] + right


def key(a: Formula) -> str:
    """Total order key used for canonical orderings."""
    return to_text(a)


# -- parsing ---------------------------------------------------------------

_SYMBOLS = ("->", "&", "|", "<", ">", "[", "]", "(", ")", "^", ",", "=>", "-", ":")


def tokenize(text: str) -> list[tuple[str, str, int]]:
    """Split into (kind, value, offset) triples; kinds are 'id', 'sym', 'end'."""
    out = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            out.append(("id", text[i:j], i))
            i = j
            continue
        for s in _SYMBOLS:
            if text.startswith(s, i):
                out.append(("sym", s, i))
                i += len(s)
                break
        else:
            raise ParseError(f"unexpected {c!r}", i)
    out.append(("end", "", n))
    return out


class TokenStream:
    def __init__(self, text: str, alphabet: frozenset[Char] | None = None):
        self.toks = tokenize(text)
        self.i = 0
        self.alphabet = alphabet or None

    @property
    def peek(self) -> tuple[str, str, int]:
        return self.toks[self.i]

    def peek_at(self, k: int) -> tuple[str, str, int]:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, value: str) -> bool:
        kind, v, _ = self.peek
        return kind == "sym" and v == value

    def next(self) -> tuple[str, str, int]:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, value: str) -> None:
        kind, v, pos = self.peek
        if kind != "sym" or v != value:
            got = v if kind != "end" else "end of input"
            raise ParseError(f"expected {value!r}, got {got!r}", pos)
        self.i += 1

    def done(self) -> None:
        kind, v, pos = self.peek
        if kind != "end":
            raise ParseError(f"unexpected {v!r}", pos)

    def char(self) -> Char:
        kind, v, pos = self.next()
        if kind != "id":
            raise ParseError("expected a character", pos)
        backward = False
        if self.at("^"):
            self.i += 1
            backward = True
        c = Char(v, backward)
        if self.alphabet is not None and c not in self.alphabet:
            raise AlphabetError(f"character {c} not in alphabet")
        return c

    # F ::= D ("->" F)?     D ::= C ("|" C)*     C ::= U ("&" U)*
    def formula(self) -> Formula:
        left = self.disj()
        if self.at("->"):
            self.i += 1
            return Imp(left, self.formula())
        return left

    def disj(self) -> Formula:
        out = self.conj()
        while self.at("|"):
            self.i += 1
            out = Or(out, self.conj())
        return out

    def conj(self) -> Formula:
        out = self.unary()
        while self.at("&"):
            self.i += 1
            out = And(out, self.unary())
        return out

    def unary(self) -> Formula:
        kind, v, pos = self.peek
        if kind == "id":
            self.i += 1
            if v == "false":
                return BOT
            if v == "true":
                return TOP
            return Atom(v)
        if kind == "sym" and v == "<":
            self.i += 1
            c = self.char()
            self.expect(">")
            return Dia(c, self.unary())
        if kind == "sym" and v == "[":
            self.i += 1
            c = self.char()
            self.expect("]")
            return Box(c, self.unary())
        if kind == "sym" and v == "(":
            self.i += 1
            f = self.formula()
            self.expect(")")
            return f
        got = v if kind != "end" else "end of input"
        raise ParseError(f"expected a formula, got {got!r}", pos)


def parse_formula(text: str, alphabet: Iterable[Char] | None = None) -> Formula:
    """Parse the ASCII surface syntax.

    >>> parse_formula("<a>p & [a^]q")
    <<a>p & [a^]q>
    """
    ts = TokenStream(text, frozenset(alphabet) if alphabet is not None else None)
    f = ts.formula()
    ts.done()
    return f
