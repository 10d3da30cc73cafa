"""Boolean guards over atomic propositions.

Grammar (lowest to highest precedence)::

    expr  := conj ('|' conj)*
    conj  := unary ('&' unary)*
    unary := '!' unary | '(' expr ')' | 't' | 'f' | ATOM

``t`` and ``f`` are the constants true and false, so they cannot be used as
atom names.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Union

from .errors import GuardSyntaxError, UnknownAtom

RESERVED = frozenset({"t", "f"})
ATOM_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_TOKEN_RE = re.compile(r"\s*(?:([A-Za-z_][A-Za-z0-9_]*)|(\S))")


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Not:
    arg: "Node"


@dataclass(frozen=True)
class And:
    args: tuple


@dataclass(frozen=True)
class Or:
    args: tuple


Node = Union[Const, Atom, Not, And, Or]


@dataclass(frozen=True)
class Guard:
    """A parsed guard. Two guards are equal iff their source texts are."""

    text: str
    tree: Node = field(compare=False, repr=False)

    @classmethod
    def parse(cls, text: str) -> "Guard":
        return cls(text, _Parser(text).parse())

    @property
    def atoms(self) -> frozenset:
        return frozenset(_atoms(self.tree))

    def __str__(self):
        return self.text


def _atoms(node):
    if isinstance(node, Atom):
        yield node.name
    elif isinstance(node, Not):
        yield from _atoms(node.arg)
    elif isinstance(node, (And, Or)):
        for a in node.args:
            yield from _atoms(a)


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = []
        for m in _TOKEN_RE.finditer(text):
            if m.group(1) is not None:
                self.tokens.append((m.group(1), m.start(1), True))
            elif m.group(2) is not None:
                self.tokens.append((m.group(2), m.start(2), False))
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, len(self.text), False)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def parse(self):
        if not self.tokens:
            raise GuardSyntaxError(self.text, 0, "empty guard")
        node = self.expr()
        tok, pos, _ = self.peek()
        if tok is not None:
            raise GuardSyntaxError(self.text, pos, f"unexpected {tok!r}")
        return node

    def expr(self):
        args = [self.conj()]
        while self.peek()[0] == "|":
            self.take()
            args.append(self.conj())
        return args[0] if len(args) == 1 else Or(tuple(args))

    def conj(self):
        args = [self.unary()]
        while self.peek()[0] == "&":
            self.take()
            args.append(self.unary())
        return args[0] if len(args) == 1 else And(tuple(args))

    def unary(self):
        tok, pos, is_word = self.take()
        if tok is None:
            raise GuardSyntaxError(self.text, pos, "unexpected end of guard")
        if tok == "!":
            return Not(self.unary())
        if tok == "(":
            node = self.expr()
            close, cpos, _ = self.take()
            if close != ")":
                raise GuardSyntaxError(self.text, cpos, "expected ')'")
            return node
        if is_word:
            if tok == "t":
                return Const(True)
            if tok == "f":
                return Const(False)
            return Atom(tok)
        raise GuardSyntaxError(self.text, pos, f"unexpected {tok!r}")


def _eval(node, letter):
    if isinstance(node, Atom):
        return node.name in letter
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Not):
        return not _eval(node.arg, letter)
    if isinstance(node, And):
        return all(_eval(a, letter) for a in node.args)
    return any(_eval(a, letter) for a in node.args)


def eval_guard(guard, letter: Iterable[str], atoms: Iterable[str] | None = None) -> bool:
    """Evaluate ``guard`` on ``letter`` (the set of atoms that hold).

    When ``atoms`` is given, every atom mentioned by the guard or present in
    the letter must be declared there, otherwise :class:`UnknownAtom`.
    """
    if isinstance(guard, str):
        guard = Guard.parse(guard)
    letter = frozenset(letter)
    if atoms is not None:
        declared = frozenset(atoms)
        for name in sorted(guard.atoms | letter):
            if name not in declared:
                raise UnknownAtom(name)
    return _eval(guard.tree, letter)
