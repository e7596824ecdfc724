"""Closed predicate language used for partition conditions and safety checks.

Grammar::

    expr    := conj ("or" conj)*
    conj    := unary ("and" unary)*
    unary   := "not" unary | "(" expr ")" | "true" | "false" | operand OP operand
    operand := IDENT | ["-"] INT
    OP      := "=" | "!=" | "<" | "<=" | ">" | ">="

An identifier evaluates to its binding in the environment; unbound
identifiers are symbolic constants, so ``t1=bridge`` compares the state of
role ``t1`` with the name ``bridge``.
"""
from __future__ import annotations

import operator
from dataclasses import dataclass

from .core import ModelError
from .lexer import EOF, IDENT, INT, PUNCT, Token, tokenize

KEYWORDS = {"and", "or", "not", "true", "false"}
_OPS = {"=": operator.eq, "!=": operator.ne, "<": operator.lt, "<=": operator.le,
        ">": operator.gt, ">=": operator.ge}


class PredicateError(ModelError):
    def __init__(self, message, token: Token = None):
        super().__init__(message)
        self.token = token


@dataclass(frozen=True)
class Const:
    value: bool

    def evaluate(self, env) -> bool:
        return self.value

    def __str__(self):
        return "true" if self.value else "false"


@dataclass(frozen=True)
class Ref:
    name: str

    def value(self, env):
        return env.get(self.name, self.name)

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Lit:
    value: int

    def __str__(self):
        return str(self.value)


def _operand_value(x, env):
    return x.value(env) if isinstance(x, Ref) else x.value


@dataclass(frozen=True)
class Compare:
    op: str
    left: object
    right: object

    def evaluate(self, env) -> bool:
        a, b = _operand_value(self.left, env), _operand_value(self.right, env)
        if self.op not in ("=", "!=") and not (isinstance(a, int) and isinstance(b, int)):
            raise PredicateError(f"cannot order {a!r} and {b!r} in '{self}'")
        return _OPS[self.op](a, b)

    def __str__(self):
        return f"{self.left} {self.op} {self.right}"


@dataclass(frozen=True)
class Not:
    arg: object

    def evaluate(self, env) -> bool:
        return not self.arg.evaluate(env)

    def __str__(self):
        return f"not ({self.arg})"


@dataclass(frozen=True)
class And:
    left: object
    right: object

    def evaluate(self, env) -> bool:
        return self.left.evaluate(env) and self.right.evaluate(env)

    def __str__(self):
        return f"({self.left}) and ({self.right})"


@dataclass(frozen=True)
class Or:
    left: object
    right: object

    def evaluate(self, env) -> bool:
        return self.left.evaluate(env) or self.right.evaluate(env)

    def __str__(self):
        return f"({self.left}) or ({self.right})"


TRUE = Const(True)


class PredicateParser:
    """Recursive-descent parser over a token list, starting at ``pos``."""

    def __init__(self, tokens, pos=0):
        self.tokens = tokens
        self.pos = pos

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != EOF:
            self.pos += 1
        return tok

    def _is(self, text):
        tok = self.peek()
        return tok.kind in (IDENT, PUNCT) and tok.text == text

    def parse(self):
        left = self._conj()
        while self._is("or"):
            self.advance()
            left = Or(left, self._conj())
        return left

    def _conj(self):
        left = self._unary()
        while self._is("and"):
            self.advance()
            left = And(left, self._unary())
        return left

    def _unary(self):
        tok = self.peek()
        if self._is("not"):
            self.advance()
            return Not(self._unary())
        if self._is("("):
            self.advance()
            inner = self.parse()
            if not self._is(")"):
                raise PredicateError(f"expected ')' but found {self.peek()}", self.peek())
            self.advance()
            return inner
        if self._is("true") or self._is("false"):
            self.advance()
            return Const(tok.text == "true")
        left = self._operand()
        op = self.peek()
        if op.kind != PUNCT or op.text not in _OPS:
            raise PredicateError(f"expected comparison operator but found {op}", op)
        self.advance()
        return Compare(op.text, left, self._operand())

    def _operand(self):
        tok = self.advance()
        if tok.kind == IDENT and tok.text not in KEYWORDS:
            return Ref(tok.text)
        if tok.kind == INT:
            return Lit(int(tok.text))
        if tok.kind == PUNCT and tok.text == "-" and self.peek().kind == INT:
            return Lit(-int(self.advance().text))
        raise PredicateError(f"expected identifier or integer but found {tok}", tok)


def parse_predicate(text: str):
    tokens = tokenize(text)
    parser = PredicateParser(tokens)
    pred = parser.parse()
    if parser.peek().kind != EOF:
        raise PredicateError(f"unexpected {parser.peek()} after predicate", parser.peek())
    return pred


def as_predicate(pred):
    """Accept predicate text, an AST node, or a plain callable over an env."""
    if isinstance(pred, str):
        return parse_predicate(pred)
    if hasattr(pred, "evaluate"):
        return pred
    if callable(pred):
        return _Callable(pred)
    raise TypeError(f"not a predicate: {pred!r}")


@dataclass(frozen=True)
class _Callable:
    fn: object

    def evaluate(self, env) -> bool:
        return bool(self.fn(env))

    def __str__(self):
        return getattr(self.fn, "__name__", "<callable>")
