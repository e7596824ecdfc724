"""Tokenizer shared by the model file parser and the predicate language."""
from __future__ import annotations

import re
from dataclasses import dataclass

IDENT, INT, STRING, PUNCT, EOF, ERROR = "ident", "int", "string", "punct", "eof", "error"

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>[0-9]+)
  | (?P<string>"[^"\n]*")
  | (?P<punct>->|!=|<=|>=|[{}();:,./=<>\-])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int
    offset: int

    def __str__(self):
        return "end of input" if self.kind == EOF else repr(self.text)


def tokenize(text: str) -> list:
    """Split ``text`` into tokens; unknown characters become ERROR tokens.

    The EOF token is positioned on the last character of the source so that
    every location it carries lies inside the text.
    """
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            tokens.append(Token(ERROR, text[pos], line, pos - line_start + 1, pos))
            pos += 1
            continue
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1, pos))
        chunk = m.group()
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    last = max(len(text) - 1, 0)
    eline = text.count("\n", 0, last) + 1
    ecol = last - (text.rfind("\n", 0, last) + 1) + 1
    tokens.append(Token(EOF, "", eline, ecol, last))
    return tokens
