"""Tokenizer for the supported Solidity subset."""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum


class TokenKind(Enum):
    IDENT = "identifier"
    NUMBER = "number"
    STRING = "string"
    HEX_STRING = "hex string"
    PUNCT = "punctuation"
    EOF = "end of input"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    value: str
    start: int
    end: int
    line: int
    column: int

    def is_punct(self, value: str) -> bool:
        return self.kind is TokenKind.PUNCT and self.value == value

    def is_ident(self, value: str | None = None) -> bool:
        return self.kind is TokenKind.IDENT and (value is None or self.value == value)

    def describe(self) -> str:
        if self.kind is TokenKind.EOF:
            return "end of input"
        return f"{self.value!r}"


class LexError(Exception):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


# Longest operators first so the alternation is greedy.
_PUNCTUATION = sorted(
    """
    >>>= >>> <<= >>= ** ++ -- && || == != <= >= << >> += -= *= /= %= |= &= ^= => -> :=
    ( ) [ ] { } ; , . ? : = + - * / % ! ~ & | ^ < > @
    """.split(),
    key=len,
    reverse=True,
)
_PUNCT_RE = re.compile("|".join(re.escape(p) for p in _PUNCTUATION))
_IDENT_RE = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*")
_NUMBER_RE = re.compile(
    r"0[xX][0-9a-fA-F_]+|(?:[0-9][0-9_]*(?:\.[0-9_]*)?|\.[0-9][0-9_]*)(?:[eE]-?[0-9_]+)?"
)
_WS_RE = re.compile(r"[ \t\r\n\f\v]+")


def _string_end(text: str, pos: int, line: int, col: int) -> int:
    quote = text[pos]
    i = pos + 1
    while i < len(text):
        ch = text[i]
        if ch == "\\":
            i += 2
            continue
        if ch == quote:
            return i + 1
        if ch == "\n":
            break
        i += 1
    raise LexError("unterminated string literal", line, col)


def tokenize(text: str) -> list[Token]:
    """Split ``text`` into tokens, dropping whitespace and comments.

    Offsets are character indices into ``text``; lines and columns are 1-based.
    """
    tokens: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    n = len(text)

    def advance_lines(start: int, end: int) -> None:
        nonlocal line, line_start
        nl = text.count("\n", start, end)
        if nl:
            line += nl
            line_start = text.rfind("\n", start, end) + 1

    while pos < n:
        col = pos - line_start + 1
        m = _WS_RE.match(text, pos)
        if m:
            advance_lines(pos, m.end())
            pos = m.end()
            continue
        if text.startswith("//", pos):
            end = text.find("\n", pos)
            pos = n if end < 0 else end
            continue
        if text.startswith("/*", pos):
            end = text.find("*/", pos + 2)
            if end < 0:
                raise LexError("unterminated block comment", line, col)
            advance_lines(pos, end + 2)
            pos = end + 2
            continue
        ch = text[pos]
        if ch in "\"'":
            end = _string_end(text, pos, line, col)
            tokens.append(Token(TokenKind.STRING, text[pos:end], pos, end, line, col))
            pos = end
            continue
        m = _IDENT_RE.match(text, pos)
        if m:
            word = m.group()
            end = m.end()
            # hex"..." and unicode"..." prefixes bind to the following string
            if word in ("hex", "unicode") and end < n and text[end] in "\"'":
                send = _string_end(text, end, line, col)
                kind = TokenKind.HEX_STRING if word == "hex" else TokenKind.STRING
                tokens.append(Token(kind, text[pos:send], pos, send, line, col))
                pos = send
                continue
            tokens.append(Token(TokenKind.IDENT, word, pos, end, line, col))
            pos = end
            continue
        if ch.isdigit() or (ch == "." and pos + 1 < n and text[pos + 1].isdigit()):
            m = _NUMBER_RE.match(text, pos)
            assert m is not None
            tokens.append(Token(TokenKind.NUMBER, m.group(), pos, m.end(), line, col))
            pos = m.end()
            continue
        m = _PUNCT_RE.match(text, pos)
        if m:
            tokens.append(Token(TokenKind.PUNCT, m.group(), pos, m.end(), line, col))
            pos = m.end()
            continue
        raise LexError(f"unexpected character {ch!r}", line, col)

    col = pos - line_start + 1
    tokens.append(Token(TokenKind.EOF, "", n, n, line, col))
    return tokens
