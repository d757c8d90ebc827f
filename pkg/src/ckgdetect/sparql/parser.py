"""Recursive-descent parser for the SPARQL subset described in GRAMMAR.md."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Sequence

from ..graph.terms import DEFAULT_NAMESPACES, RDF_TYPE, XSD, Iri, Literal
from .ast import (
    And, Bound, Compare, Const, Exists, Expr, Func, Group, Not, Or, PatternTerm,
    QueryAst, Regex, TriplePattern, Var, expr_children,
)


class QuerySyntaxError(ValueError):
    def __init__(self, message: str, position: int = 0, expected: str = "", line: int = 1, column: int = 1):
        detail = f"{message} at line {line}, column {column}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)
        self.message = message
        self.position = position
        self.expected = expected
        self.line = line
        self.column = column


class UnsupportedFeature(ValueError):
    def __init__(self, feature: str, position: int = 0):
        super().__init__(f"{feature} unsupported")
        self.feature = feature
        self.position = position


UNSUPPORTED_KEYWORDS = {
    "OPTIONAL": "OPTIONAL", "UNION": "UNION", "MINUS": "MINUS", "GRAPH": "GRAPH",
    "SERVICE": "SERVICE", "BIND": "BIND", "VALUES": "VALUES", "ORDER": "ORDER BY",
    "GROUP": "GROUP BY", "HAVING": "HAVING", "OFFSET": "OFFSET", "CONSTRUCT": "CONSTRUCT",
    "ASK": "ASK", "DESCRIBE": "DESCRIBE", "FROM": "FROM", "REDUCED": "REDUCED", "BASE": "BASE",
    "INSERT": "INSERT", "DELETE": "DELETE", "LOAD": "LOAD", "CLEAR": "CLEAR", "WITH": "WITH",
}
AGGREGATES = {"COUNT", "SUM", "AVG", "MIN", "MAX", "SAMPLE", "GROUP_CONCAT"}
FUNCTIONS = {
    "STR": 1, "LCASE": 1, "UCASE": 1, "CONTAINS": 2, "STRSTARTS": 2, "STRENDS": 2,
    "ISIRI": 1, "ISURI": 1, "ISLITERAL": 1,
}
REGEX_FLAGS = frozenset("i")

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<iri><[^<>"{}|^`\\\x00-\x20]*>)
  | (?P<var>[?$][A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:[^"\\\n\r]|\\.)*"|'(?:[^'\\\n\r]|\\.)*')
  | (?P<pname>(?:[A-Za-z](?:[\w.-]*[\w-])?)?:(?:[\w%-](?:[\w.%-]*[\w%-])?)?)
  | (?P<number>[+-]?[0-9]+(?:\.[0-9]*)?(?:[eE][+-]?[0-9]+)?)
  | (?P<lang>@[A-Za-z]+(?:-[A-Za-z0-9]+)*)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>\^\^|&&|\|\||!=|<=|>=|[{}().;,*=<>!])
  | (?P<blank>_:|\[)
  | (?P<path>[/|^+])
    """,
    re.VERBOSE,
)

_ESCAPES = {"t": "\t", "n": "\n", "r": "\r", "b": "\b", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


@dataclass(frozen=True)
class _Tok:
    kind: str
    value: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    out: list[_Tok] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise _error(text, f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup or ""
        if kind == "blank":
            raise UnsupportedFeature("blank nodes", pos)
        if kind != "ws":
            out.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    out.append(_Tok("eof", "", len(text)))
    return out


def _error(text: str, message: str, pos: int, expected: str = "") -> QuerySyntaxError:
    line = text.count("\n", 0, pos) + 1
    column = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return QuerySyntaxError(message, pos, expected, line, column)


def _unescape(body: str) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            nxt = body[i + 1]
            if nxt == "u" and re.fullmatch(r"[0-9A-Fa-f]{4}", body[i + 2:i + 6]):
                out.append(chr(int(body[i + 2:i + 6], 16)))
                i += 6
                continue
            if nxt in _ESCAPES:
                out.append(_ESCAPES[nxt])
                i += 2
                continue
            raise ValueError(f"invalid escape \\{nxt}")
        out.append(ch)
        i += 1
    return "".join(out)


_REGEX_ESCAPABLE = set(".\\*+?()[]{}|^$/-")
_REGEX_CLASSES = set("dwsDWS")


def validate_regex(pattern: str) -> None:
    """Reject constructs outside the documented regex dialect."""
    i = 0
    depth = 0
    in_class = False
    while i < len(pattern):
        ch = pattern[i]
        if ch == "\\":
            if i + 1 >= len(pattern):
                raise UnsupportedFeature("regex construct: trailing backslash")
            nxt = pattern[i + 1]
            if nxt not in _REGEX_ESCAPABLE and nxt not in _REGEX_CLASSES:
                raise UnsupportedFeature(f"regex construct: \\{nxt}")
            i += 2
            continue
        if in_class:
            if ch == "]":
                in_class = False
            i += 1
            continue
        if ch == "[":
            in_class = True
            i += 1
            if i < len(pattern) and pattern[i] == "^":
                i += 1
            if i < len(pattern) and pattern[i] == "]":
                i += 1  # literal ']' first in a class
            continue
        if ch == "{":
            raise UnsupportedFeature("regex construct: counted repetition")
        if ch == "(":
            if pattern.startswith("(?", i):
                raise UnsupportedFeature("regex construct: group extensions")
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise UnsupportedFeature("regex construct: unbalanced parenthesis")
        i += 1
    if in_class or depth:
        raise UnsupportedFeature("regex construct: unterminated group or class")
    try:
        re.compile(pattern)
    except re.error as exc:
        raise UnsupportedFeature(f"regex construct: {exc}") from None


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.prefixes: dict[str, str] = dict(DEFAULT_NAMESPACES)

    # -- token helpers ------------------------------------------------------

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, message: str, expected: str = "", tok: Optional[_Tok] = None) -> QuerySyntaxError:
        t = tok or self.tok
        return _error(self.text, message, t.pos, expected)

    def is_kw(self, *words: str) -> bool:
        return self.tok.kind == "name" and self.tok.value.upper() in words

    def is_punct(self, value: str) -> bool:
        return self.tok.kind == "punct" and self.tok.value == value

    def expect_punct(self, value: str) -> _Tok:
        if not self.is_punct(value):
            raise self.error(f"unexpected {self._describe()}", repr(value))
        return self.advance()

    def expect_kw(self, word: str) -> _Tok:
        if not self.is_kw(word):
            raise self.error(f"unexpected {self._describe()}", word)
        return self.advance()

    def _describe(self) -> str:
        t = self.tok
        return "end of query" if t.kind == "eof" else repr(t.value)

    def check_unsupported(self) -> None:
        t = self.tok
        if t.kind == "name" and t.value.upper() in UNSUPPORTED_KEYWORDS:
            raise UnsupportedFeature(UNSUPPORTED_KEYWORDS[t.value.upper()], t.pos)
        if t.kind == "path":
            raise UnsupportedFeature("property paths", t.pos)
        if t.kind == "lang":
            raise UnsupportedFeature("language tags", t.pos)

    def _nested_group_feature(self) -> str:
        """Name the construct a nested ``{`` belongs to (``{..} UNION {..}`` reads as UNION)."""
        depth = 0
        for t in self.toks[self.i:]:
            if t.kind == "punct" and t.value == "{":
                depth += 1
            elif t.kind == "punct" and t.value == "}":
                depth -= 1
                if depth == 0:
                    continue
            elif depth == 0:
                if t.kind == "name" and t.value.upper() in ("UNION", "MINUS"):
                    return t.value.upper()
                break
        return "nested groups"

    # -- query ----------------------------------------------------------------

    def query(self) -> QueryAst:
        while True:
            self.check_unsupported()
            if not self.is_kw("PREFIX"):
                break
            self.advance()
            t = self.tok
            if t.kind != "pname" or not t.value.endswith(":"):
                raise self.error("malformed PREFIX declaration", "prefix name ending in ':'")
            self.advance()
            iri = self.tok
            if iri.kind != "iri":
                raise self.error("malformed PREFIX declaration", "IRI in angle brackets")
            self.advance()
            self.prefixes[t.value[:-1]] = iri.value[1:-1]
        self.check_unsupported()
        self.expect_kw("SELECT")
        distinct = False
        self.check_unsupported()
        if self.is_kw("DISTINCT"):
            self.advance()
            distinct = True
        select: Optional[list[str]] = []
        if self.is_punct("*"):
            self.advance()
            select = None
        else:
            while self.tok.kind == "var":
                name = self.advance().value[1:]
                if name in select:  # type: ignore[operator]
                    raise self.error(f"variable ?{name} selected twice", tok=self.toks[self.i - 1])
                select.append(name)  # type: ignore[union-attr]
            if self.is_punct("("):
                raise UnsupportedFeature("projection expressions", self.tok.pos)
            if not select:
                raise self.error(f"unexpected {self._describe()}", "variable or '*'")
        self.check_unsupported()
        if self.is_kw("WHERE"):
            self.advance()
        where_tok = self.tok
        where = self.group()
        limit: Optional[int] = None
        self.check_unsupported()
        if self.is_kw("LIMIT"):
            self.advance()
            t = self.tok
            if t.kind != "number" or not t.value.isdigit():
                raise self.error("LIMIT needs a positive integer", "positive integer")
            limit = int(t.value)
            if limit <= 0:
                raise self.error("LIMIT needs a positive integer", "positive integer")
            self.advance()
        self.check_unsupported()
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self._describe()}", "end of query")
        bound = set(where.variables())
        if select is not None:
            for name in select:
                if name not in bound:
                    raise self.error(
                        f"selected variable ?{name} does not occur in any triple pattern", tok=where_tok
                    )
        return QueryAst(
            prefixes=self.prefixes,
            select_vars=tuple(select) if select is not None else None,
            where=where,
            distinct=distinct,
            limit=limit,
            text=self.text,
        )

    # -- group graph patterns -------------------------------------------------

    def group(self) -> Group:
        self.expect_punct("{")
        patterns: list[TriplePattern] = []
        filters: list[Expr] = []
        while True:
            self.check_unsupported()
            if self.is_punct("}"):
                self.advance()
                break
            if self.tok.kind == "eof":
                raise self.error("unterminated group", "'}'")
            if self.is_punct("."):
                self.advance()
                continue
            if self.is_punct("{"):
                raise UnsupportedFeature(self._nested_group_feature(), self.tok.pos)
            if self.is_kw("SELECT"):
                raise UnsupportedFeature("subqueries", self.tok.pos)
            if self.is_kw("FILTER"):
                self.advance()
                filters.append(self.constraint())
                continue
            patterns.extend(self.triples_same_subject())
            if not (self.is_punct(".") or self.is_punct("}") or self.is_kw("FILTER")):
                self.check_unsupported()
                raise self.error(f"unexpected {self._describe()}", "'.' or '}'")
        return Group(tuple(patterns), tuple(filters))

    def triples_same_subject(self) -> list[TriplePattern]:
        subject = self.term("subject")
        out: list[TriplePattern] = []
        while True:
            predicate = self.verb()
            while True:
                out.append(TriplePattern(subject, predicate, self.term("object")))
                if self.is_punct(","):
                    self.advance()
                    continue
                break
            if self.is_punct(";"):
                while self.is_punct(";"):
                    self.advance()
                if self.is_punct(".") or self.is_punct("}") or self.is_kw("FILTER"):
                    break
                continue
            break
        return out

    def verb(self) -> PatternTerm:
        self.check_unsupported()
        if self.tok.kind == "name" and self.tok.value == "a":
            self.advance()
            return RDF_TYPE
        term = self.term("predicate")
        if isinstance(term, Literal):
            raise self.error("literal in predicate position", "IRI or variable", tok=self.toks[self.i - 1])
        self.check_unsupported()
        return term

    def term(self, role: str) -> PatternTerm:
        self.check_unsupported()
        t = self.tok
        if t.kind == "var":
            self.advance()
            return Var(t.value[1:])
        if t.kind in ("iri", "pname"):
            return self.iri()
        if t.kind in ("string", "number") or self.is_kw("TRUE", "FALSE"):
            return self.literal()
        raise self.error(f"unexpected {self._describe()}", f"{role} (variable, IRI or literal)")

    def iri(self) -> Iri:
        t = self.advance()
        if t.kind == "iri":
            value = t.value[1:-1]
        else:
            prefix, _, local = t.value.partition(":")
            if prefix not in self.prefixes:
                raise _error(self.text, f"undeclared prefix {prefix!r}", t.pos, f"PREFIX {prefix}: declaration")
            value = self.prefixes[prefix] + local
        try:
            return Iri(value)
        except ValueError as exc:
            raise _error(self.text, str(exc), t.pos) from None

    def literal(self) -> Literal:
        t = self.advance()
        if t.kind == "name":
            return Literal(t.value.lower(), "boolean")
        if t.kind == "number":
            if not re.fullmatch(r"[+-]?[0-9]+", t.value):
                raise UnsupportedFeature("non-integer numeric literals", t.pos)
            return Literal(str(int(t.value)), "integer")
        try:
            lexical = _unescape(t.value[1:-1])
        except ValueError as exc:
            raise _error(self.text, str(exc), t.pos) from None
        if self.tok.kind == "lang":
            raise UnsupportedFeature("language tags", self.tok.pos)
        if self.is_punct("^^"):
            self.advance()
            if self.tok.kind not in ("iri", "pname"):
                raise self.error(f"unexpected {self._describe()}", "datatype IRI")
            dt_tok = self.tok
            dt = self.iri().value
            if not dt.startswith(XSD) or dt[len(XSD):] not in ("string", "integer", "boolean"):
                raise UnsupportedFeature(f"datatype <{dt}>", dt_tok.pos)
            try:
                return Literal(lexical.strip() if dt != XSD + "string" else lexical, dt[len(XSD):])
            except ValueError as exc:
                raise _error(self.text, str(exc), t.pos) from None
        return Literal(lexical)

    # -- filters --------------------------------------------------------------

    def constraint(self) -> Expr:
        if self.is_punct("("):
            self.advance()
            e = self.expr()
            self.expect_punct(")")
            return e
        if self.tok.kind == "name":
            return self.call()
        raise self.error(f"unexpected {self._describe()}", "'(' or a function call after FILTER")

    def expr(self) -> Expr:
        left = self.and_expr()
        while self.is_punct("||"):
            self.advance()
            left = Or(left, self.and_expr())
        return left

    def and_expr(self) -> Expr:
        left = self.relational()
        while self.is_punct("&&"):
            self.advance()
            left = And(left, self.relational())
        return left

    def relational(self) -> Expr:
        left = self.unary()
        for op in ("=", "!=", "<", ">", "<=", ">="):
            if self.is_punct(op):
                self.advance()
                return Compare(op, left, self.unary())
        if self.tok.kind == "path" or self.is_punct("*"):
            raise UnsupportedFeature("arithmetic", self.tok.pos)
        if self.is_kw("IN") or (self.is_kw("NOT") and self.toks[self.i + 1].value.upper() == "IN"):
            raise UnsupportedFeature("IN", self.tok.pos)
        return left

    def unary(self) -> Expr:
        if self.is_punct("!"):
            self.advance()
            return Not(self.unary())
        return self.primary()

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "path" or self.is_punct("*"):
            raise UnsupportedFeature("arithmetic", t.pos)
        self.check_unsupported()
        if self.is_punct("("):
            self.advance()
            e = self.expr()
            self.expect_punct(")")
            return e
        if t.kind == "var":
            self.advance()
            return Var(t.value[1:])
        if t.kind in ("iri", "pname"):
            return Const(self.iri())
        if t.kind in ("string", "number") or self.is_kw("TRUE", "FALSE"):
            return Const(self.literal())
        if t.kind == "name":
            return self.call()
        raise self.error(f"unexpected {self._describe()}", "expression")

    def args(self) -> list[Expr]:
        self.expect_punct("(")
        out: list[Expr] = []
        if self.is_punct(")"):
            self.advance()
            return out
        while True:
            out.append(self.expr())
            if self.is_punct(","):
                self.advance()
                continue
            self.expect_punct(")")
            return out

    def call(self) -> Expr:
        t = self.tok
        name = t.value.upper()
        if name == "NOT" and self.toks[self.i + 1].value.upper() == "EXISTS":
            self.advance()
            self.advance()
            return Exists(self.group(), negated=True)
        if name == "EXISTS":
            self.advance()
            return Exists(self.group())
        if name in AGGREGATES:
            raise UnsupportedFeature("aggregates", t.pos)
        self.advance()
        if not self.is_punct("("):
            raise self.error(f"unexpected {self._describe()}", f"'(' after {t.value}")
        if name == "BOUND":
            self.advance()
            v = self.tok
            if v.kind != "var":
                raise self.error("BOUND takes a variable", "variable")
            self.advance()
            self.expect_punct(")")
            return Bound(Var(v.value[1:]))
        args = self.args()
        if name == "REGEX":
            if len(args) not in (2, 3):
                raise _error(self.text, "REGEX takes 2 or 3 arguments", t.pos)
            pattern = args[1]
            if isinstance(pattern, Const) and isinstance(pattern.term, Literal):
                validate_regex(pattern.term.lexical)
            flags = args[2] if len(args) == 3 else None
            if isinstance(flags, Const) and isinstance(flags.term, Literal):
                bad = set(flags.term.lexical) - REGEX_FLAGS
                if bad:
                    raise UnsupportedFeature(f"regex flags {''.join(sorted(bad))!r}", t.pos)
            return Regex(args[0], pattern, flags)
        if name in FUNCTIONS:
            if len(args) != FUNCTIONS[name]:
                raise _error(self.text, f"{name} takes {FUNCTIONS[name]} argument(s)", t.pos)
            canonical = "isiri" if name == "ISURI" else name.lower()
            return Func(canonical, tuple(args))
        raise UnsupportedFeature(f"function {t.value}", t.pos)


def parse_query(text: str) -> QueryAst:
    """Parse ``text``; raises :class:`QuerySyntaxError` or :class:`UnsupportedFeature`."""
    return _Parser(text).query()


def variables_in(exprs: Sequence[Expr]) -> set[str]:
    out: set[str] = set()
    stack = list(exprs)
    while stack:
        e = stack.pop()
        if isinstance(e, Var):
            out.add(e.name)
        elif isinstance(e, Bound):
            out.add(e.var.name)
        else:
            stack.extend(expr_children(e))
    return out
