"""Evaluation of parsed queries over a :class:`Graph`.

Patterns are joined one at a time, most selective first. Filters run on
complete solutions with SPARQL's error-propagating three-valued logic; a
filter that still evaluates to an error at the top level is reported as an
:class:`EvaluationError` instead of silently discarding the row.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Union

from ..graph.terms import Graph, Iri, Literal, Term, term_key
from .ast import (
    And, Bound, Compare, Const, Exists, Expr, Func, Group, Not, Or, QueryAst, Regex,
    TriplePattern, Var,
)

Binding = dict[str, Term]


class EvaluationError(ValueError):
    """A filter could not be evaluated (type mismatch, unbound variable, ...)."""


class _Err(Exception):
    pass


@dataclass
class ResultSet:
    columns: tuple[str, ...]
    rows: list[Binding]
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.rows)

    def tuples(self) -> list[tuple[Term, ...]]:
        return [tuple(r[c] for c in self.columns) for r in self.rows]

    def to_records(self) -> list[dict[str, str]]:
        return [{c: r[c].n3() for c in self.columns} for r in self.rows]

    def to_tsv(self) -> str:
        lines = ["\t".join("?" + c for c in self.columns)]
        lines += ["\t".join(r[c].n3() for c in self.columns) for r in self.rows]
        return "\n".join(lines) + "\n"


# -- pattern matching ---------------------------------------------------------


def _plan(patterns: Sequence[TriplePattern], g: Graph, bound: set[str]) -> list[TriplePattern]:
    """Greedy order: fewest unbound variables, then fewest candidate triples."""
    remaining = list(enumerate(patterns))
    known = set(bound)
    order: list[TriplePattern] = []
    while remaining:
        def cost(item: tuple[int, TriplePattern]) -> tuple[int, int, int]:
            i, p = item
            unbound = len({v for v in p.variables() if v not in known})
            consts = [t if not isinstance(t, Var) else None for t in p.terms()]
            s, pr, o = consts
            if (s is not None and not isinstance(s, Iri)) or (pr is not None and not isinstance(pr, Iri)):
                return (unbound, 0, i)
            return (unbound, g.count(s, pr, o), i)  # type: ignore[arg-type]

        best = min(remaining, key=cost)
        remaining.remove(best)
        order.append(best[1])
        known.update(best[1].variables())
    return order


def _resolve(t: Union[Var, Term], b: Binding) -> Optional[Term]:
    if isinstance(t, Var):
        return b.get(t.name)
    return t


def _match(p: TriplePattern, g: Graph, b: Binding) -> Iterator[Binding]:
    s, pr, o = (_resolve(x, b) for x in p.terms())
    if s is not None and not isinstance(s, Iri):
        return
    if pr is not None and not isinstance(pr, Iri):
        return
    for t in g.match(s, pr, o):  # type: ignore[arg-type]
        new = dict(b)
        ok = True
        for pat, val in zip(p.terms(), t):
            if isinstance(pat, Var):
                prev = new.get(pat.name)
                if prev is None:
                    new[pat.name] = val
                elif prev != val:
                    ok = False
                    break
        if ok:
            yield new


def _solve(patterns: Sequence[TriplePattern], g: Graph, seed: Binding) -> Iterator[Binding]:
    order = _plan(patterns, g, set(seed))
    stack: list[tuple[int, Binding]] = [(0, seed)]
    while stack:
        depth, b = stack.pop()
        if depth == len(order):
            yield b
            continue
        for nb in _match(order[depth], g, b):
            stack.append((depth + 1, nb))


# -- filter evaluation --------------------------------------------------------

_TRUE = Literal("true", "boolean")
_FALSE = Literal("false", "boolean")


def _bool(v: bool) -> Literal:
    return _TRUE if v else _FALSE


def ebv(term: Term) -> bool:
    """Effective boolean value; IRIs raise."""
    if isinstance(term, Literal):
        if term.datatype == "boolean":
            return term.lexical == "true"
        if term.datatype == "integer":
            return int(term.lexical) != 0
        return term.lexical != ""
    raise _Err("effective boolean value of an IRI")


def _string(term: Term, what: str) -> str:
    if isinstance(term, Literal) and term.datatype == "string":
        return term.lexical
    raise _Err(f"{what} needs a string literal, got {term.n3()}")


def _equal(a: Term, b: Term) -> bool:
    if isinstance(a, Literal) and isinstance(b, Literal) and a.datatype == b.datatype:
        return a.value == b.value
    return a == b


def _order(a: Term, b: Term) -> int:
    if isinstance(a, Literal) and isinstance(b, Literal) and a.datatype == b.datatype:
        x, y = a.value, b.value
        return (x > y) - (x < y)  # type: ignore[operator]
    raise _Err(f"cannot order {a.n3()} and {b.n3()}")


class _Evaluator:
    def __init__(self, g: Graph):
        self.g = g
        self._regex: dict[tuple[str, str], re.Pattern] = {}

    def truth(self, e: Expr, b: Binding) -> bool:
        return ebv(self.value(e, b))

    def value(self, e: Expr, b: Binding) -> Term:
        if isinstance(e, Var):
            if e.name not in b:
                raise _Err(f"unbound variable ?{e.name}")
            return b[e.name]
        if isinstance(e, Const):
            return e.term
        if isinstance(e, Bound):
            return _bool(e.var.name in b)
        if isinstance(e, Not):
            return _bool(not self.truth(e.operand, b))
        if isinstance(e, And):
            return _bool(self._and(e, b))
        if isinstance(e, Or):
            return _bool(self._or(e, b))
        if isinstance(e, Compare):
            left, right = self.value(e.left, b), self.value(e.right, b)
            if e.op == "=":
                return _bool(_equal(left, right))
            if e.op == "!=":
                return _bool(not _equal(left, right))
            c = _order(left, right)
            return _bool({"<": c < 0, ">": c > 0, "<=": c <= 0, ">=": c >= 0}[e.op])
        if isinstance(e, Regex):
            text = _string(self.value(e.text, b), "REGEX")
            pattern = _string(self.value(e.pattern, b), "REGEX pattern")
            flags = _string(self.value(e.flags, b), "REGEX flags") if e.flags is not None else ""
            return _bool(self._compile(pattern, flags).search(text) is not None)
        if isinstance(e, Func):
            return self._func(e, b)
        if isinstance(e, Exists):
            found = any(self._group_solutions(e.group, b))
            return _bool(found != e.negated)
        raise _Err(f"unsupported expression {e!r}")

    def _and(self, e: And, b: Binding) -> bool:
        try:
            left: Optional[bool] = self.truth(e.left, b)
        except _Err:
            left = None
        if left is False:
            return False
        right = self.truth(e.right, b)  # error propagates when left was an error
        if left is None:
            if right is False:
                return False
            raise _Err("error in conjunction")
        return right

    def _or(self, e: Or, b: Binding) -> bool:
        try:
            left: Optional[bool] = self.truth(e.left, b)
        except _Err:
            left = None
        if left is True:
            return True
        right = self.truth(e.right, b)
        if left is None:
            if right is True:
                return True
            raise _Err("error in disjunction")
        return right

    def _compile(self, pattern: str, flags: str) -> re.Pattern:
        key = (pattern, flags)
        if key not in self._regex:
            bad = set(flags) - {"i"}
            if bad:
                raise _Err(f"unsupported regex flags {flags!r}")
            try:
                self._regex[key] = re.compile(pattern, re.IGNORECASE if "i" in flags else 0)
            except re.error as exc:
                raise _Err(f"invalid regex {pattern!r}: {exc}") from None
        return self._regex[key]

    def _func(self, e: Func, b: Binding) -> Term:
        args = [self.value(a, b) for a in e.args]
        if e.name == "isiri":
            return _bool(isinstance(args[0], Iri))
        if e.name == "isliteral":
            return _bool(isinstance(args[0], Literal))
        if e.name == "str":
            a = args[0]
            return Literal(a.value if isinstance(a, Iri) else a.lexical)
        if e.name == "lcase":
            return Literal(_string(args[0], "LCASE").lower())
        if e.name == "ucase":
            return Literal(_string(args[0], "UCASE").upper())
        x, y = _string(args[0], e.name.upper()), _string(args[1], e.name.upper())
        if e.name == "contains":
            return _bool(y in x)
        if e.name == "strstarts":
            return _bool(x.startswith(y))
        if e.name == "strends":
            return _bool(x.endswith(y))
        raise _Err(f"unknown function {e.name}")

    def _group_solutions(self, group: Group, seed: Binding) -> Iterator[Binding]:
        for sol in _solve(group.patterns, self.g, seed):
            if all(self.truth(f, sol) for f in group.filters):
                yield sol


def _passes(ev: _Evaluator, filters: Sequence[Expr], b: Binding) -> bool:
    for f in filters:
        try:
            if not ev.truth(f, b):
                return False
        except _Err as exc:
            raise EvaluationError(f"filter evaluation failed: {exc}") from None
    return True


def row_key(row: Binding, columns: Sequence[str]) -> tuple[str, ...]:
    return tuple(term_key(row[c]) for c in columns)


def execute(q: QueryAst, g: Graph) -> ResultSet:
    """Rows sorted by serialized terms; DISTINCT then LIMIT applied last."""
    ev = _Evaluator(g)
    columns = q.columns
    rows: list[Binding] = []
    for sol in _solve(q.bgp, g, {}):
        if _passes(ev, q.filters, sol):
            rows.append({c: sol[c] for c in columns})
    rows.sort(key=lambda r: row_key(r, columns))
    if q.distinct:
        unique: list[Binding] = []
        last: Optional[tuple[str, ...]] = None
        for r in rows:
            k = row_key(r, columns)
            if k != last:
                unique.append(r)
                last = k
        rows = unique
    truncated = False
    if q.limit is not None and len(rows) > q.limit:
        rows = rows[: q.limit]
        truncated = True
    return ResultSet(tuple(columns), rows, truncated)
