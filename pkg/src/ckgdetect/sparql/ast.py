"""Query syntax tree for the supported SPARQL subset."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from ..graph.terms import Iri, Literal


@dataclass(frozen=True, order=True)
class Var:
    name: str

    def __str__(self) -> str:
        return f"?{self.name}"


PatternTerm = Union[Var, Iri, Literal]


@dataclass(frozen=True)
class TriplePattern:
    subject: PatternTerm
    predicate: PatternTerm
    object: PatternTerm

    def terms(self) -> tuple[PatternTerm, PatternTerm, PatternTerm]:
        return (self.subject, self.predicate, self.object)

    def variables(self) -> list[str]:
        return [t.name for t in self.terms() if isinstance(t, Var)]


@dataclass(frozen=True)
class Const:
    term: Union[Iri, Literal]


@dataclass(frozen=True)
class Compare:
    op: str  # = != < > <= >=
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class And:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Or:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class Bound:
    var: Var


@dataclass(frozen=True)
class Regex:
    text: "Expr"
    pattern: "Expr"
    flags: Optional["Expr"] = None


@dataclass(frozen=True)
class Func:
    name: str  # lower-case: str lcase ucase contains strstarts strends isiri isliteral
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class Exists:
    group: "Group"
    negated: bool = False


Expr = Union[Var, Const, Compare, And, Or, Not, Bound, Regex, Func, Exists]


@dataclass(frozen=True)
class Group:
    patterns: tuple[TriplePattern, ...] = ()
    filters: tuple[Expr, ...] = ()

    def variables(self) -> list[str]:
        seen: list[str] = []
        for p in self.patterns:
            for v in p.variables():
                if v not in seen:
                    seen.append(v)
        return seen


@dataclass(frozen=True)
class QueryAst:
    prefixes: dict[str, str]
    select_vars: Optional[tuple[str, ...]]  # None means SELECT *
    where: Group
    distinct: bool = False
    limit: Optional[int] = None
    text: str = field(default="", compare=False)

    @property
    def bgp(self) -> tuple[TriplePattern, ...]:
        return self.where.patterns

    @property
    def filters(self) -> tuple[Expr, ...]:
        return self.where.filters

    @property
    def columns(self) -> tuple[str, ...]:
        if self.select_vars is None:
            return tuple(self.where.variables())
        return self.select_vars


def expr_children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, Compare):
        return (e.left, e.right)
    if isinstance(e, (And, Or)):
        return (e.left, e.right)
    if isinstance(e, Not):
        return (e.operand,)
    if isinstance(e, Regex):
        return tuple(x for x in (e.text, e.pattern, e.flags) if x is not None)
    if isinstance(e, Func):
        return e.args
    return ()
