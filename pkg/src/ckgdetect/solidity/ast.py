"""Syntax tree types produced by :mod:`ckgdetect.solidity.parser`.

Function bodies are stored flattened in pre-order: a control statement is
followed by the statements of its branches, and records the index ranges of
those branches so the CFG builder can recover the structure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True, order=True)
class Span:
    start: int
    end: int
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.start}:{self.end}:{self.line}:{self.column}"


@dataclass(frozen=True)
class ParseWarning:
    message: str
    span: Span


# --- expressions ----------------------------------------------------------


@dataclass(frozen=True)
class Ident:
    name: str
    span: Span


@dataclass(frozen=True)
class Lit:
    kind: str  # number | string | bool | hex
    value: str
    span: Span


@dataclass(frozen=True)
class Member:
    obj: "Expr"
    member: str
    span: Span


@dataclass(frozen=True)
class Index:
    base: "Expr"
    index: Optional["Expr"]
    span: Span
    end_index: Optional["Expr"] = None  # slice upper bound


@dataclass(frozen=True)
class Call:
    callee: "Expr"
    args: tuple["Expr", ...]
    span: Span
    arg_names: tuple[str, ...] = ()
    options: tuple[tuple[str, "Expr"], ...] = ()


@dataclass(frozen=True)
class CallOptions:
    """``target{value: v, gas: g}`` before the argument list is seen."""

    target: "Expr"
    options: tuple[tuple[str, "Expr"], ...]
    span: Span


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"
    prefix: bool
    span: Span


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    span: Span


@dataclass(frozen=True)
class Assign:
    op: str
    target: "Expr"
    value: "Expr"
    span: Span


@dataclass(frozen=True)
class Conditional:
    cond: "Expr"
    then: "Expr"
    other: "Expr"
    span: Span


@dataclass(frozen=True)
class TupleExpr:
    items: tuple[Optional["Expr"], ...]
    span: Span
    is_array: bool = False


@dataclass(frozen=True)
class New:
    type_name: str
    span: Span


@dataclass(frozen=True)
class TypeExpr:
    """An elementary type used in expression position, e.g. ``address(0)``."""

    name: str
    span: Span


Expr = Union[
    Ident, Lit, Member, Index, Call, CallOptions, Unary, Binary, Assign,
    Conditional, TupleExpr, New, TypeExpr,
]


# --- declarations ---------------------------------------------------------


@dataclass(frozen=True)
class VarDecl:
    name: str
    type_name: str
    span: Span
    location: str = ""


@dataclass(frozen=True)
class Param:
    name: Optional[str]
    type_name: str
    span: Span
    location: str = ""


@dataclass(frozen=True)
class VarRef:
    """A resolved variable reference.

    ``scope`` is one of ``state``, ``local``, ``builtin`` or ``external``;
    ``owner`` is the declaring contract for state variables and the callable
    signature for locals.
    """

    name: str
    scope: str
    owner: str = ""

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class CallTarget:
    """A resolved callee.

    ``kind``: internal, library, external, builtin, modifier or
    unresolved. ``contract``/``signature`` identify declared targets.
    """

    kind: str
    name: str
    contract: str = ""
    signature: str = ""


STATEMENT_KINDS = frozenset({
    "assignment", "require_call", "expression_call", "if", "loop", "return",
    "emit", "declaration", "other",
})


@dataclass(frozen=True)
class Statement:
    kind: str
    index: int
    span: Span
    text: str
    exprs: tuple[Expr, ...] = ()
    declares: tuple[VarDecl, ...] = ()
    then_range: Optional[tuple[int, int]] = None
    else_range: Optional[tuple[int, int]] = None
    body_range: Optional[tuple[int, int]] = None
    loop: Optional[str] = None  # while | for | do
    flags: frozenset[str] = frozenset()
    # populated by lowering
    reads: frozenset[VarRef] = frozenset()
    writes: frozenset[VarRef] = frozenset()
    callees: tuple[CallTarget, ...] = ()

    @property
    def opaque(self) -> bool:
        return "opaque" in self.flags

    @property
    def placeholder(self) -> bool:
        return "placeholder" in self.flags


@dataclass(frozen=True)
class ModifierInvocation:
    name: str
    args: tuple[Expr, ...]
    span: Span


@dataclass(frozen=True)
class StateVarDecl:
    name: str
    type_name: str
    visibility: str
    mutability: str  # mutable | constant | immutable
    span: Span
    initializer: Optional[Expr] = None


@dataclass(frozen=True)
class FunctionDecl:
    name: str
    kind: str  # function | constructor | fallback | receive
    visibility: str
    mutability: str
    params: tuple[Param, ...]
    returns: tuple[Param, ...]
    applied_modifiers: tuple[ModifierInvocation, ...]
    body: Optional[tuple[Statement, ...]]
    span: Span
    virtual: bool = False

    @property
    def is_constructor(self) -> bool:
        return self.kind == "constructor"

    @property
    def signature(self) -> str:
        label = self.name or self.kind
        return f"{label}({','.join(p.type_name for p in self.params)})"


@dataclass(frozen=True)
class ModifierDecl:
    name: str
    params: tuple[Param, ...]
    body: Optional[tuple[Statement, ...]]
    span: Span
    virtual: bool = False

    @property
    def signature(self) -> str:
        return f"{self.name}({','.join(p.type_name for p in self.params)})"


@dataclass(frozen=True)
class ContractDecl:
    name: str
    kind: str  # contract | interface | library
    bases: tuple[str, ...]
    state_vars: tuple[StateVarDecl, ...]
    functions: tuple[FunctionDecl, ...]
    modifiers: tuple[ModifierDecl, ...]
    span: Span
    abstract: bool = False
    type_names: frozenset[str] = frozenset()  # structs, enums, events, errors


@dataclass(frozen=True)
class CompilationUnit:
    source_id: str
    text: str
    pragmas: tuple[str, ...]
    contracts: tuple[ContractDecl, ...]
    warnings: tuple[ParseWarning, ...] = field(default=())
    type_names: frozenset[str] = frozenset()  # file-level structs, enums, errors

    def contract(self, name: str) -> ContractDecl:
        for c in self.contracts:
            if c.name == name:
                return c
        raise KeyError(name)
