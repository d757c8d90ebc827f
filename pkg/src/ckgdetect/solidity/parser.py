"""Recursive-descent parser for the supported Solidity subset.

Unsupported constructs (inline assembly, try/catch, user-defined value types,
free functions) are consumed and recorded as warnings; inside function bodies
they become opaque ``other`` statements.
"""

from __future__ import annotations

import re
from typing import Optional

from .ast import (
    Assign, Binary, Call, CallOptions, CompilationUnit, Conditional, ContractDecl,
    Expr, FunctionDecl, Ident, Index, Lit, Member, ModifierDecl, ModifierInvocation,
    New, Param, ParseWarning, Span, StateVarDecl, Statement, TupleExpr, TypeExpr,
    Unary, VarDecl,
)
from .lexer import LexError, Token, TokenKind, tokenize


class ParseError(Exception):
    """Malformed source. Carries the 1-based position and what was expected."""

    def __init__(self, message: str, line: int, column: int, expected: str = ""):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column
        self.expected = expected


VISIBILITIES = frozenset({"public", "external", "internal", "private"})
MUTABILITIES = frozenset({"pure", "view", "payable", "constant", "nonpayable"})
LOCATIONS = frozenset({"memory", "storage", "calldata"})
NUMBER_UNITS = frozenset({
    "wei", "gwei", "ether", "szabo", "finney", "seconds", "minutes", "hours",
    "days", "weeks", "years",
})
ASSIGN_OPS = frozenset({"=", "|=", "^=", "&=", "<<=", ">>=", ">>>=", "+=", "-=", "*=", "/=", "%="})
BINARY_PRECEDENCE = {
    "||": 1, "&&": 2, "==": 3, "!=": 3, "<": 4, ">": 4, "<=": 4, ">=": 4,
    "|": 5, "^": 6, "&": 7, "<<": 8, ">>": 8, ">>>": 8, "+": 9, "-": 9,
    "*": 10, "/": 10, "%": 10, "**": 11,
}
_ELEMENTARY_RE = re.compile(
    r"(?:u?int(?:[0-9]+)?|bytes(?:[0-9]+)?|address|bool|string|byte|u?fixed(?:[0-9]+x[0-9]+)?)$"
)
_RESERVED_NAMES = frozenset({
    "if", "else", "while", "for", "do", "return", "emit", "returns", "function",
    "modifier", "contract", "interface", "library", "new", "delete", "true",
    "false", "mapping", "struct", "enum", "event", "error", "using", "import",
    "pragma", "break", "continue", "assembly", "try", "catch", "revert",
}) | VISIBILITIES | LOCATIONS


def canonical_type(name: str) -> str:
    if name == "uint":
        return "uint256"
    if name == "int":
        return "int256"
    if name == "byte":
        return "bytes1"
    return name


def is_elementary(name: str) -> bool:
    return bool(_ELEMENTARY_RE.match(name))


def _collapse(text: str) -> str:
    return " ".join(text.split())


class _Parser:
    def __init__(self, text: str, source_id: str):
        self.text = text
        self.source_id = source_id
        try:
            self.toks = tokenize(text)
        except LexError as exc:
            raise ParseError(str(exc).split(" at line")[0], exc.line, exc.column, "valid token") from exc
        self.pos = 0
        self.warnings: list[ParseWarning] = []
        self.type_names: set[str] = set()
        self._bodies: list[list[Optional[Statement]]] = []
        self._contract_name = ""

    # -- token helpers ---------------------------------------------------

    def peek(self, k: int = 0) -> Token:
        i = min(self.pos + k, len(self.toks) - 1)
        return self.toks[i]

    def advance(self) -> Token:
        tok = self.toks[self.pos]
        if tok.kind is not TokenKind.EOF:
            self.pos += 1
        return tok

    def at_punct(self, value: str, k: int = 0) -> bool:
        return self.peek(k).is_punct(value)

    def at_ident(self, value: Optional[str] = None, k: int = 0) -> bool:
        return self.peek(k).is_ident(value)

    def accept_punct(self, value: str) -> bool:
        if self.at_punct(value):
            self.pos += 1
            return True
        return False

    def accept_ident(self, value: str) -> bool:
        if self.at_ident(value):
            self.pos += 1
            return True
        return False

    def fail(self, expected: str) -> ParseError:
        tok = self.peek()
        return ParseError(f"expected {expected}, found {tok.describe()}", tok.line, tok.column, expected)

    def expect_punct(self, value: str) -> Token:
        if not self.at_punct(value):
            raise self.fail(f"'{value}'")
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> Token:
        if self.peek().kind is not TokenKind.IDENT:
            raise self.fail(what)
        return self.advance()

    def span_from(self, first: Token) -> Span:
        last = self.toks[self.pos - 1] if self.pos > 0 else first
        end = max(last.end, first.start)
        return Span(first.start, end, first.line, first.column)

    def warn(self, message: str, span: Span) -> None:
        self.warnings.append(ParseWarning(message, span))

    def skip_balanced(self, open_: str, close: str) -> None:
        self.expect_punct(open_)
        depth = 1
        while depth:
            tok = self.advance()
            if tok.kind is TokenKind.EOF:
                raise self.fail(f"'{close}'")
            if tok.is_punct(open_):
                depth += 1
            elif tok.is_punct(close):
                depth -= 1

    def skip_to_semicolon(self) -> None:
        depth = 0
        while True:
            tok = self.advance()
            if tok.kind is TokenKind.EOF:
                raise self.fail("';'")
            if tok.value in "([{" and tok.kind is TokenKind.PUNCT:
                depth += 1
            elif tok.value in ")]}" and tok.kind is TokenKind.PUNCT:
                depth -= 1
            elif tok.is_punct(";") and depth <= 0:
                return

    # -- source units ----------------------------------------------------

    def parse_unit(self) -> CompilationUnit:
        pragmas: list[str] = []
        contracts: list[ContractDecl] = []
        while self.peek().kind is not TokenKind.EOF:
            tok = self.peek()
            if tok.is_ident("pragma"):
                self.advance()
                start = self.peek().start
                self.skip_to_semicolon()
                pragmas.append(_collapse(self.text[start:self.toks[self.pos - 1].start]))
            elif tok.is_ident("import") or tok.is_ident("using"):
                self.skip_to_semicolon()
            elif tok.is_ident("abstract") or tok.value in ("contract", "interface", "library") and tok.kind is TokenKind.IDENT:
                contracts.append(self.parse_contract())
            elif tok.is_ident("struct") or tok.is_ident("enum"):
                self.advance()
                self.type_names.add(self.expect_ident().value)
                self.skip_balanced("{", "}")
            elif tok.is_ident("error") or tok.is_ident("event"):
                self.advance()
                self.type_names.add(self.expect_ident().value)
                self.skip_to_semicolon()
            elif tok.is_ident("type"):
                self.advance()
                self.type_names.add(self.expect_ident().value)
                self.skip_to_semicolon()
                self.warn("user-defined value type treated as opaque", self.span_from(tok))
            elif tok.is_ident("function"):
                self.advance()
                self.parse_function("function")
                self.warn("free function is not modeled", self.span_from(tok))
            elif tok.kind is TokenKind.IDENT:
                self.skip_to_semicolon()
                self.warn("file-level declaration is not modeled", self.span_from(tok))
            elif tok.is_punct(";"):
                self.advance()
            else:
                raise self.fail("contract, interface, library, pragma or import")
        names = [c.name for c in contracts]
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            c = next(c for c in contracts if c.name in dup)
            raise ParseError(f"duplicate contract name {c.name!r}", c.span.line, c.span.column, "unique contract name")
        return CompilationUnit(
            source_id=self.source_id,
            text=self.text,
            pragmas=tuple(pragmas),
            contracts=tuple(contracts),
            warnings=tuple(self.warnings),
            type_names=frozenset(self.type_names),
        )

    def parse_contract(self) -> ContractDecl:
        first = self.peek()
        abstract = self.accept_ident("abstract")
        kind = self.expect_ident("contract, interface or library").value
        if kind not in ("contract", "interface", "library"):
            raise ParseError(f"expected contract, found {kind!r}", first.line, first.column, "contract")
        name = self.expect_ident("contract name").value
        self._contract_name = name
        bases: list[str] = []
        if self.accept_ident("is"):
            while True:
                bases.append(self.parse_path())
                if self.at_punct("("):
                    self.skip_balanced("(", ")")
                if not self.accept_punct(","):
                    break
        self.expect_punct("{")
        state_vars: list[StateVarDecl] = []
        functions: list[FunctionDecl] = []
        modifiers: list[ModifierDecl] = []
        type_names: set[str] = set()
        while not self.at_punct("}"):
            tok = self.peek()
            if tok.kind is TokenKind.EOF:
                raise self.fail("'}'")
            if tok.is_ident("function"):
                self.advance()
                functions.append(self.parse_function("function", tok))
            elif tok.is_ident("constructor"):
                self.advance()
                functions.append(self.parse_function("constructor", tok))
            elif (tok.is_ident("fallback") or tok.is_ident("receive")) and self.at_punct("(", 1):
                self.advance()
                functions.append(self.parse_function(tok.value, tok))
            elif tok.is_ident("modifier"):
                self.advance()
                modifiers.append(self.parse_modifier(tok))
            elif tok.is_ident("struct") or tok.is_ident("enum"):
                self.advance()
                type_names.add(self.expect_ident().value)
                self.skip_balanced("{", "}")
            elif tok.is_ident("event") or tok.is_ident("error"):
                self.advance()
                type_names.add(self.expect_ident().value)
                self.skip_to_semicolon()
            elif tok.is_ident("using"):
                self.skip_to_semicolon()
            elif tok.is_ident("type") and self.peek(1).kind is TokenKind.IDENT and self.at_ident("is", 2):
                self.advance()
                type_names.add(self.expect_ident().value)
                self.skip_to_semicolon()
                self.warn("user-defined value type treated as opaque", self.span_from(tok))
            else:
                state_vars.append(self.parse_state_var())
        self.expect_punct("}")
        span = self.span_from(first)
        if kind == "interface":
            for v in state_vars:
                if v.initializer is not None:
                    self.warn(f"interface {name} declares initialized state variable {v.name}", v.span)
        return ContractDecl(
            name=name, kind=kind, bases=tuple(bases), state_vars=tuple(state_vars),
            functions=tuple(functions), modifiers=tuple(modifiers), span=span,
            abstract=abstract, type_names=frozenset(type_names),
        )

    def parse_path(self) -> str:
        parts = [self.expect_ident().value]
        while self.at_punct(".") and self.peek(1).kind is TokenKind.IDENT:
            self.advance()
            parts.append(self.advance().value)
        return ".".join(parts)

    def parse_state_var(self) -> StateVarDecl:
        first = self.peek()
        type_name = self.parse_type_name()
        visibility = "internal"
        mutability = "mutable"
        while True:
            tok = self.peek()
            if tok.kind is TokenKind.IDENT and tok.value in VISIBILITIES:
                visibility = self.advance().value
            elif tok.is_ident("constant") or tok.is_ident("immutable"):
                mutability = self.advance().value
            elif tok.is_ident("override"):
                self.advance()
                if self.at_punct("("):
                    self.skip_balanced("(", ")")
            elif tok.is_ident("transient"):
                self.advance()
            else:
                break
        name = self.expect_ident("state variable name").value
        init = None
        if self.accept_punct("="):
            init = self.parse_expression()
        self.expect_punct(";")
        return StateVarDecl(name, type_name, visibility, mutability, self.span_from(first), init)

    # -- types -----------------------------------------------------------

    def parse_type_name(self) -> str:
        tok = self.peek()
        if tok.is_ident("mapping"):
            self.advance()
            self.expect_punct("(")
            key = self.parse_type_name()
            if self.peek().kind is TokenKind.IDENT and not self.at_punct("=>"):
                self.advance()
            self.expect_punct("=>")
            value = self.parse_type_name()
            if self.peek().kind is TokenKind.IDENT:
                self.advance()
            self.expect_punct(")")
            base = f"mapping({key}=>{value})"
        elif tok.is_ident("function"):
            self.advance()
            self.skip_balanced("(", ")")
            while self.peek().kind is TokenKind.IDENT and self.peek().value in VISIBILITIES | MUTABILITIES:
                self.advance()
            if self.accept_ident("returns"):
                self.skip_balanced("(", ")")
            base = "function"
        elif tok.kind is TokenKind.IDENT and tok.value not in _RESERVED_NAMES:
            if tok.value == "address":
                self.advance()
                base = "address"
                if self.at_ident("payable"):
                    self.advance()
                    base = "address payable"
            else:
                base = canonical_type(self.parse_path())
        else:
            raise self.fail("type name")
        while self.at_punct("["):
            self.advance()
            if self.accept_punct("]"):
                base += "[]"
                continue
            start = self.peek().start
            self.parse_expression()
            size = _collapse(self.text[start:self.toks[self.pos - 1].end])
            self.expect_punct("]")
            base += f"[{size}]"
        return base

    def parse_params(self) -> tuple[Param, ...]:
        self.expect_punct("(")
        params: list[Param] = []
        if self.accept_punct(")"):
            return ()
        while True:
            first = self.peek()
            type_name = self.parse_type_name()
            location = ""
            name = None
            while self.peek().kind is TokenKind.IDENT:
                word = self.peek().value
                if word in LOCATIONS:
                    location = self.advance().value
                elif word == "indexed":
                    self.advance()
                else:
                    name = self.advance().value
                    break
            params.append(Param(name, type_name, self.span_from(first), location))
            if self.accept_punct(")"):
                return tuple(params)
            self.expect_punct(",")

    # -- callables -------------------------------------------------------

    def parse_function(self, kind: str, first: Optional[Token] = None) -> FunctionDecl:
        first = first or self.toks[self.pos - 1]
        name = ""
        if kind == "function":
            if self.peek().kind is TokenKind.IDENT:
                name = self.advance().value
                if name == self._contract_name:
                    kind, name = "constructor", ""
                    self.warn("legacy constructor named after its contract", self.span_from(first))
            else:
                kind = "fallback"
        params = self.parse_params()
        visibility = ""
        mutability = "nonpayable"
        virtual = False
        returns: tuple[Param, ...] = ()
        mods: list[ModifierInvocation] = []
        while not (self.at_punct("{") or self.at_punct(";")):
            tok = self.peek()
            if tok.kind is not TokenKind.IDENT:
                raise self.fail("function body or ';'")
            if tok.value in VISIBILITIES:
                visibility = self.advance().value
            elif tok.value in MUTABILITIES:
                word = self.advance().value
                mutability = "view" if word == "constant" else word
            elif tok.value == "virtual":
                self.advance()
                virtual = True
            elif tok.value == "override":
                self.advance()
                if self.at_punct("("):
                    self.skip_balanced("(", ")")
            elif tok.value == "returns":
                self.advance()
                returns = self.parse_params()
            else:
                mfirst = self.peek()
                mname = self.parse_path()
                args: tuple[Expr, ...] = ()
                if self.at_punct("("):
                    args, _ = self.parse_call_args()
                mods.append(ModifierInvocation(mname, args, self.span_from(mfirst)))
        body = None
        if self.accept_punct(";"):
            pass
        else:
            body = self.parse_body()
        span = self.span_from(first)
        if not visibility:
            if kind == "constructor":
                visibility = "public"
            elif kind in ("fallback", "receive"):
                visibility = "external"
            else:
                visibility = "public"
                self.warn(f"function {name or kind} has no visibility; defaulting to public", span)
        return FunctionDecl(
            name=name, kind=kind, visibility=visibility, mutability=mutability,
            params=params, returns=returns, applied_modifiers=tuple(mods), body=body,
            span=span, virtual=virtual,
        )

    def parse_modifier(self, first: Token) -> ModifierDecl:
        name = self.expect_ident("modifier name").value
        params: tuple[Param, ...] = ()
        if self.at_punct("("):
            params = self.parse_params()
        virtual = False
        while self.peek().kind is TokenKind.IDENT:
            word = self.advance().value
            if word == "virtual":
                virtual = True
            elif word == "override" and self.at_punct("("):
                self.skip_balanced("(", ")")
        body = None
        if not self.accept_punct(";"):
            body = self.parse_body()
        return ModifierDecl(name, params, body, self.span_from(first), virtual)

    # -- statements ------------------------------------------------------

    def parse_body(self) -> tuple[Statement, ...]:
        self._bodies.append([])
        self.expect_punct("{")
        while not self.accept_punct("}"):
            if self.peek().kind is TokenKind.EOF:
                raise self.fail("'}'")
            self.parse_statement()
        body = self._bodies.pop()
        assert all(s is not None for s in body)
        return tuple(body)  # type: ignore[arg-type]

    @property
    def _body(self) -> list[Optional[Statement]]:
        return self._bodies[-1]

    def _emit(self, kind: str, first: Token, **kw) -> int:
        span = self.span_from(first)
        text = kw.pop("text", None)
        if text is None:
            text = _collapse(self.text[span.start:span.end])
        idx = len(self._body)
        self._body.append(Statement(kind=kind, index=idx, span=span, text=text, **kw))
        return idx

    def _reserve(self) -> int:
        self._body.append(None)
        return len(self._body) - 1

    def _fill(self, idx: int, kind: str, first: Token, header_end: int, **kw) -> None:
        span = self.span_from(first)
        text = _collapse(self.text[span.start:header_end])
        self._body[idx] = Statement(kind=kind, index=idx, span=span, text=text, **kw)

    def parse_statement(self) -> None:
        tok = self.peek()
        if tok.is_punct("{"):
            self.advance()
            while not self.accept_punct("}"):
                if self.peek().kind is TokenKind.EOF:
                    raise self.fail("'}'")
                self.parse_statement()
            return
        if tok.is_ident("unchecked") and self.at_punct("{", 1):
            self.advance()
            self.parse_statement()
            return
        if tok.kind is TokenKind.IDENT:
            handler = getattr(self, f"_stmt_{tok.value}", None)
            if handler is not None and not self.at_punct("=", 1) and not self.at_punct(".", 1):
                handler(tok)
                return
            if tok.value == "_" and self.at_punct(";", 1):
                self.advance()
                self.advance()
                self._emit("other", tok, flags=frozenset({"placeholder"}))
                return
        self.parse_simple_statement(tok)
        self.expect_punct(";")

    def _stmt_if(self, first: Token) -> None:
        self.advance()
        idx = self._reserve()
        self.expect_punct("(")
        cond = self.parse_expression()
        header_end = self.expect_punct(")").end
        then_start = len(self._body)
        self.parse_statement()
        then_range = (then_start, len(self._body))
        else_range = None
        if self.accept_ident("else"):
            else_start = len(self._body)
            self.parse_statement()
            else_range = (else_start, len(self._body))
        self._fill(idx, "if", first, header_end, exprs=(cond,), then_range=then_range, else_range=else_range)

    def _stmt_while(self, first: Token) -> None:
        self.advance()
        idx = self._reserve()
        self.expect_punct("(")
        cond = self.parse_expression()
        header_end = self.expect_punct(")").end
        start = len(self._body)
        self.parse_statement()
        self._fill(idx, "loop", first, header_end, exprs=(cond,), body_range=(start, len(self._body)), loop="while")

    def _stmt_for(self, first: Token) -> None:
        self.advance()
        self.expect_punct("(")
        if not self.accept_punct(";"):
            init_first = self.peek()
            self.parse_simple_statement(init_first, flags=frozenset({"loop_init"}))
            self.expect_punct(";")
        idx = self._reserve()
        cond: tuple[Expr, ...] = ()
        if not self.at_punct(";"):
            cond = (self.parse_expression(),)
        self.expect_punct(";")
        post: Optional[Expr] = None
        post_first = self.peek()
        if not self.at_punct(")"):
            post = self.parse_expression()
        post_span_end = self.toks[self.pos - 1].end
        header_end = self.expect_punct(")").end
        start = len(self._body)
        self.parse_statement()
        end = len(self._body)
        flags = frozenset()
        if post is not None:
            flags = frozenset({"has_post"})
            span = Span(post_first.start, post_span_end, post_first.line, post_first.column)
            self._body.append(Statement(
                kind=_expression_kind(post), index=end, span=span,
                text=_collapse(self.text[span.start:span.end]), exprs=(post,),
                flags=frozenset({"loop_post"}),
            ))
        self._fill(idx, "loop", first, header_end, exprs=cond, body_range=(start, end), loop="for", flags=flags)

    def _stmt_do(self, first: Token) -> None:
        self.advance()
        start = len(self._body)
        self.parse_statement()
        end = len(self._body)
        cond_first = self.peek()
        if not self.accept_ident("while"):
            raise self.fail("'while'")
        self.expect_punct("(")
        cond = self.parse_expression()
        self.expect_punct(")")
        self.expect_punct(";")
        self._emit("loop", cond_first, exprs=(cond,), body_range=(start, end), loop="do")

    def _stmt_return(self, first: Token) -> None:
        self.advance()
        exprs: tuple[Expr, ...] = ()
        if not self.at_punct(";"):
            exprs = (self.parse_expression(),)
        self.expect_punct(";")
        self._emit("return", first, exprs=exprs, flags=frozenset({"terminator"}))

    def _stmt_emit(self, first: Token) -> None:
        self.advance()
        expr = self.parse_expression()
        self.expect_punct(";")
        self._emit("emit", first, exprs=(expr,))

    def _stmt_revert(self, first: Token) -> None:
        self.advance()
        if self.at_punct("("):
            args, _ = self.parse_call_args()
            exprs: tuple[Expr, ...] = args
        else:
            exprs = (self.parse_expression(),)
        self.expect_punct(";")
        self._emit("expression_call", first, exprs=exprs, flags=frozenset({"terminator", "revert"}))

    def _stmt_throw(self, first: Token) -> None:
        self.advance()
        self.expect_punct(";")
        self._emit("other", first, flags=frozenset({"terminator", "revert"}))

    def _stmt_break(self, first: Token) -> None:
        self.advance()
        self.expect_punct(";")
        self._emit("other", first, flags=frozenset({"break"}))

    def _stmt_continue(self, first: Token) -> None:
        self.advance()
        self.expect_punct(";")
        self._emit("other", first, flags=frozenset({"continue"}))

    def _stmt_assembly(self, first: Token) -> None:
        self.advance()
        while not self.at_punct("{"):
            if self.at_punct("("):
                self.skip_balanced("(", ")")
            elif self.peek().kind is TokenKind.EOF:
                raise self.fail("'{'")
            else:
                self.advance()
        self.skip_balanced("{", "}")
        idx = self._emit("other", first, flags=frozenset({"opaque"}))
        self.warn("inline assembly treated as opaque statement", self._body[idx].span)  # type: ignore[union-attr]

    def _stmt_try(self, first: Token) -> None:
        self.advance()
        while not self.at_punct("{"):
            if self.at_punct("("):
                self.skip_balanced("(", ")")
            elif self.peek().kind is TokenKind.EOF:
                raise self.fail("'{'")
            else:
                self.advance()
        self.skip_balanced("{", "}")
        while self.accept_ident("catch"):
            while not self.at_punct("{"):
                if self.at_punct("("):
                    self.skip_balanced("(", ")")
                else:
                    self.advance()
            self.skip_balanced("{", "}")
        idx = self._emit("other", first, flags=frozenset({"opaque"}))
        self.warn("try/catch treated as opaque statement", self._body[idx].span)  # type: ignore[union-attr]

    def parse_simple_statement(self, first: Token, flags: frozenset[str] = frozenset()) -> None:
        """Declaration or expression statement, without the trailing ';'."""
        decl = self.try_declaration()
        if decl is not None:
            decls, init = decl
            exprs = (init,) if init is not None else ()
            self._emit("declaration", first, exprs=exprs, declares=decls, flags=flags)
            return
        expr = self.parse_expression()
        self._emit(_expression_kind(expr), first, exprs=(expr,), flags=flags)

    def try_declaration(self) -> Optional[tuple[tuple[VarDecl, ...], Optional[Expr]]]:
        save = self.pos
        nwarn = len(self.warnings)
        try:
            if self.at_punct("("):
                decls = self._tuple_declaration()
            elif self.at_ident("var"):
                self.advance()
                first = self.peek()
                name = self.expect_ident().value
                decls = (VarDecl(name, "var", self.span_from(first)),)
            else:
                first = self.peek()
                type_name = self.parse_type_name()
                location = ""
                if self.peek().kind is TokenKind.IDENT and self.peek().value in LOCATIONS:
                    location = self.advance().value
                name_tok = self.peek()
                if name_tok.kind is not TokenKind.IDENT or name_tok.value in _RESERVED_NAMES:
                    raise self.fail("variable name")
                self.advance()
                if not (self.at_punct("=") or self.at_punct(";")):
                    raise self.fail("'=' or ';'")
                decls = (VarDecl(name_tok.value, type_name, self.span_from(first), location),)
        except ParseError:
            self.pos = save
            del self.warnings[nwarn:]
            return None
        init = None
        if self.accept_punct("="):
            init = self.parse_expression()
        return decls, init

    def _tuple_declaration(self) -> tuple[VarDecl, ...]:
        self.expect_punct("(")
        decls: list[VarDecl] = []
        while True:
            if self.at_punct(","):
                self.advance()
                continue
            if self.accept_punct(")"):
                break
            first = self.peek()
            type_name = self.parse_type_name()
            location = ""
            if self.peek().kind is TokenKind.IDENT and self.peek().value in LOCATIONS:
                location = self.advance().value
            name = self.expect_ident("variable name").value
            decls.append(VarDecl(name, type_name, self.span_from(first), location))
            if self.accept_punct(")"):
                break
            self.expect_punct(",")
        if not decls or not self.at_punct("="):
            raise self.fail("'='")
        return tuple(decls)

    # -- expressions -----------------------------------------------------

    def parse_expression(self) -> Expr:
        first = self.peek()
        left = self.parse_conditional()
        tok = self.peek()
        if tok.kind is TokenKind.PUNCT and tok.value in ASSIGN_OPS:
            self.advance()
            right = self.parse_expression()
            return Assign(tok.value, left, right, self.span_from(first))
        return left

    def parse_conditional(self) -> Expr:
        first = self.peek()
        cond = self.parse_binary(1)
        if self.accept_punct("?"):
            then = self.parse_expression()
            self.expect_punct(":")
            other = self.parse_expression()
            return Conditional(cond, then, other, self.span_from(first))
        return cond

    def parse_binary(self, min_prec: int) -> Expr:
        first = self.peek()
        left = self.parse_unary()
        while True:
            tok = self.peek()
            prec = BINARY_PRECEDENCE.get(tok.value) if tok.kind is TokenKind.PUNCT else None
            if prec is None or prec < min_prec:
                return left
            self.advance()
            right = self.parse_binary(prec if tok.value == "**" else prec + 1)
            left = Binary(tok.value, left, right, self.span_from(first))

    def parse_unary(self) -> Expr:
        tok = self.peek()
        if (tok.kind is TokenKind.PUNCT and tok.value in ("!", "~", "-", "+", "++", "--")) or tok.is_ident("delete"):
            self.advance()
            operand = self.parse_unary()
            return Unary(tok.value, operand, True, self.span_from(tok))
        return self.parse_postfix()

    def parse_call_args(self) -> tuple[tuple[Expr, ...], tuple[str, ...]]:
        self.expect_punct("(")
        args: list[Expr] = []
        names: list[str] = []
        if self.at_punct("{"):
            self.advance()
            while not self.accept_punct("}"):
                names.append(self.expect_ident("argument name").value)
                self.expect_punct(":")
                args.append(self.parse_expression())
                if not self.at_punct("}"):
                    self.expect_punct(",")
            self.expect_punct(")")
            return tuple(args), tuple(names)
        if self.accept_punct(")"):
            return (), ()
        while True:
            args.append(self.parse_expression())
            if self.accept_punct(")"):
                return tuple(args), ()
            self.expect_punct(",")

    def parse_postfix(self) -> Expr:
        first = self.peek()
        expr = self.parse_primary()
        while True:
            if self.at_punct("("):
                args, names = self.parse_call_args()
                options: tuple[tuple[str, Expr], ...] = ()
                callee = expr
                if isinstance(expr, CallOptions):
                    callee, options = expr.target, expr.options
                expr = Call(callee, args, self.span_from(first), names, options)
            elif self.at_punct("["):
                self.advance()
                index: Optional[Expr] = None
                end_index: Optional[Expr] = None
                if not self.at_punct("]") and not self.at_punct(":"):
                    index = self.parse_expression()
                if self.accept_punct(":"):
                    if not self.at_punct("]"):
                        end_index = self.parse_expression()
                self.expect_punct("]")
                expr = Index(expr, index, self.span_from(first), end_index)
            elif self.at_punct("."):
                self.advance()
                member = self.expect_ident("member name").value
                expr = Member(expr, member, self.span_from(first))
            elif self.at_punct("{") and self.peek(1).kind is TokenKind.IDENT and self.at_punct(":", 2):
                self.advance()
                opts: list[tuple[str, Expr]] = []
                while not self.accept_punct("}"):
                    key = self.expect_ident().value
                    self.expect_punct(":")
                    opts.append((key, self.parse_expression()))
                    if not self.at_punct("}"):
                        self.expect_punct(",")
                expr = CallOptions(expr, tuple(opts), self.span_from(first))
            elif self.at_punct("++") or self.at_punct("--"):
                op = self.advance().value
                expr = Unary(op, expr, False, self.span_from(first))
            else:
                return expr

    def parse_primary(self) -> Expr:
        tok = self.peek()
        if tok.kind is TokenKind.NUMBER:
            self.advance()
            if self.peek().kind is TokenKind.IDENT and self.peek().value in NUMBER_UNITS:
                self.advance()
            return Lit("number", tok.value, self.span_from(tok))
        if tok.kind is TokenKind.STRING:
            parts = []
            while self.peek().kind is TokenKind.STRING:
                parts.append(self.advance().value)
            return Lit("string", "".join(parts), self.span_from(tok))
        if tok.kind is TokenKind.HEX_STRING:
            self.advance()
            return Lit("hex", tok.value, self.span_from(tok))
        if tok.is_punct("("):
            self.advance()
            items: list[Optional[Expr]] = []
            trailing = False
            while True:
                if self.at_punct(","):
                    self.advance()
                    items.append(None)
                    trailing = True
                    continue
                if self.accept_punct(")"):
                    break
                items.append(self.parse_expression())
                trailing = False
                if self.accept_punct(")"):
                    break
                self.expect_punct(",")
                trailing = True
            if len(items) == 1 and items[0] is not None and not trailing:
                return items[0]
            return TupleExpr(tuple(items), self.span_from(tok))
        if tok.is_punct("["):
            self.advance()
            elems: list[Optional[Expr]] = []
            while not self.accept_punct("]"):
                elems.append(self.parse_expression())
                if not self.at_punct("]"):
                    self.expect_punct(",")
            return TupleExpr(tuple(elems), self.span_from(tok), is_array=True)
        if tok.kind is TokenKind.IDENT:
            word = tok.value
            if word in ("true", "false"):
                self.advance()
                return Lit("bool", word, self.span_from(tok))
            if word == "new":
                self.advance()
                type_name = self.parse_type_name()
                return New(type_name, self.span_from(tok))
            if word in ("type", "payable") and self.at_punct("(", 1):
                self.advance()
                return TypeExpr(word, self.span_from(tok))
            if is_elementary(word):
                self.advance()
                name = canonical_type(word)
                if word == "address" and self.at_ident("payable"):
                    self.advance()
                    name = "address payable"
                return TypeExpr(name, self.span_from(tok))
            if word in _RESERVED_NAMES - {"revert"}:
                raise self.fail("expression")
            self.advance()
            return Ident(word, self.span_from(tok))
        raise self.fail("expression")


def _contains_call(expr: Optional[Expr]) -> bool:
    if expr is None:
        return False
    if isinstance(expr, Call):
        return True
    for child in _children(expr):
        if _contains_call(child):
            return True
    return False


def _children(expr: Expr) -> tuple[Optional[Expr], ...]:
    if isinstance(expr, Member):
        return (expr.obj,)
    if isinstance(expr, Index):
        return (expr.base, expr.index, expr.end_index)
    if isinstance(expr, Call):
        return (expr.callee, *expr.args, *(v for _, v in expr.options))
    if isinstance(expr, CallOptions):
        return (expr.target, *(v for _, v in expr.options))
    if isinstance(expr, Unary):
        return (expr.operand,)
    if isinstance(expr, Binary):
        return (expr.left, expr.right)
    if isinstance(expr, Assign):
        return (expr.target, expr.value)
    if isinstance(expr, Conditional):
        return (expr.cond, expr.then, expr.other)
    if isinstance(expr, TupleExpr):
        return expr.items
    return ()


def _expression_kind(expr: Expr) -> str:
    if isinstance(expr, Assign) or (
        isinstance(expr, Unary) and expr.op in ("++", "--", "delete")
    ):
        return "assignment"
    if isinstance(expr, Call) and isinstance(expr.callee, Ident) and expr.callee.name in ("require", "assert"):
        return "require_call"
    if _contains_call(expr):
        return "expression_call"
    return "other"


def parse_source(text: str, source_id: str = "source") -> CompilationUnit:
    """Parse Solidity ``text`` into a :class:`CompilationUnit`.

    Raises :class:`ParseError` with line/column on malformed input.
    """
    return _Parser(text, source_id).parse_unit()


children = _children
