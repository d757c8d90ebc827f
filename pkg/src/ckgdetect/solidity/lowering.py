"""Lower a parsed unit: resolve names, fill def/use sets, build CFGs and SSA."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Union

from .ast import (
    Assign, Call, CallOptions, CallTarget, CompilationUnit, ContractDecl, Expr,
    FunctionDecl, Ident, Index, Member, ModifierDecl, New, ParseWarning, Statement,
    TupleExpr, TypeExpr, Unary, VarRef,
)
from .cfg import Cfg, build_cfg
from .inheritance import linearize_inheritance
from .parser import children
from .ssa import SsaForm, to_ssa

BUILTIN_FUNCTIONS = frozenset({
    "require", "assert", "revert", "selfdestruct", "suicide", "keccak256", "sha3",
    "sha256", "ripemd160", "ecrecover", "addmod", "mulmod", "blockhash", "gasleft",
})
BUILTIN_NAMESPACES = frozenset({"msg", "block", "tx"})
BUILTIN_VARIABLES = frozenset({"now", "this"})
ADDRESS_MEMBERS = frozenset({"call", "delegatecall", "staticcall", "send"})

Callable = Union[FunctionDecl, ModifierDecl]


@dataclass(frozen=True)
class CallEdge:
    caller: str
    callee: str
    kind: str  # internal | library | external | builtin | unresolved | modifier_application | base_constructor
    external: bool = False


@dataclass(frozen=True)
class CallableIR:
    contract: str
    decl: Callable
    modifiers: tuple[CallTarget, ...] = ()

    @property
    def key(self) -> str:
        return f"{self.contract}.{self.decl.signature}"

    @property
    def is_modifier(self) -> bool:
        return isinstance(self.decl, ModifierDecl)

    @property
    def statements(self) -> tuple[Statement, ...]:
        return self.decl.body or ()


@dataclass
class ContractIR:
    unit: CompilationUnit
    linearized_bases: dict[str, list[str]]
    callables: dict[str, CallableIR]
    cfgs: dict[str, Cfg]
    ssa: dict[str, SsaForm]
    call_graph: tuple[CallEdge, ...]
    warnings: list[ParseWarning] = field(default_factory=list)
    external_contracts: frozenset[str] = frozenset()


class _Resolver:
    def __init__(self, unit: CompilationUnit, lin: dict[str, list[str]]):
        self.unit = unit
        self.lin = lin
        self.contracts = {c.name: c for c in unit.contracts}
        self.type_names: set[str] = set(unit.type_names) | set(self.contracts)
        for c in unit.contracts:
            self.type_names |= c.type_names
        for order in lin.values():
            self.type_names.update(order)

    def state_var(self, contract: str, name: str) -> Optional[VarRef]:
        for base in self.lin.get(contract, [contract]):
            c = self.contracts.get(base)
            if c is None:
                continue
            for v in c.state_vars:
                if v.name == name:
                    return VarRef(name, "state", base)
        return None

    def function(self, order: list[str], name: str, nargs: int) -> Optional[tuple[str, FunctionDecl]]:
        fallback = None
        for base in order:
            c = self.contracts.get(base)
            if c is None:
                continue
            for f in c.functions:
                if f.name == name:
                    if len(f.params) == nargs:
                        return base, f
                    fallback = fallback or (base, f)
        return fallback

    def modifier(self, contract: str, name: str) -> Optional[tuple[str, ModifierDecl]]:
        for base in self.lin.get(contract, [contract]):
            c = self.contracts.get(base)
            if c is None:
                continue
            for m in c.modifiers:
                if m.name == name:
                    return base, m
        return None


class _Scope:
    """Def/use collection for one callable."""

    def __init__(self, res: _Resolver, contract: str, decl: Callable, key: str):
        self.res = res
        self.contract = contract
        self.key = key
        self.locals: set[str] = set()
        for p in decl.params:
            if p.name:
                self.locals.add(p.name)
        for p in getattr(decl, "returns", ()):
            if p.name:
                self.locals.add(p.name)
        for s in decl.body or ():
            for d in s.declares:
                self.locals.add(d.name)
        self.reads: set[VarRef] = set()
        self.writes: set[VarRef] = set()
        self.callees: list[CallTarget] = []

    def reset(self) -> None:
        self.reads, self.writes, self.callees = set(), set(), []

    def var(self, name: str) -> Optional[VarRef]:
        if name in self.locals:
            return VarRef(name, "local", self.key)
        if name in BUILTIN_VARIABLES:
            return VarRef(name, "builtin")
        ref = self.res.state_var(self.contract, name)
        if ref is not None:
            return ref
        if name in self.res.type_names or name in BUILTIN_FUNCTIONS or name in ("super", "abi", "type"):
            return None
        if self.res.function(self.res.lin.get(self.contract, [self.contract]), name, -1):
            return None
        if self.res.modifier(self.contract, name):
            return None
        return VarRef(name, "external")

    def visit(self, e: Optional[Expr], write: bool = False) -> None:
        if e is None:
            return
        if isinstance(e, Ident):
            ref = self.var(e.name)
            if ref is not None:
                (self.writes if write else self.reads).add(ref)
        elif isinstance(e, Member):
            if isinstance(e.obj, Ident) and e.obj.name in BUILTIN_NAMESPACES and e.obj.name not in self.locals:
                self.reads.add(VarRef(f"{e.obj.name}.{e.member}", "builtin"))
            else:
                self.visit(e.obj, write)
        elif isinstance(e, Index):
            self.visit(e.base, write)
            self.visit(e.index)
            self.visit(e.end_index)
        elif isinstance(e, Assign):
            self.visit(e.target, write=True)
            if e.op != "=":
                self.visit(e.target)
            self.visit(e.value)
        elif isinstance(e, Unary) and e.op in ("++", "--", "delete"):
            self.visit(e.operand, write=True)
            if e.op != "delete":
                self.visit(e.operand)
        elif isinstance(e, TupleExpr):
            for item in e.items:
                self.visit(item, write)
        elif isinstance(e, Call):
            self.call(e)
        elif isinstance(e, (TypeExpr, New)):
            return
        else:
            for child in children(e):
                self.visit(child)

    def call(self, e: Call) -> None:
        callee = e.callee
        nargs = len(e.args)
        order = self.res.lin.get(self.contract, [self.contract])
        if isinstance(callee, CallOptions):
            for _, v in callee.options:
                self.visit(v)
            callee = callee.target
        if isinstance(callee, Ident):
            name = callee.name
            if name in self.locals:
                self.reads.add(VarRef(name, "local", self.key))
            elif name in BUILTIN_FUNCTIONS:
                self.callees.append(CallTarget("builtin", name))
            else:
                found = self.res.function(order, name, nargs)
                if found is not None:
                    base, f = found
                    self.callees.append(CallTarget("internal", name, base, f.signature))
                elif name not in self.res.type_names:
                    self.callees.append(CallTarget("unresolved", name))
        elif isinstance(callee, Member):
            obj, m = callee.obj, callee.member
            if isinstance(obj, Ident) and obj.name == "super":
                tail = order[order.index(self.contract) + 1:] if self.contract in order else []
                found = self.res.function(tail, m, nargs)
                if found is not None:
                    self.callees.append(CallTarget("internal", m, found[0], found[1].signature))
                else:
                    self.callees.append(CallTarget("unresolved", m))
            elif isinstance(obj, Ident) and obj.name == "this":
                found = self.res.function(order, m, nargs)
                if found is not None:
                    self.callees.append(CallTarget("external", m, found[0], found[1].signature))
                else:
                    self.callees.append(CallTarget("external", m))
            elif isinstance(obj, Ident) and obj.name == "abi":
                self.callees.append(CallTarget("builtin", f"abi.{m}"))
            elif isinstance(obj, Ident) and obj.name in self.res.contracts and self.res.contracts[obj.name].kind == "library":
                found = self.res.function([obj.name], m, nargs)
                if found is not None:
                    self.callees.append(CallTarget("library", m, found[0], found[1].signature))
                else:
                    self.callees.append(CallTarget("unresolved", m))
            elif m in ("push", "pop"):
                self.visit(obj, write=True)
                self.visit(obj)
            elif m in ADDRESS_MEMBERS or (m == "transfer" and nargs == 1):
                self.callees.append(CallTarget("builtin", f"address.{m}"))
                self.visit(obj)
            else:
                self.callees.append(CallTarget("external", m))
                self.visit(obj)
        elif isinstance(callee, (TypeExpr, New)):
            pass
        else:
            self.visit(callee)
        for a in e.args:
            self.visit(a)
        for _, v in e.options:
            self.visit(v)


def _lower_statement(scope: _Scope, s: Statement) -> Statement:
    if s.opaque:
        return s
    scope.reset()
    for d in s.declares:
        scope.writes.add(VarRef(d.name, "local", scope.key))
    for e in s.exprs:
        scope.visit(e)
    callees = list(scope.callees)
    if "revert" in s.flags:
        callees.insert(0, CallTarget("builtin", "revert"))
    seen: set[CallTarget] = set()
    unique = [c for c in callees if not (c in seen or seen.add(c))]  # type: ignore[func-returns-value]
    return replace(s, reads=frozenset(scope.reads), writes=frozenset(scope.writes), callees=tuple(unique))


def lower_to_ir(unit: CompilationUnit) -> ContractIR:
    """Produce a :class:`ContractIR` with CFG and SSA for every body.

    Bases not declared in the unit are treated as opaque external contracts
    and reported as warnings; cyclic hierarchies raise ``LinearizationError``.
    """
    warnings = list(unit.warnings)
    declared = {c.name for c in unit.contracts}
    external = frozenset(b for c in unit.contracts for b in c.bases if b not in declared)
    for c in unit.contracts:
        for b in c.bases:
            if b in external:
                warnings.append(ParseWarning(f"base {b!r} of {c.name} is not declared in this unit", c.span))
    lin = linearize_inheritance(unit, allow_external=True)
    res = _Resolver(unit, lin)

    new_contracts: list[ContractDecl] = []
    callables: dict[str, CallableIR] = {}
    cfgs: dict[str, Cfg] = {}
    ssa: dict[str, SsaForm] = {}
    edges: list[CallEdge] = []

    def lower_callable(c: ContractDecl, decl: Callable) -> Callable:
        key = f"{c.name}.{decl.signature}"
        if decl.body is None:
            return decl
        scope = _Scope(res, c.name, decl, key)
        body = tuple(_lower_statement(scope, s) for s in decl.body)
        return replace(decl, body=body)

    for c in unit.contracts:
        funcs = tuple(lower_callable(c, f) for f in c.functions)
        mods = tuple(lower_callable(c, m) for m in c.modifiers)
        c2 = replace(c, functions=funcs, modifiers=mods)  # type: ignore[arg-type]
        new_contracts.append(c2)

    lowered = replace(unit, contracts=tuple(new_contracts))
    res.contracts = {c.name: c for c in lowered.contracts}

    for c in lowered.contracts:
        for decl in (*c.functions, *c.modifiers):
            applied: list[CallTarget] = []
            if isinstance(decl, FunctionDecl):
                for inv in decl.applied_modifiers:
                    if inv.name in lin[c.name][1:] or inv.name in declared and inv.name != c.name:
                        applied.append(CallTarget("base_constructor", inv.name, inv.name))
                        continue
                    found = res.modifier(c.name, inv.name)
                    if found is not None:
                        applied.append(CallTarget("modifier", inv.name, found[0], found[1].signature))
                    else:
                        applied.append(CallTarget("unresolved", inv.name))
            ir = CallableIR(c.name, decl, tuple(applied))
            callables[ir.key] = ir
            for t in applied:
                if t.kind == "base_constructor":
                    edges.append(CallEdge(ir.key, t.name, "base_constructor", t.name not in declared))
                elif t.kind == "modifier":
                    edges.append(CallEdge(ir.key, f"{t.contract}.{t.signature}", "modifier_application"))
                else:
                    edges.append(CallEdge(ir.key, t.name, "modifier_application", True))
            if decl.body is None:
                continue
            cfg = build_cfg(decl.body)
            cfgs[ir.key] = cfg
            ssa[ir.key] = to_ssa(cfg, decl.body)
            for s in decl.body:
                for t in s.callees:
                    if t.kind in ("internal", "library") or (t.kind == "external" and t.signature):
                        edge = CallEdge(ir.key, f"{t.contract}.{t.signature}", t.kind)
                    else:
                        edge = CallEdge(ir.key, t.name, t.kind, True)
                    if edge not in edges:
                        edges.append(edge)

    return ContractIR(
        unit=lowered,
        linearized_bases=lin,
        callables=callables,
        cfgs=cfgs,
        ssa=ssa,
        call_graph=tuple(edges),
        warnings=warnings,
        external_contracts=external,
    )
