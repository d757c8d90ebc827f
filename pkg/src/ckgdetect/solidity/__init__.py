"""Solidity front end: parsing, inheritance, CFG, SSA and lowering."""

from .ast import CompilationUnit, ContractDecl, FunctionDecl, ModifierDecl, Span, Statement
from .cfg import BasicBlock, Cfg, Edge, build_cfg
from .inheritance import LinearizationError, UnresolvedBase, linearize_inheritance
from .lowering import CallableIR, CallEdge, ContractIR, lower_to_ir
from .parser import ParseError, parse_source
from .ssa import PhiNode, SsaForm, to_ssa

__all__ = [
    "BasicBlock", "CallEdge", "CallableIR", "Cfg", "CompilationUnit", "ContractDecl",
    "ContractIR", "Edge", "FunctionDecl", "LinearizationError", "ModifierDecl",
    "ParseError", "PhiNode", "Span", "SsaForm", "Statement", "UnresolvedBase",
    "build_cfg", "linearize_inheritance", "lower_to_ir", "parse_source", "to_ssa",
]
