"""SPARQL subset: parsing, evaluation and schema feasibility checks."""

from .ast import Group, QueryAst, TriplePattern, Var
from .engine import Binding, EvaluationError, ResultSet, execute
from .feasibility import FeasibilityReport, validate_feasibility
from .parser import QuerySyntaxError, UnsupportedFeature, parse_query, validate_regex

__all__ = [
    "Binding", "EvaluationError", "FeasibilityReport", "Group", "QueryAst", "QuerySyntaxError",
    "ResultSet", "TriplePattern", "UnsupportedFeature", "Var", "execute", "parse_query",
    "validate_feasibility", "validate_regex",
]
