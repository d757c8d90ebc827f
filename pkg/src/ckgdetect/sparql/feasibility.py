"""Static checks of a query against the ontology schema and a KG summary."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..graph.ontology import OntologySchema
from ..graph.summary import KgSummary
from ..graph.terms import CKG, OWL, RDF, RDF_TYPE, RDFS, Iri, Literal
from .ast import And, Compare, Const, Exists, Expr, Group, QueryAst, TriplePattern, Var

STATUSES = ("feasible", "infeasible", "unknown-term")
_SCHEMA_NAMESPACES = (RDF, RDFS, OWL)


@dataclass
class FeasibilityReport:
    status: str
    diagnostics: list[tuple[int, str]] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"

    def to_dict(self) -> dict:
        return {"status": self.status, "diagnostics": [[i, m] for i, m in self.diagnostics]}


def _local(iri: Iri) -> Optional[str]:
    return iri.value[len(CKG):] if iri.value.startswith(CKG) else None


class _Checker:
    def __init__(self, schema: OntologySchema, summary: KgSummary):
        self.schema = schema
        self.summary = summary
        self.infeasible: list[tuple[int, str]] = []
        self.unknown: list[tuple[int, str]] = []
        self.classes: dict[str, list[tuple[int, str]]] = {}
        self.literal_vars: dict[str, int] = {}
        self.node_vars: dict[str, int] = {}
        self.typed = True  # typing facts from EXISTS groups are not merged with the outer ones
        self.negated = False  # absent constants are expected inside NOT EXISTS

    def constrain(self, var: str, cls: str, idx: int) -> None:
        if self.typed:
            self.classes.setdefault(var, []).append((idx, cls))

    def vocabulary(self, term: object, idx: int, role: str) -> bool:
        if not isinstance(term, Iri):
            return True
        local = _local(term)
        if local is None:
            return True
        if local not in self.schema.vocabulary():
            self.infeasible.append((idx, f"undeclared {role} ckg:{local}"))
            return False
        return True

    def instance_constant(self, term: object, idx: int) -> None:
        if self.negated:
            return
        if isinstance(term, Iri):
            if _local(term) is not None or term.value.startswith(_SCHEMA_NAMESPACES):
                return
            if not self.summary.mentions(term):
                self.unknown.append((idx, f"{term.n3()} does not appear in the knowledge graph summary"))
        elif isinstance(term, Literal):
            if not self.summary.mentions(term):
                self.unknown.append((idx, f"literal {term.n3()} does not appear in the knowledge graph summary"))

    def pattern(self, idx: int, p: TriplePattern) -> None:
        s, pr, o = p.terms()
        if isinstance(s, Var):
            if self.typed:
                self.node_vars.setdefault(s.name, idx)
        else:
            self.vocabulary(s, idx, "term")
            self.instance_constant(s, idx)
        if isinstance(pr, Iri):
            local = _local(pr)
            if pr == RDF_TYPE:
                if isinstance(o, Iri) and _local(o) is not None:
                    cls = _local(o)
                    if cls not in self.schema.classes:
                        self.infeasible.append((idx, f"undeclared class ckg:{cls}"))
                    elif isinstance(s, Var):
                        self.constrain(s.name, cls, idx)  # type: ignore[arg-type]
                elif isinstance(o, Literal):
                    self.infeasible.append((idx, "rdf:type object must be a class IRI"))
                elif isinstance(o, Iri):
                    self.vocabulary(o, idx, "term")
                return
            if local is None:
                if not pr.value.startswith(_SCHEMA_NAMESPACES):
                    self.infeasible.append((idx, f"unknown predicate {pr.n3()}"))
                self.vocabulary(o, idx, "term")
                return
            if local in self.schema.object_properties:
                prop = self.schema.object_properties[local]
                if isinstance(s, Var):
                    self.constrain(s.name, prop.domain, idx)
                if isinstance(o, Var):
                    self.constrain(o.name, prop.range, idx)
                    if self.typed:
                        self.node_vars.setdefault(o.name, idx)
                elif isinstance(o, Literal):
                    self.infeasible.append((idx, f"ckg:{local} expects an instance, not a literal"))
                else:
                    self.vocabulary(o, idx, "term")
                    self.instance_constant(o, idx)
            elif local in self.schema.datatype_properties:
                dprop = self.schema.datatype_properties[local]
                if isinstance(s, Var):
                    self.constrain(s.name, dprop.domain, idx)
                if isinstance(o, Var):
                    if self.typed:
                        self.literal_vars.setdefault(o.name, idx)
                elif isinstance(o, Iri):
                    self.infeasible.append((idx, f"ckg:{local} expects a {dprop.datatype} literal, not an IRI"))
                elif isinstance(o, Literal):
                    if o.datatype != dprop.datatype:
                        self.infeasible.append(
                            (idx, f"ckg:{local} expects a {dprop.datatype} literal, got {o.datatype}")
                        )
                    else:
                        self.instance_constant(o, idx)
            else:
                self.infeasible.append((idx, f"undeclared property ckg:{local}"))
        else:
            if isinstance(o, Var):
                pass
            else:
                self.vocabulary(o, idx, "term")
                self.instance_constant(o, idx)

    def typing(self) -> None:
        for var, constraints in sorted(self.classes.items()):
            for i, (idx_a, a) in enumerate(constraints):
                for idx_b, b in constraints[i + 1:]:
                    if not self.schema.compatible(a, b):
                        self.infeasible.append(
                            (max(idx_a, idx_b), f"?{var} cannot be both ckg:{a} and ckg:{b}")
                        )
        for var, idx in sorted(self.literal_vars.items()):
            if var in self.node_vars or var in self.classes:
                self.infeasible.append((idx, f"?{var} is used both as a literal value and as a node"))

    def filter_constants(self, e: Expr, idx: int) -> None:
        """Constants compared for equality in a conjunctive position must exist."""
        if isinstance(e, And):
            self.filter_constants(e.left, idx)
            self.filter_constants(e.right, idx)
            return
        if isinstance(e, Compare) and e.op == "=":
            for side, other in ((e.left, e.right), (e.right, e.left)):
                if isinstance(side, Const) and isinstance(other, Var):
                    self.instance_constant(side.term, idx)
        if isinstance(e, Exists):
            saved = (self.typed, self.negated)
            self.typed, self.negated = False, self.negated or e.negated
            self.group(e.group, idx)
            self.typed, self.negated = saved

    def group(self, group: Group, base: int) -> None:
        for i, p in enumerate(group.patterns):
            self.pattern(base + i, p)
        for f in group.filters:
            self.filter_constants(f, base + len(group.patterns))


def validate_feasibility(q: QueryAst, schema: OntologySchema, summary: KgSummary) -> FeasibilityReport:
    """``infeasible`` beats ``unknown-term``; diagnostics carry the pattern index."""
    c = _Checker(schema, summary)
    c.group(q.where, 0)
    c.typing()
    if c.infeasible:
        return FeasibilityReport("infeasible", sorted(set(c.infeasible)))
    if c.unknown:
        return FeasibilityReport("unknown-term", sorted(set(c.unknown)))
    return FeasibilityReport("feasible", [])
