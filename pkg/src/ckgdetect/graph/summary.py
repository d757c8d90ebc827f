"""Tabular KG summaries for prompt embedding."""

from __future__ import annotations

from dataclasses import dataclass, field

from .ontology import is_schema_triple, ontology_schema
from .terms import CKG, RDF_TYPE, Graph, Iri, Literal

KEY_PROPERTIES = ("nameIs", "visibilityIs", "kindIs")


@dataclass(frozen=True)
class SummaryRow:
    iri: Iri
    values: dict[str, str]


@dataclass
class KgSummary:
    tables: dict[str, list[SummaryRow]]
    class_counts: dict[str, int]
    property_counts: dict[str, int]
    columns: tuple[str, ...] = KEY_PROPERTIES
    literals: frozenset[Literal] = field(default_factory=frozenset)

    @property
    def instance_count(self) -> int:
        return sum(self.class_counts.values())

    def instances(self) -> set[Iri]:
        return {row.iri for rows in self.tables.values() for row in rows}

    def is_empty(self) -> bool:
        return self.instance_count == 0

    def mentions(self, term: object) -> bool:
        """Whether an IRI or literal appears anywhere in the instance layer."""
        if isinstance(term, Iri):
            return term in self.instances()
        if isinstance(term, Literal):
            return term in self.literals
        return False

    def without_rows(self, cls: str, keep: int) -> "KgSummary":
        """Copy with the ``cls`` table cut down to its first ``keep`` rows."""
        tables = dict(self.tables)
        tables[cls] = tables[cls][:keep]
        counts = dict(self.class_counts)
        counts[cls] = len(tables[cls])
        return KgSummary(tables, counts, dict(self.property_counts), self.columns, self.literals)

    def render(self) -> str:
        """Pipe-delimited plain-text tables, one per non-empty class."""
        out: list[str] = []
        for cls in sorted(self.tables):
            rows = self.tables[cls]
            if not rows:
                continue
            out.append(f"Class ckg:{cls} ({len(rows)} instances)")
            out.append("| instance | " + " | ".join(self.columns) + " |")
            out.append("|" + "---|" * (len(self.columns) + 1))
            for row in rows:
                cells = [f"<{row.iri.value}>"] + [_cell(row.values.get(c, "")) for c in self.columns]
                out.append("| " + " | ".join(cells) + " |")
            out.append("")
        if self.property_counts:
            out.append("Property usage")
            out.append("| property | triples |")
            out.append("|---|---|")
            for p in sorted(self.property_counts):
                out.append(f"| {p} | {self.property_counts[p]} |")
        return "\n".join(out).rstrip("\n") + ("\n" if out else "")


def _cell(text: str) -> str:
    return text.replace("\\", "\\\\").replace("|", "\\|").replace("\n", " ")


def _local(iri: Iri) -> str:
    return iri.value[len(CKG):]


def summarize_graph(g: Graph) -> KgSummary:
    """Per-class instance tables plus per-class and per-property counts."""
    schema, _ = ontology_schema()
    tables: dict[str, list[SummaryRow]] = {c: [] for c in schema.classes}
    property_counts: dict[str, int] = {}
    literals: set[Literal] = set()
    for t in g:
        if is_schema_triple(t):
            continue
        name = "rdf:type" if t.predicate == RDF_TYPE else g.qname(t.predicate)
        property_counts[name] = property_counts.get(name, 0) + 1
        if isinstance(t.object, Literal):
            literals.add(t.object)
    for t in g.match(p=RDF_TYPE):
        if is_schema_triple(t) or not isinstance(t.object, Iri) or not t.object.value.startswith(CKG):
            continue
        cls = _local(t.object)
        values: dict[str, str] = {}
        for prop in KEY_PROPERTIES:
            objs = sorted(str(o) for o in g.objects(t.subject, Iri(CKG + prop)))
            if objs:
                values[prop] = ", ".join(objs)
        tables.setdefault(cls, []).append(SummaryRow(t.subject, values))
    for rows in tables.values():
        rows.sort(key=lambda r: r.iri.value)
    counts = {c: len(rows) for c, rows in tables.items()}
    return KgSummary(tables, counts, property_counts, KEY_PROPERTIES, frozenset(literals))
