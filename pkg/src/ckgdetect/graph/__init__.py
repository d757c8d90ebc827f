"""Contract knowledge graph: ontology, instance layer, N-Triples and summaries."""

from .instances import build_instance_graph, instance_triples, typed_instances
from .iris import DecodedIri, builtin_iri, contract_iri, decode_iri, external_iri, local_iri, member_iri, statement_iri
from .ntriples import NTriplesSyntaxError, parse_ntriples, serialize_ntriples
from .ontology import DatatypeProperty, ObjectProperty, OntologySchema, is_schema_triple, ontology_schema
from .summary import KgSummary, SummaryRow, summarize_graph
from .terms import CKG, DEFAULT_NAMESPACES, RDF_TYPE, Graph, Iri, Literal, Term, Triple, ckg, term_key

__all__ = [
    "CKG", "DEFAULT_NAMESPACES", "DatatypeProperty", "DecodedIri", "Graph", "Iri", "KgSummary",
    "Literal", "NTriplesSyntaxError", "ObjectProperty", "OntologySchema", "RDF_TYPE", "SummaryRow",
    "Term", "Triple", "build_instance_graph", "builtin_iri", "ckg", "contract_iri", "decode_iri",
    "external_iri", "instance_triples", "is_schema_triple", "local_iri", "member_iri",
    "ontology_schema", "parse_ntriples", "serialize_ntriples", "statement_iri", "summarize_graph",
    "term_key", "typed_instances",
]
