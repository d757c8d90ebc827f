"""The fixed ontology layer: classes, attribute datatypes and properties."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from types import MappingProxyType
from typing import Iterator, Mapping, Optional

from .terms import CKG, OWL, RDF_TYPE, RDFS, XSD, Graph, Iri, Triple, ckg

# class -> parent (None for the root)
CLASS_TREE: dict[str, Optional[str]] = {
    "Element": None,
    "Contract": "Element",
    "Interface": "Contract",
    "Library": "Contract",
    "Executable": "Element",
    "Callable": "Executable",
    "Function": "Callable",
    "Modifier": "Callable",
    "BuiltinFunction": "Callable",
    "ExternalFunction": "Callable",
    "Statement": "Executable",
    "Variable": "Element",
    "StateVar": "Variable",
    "LocalVar": "Variable",
    "BuiltinVar": "Variable",
    "ExternalVar": "Variable",
}

# attribute datatype -> xsd base
ATTRIBUTES: dict[str, str] = {
    "Identifier": "string",
    "Visibility": "string",
    "Mutability": "string",
    "Kind": "string",
    "TypeName": "string",
    "Signature": "string",
    "SourceSpan": "string",
    "SourceText": "string",
    "Ordinal": "integer",
    "Flag": "boolean",
}

# name -> (domain, range)
OBJECT_PROPERTIES: dict[str, tuple[str, str]] = {
    "hasFunction": ("Contract", "Function"),
    "hasStateVar": ("Contract", "StateVar"),
    "hasModifier": ("Contract", "Modifier"),
    "hasStatement": ("Callable", "Statement"),
    "hasLocalVar": ("Callable", "LocalVar"),
    "hasNext": ("Statement", "Statement"),
    "branchTrue": ("Statement", "Statement"),
    "branchFalse": ("Statement", "Statement"),
    "hasLoopBack": ("Statement", "Statement"),
    "entryPointIs": ("Function", "Statement"),
    "invokes": ("Executable", "Callable"),
    "inheritsFrom": ("Contract", "Contract"),
    "overrides": ("Function", "Function"),
    "readsVar": ("Executable", "Variable"),
    "writesVar": ("Executable", "Variable"),
    "appliesModifier": ("Function", "Modifier"),
}

# name -> (domain, attribute)
DATATYPE_PROPERTIES: dict[str, tuple[str, str]] = {
    "nameIs": ("Element", "Identifier"),
    "visibilityIs": ("Element", "Visibility"),
    "mutabilityIs": ("Element", "Mutability"),
    "kindIs": ("Element", "Kind"),
    "indexIs": ("Element", "Ordinal"),
    "spanIs": ("Element", "SourceSpan"),
    "typeIs": ("Variable", "TypeName"),
    "signatureIs": ("Callable", "Signature"),
    "textIs": ("Statement", "SourceText"),
    "opaqueIs": ("Statement", "Flag"),
    "placeholderIs": ("Statement", "Flag"),
}


@dataclass(frozen=True)
class ObjectProperty:
    name: str
    domain: str
    range: str


@dataclass(frozen=True)
class DatatypeProperty:
    name: str
    domain: str
    attribute: str
    datatype: str  # string | integer | boolean


@dataclass(frozen=True)
class OntologySchema:
    classes: Mapping[str, Optional[str]]
    attributes: Mapping[str, str]
    object_properties: Mapping[str, ObjectProperty]
    datatype_properties: Mapping[str, DatatypeProperty]

    def iri(self, name: str) -> Iri:
        return ckg(name)

    def ancestors(self, cls: str) -> list[str]:
        """``cls`` followed by its superclasses up to the root."""
        out = []
        cur: Optional[str] = cls
        while cur is not None:
            out.append(cur)
            cur = self.classes[cur]
        return out

    def is_subclass(self, cls: str, parent: str) -> bool:
        return cls in self.classes and parent in self.ancestors(cls)

    def compatible(self, a: str, b: str) -> bool:
        """Whether some instance could carry both class constraints."""
        return self.is_subclass(a, b) or self.is_subclass(b, a)

    def has_property(self, name: str) -> bool:
        return name in self.object_properties or name in self.datatype_properties

    def vocabulary(self) -> set[str]:
        return set(self.classes) | set(self.attributes) | set(self.object_properties) | set(self.datatype_properties)

    def render(self) -> str:
        """Compact plain-text rendering for prompts."""
        lines = ["Classes (child -> parent):"]
        for c, p in self.classes.items():
            lines.append(f"  ckg:{c}" + (f" -> ckg:{p}" if p else ""))
        lines.append("Object properties (domain -> range):")
        for op in self.object_properties.values():
            lines.append(f"  ckg:{op.name}: ckg:{op.domain} -> ckg:{op.range}")
        lines.append("Datatype properties (domain -> literal type):")
        for dp in self.datatype_properties.values():
            lines.append(f"  ckg:{dp.name}: ckg:{dp.domain} -> {dp.datatype}")
        return "\n".join(lines)


def _schema_triples(schema: OntologySchema) -> Iterator[Triple]:
    for c, parent in schema.classes.items():
        yield Triple(ckg(c), RDF_TYPE, Iri(OWL + "Class"))
        if parent is not None:
            yield Triple(ckg(c), Iri(RDFS + "subClassOf"), ckg(parent))
    for a, base in schema.attributes.items():
        yield Triple(ckg(a), RDF_TYPE, Iri(RDFS + "Datatype"))
        yield Triple(ckg(a), Iri(OWL + "equivalentClass"), Iri(XSD + base))
    for op in schema.object_properties.values():
        yield Triple(ckg(op.name), RDF_TYPE, Iri(OWL + "ObjectProperty"))
        yield Triple(ckg(op.name), Iri(RDFS + "domain"), ckg(op.domain))
        yield Triple(ckg(op.name), Iri(RDFS + "range"), ckg(op.range))
    for dp in schema.datatype_properties.values():
        yield Triple(ckg(dp.name), RDF_TYPE, Iri(OWL + "DatatypeProperty"))
        yield Triple(ckg(dp.name), Iri(RDFS + "domain"), ckg(dp.domain))
        yield Triple(ckg(dp.name), Iri(RDFS + "range"), ckg(dp.attribute))


@lru_cache(maxsize=1)
def ontology_schema() -> tuple[OntologySchema, Graph]:
    """The fixed schema and its triple encoding."""
    schema = OntologySchema(
        classes=MappingProxyType(dict(CLASS_TREE)),
        attributes=MappingProxyType(dict(ATTRIBUTES)),
        object_properties=MappingProxyType(
            {n: ObjectProperty(n, d, r) for n, (d, r) in OBJECT_PROPERTIES.items()}
        ),
        datatype_properties=MappingProxyType(
            {n: DatatypeProperty(n, d, a, ATTRIBUTES[a]) for n, (d, a) in DATATYPE_PROPERTIES.items()}
        ),
    )
    return schema, Graph(_schema_triples(schema))


def is_schema_triple(t: Triple) -> bool:
    return t.subject.value.startswith(CKG)
