"""RDF terms and an immutable, indexed triple set."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, NamedTuple, Optional, Union

RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"
OWL = "http://www.w3.org/2002/07/owl#"
XSD = "http://www.w3.org/2001/XMLSchema#"
CKG = "urn:ckg:ontology#"

DEFAULT_NAMESPACES: dict[str, str] = {
    "rdf": RDF,
    "rdfs": RDFS,
    "owl": OWL,
    "xsd": XSD,
    "ckg": CKG,
}

DATATYPES = ("string", "integer", "boolean")

_IRI_FORBIDDEN = re.compile(r'[\x00-\x20<>"{}|^`\\]')
_INTEGER = re.compile(r"[+-]?[0-9]+\Z")


@dataclass(frozen=True, order=True)
class Iri:
    value: str

    def __post_init__(self) -> None:
        if not self.value:
            raise ValueError("IRI must be non-empty")
        if _IRI_FORBIDDEN.search(self.value):
            raise ValueError(f"invalid character in IRI {self.value!r}")
        if ":" not in self.value:
            raise ValueError(f"IRI must be absolute: {self.value!r}")

    def n3(self) -> str:
        return f"<{self.value}>"

    def __str__(self) -> str:
        return self.value


def _escape(text: str) -> str:
    out = []
    for ch in text:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\b":
            out.append("\\b")
        elif ch == "\f":
            out.append("\\f")
        elif ord(ch) < 0x20 or ord(ch) == 0x7F or ch in "\x85\u2028\u2029":
            out.append(f"\\u{ord(ch):04X}")
        else:
            out.append(ch)
    return "".join(out)


@dataclass(frozen=True)
class Literal:
    lexical: str
    datatype: str = "string"

    def __post_init__(self) -> None:
        if self.datatype not in DATATYPES:
            raise ValueError(f"unsupported datatype {self.datatype!r}")
        if self.datatype == "integer" and not _INTEGER.match(self.lexical):
            raise ValueError(f"{self.lexical!r} is not an integer")
        if self.datatype == "boolean" and self.lexical not in ("true", "false"):
            raise ValueError(f"{self.lexical!r} is not a boolean")

    @classmethod
    def of(cls, value: Union[str, int, bool]) -> "Literal":
        if isinstance(value, bool):
            return cls("true" if value else "false", "boolean")
        if isinstance(value, int):
            return cls(str(value), "integer")
        return cls(str(value))

    @property
    def value(self) -> Union[str, int, bool]:
        if self.datatype == "integer":
            return int(self.lexical)
        if self.datatype == "boolean":
            return self.lexical == "true"
        return self.lexical

    def n3(self) -> str:
        quoted = f'"{_escape(self.lexical)}"'
        if self.datatype == "string":
            return quoted
        return f"{quoted}^^<{XSD}{self.datatype}>"

    def __str__(self) -> str:
        return self.lexical


Term = Union[Iri, Literal]


def term_key(term: Term) -> str:
    return term.n3()


class Triple(NamedTuple):
    subject: Iri
    predicate: Iri
    object: Term

    def n3(self) -> str:
        return f"{self.subject.n3()} {self.predicate.n3()} {self.object.n3()} ."


def triple_key(t: Triple) -> tuple[str, str, str]:
    return (t.subject.n3(), t.predicate.n3(), t.object.n3())


RDF_TYPE = Iri(RDF + "type")


def ckg(local: str) -> Iri:
    return Iri(CKG + local)


class Graph:
    """Immutable set of triples with subject/predicate/object indexes."""

    __slots__ = ("_triples", "_namespaces", "_sorted", "_spo", "_pos", "_osp", "_p")

    def __init__(self, triples: Iterable[Triple] = (), namespaces: Optional[Mapping[str, str]] = None):
        ts = frozenset(Triple(*t) for t in triples)
        for t in ts:
            if not isinstance(t.subject, Iri) or not isinstance(t.predicate, Iri):
                raise TypeError(f"subject and predicate must be IRIs: {t!r}")
            if not isinstance(t.object, (Iri, Literal)):
                raise TypeError(f"object must be an IRI or literal: {t!r}")
        self._triples = ts
        self._namespaces = dict(namespaces if namespaces is not None else DEFAULT_NAMESPACES)
        self._sorted: Optional[tuple[Triple, ...]] = None
        spo: dict[Iri, dict[Iri, set[Term]]] = {}
        pos: dict[Iri, dict[Term, set[Iri]]] = {}
        osp: dict[Term, dict[Iri, set[Iri]]] = {}
        by_p: dict[Iri, set[Triple]] = {}
        for t in ts:
            s, p, o = t
            spo.setdefault(s, {}).setdefault(p, set()).add(o)
            pos.setdefault(p, {}).setdefault(o, set()).add(s)
            osp.setdefault(o, {}).setdefault(s, set()).add(p)
            by_p.setdefault(p, set()).add(t)
        self._spo, self._pos, self._osp, self._p = spo, pos, osp, by_p

    @property
    def triples(self) -> frozenset[Triple]:
        return self._triples

    @property
    def namespaces(self) -> dict[str, str]:
        return dict(self._namespaces)

    def __len__(self) -> int:
        return len(self._triples)

    def __iter__(self) -> Iterator[Triple]:
        if self._sorted is None:
            self._sorted = tuple(sorted(self._triples, key=triple_key))
        return iter(self._sorted)

    def __contains__(self, t: object) -> bool:
        return t in self._triples

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._triples == other._triples

    def __hash__(self) -> int:
        return hash(self._triples)

    def __repr__(self) -> str:
        return f"Graph({len(self)} triples)"

    def __or__(self, other: "Graph") -> "Graph":
        ns = {**self._namespaces, **other._namespaces}
        return Graph(self._triples | other._triples, ns)

    def issubset(self, other: "Graph") -> bool:
        return self._triples <= other._triples

    def match(self, s: Optional[Iri] = None, p: Optional[Iri] = None, o: Optional[Term] = None) -> Iterator[Triple]:
        """Triples matching the given positions (``None`` is a wildcard)."""
        if s is not None:
            by_p = self._spo.get(s, {})
            preds = [p] if p is not None else list(by_p)
            for pp in preds:
                for oo in by_p.get(pp, ()):
                    if o is None or oo == o:
                        yield Triple(s, pp, oo)
        elif o is not None:
            by_s = self._osp.get(o, {})
            for ss, ps in by_s.items():
                if p is None:
                    for pp in ps:
                        yield Triple(ss, pp, o)
                elif p in ps:
                    yield Triple(ss, p, o)
        elif p is not None:
            yield from self._p.get(p, ())
        else:
            yield from self._triples

    def count(self, s: Optional[Iri] = None, p: Optional[Iri] = None, o: Optional[Term] = None) -> int:
        if s is None and o is None:
            return len(self._p.get(p, ())) if p is not None else len(self._triples)
        return sum(1 for _ in self.match(s, p, o))

    def objects(self, s: Iri, p: Iri) -> set[Term]:
        return set(self._spo.get(s, {}).get(p, ()))

    def subjects(self, p: Iri, o: Term) -> set[Iri]:
        return set(self._pos.get(p, {}).get(o, ()))

    def value(self, s: Iri, p: Iri) -> Optional[Term]:
        objs = self._spo.get(s, {}).get(p)
        if not objs:
            return None
        return min(objs, key=term_key)

    def types(self, s: Iri) -> set[Term]:
        return self.objects(s, RDF_TYPE)

    def terms(self) -> set[Term]:
        out: set[Term] = set()
        for s, p, o in self._triples:
            out.update((s, p, o))
        return out

    def filter(self, keep) -> "Graph":
        return Graph((t for t in self._triples if keep(t)), self._namespaces)

    def qname(self, iri: Iri) -> str:
        for prefix, base in sorted(self._namespaces.items(), key=lambda kv: -len(kv[1])):
            if iri.value.startswith(base) and len(iri.value) > len(base):
                return f"{prefix}:{iri.value[len(base):]}"
        return iri.n3()
