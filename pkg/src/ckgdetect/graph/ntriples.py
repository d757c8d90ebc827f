"""N-Triples reading and deterministic writing.

Only the term kinds the graph model supports are accepted: IRIs, plain
string literals and ``xsd:string``/``xsd:integer``/``xsd:boolean`` typed
literals. Blank nodes and language tags are rejected.
"""

from __future__ import annotations

import re
from typing import Optional

from .terms import XSD, Graph, Iri, Literal, Term, Triple

_DATATYPES = {XSD + dt: dt for dt in ("string", "integer", "boolean")}

_IRI = r"<([^<>\"{}|^`\\\x00-\x20]|\\u[0-9A-Fa-f]{4}|\\U[0-9A-Fa-f]{8})*>"
_STRING = r'"(?:[^"\\\n\r]|\\[tbnrf"\'\\]|\\u[0-9A-Fa-f]{4}|\\U[0-9A-Fa-f]{8})*"'
_LINE = re.compile(
    rf"\s*(?P<s>{_IRI}|_:\S+)\s*(?P<p>{_IRI})\s*"
    rf"(?P<o>{_IRI}|_:\S+|(?P<lit>{_STRING})(?:\^\^(?P<dt>{_IRI})|(?P<lang>@[A-Za-z]+(?:-[A-Za-z0-9]+)*))?)"
    r"\s*\.\s*(?:#.*)?\Z"
)
_ESCAPE = re.compile(r"\\(?:u([0-9A-Fa-f]{4})|U([0-9A-Fa-f]{8})|(.))")
_ECHAR = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


class NTriplesSyntaxError(SyntaxError):
    """Malformed or unsupported N-Triples input; ``lineno`` is 1-based."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.lineno = line
        self.line = line


def _unescape(text: str) -> str:
    def sub(m: re.Match) -> str:
        if m.group(1) or m.group(2):
            return chr(int(m.group(1) or m.group(2), 16))
        return _ECHAR[m.group(3)]

    return _ESCAPE.sub(sub, text)


def _iri(token: str, line: int) -> Iri:
    try:
        return Iri(_unescape(token[1:-1]))
    except ValueError as exc:
        raise NTriplesSyntaxError(str(exc), line) from None


def serialize_ntriples(g: Graph) -> str:
    """One triple per line, lines sorted; empty graph gives empty text."""
    lines = sorted(t.n3() for t in g.triples)
    return "".join(line + "\n" for line in lines)


def parse_ntriples(text: str) -> Graph:
    triples: list[Triple] = []
    for no, raw in enumerate(text.split("\n"), start=1):
        raw = raw.rstrip("\r")
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        m = _LINE.match(raw)
        if m is None:
            raise NTriplesSyntaxError(f"malformed triple: {stripped[:80]!r}", no)
        if m.group("s").startswith("_:") or m.group("o").startswith("_:"):
            raise NTriplesSyntaxError("blank nodes are not supported", no)
        if m.group("lang"):
            raise NTriplesSyntaxError("language-tagged literals are not supported", no)
        subject = _iri(m.group("s"), no)
        predicate = _iri(m.group("p"), no)
        obj: Term
        if m.group("lit") is not None:
            lexical = _unescape(m.group("lit")[1:-1])
            datatype = "string"
            dt: Optional[str] = m.group("dt")
            if dt is not None:
                uri = _unescape(dt[1:-1])
                if uri not in _DATATYPES:
                    raise NTriplesSyntaxError(f"unsupported datatype <{uri}>", no)
                datatype = _DATATYPES[uri]
            try:
                obj = Literal(lexical, datatype)
            except ValueError as exc:
                raise NTriplesSyntaxError(str(exc), no) from None
        else:
            obj = _iri(m.group("o"), no)
        triples.append(Triple(subject, predicate, obj))
    return Graph(triples)
