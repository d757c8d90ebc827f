"""Hierarchical instance IRIs and their inverse.

Layout (segments percent-encoded)::

    urn:ckg:<source>:<Contract>                     contract
    urn:ckg:<source>:<Contract>.<member>            state variable / function / modifier
    urn:ckg:<source>:<Contract>.<sig>#s<index>      statement
    urn:ckg:<source>:<Contract>.<sig>#v.<name>      parameter or local
    urn:ckg:<source>:external.<name>                unresolved callee
    urn:ckg:builtin:<name>                          builtin function or variable
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional
from urllib.parse import quote, unquote

from .terms import Iri

INSTANCE_PREFIX = "urn:ckg:"
BUILTIN_PREFIX = INSTANCE_PREFIX + "builtin:"
EXTERNAL_KINDS = ("external", "external-modifier", "external-var")

_SAFE = "-._~()[],$"


def _q(segment: str) -> str:
    return quote(segment, safe=_SAFE)


def _source(source_id: str) -> str:
    enc = _q(source_id)
    # keep user sources out of the builtin namespace
    if enc == "builtin":
        return "%62uiltin"
    return enc


def contract_iri(source_id: str, contract: str) -> Iri:
    return Iri(f"{INSTANCE_PREFIX}{_source(source_id)}:{_q(contract)}")


def member_iri(source_id: str, contract: str, member: str) -> Iri:
    return Iri(f"{contract_iri(source_id, contract).value}.{_q(member)}")


def statement_iri(callable_iri: Iri, index: int) -> Iri:
    return Iri(f"{callable_iri.value}#s{index}")


def local_iri(callable_iri: Iri, name: str) -> Iri:
    return Iri(f"{callable_iri.value}#v.{_q(name)}")


def external_iri(source_id: str, kind: str, name: str) -> Iri:
    if kind not in EXTERNAL_KINDS:
        raise ValueError(f"unknown external kind {kind!r}")
    return Iri(f"{INSTANCE_PREFIX}{_source(source_id)}:{kind}.{_q(name)}")


def builtin_iri(name: str) -> Iri:
    return Iri(BUILTIN_PREFIX + _q(name))


@dataclass(frozen=True)
class DecodedIri:
    source_id: str
    contract: Optional[str] = None
    member: Optional[str] = None
    statement: Optional[int] = None
    local: Optional[str] = None
    builtin: Optional[str] = None
    external_kind: Optional[str] = None


_PATH = re.compile(
    r"(?P<contract>[^.#]+)(?:\.(?P<member>[^#]+))?(?:#(?:s(?P<stmt>[0-9]+)|v\.(?P<local>.+)))?\Z"
)


def decode_iri(iri: Iri) -> DecodedIri:
    """Invert the scheme; raises ``ValueError`` for anything else."""
    v = iri.value
    if v.startswith(BUILTIN_PREFIX):
        name = v[len(BUILTIN_PREFIX):]
        if not name:
            raise ValueError(f"malformed builtin IRI {v!r}")
        return DecodedIri(source_id="builtin", builtin=unquote(name))
    if not v.startswith(INSTANCE_PREFIX):
        raise ValueError(f"not an instance IRI: {v!r}")
    rest = v[len(INSTANCE_PREFIX):]
    source, sep, path = rest.rpartition(":")
    if not sep or not source:
        raise ValueError(f"malformed instance IRI {v!r}")
    m = _PATH.match(path)
    if m is None:
        raise ValueError(f"malformed instance IRI {v!r}")
    contract = unquote(m.group("contract"))
    member = unquote(m.group("member")) if m.group("member") else None
    if contract in EXTERNAL_KINDS:
        if member is None or m.group("stmt") or m.group("local"):
            raise ValueError(f"malformed external IRI {v!r}")
        return DecodedIri(source_id=unquote(source), member=member, external_kind=contract)
    if (m.group("stmt") or m.group("local")) and member is None:
        raise ValueError(f"statement or local IRI without a callable: {v!r}")
    return DecodedIri(
        source_id=unquote(source),
        contract=contract,
        member=member,
        statement=int(m.group("stmt")) if m.group("stmt") else None,
        local=unquote(m.group("local")) if m.group("local") else None,
    )
