"""Access-control pruning of a contract knowledge graph.

The relevant node set R holds every public/external function that carries an
access check, together with the authority variables such a function uses.
The pruned graph keeps the instance triples touching R, the ontology triples,
and the name/type triples of R's direct neighbours so that the result still
reads sensibly in a summary and pruning it again is a no-op.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .graph.ontology import is_schema_triple
from .graph.terms import RDF_TYPE, Graph, Iri, Literal, Triple, ckg

DEFAULT_GUARD_MODIFIERS = frozenset({"onlyOwner", "onlyRole"})
DEFAULT_GUARD_BUILTINS = frozenset({"msg.sender", "require", "hasRole"})
DEFAULT_AUTHORITY_VARS = frozenset({"owner", "roles"})

ENTRY_VISIBILITIES = ("public", "external")

_FUNCTION = ckg("Function")
_NAME = ckg("nameIs")
_VISIBILITY = ckg("visibilityIs")
_APPLIES = ckg("appliesModifier")
_HAS_STATEMENT = ckg("hasStatement")
_READS = ckg("readsVar")
_WRITES = ckg("writesVar")
_INVOKES = ckg("invokes")


@dataclass(frozen=True)
class PruneConfig:
    guard_modifier_names: frozenset[str] = DEFAULT_GUARD_MODIFIERS
    guard_builtin_names: frozenset[str] = DEFAULT_GUARD_BUILTINS
    authority_var_names: frozenset[str] = DEFAULT_AUTHORITY_VARS
    # optional prefix match on modifier names (e.g. "only"); empty keeps exact matching
    guard_prefixes: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        for name in ("guard_modifier_names", "guard_builtin_names", "authority_var_names", "guard_prefixes"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))
        for name in ("guard_modifier_names", "guard_builtin_names", "authority_var_names"):
            if not getattr(self, name):
                raise ValueError(f"{name} must not be empty")

    def is_guard_modifier(self, name: str) -> bool:
        return name in self.guard_modifier_names or any(name.startswith(p) for p in self.guard_prefixes)


class NotAFunction(ValueError):
    def __init__(self, node: Iri):
        super().__init__(f"{node} is not typed ckg:Function")
        self.node = node


def _require_function(g: Graph, f: Iri) -> None:
    if _FUNCTION not in g.types(f):
        raise NotAFunction(f)


def _names(g: Graph, node: Iri) -> set[str]:
    return {o.lexical for o in g.objects(node, _NAME) if isinstance(o, Literal)}


def _iris(terms: Iterable[object]) -> list[Iri]:
    return [t for t in terms if isinstance(t, Iri)]


def is_entry_function(g: Graph, f: Iri) -> bool:
    _require_function(g, f)
    return any(isinstance(v, Literal) and v.lexical in ENTRY_VISIBILITIES for v in g.objects(f, _VISIBILITY))


def _executables(g: Graph, f: Iri) -> list[Iri]:
    """``f`` plus its statements (def/use and calls hang off both)."""
    return [f] + _iris(g.objects(f, _HAS_STATEMENT))


def has_access_check(g: Graph, f: Iri, cfg: PruneConfig = PruneConfig()) -> bool:
    _require_function(g, f)
    for m in _iris(g.objects(f, _APPLIES)):
        if any(cfg.is_guard_modifier(n) for n in _names(g, m)):
            return True
    for node in _executables(g, f):
        for target in _iris(g.objects(node, _READS) | g.objects(node, _INVOKES)):
            if _names(g, target) & cfg.guard_builtin_names:
                return True
    return False


def authority_vars_used(g: Graph, f: Iri, cfg: PruneConfig = PruneConfig()) -> set[Iri]:
    used: set[Iri] = set()
    for node in _executables(g, f):
        for v in _iris(g.objects(node, _READS) | g.objects(node, _WRITES)):
            if _names(g, v) & cfg.authority_var_names:
                used.add(v)
    return used


def relevant_nodes(g: Graph, cfg: PruneConfig = PruneConfig()) -> set[Iri]:
    relevant: set[Iri] = set()
    for f in sorted(g.subjects(RDF_TYPE, _FUNCTION)):
        if is_entry_function(g, f) and has_access_check(g, f, cfg):
            relevant.add(f)
            relevant |= authority_vars_used(g, f, cfg)
    return relevant


def prune_access_control(g: Graph, cfg: PruneConfig = PruneConfig()) -> Graph:
    """Access-control-relevant subgraph of ``g`` (always a subset of ``g``)."""
    relevant = relevant_nodes(g, cfg)
    core: set[Triple] = set()
    schema: set[Triple] = set()
    for t in g.triples:
        if is_schema_triple(t):
            schema.add(t)
        elif t.subject in relevant or t.object in relevant:
            core.add(t)
    neighbours = {t.subject for t in core} | {t.object for t in core if isinstance(t.object, Iri)}
    context: set[Triple] = set()
    for n in neighbours - relevant:
        context.update(g.match(n, _NAME))
        context.update(g.match(n, RDF_TYPE))
    return Graph(core | schema | context, g.namespaces)
