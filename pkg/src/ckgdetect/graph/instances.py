"""Instance layer construction from a lowered :class:`ContractIR`."""

from __future__ import annotations

from typing import Optional, Sequence, Union

from ..solidity.ast import CallTarget, FunctionDecl, ModifierDecl, Param, Statement, VarDecl, VarRef
from ..solidity.cfg import Cfg
from ..solidity.lowering import ContractIR
from .iris import builtin_iri, contract_iri, external_iri, local_iri, member_iri, statement_iri
from .ontology import is_schema_triple, ontology_schema
from .terms import RDF_TYPE, Graph, Iri, Literal, Term, Triple, ckg

_EDGE_PREDICATE = {
    "fallthrough": "hasNext",
    "true_branch": "branchTrue",
    "false_branch": "branchFalse",
    "loop_back": "hasLoopBack",
}


class _Builder:
    def __init__(self, ir: ContractIR):
        self.ir = ir
        self.src = ir.unit.source_id
        self.triples: set[Triple] = set()
        self.types: dict[Iri, str] = {}
        self.contracts = {c.name: c for c in ir.unit.contracts}

    def typed(self, node: Iri, cls: str) -> Iri:
        prev = self.types.get(node)
        if prev is not None and prev != cls:
            raise AssertionError(f"{node} typed both {prev} and {cls}")
        if prev is None:
            self.types[node] = cls
            self.triples.add(Triple(node, RDF_TYPE, ckg(cls)))
        return node

    def rel(self, s: Iri, p: str, o: Iri) -> None:
        self.triples.add(Triple(s, ckg(p), o))

    def attr(self, s: Iri, p: str, value: Union[str, int, bool]) -> None:
        self.triples.add(Triple(s, ckg(p), Literal.of(value)))

    # -- variables and callees -------------------------------------------------

    def var_node(self, ref: VarRef) -> Iri:
        if ref.scope == "state":
            return member_iri(self.src, ref.owner, ref.name)  # declared, typed elsewhere
        if ref.scope == "local":
            contract, sig = ref.owner.split(".", 1)
            return local_iri(member_iri(self.src, contract, sig), ref.name)
        if ref.scope == "builtin":
            node = self.typed(builtin_iri(ref.name), "BuiltinVar")
            self.attr(node, "nameIs", ref.name)
            self.attr(node, "kindIs", "builtin")
            return node
        node = self.typed(external_iri(self.src, "external-var", ref.name), "ExternalVar")
        self.attr(node, "nameIs", ref.name)
        self.attr(node, "kindIs", "external")
        return node

    def callee_node(self, t: CallTarget) -> Iri:
        if t.kind in ("internal", "library") or (t.kind == "external" and t.signature):
            return member_iri(self.src, t.contract, t.signature)
        if t.kind == "builtin":
            node = self.typed(builtin_iri(t.name), "BuiltinFunction")
            self.attr(node, "nameIs", t.name)
            self.attr(node, "kindIs", "builtin")
            return node
        node = self.typed(external_iri(self.src, "external", t.name), "ExternalFunction")
        self.attr(node, "nameIs", t.name)
        self.attr(node, "kindIs", "external" if t.kind == "external" else "unresolved")
        return node

    def modifier_node(self, t: CallTarget) -> Iri:
        if t.kind == "modifier":
            return member_iri(self.src, t.contract, t.signature)
        node = self.typed(external_iri(self.src, "external-modifier", t.name), "Modifier")
        self.attr(node, "nameIs", t.name)
        self.attr(node, "kindIs", "unresolved")
        return node

    # -- declarations ----------------------------------------------------------

    def build(self) -> None:
        lin = self.ir.linearized_bases
        for name in sorted(self.ir.external_contracts):
            node = self.typed(contract_iri(self.src, name), "Contract")
            self.attr(node, "nameIs", name)
            self.attr(node, "kindIs", "external")
        for c in self.ir.unit.contracts:
            ci = self.typed(contract_iri(self.src, c.name), {"interface": "Interface", "library": "Library"}.get(c.kind, "Contract"))
            self.attr(ci, "nameIs", c.name)
            self.attr(ci, "kindIs", c.kind)
            self.attr(ci, "spanIs", str(c.span))
            for base in lin[c.name][1:]:
                self.rel(ci, "inheritsFrom", contract_iri(self.src, base))
            for v in c.state_vars:
                vi = self.typed(member_iri(self.src, c.name, v.name), "StateVar")
                self.rel(ci, "hasStateVar", vi)
                self.attr(vi, "nameIs", v.name)
                self.attr(vi, "typeIs", v.type_name)
                self.attr(vi, "visibilityIs", v.visibility)
                self.attr(vi, "mutabilityIs", v.mutability)
                self.attr(vi, "spanIs", str(v.span))
            for f in c.functions:
                self.callable(c.name, ci, f)
            for m in c.modifiers:
                self.callable(c.name, ci, m)

    def _overridden(self, contract: str, f: FunctionDecl) -> Optional[Iri]:
        if f.kind != "function":
            return None
        for base in self.ir.linearized_bases[contract][1:]:
            decl = self.contracts.get(base)
            if decl is None:
                continue
            for g in decl.functions:
                if g.kind == "function" and g.signature == f.signature:
                    return member_iri(self.src, base, g.signature)
        return None

    def _constructor(self, contract: str) -> Optional[Iri]:
        decl = self.contracts.get(contract)
        if decl is None:
            return None
        for g in decl.functions:
            if g.is_constructor:
                return member_iri(self.src, contract, g.signature)
        return None

    def _local(self, fi: Iri, p: Union[Param, VarDecl], kind: str, index: Optional[int]) -> None:
        name = p.name
        if not name:
            return
        li = self.typed(local_iri(fi, name), "LocalVar")
        self.rel(fi, "hasLocalVar", li)
        self.attr(li, "nameIs", name)
        self.attr(li, "typeIs", p.type_name)
        self.attr(li, "kindIs", kind)
        if index is not None:
            self.attr(li, "indexIs", index)

    def callable(self, contract: str, ci: Iri, decl: Union[FunctionDecl, ModifierDecl]) -> None:
        is_fn = isinstance(decl, FunctionDecl)
        fi = self.typed(member_iri(self.src, contract, decl.signature), "Function" if is_fn else "Modifier")
        self.rel(ci, "hasFunction" if is_fn else "hasModifier", fi)
        self.attr(fi, "nameIs", decl.name or getattr(decl, "kind", ""))
        self.attr(fi, "signatureIs", decl.signature)
        self.attr(fi, "spanIs", str(decl.span))
        for i, p in enumerate(decl.params):
            self._local(fi, p, "parameter", i)
        if is_fn:
            assert isinstance(decl, FunctionDecl)
            self.attr(fi, "kindIs", decl.kind)
            self.attr(fi, "visibilityIs", decl.visibility)
            self.attr(fi, "mutabilityIs", decl.mutability)
            for i, p in enumerate(decl.returns):
                self._local(fi, p, "return", i)
            over = self._overridden(contract, decl)
            if over is not None:
                self.rel(fi, "overrides", over)
            ir = self.ir.callables[f"{contract}.{decl.signature}"]
            for t in ir.modifiers:
                if t.kind == "base_constructor":
                    ctor = self._constructor(t.name)
                    if ctor is not None:
                        self.rel(fi, "invokes", ctor)
                else:
                    self.rel(fi, "appliesModifier", self.modifier_node(t))
        else:
            self.attr(fi, "kindIs", "modifier")
        body = decl.body
        if not body:
            return
        for s in body:
            for d in s.declares:
                self._local(fi, d, "local", None)
        if is_fn:
            self.rel(fi, "entryPointIs", statement_iri(fi, 0))
        self.statements(fi, body)
        self.flow(fi, body, self.ir.cfgs[f"{contract}.{decl.signature}"])

    def statements(self, fi: Iri, body: Sequence[Statement]) -> None:
        for s in body:
            si = self.typed(statement_iri(fi, s.index), "Statement")
            self.rel(fi, "hasStatement", si)
            self.attr(si, "kindIs", s.kind)
            self.attr(si, "indexIs", s.index)
            self.attr(si, "spanIs", str(s.span))
            self.attr(si, "textIs", s.text)
            if s.opaque:
                self.attr(si, "opaqueIs", True)
            if s.placeholder:
                self.attr(si, "placeholderIs", True)
            for r in sorted(s.reads, key=str):
                v = self.var_node(r)
                self.rel(si, "readsVar", v)
                self.rel(fi, "readsVar", v)
            for w in sorted(s.writes, key=str):
                v = self.var_node(w)
                self.rel(si, "writesVar", v)
                self.rel(fi, "writesVar", v)
            for t in s.callees:
                c = self.callee_node(t)
                self.rel(si, "invokes", c)
                self.rel(fi, "invokes", c)

    def flow(self, fi: Iri, body: Sequence[Statement], cfg: Cfg) -> None:
        out: dict[int, list] = {}
        for e in cfg.edges:
            out.setdefault(e.src, []).append(e)

        def first(block: int, kind: str, seen: frozenset[int]) -> list[tuple[int, str]]:
            b = cfg.blocks[block]
            if len(b):
                return [(b.start, kind)]
            if block in seen:
                return []
            found = []
            for e in out.get(block, ()):
                k = "loop_back" if e.kind == "loop_back" and kind == "fallthrough" else kind
                found.extend(first(e.dst, k, seen | {block}))
            return found

        for b in cfg.blocks:
            for i in range(b.start, b.end - 1):
                self.rel(statement_iri(fi, i), "hasNext", statement_iri(fi, i + 1))
            if not len(b):
                continue
            last = statement_iri(fi, b.end - 1)
            for e in out.get(b.id, ()):
                for target, kind in first(e.dst, e.kind, frozenset()):
                    self.rel(last, _EDGE_PREDICATE[kind], statement_iri(fi, target))


def build_instance_graph(ir: ContractIR) -> Graph:
    """Instance triples for every declaration in ``ir``, merged with the ontology."""
    b = _Builder(ir)
    b.build()
    _, onto = ontology_schema()
    return Graph(onto.triples | b.triples)


def instance_triples(g: Graph) -> Graph:
    """The instance layer alone (drops ontology triples)."""
    return g.filter(lambda t: not is_schema_triple(t))


def typed_instances(g: Graph) -> dict[Iri, list[Term]]:
    """Every non-ontology subject mapped to its type assertions."""
    out: dict[Iri, list[Term]] = {}
    for t in g:
        if is_schema_triple(t):
            continue
        out.setdefault(t.subject, [])
        if t.predicate == RDF_TYPE:
            out[t.subject].append(t.object)
    return out
