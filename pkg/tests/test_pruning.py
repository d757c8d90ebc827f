import random

import pytest
from hypothesis import given, settings, strategies as st

from ckgdetect.graph import RDF_TYPE, Graph, Literal, ckg, instance_triples, member_iri, ontology_schema
from ckgdetect.pruning import (
    NotAFunction, PruneConfig, has_access_check, is_entry_function, prune_access_control, relevant_nodes,
)

from _support import algorithm_core, build_graph, fixture_names, fixture_source, prune_oracle, random_contract


def fixture_graph(name: str) -> Graph:
    return build_graph(fixture_source(name), name)


def _fn(src: str, sig: str, vis: str = "public"):
    g = build_graph(src, "a.sol")
    return g, member_iri("a.sol", "A", sig)


# -- PruneConfig ------------------------------------------------------------------------------


def test_config_defaults():
    cfg = PruneConfig()
    assert cfg.guard_modifier_names == {"onlyOwner", "onlyRole"}
    assert cfg.guard_builtin_names == {"msg.sender", "require", "hasRole"}
    assert cfg.authority_var_names == {"owner", "roles"}


def test_config_rejects_empty_sets():
    with pytest.raises(ValueError):
        PruneConfig(guard_modifier_names=frozenset())


def test_guard_prefix_is_opt_in():
    assert not PruneConfig().is_guard_modifier("onlyAdmin")
    assert PruneConfig(guard_prefixes=frozenset({"only"})).is_guard_modifier("onlyAdmin")


# -- predicates ---------------------------------------------------------------------------------


@pytest.mark.parametrize("vis,expected", [("public", True), ("external", True), ("internal", False), ("private", False)])
def test_is_entry_function(vis, expected):
    g, f = _fn(f"contract A {{ function f() {vis} {{}} }}", "f()")
    assert is_entry_function(g, f) is expected


def test_not_a_function():
    g = fixture_graph("owned_guarded.sol")
    owner = member_iri("owned_guarded.sol", "Owned", "owner")
    with pytest.raises(NotAFunction):
        is_entry_function(g, owner)
    with pytest.raises(NotAFunction):
        has_access_check(g, owner)


def test_access_check_modifier():
    g = fixture_graph("owned_guarded.sol")
    assert has_access_check(g, member_iri("owned_guarded.sol", "Owned", "setOwner(address)"))


def test_access_check_require_sender():
    g, f = _fn("contract A { address owner; function f() public { require(msg.sender == owner); } }", "f()")
    assert has_access_check(g, f)


def test_access_check_neither():
    g, f = _fn("contract A { uint x; function f(uint v) public { x = v; } }", "f(uint256)")
    assert not has_access_check(g, f)


# -- prune examples -------------------------------------------------------------------------------


def test_prune_empty_graph():
    assert len(prune_access_control(Graph())) == 0


def test_prune_internal_only_has_no_instances():
    pruned = prune_access_control(fixture_graph("internal_only.sol"))
    assert len(instance_triples(pruned)) == 0
    _, onto = ontology_schema()
    assert pruned == onto


def test_prune_owned_guarded_fixture():
    g = fixture_graph("owned_guarded.sol")
    pruned = prune_access_control(g)
    f = member_iri("owned_guarded.sol", "Owned", "setOwner(address)")
    m = member_iri("owned_guarded.sol", "Owned", "onlyOwner()")
    owner = member_iri("owned_guarded.sol", "Owned", "owner")
    assert {t for t in g.triples if t.subject == f} <= pruned.triples
    assert (f, ckg("appliesModifier"), m) in pruned.triples
    assert {t for t in g.triples if t.subject == owner} <= pruned.triples


def test_prune_drops_unguarded_pure_function():
    src = fixture_source("owned_guarded.sol").replace(
        "function setOwner", "function double(uint256 v) public pure returns (uint256) { return v * 2; }\n    function setOwner")
    g = build_graph(src, "o.sol")
    helper = member_iri("o.sol", "Owned", "double(uint256)")
    assert any(t.subject == helper for t in g.triples)
    pruned = prune_access_control(g)
    assert not any(helper in (t.subject, t.object) for t in pruned.triples)
    assert member_iri("o.sol", "Owned", "setOwner(address)") in relevant_nodes(g)


def test_prune_matches_oracle_on_fixtures():
    names = fixture_names()
    assert len(names) >= 20
    for name in names:
        src = fixture_source(name)
        assert len(src.splitlines()) <= 60
        g = fixture_graph(name)
        assert len(instance_triples(g)) <= 500, name
        assert prune_access_control(g).triples == prune_oracle(list(g.triples)), name


def test_core_matches_algorithm_edge_set():
    for name in fixture_names():
        g = fixture_graph(name)
        relevant = relevant_nodes(g)
        pruned = prune_access_control(g)
        core = algorithm_core(list(g.triples), relevant)
        assert core <= pruned.triples
        # everything else is ontology or name/type context of a neighbour
        for t in pruned.triples - core:
            assert t.subject.value.startswith("urn:ckg:ontology") or t.predicate in (RDF_TYPE, ckg("nameIs"))


# -- properties ------------------------------------------------------------------------------------

_BIG = PruneConfig(
    guard_modifier_names=frozenset({"onlyOwner", "onlyRole", "onlyAdmin", "whenNotPaused"}),
    guard_builtin_names=frozenset({"msg.sender", "require", "hasRole", "tx.origin", "assert"}),
    authority_var_names=frozenset({"owner", "roles", "admin", "paused", "total"}),
)


def check_prune_properties(g: Graph) -> None:
    pruned = prune_access_control(g)
    assert pruned.triples <= g.triples
    assert prune_access_control(pruned) == pruned
    assert pruned.triples <= prune_access_control(g, _BIG).triples


@settings(max_examples=80, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_prune_properties_generated(seed):
    check_prune_properties(build_graph(random_contract(random.Random(seed))))


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_prune_oracle_generated(seed):
    g = build_graph(random_contract(random.Random(seed)))
    assert prune_access_control(g).triples == prune_oracle(list(g.triples))
    assert prune_access_control(g, _BIG).triples == prune_oracle(list(g.triples), _BIG)


def test_prune_ignores_non_function_literals():
    g = fixture_graph("owned_guarded.sol")
    extra = Graph(g.triples | {(member_iri("owned_guarded.sol", "Owned", "owner"), ckg("nameIs"), Literal.of("roles"))})
    check_prune_properties(extra)
