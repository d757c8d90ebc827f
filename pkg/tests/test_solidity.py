import random

import pytest
from hypothesis import given, settings, strategies as st

from ckgdetect.solidity import (
    LinearizationError, ParseError, UnresolvedBase, build_cfg, linearize_inheritance, lower_to_ir,
    parse_source, to_ssa,
)
from ckgdetect.solidity.ast import VarRef

from _support import check_ssa_invariants, fixture_names, fixture_source, random_body_contract


def test_empty_contract():
    u = parse_source("contract A {}", "a.sol")
    assert [c.name for c in u.contracts] == ["A"]
    assert u.contracts[0].functions == ()


def test_declaration_counts():
    u = parse_source("contract A { uint x; function f() public { x = 1; } }", "a.sol")
    (c,) = u.contracts
    assert len(c.state_vars) == 1
    (f,) = c.functions
    assert f.visibility == "public"
    assert [s.kind for s in f.body] == ["assignment"]


def test_parse_error_position():
    with pytest.raises(ParseError) as info:
        parse_source("contract A { function f( }", "a.sol")
    assert info.value.line == 1
    assert info.value.column == 26


def test_pragmas_recorded():
    u = parse_source("pragma solidity ^0.8.0;\ncontract A {}", "a.sol")
    assert u.pragmas == ("solidity ^0.8.0",)


def test_constructor_and_default_visibility_warning():
    u = parse_source(fixture_source("legacy_default.sol"), "l.sol")
    fns = {f.name or f.kind: f for f in u.contracts[0].functions}
    assert fns["constructor"].is_constructor
    assert fns["setTotal"].visibility == "public"
    assert any("no visibility" in w.message for w in u.warnings)


def test_spans_within_source_and_nested():
    for name in fixture_names():
        src = fixture_source(name)
        u = parse_source(src, name)
        for c in u.contracts:
            assert 0 <= c.span.start <= c.span.end <= len(src)
            for f in list(c.functions) + list(c.modifiers):
                assert c.span.start <= f.span.start <= f.span.end <= c.span.end
                for s in f.body or ():
                    assert f.span.start <= s.span.start <= s.span.end <= f.span.end
            for v in c.state_vars:
                assert c.span.start <= v.span.start <= v.span.end <= c.span.end
                assert v.name in src[v.span.start:v.span.end]


def test_statement_indices_contiguous():
    for name in fixture_names():
        u = parse_source(fixture_source(name), name)
        for c in u.contracts:
            for f in list(c.functions) + list(c.modifiers):
                body = f.body or ()
                assert [s.index for s in body] == list(range(len(body)))


def test_opaque_statement_flagged():
    u = parse_source("contract A { function f() public { assembly { let x := 1 } } }", "a.sol")
    (s,) = u.contracts[0].functions[0].body
    assert s.kind == "other" and s.opaque


def test_placeholder_flag():
    u = parse_source(fixture_source("owned_guarded.sol"), "o.sol")
    m = u.contracts[0].modifiers[0]
    assert [s.placeholder for s in m.body] == [False, True]
    assert m.body[1].kind == "other"


# -- inheritance ----------------------------------------------------------------


def test_linearize_single():
    assert linearize_inheritance(parse_source("contract A {}", "a"))["A"] == ["A"]


def test_linearize_c3():
    u = parse_source("contract A {} contract B is A {} contract C is A, B {}", "a")
    assert linearize_inheritance(u)["C"] == ["C", "B", "A"]


def test_linearize_cycle():
    with pytest.raises(LinearizationError):
        linearize_inheritance(parse_source("contract A is B {} contract B is A {}", "a"))


def test_linearize_unresolved():
    with pytest.raises(UnresolvedBase):
        linearize_inheritance(parse_source("contract A is Missing {}", "a"))


def test_linearize_inconsistent():
    src = "contract X {} contract Y {} contract A is X, Y {} contract B is Y, X {} contract C is A, B {}"
    with pytest.raises(LinearizationError):
        linearize_inheritance(parse_source(src, "a"))


def test_linearize_deterministic():
    u = parse_source(fixture_source("multi_inherit.sol"), "m.sol")
    first = linearize_inheritance(u)
    assert first == linearize_inheritance(u)
    assert first["D"] == ["D", "C", "B", "A"]
    for lin in first.values():
        assert len(lin) == len(set(lin))


# -- CFG ------------------------------------------------------------------------------


def _body(src: str):
    u = parse_source(f"contract A {{ uint x; uint y; function f(bool c) public {{ {src} }} }}", "a")
    return u.contracts[0].functions[0].body


def test_cfg_empty():
    cfg = build_cfg(())
    assert len(cfg.blocks) == 1 and cfg.edges == ()


def test_cfg_straight_line():
    cfg = build_cfg(_body("x = 1; y = 2; x = y;"))
    assert len(cfg.blocks) == 1 and cfg.edges == ()


def test_cfg_if_else_diamond():
    cfg = build_cfg(_body("if (c) { x = 1; } else { x = 2; } y = x;"))
    assert len(cfg.blocks) == 4
    assert len(cfg.edges) == 4
    assert sorted(e.kind for e in cfg.edges) == ["fallthrough", "fallthrough", "false_branch", "true_branch"]


def test_cfg_loop_back_edge():
    cfg = build_cfg(_body("while (c) { x = x + 1; } y = x;"))
    assert any(e.kind == "loop_back" for e in cfg.edges)


def _check_cfg(cfg, n):
    seen = []
    for b in cfg.blocks:
        seen.extend(b.indices)
    assert sorted(seen) == list(range(n))
    ids = {b.id for b in cfg.blocks}
    assert all(e.src in ids and e.dst in ids for e in cfg.edges)
    assert cfg.predecessors(cfg.entry) == [] or all(e.kind == "loop_back" for e in cfg.edges if e.dst == cfg.entry)


def test_cfg_partition_on_fixtures():
    for name in fixture_names():
        ir = lower_to_ir(parse_source(fixture_source(name), name))
        for key, cfg in ir.cfgs.items():
            _check_cfg(cfg, len(ir.callables[key].statements))


# -- SSA ------------------------------------------------------------------------------


def _x(owner: str = "A"):
    return VarRef("x", "state", owner)


def test_ssa_straight_line():
    body = _body("x = 1; x = 2;")
    ir = lower_to_ir(parse_source("contract A { uint x; function f() public { x = 1; x = 2; } }", "a"))
    form = ir.ssa["A.f()"]
    assert form.defs[0][_x()] == 1 and form.defs[1][_x()] == 2
    assert form.all_phis() == []
    assert len(body) == 2


def test_ssa_diamond_single_phi():
    src = "contract A { uint x; function f(bool c) public { if (c) { x = 1; } else { x = 2; } x; } }"
    ir = lower_to_ir(parse_source(src, "a"))
    form = ir.ssa["A.f(bool)"]
    phis = form.all_phis()
    assert len(phis) == 1
    _, phi = phis[0]
    assert phi.var == _x()
    assert sorted(v for _, v in phi.sources) == [1, 2]
    assert phi.target == 3
    assert form.uses[3][_x()] == 3


def test_ssa_diamond_fixture_one_phi():
    ir = lower_to_ir(parse_source(fixture_source("diamond.sol"), "diamond.sol"))
    assert len(ir.ssa["Diamond.pick(bool)"].all_phis()) == 1


def test_ssa_initial_version():
    ir = lower_to_ir(parse_source("contract A { uint x; uint y; function f() public { y = x; } }", "a"))
    assert ir.ssa["A.f()"].uses[0][_x()] == 0


def test_ssa_invariants_on_fixtures():
    for name in fixture_names():
        ir = lower_to_ir(parse_source(fixture_source(name), name))
        for key, form in ir.ssa.items():
            check_ssa_invariants(ir.cfgs[key], ir.callables[key].statements, form)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_ssa_invariants_property(seed):
    ir = lower_to_ir(parse_source(random_body_contract(random.Random(seed)), "b.sol"))
    key = "Body.run(uint256)"
    check_ssa_invariants(ir.cfgs[key], ir.callables[key].statements, ir.ssa[key])
    _check_cfg(ir.cfgs[key], len(ir.callables[key].statements))


def test_to_ssa_matches_lowering():
    ir = lower_to_ir(parse_source(fixture_source("diamond.sol"), "d.sol"))
    key = "Diamond.pick(bool)"
    again = to_ssa(ir.cfgs[key], ir.callables[key].statements)
    assert again == ir.ssa[key]


# -- lowering ---------------------------------------------------------------------------


def test_call_graph_internal_edge():
    src = "contract A { function g() internal {} function f() public { g(); } }"
    ir = lower_to_ir(parse_source(src, "a"))
    assert any(e.caller == "A.f()" and e.callee == "A.g()" and e.kind == "internal" for e in ir.call_graph)


def test_call_graph_modifier_edge():
    ir = lower_to_ir(parse_source(fixture_source("owned_guarded.sol"), "o.sol"))
    assert any(
        e.caller == "Owned.setOwner(address)" and e.callee == "Owned.onlyOwner()" and e.kind == "modifier_application"
        for e in ir.call_graph
    )


def test_interface_has_no_cfgs():
    ir = lower_to_ir(parse_source("interface I { function f() external; }", "i"))
    assert ir.cfgs == {} and ir.call_graph == ()


def test_builtin_reads_recorded():
    ir = lower_to_ir(parse_source(fixture_source("require_sender.sol"), "r.sol"))
    s = ir.callables["Vault.withdraw(uint256)"].statements[0]
    assert any(r.name == "msg.sender" and r.scope == "builtin" for r in s.reads)
    assert any(c.name == "require" and c.kind == "builtin" for c in s.callees)


def test_lower_propagates_linearization_error():
    with pytest.raises(LinearizationError):
        lower_to_ir(parse_source("contract A is B {} contract B is A {}", "a"))
