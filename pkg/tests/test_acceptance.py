"""Acceptance suite: one test per primary criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the summary lines.
"""

import random
import time

from ckgdetect.evaluation import ConfusionCounts, aggregate_metrics, generate_pairs, load_manifest, timing_from_totals
from ckgdetect.graph import Graph, parse_ntriples, serialize_ntriples
from ckgdetect.llm import EndpointConfig
from ckgdetect.pipeline import detect
from ckgdetect.pruning import PruneConfig, prune_access_control
from ckgdetect.solidity import lower_to_ir, parse_source
from ckgdetect.sparql import EvaluationError, execute, parse_query

from _support import (
    OracleError, build_graph, check_schema_conformance, check_ssa_invariants, check_typing_totality, fixture_names,
    fixture_source, prune_oracle, random_body_contract, random_case, random_contract, random_graph,
    seed_pair_corpus, seed_planted, sparql_oracle,
)


def verdict(name: str, ok: bool, detail: str) -> None:
    print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, detail


def test_metric_arithmetic():
    rows = {(276, 223, 180): (55.3, 60.5, 57.8), (314, 197, 134): (61.4, 70.1, 65.5), (348, 128, 105): (73.1, 76.8, 74.9)}
    got, worst = {}, float("inf")
    for _ in range(5):
        t0 = time.perf_counter()
        for counts in rows:
            m = aggregate_metrics(ConfusionCounts(*counts))
            got[counts] = (m.precision, m.recall, m.f1)
        worst = min(worst, (time.perf_counter() - t0) / len(rows))
    ok = got == rows and worst < 1e-3
    verdict("metric arithmetic", ok, f"{got} at {worst * 1e6:.0f} us per row")


def test_timing_arithmetic():
    rows = {(6248, 553): 11.3, (7442, 553): 13.5, (8754, 553): 15.8}
    got = {k: timing_from_totals(*k).adt_seconds for k in rows}
    verdict("timing arithmetic", got == rows, f"ADT {got}")


_BIG = PruneConfig(
    guard_modifier_names=frozenset({"onlyOwner", "onlyRole", "onlyAdmin", "whenNotPaused"}),
    guard_builtin_names=frozenset({"msg.sender", "require", "hasRole", "tx.origin", "assert"}),
    authority_var_names=frozenset({"owner", "roles", "admin", "paused", "total"}),
)


def test_pruning_oracle():
    t0 = time.perf_counter()
    names = fixture_names()
    mismatched = []
    for name in names:
        src = fixture_source(name)
        assert len(src.splitlines()) <= 60
        g = build_graph(src, name)
        if prune_access_control(g).triples != prune_oracle(list(g.triples)):
            mismatched.append(name)
    failures = []
    for seed in range(1000):
        g = build_graph(random_contract(random.Random(seed)))
        p = prune_access_control(g)
        if not p.triples <= g.triples:
            failures.append((seed, "subset"))
        if prune_access_control(p) != p:
            failures.append((seed, "idempotence"))
        if not p.triples <= prune_access_control(g, _BIG).triples:
            failures.append((seed, "monotonicity"))
    elapsed = time.perf_counter() - t0
    ok = len(names) >= 20 and not mismatched and not failures and elapsed < 30
    verdict("pruning oracle", ok,
            f"{len(names)} fixtures, oracle mismatches {mismatched}, 1000 generated graphs, "
            f"property failures {failures[:5]}, {elapsed:.1f}s")


def test_query_engine_oracle():
    t0 = time.perf_counter()
    mismatches, errors = [], 0
    for seed in range(500):
        rng = random.Random(seed)
        triples = random_graph(rng)
        case = random_case(rng)
        assert len(triples) <= 200 and len(case.patterns) <= 4
        expected = sparql_oracle(triples, case)
        try:
            got = [tuple(t.n3() for t in row) for row in execute(parse_query(case.text()), Graph(triples)).tuples()]
        except EvaluationError:
            got = OracleError
        if got is OracleError:
            errors += 1
        if got != expected:
            mismatches.append(seed)
    elapsed = time.perf_counter() - t0
    ok = not mismatches and elapsed < 60
    verdict("query-engine oracle", ok,
            f"500 cases ({errors} filter-error cases), mismatches {mismatches[:5]}, {elapsed:.1f}s")


def test_ssa_properties():
    key = "Body.run(uint256)"
    branching, phis, seed = 0, 0, 0
    while branching < 500:
        ir = lower_to_ir(parse_source(random_body_contract(random.Random(seed)), "b.sol"))
        seed += 1
        cfg = ir.cfgs[key]
        if not any(e.kind in ("true_branch", "false_branch") for e in cfg.edges):
            continue
        check_ssa_invariants(cfg, ir.callables[key].statements, ir.ssa[key])
        branching += 1
        phis += len(ir.ssa[key].all_phis())
    diamond = lower_to_ir(parse_source(fixture_source("diamond.sol"), "diamond.sol"))
    n = len(diamond.ssa["Diamond.pick(bool)"].all_phis())
    verdict("SSA properties", n == 1 and phis > 0,
            f"{branching} branching bodies hold invariants ({phis} phi nodes), diamond phi count {n}")


def test_end_to_end_mock_determinism(tmp_path):
    seed_planted(tmp_path)
    cfg = EndpointConfig(backend="mock", fixture_dir=tmp_path)
    t0 = time.perf_counter()
    out = {}
    for name in ("owned_unguarded.sol", "owned_guarded.sol"):
        runs = [detect(fixture_source(name), "CWE-284", endpoint_cfg=cfg, source_id=name) for _ in range(3)]
        texts = {r.to_json(mask_timings=True) for r in runs}
        out[name] = (runs[0].verdict, len(texts))
    elapsed = time.perf_counter() - t0
    ok = out == {"owned_unguarded.sol": ("vulnerable", 1), "owned_guarded.sol": ("clean", 1)} and elapsed < 5
    verdict("end-to-end mock determinism", ok, f"(verdict, distinct reports) {out}, {elapsed:.2f}s")


def test_graph_round_trip():
    broken = []
    for seed in range(1000):
        rng = random.Random(seed)
        graphs = [build_graph(random_contract(rng)), Graph(random_graph(rng))]
        for g in graphs:
            text = serialize_ntriples(g)
            if parse_ntriples(text) != g or serialize_ntriples(parse_ntriples(text)) != text:
                broken.append(seed)
    invalid = []
    for name in fixture_names():
        g = build_graph(fixture_source(name), name)
        try:
            check_typing_totality(g)
            check_schema_conformance(g)
        except AssertionError:
            invalid.append(name)
    ok = not broken and not invalid
    verdict("graph round-trip", ok,
            f"2000 generated graphs (1000 seeds), round-trip failures {broken[:5]}; "
            f"{len(fixture_names())} fixture KGs, invariant failures {invalid}")


def test_preference_pair_contract(tmp_path):
    manifest, fixtures, injected = seed_pair_corpus(tmp_path, 50, seed=11, bad_sample=1)
    cfg = EndpointConfig(backend="mock", fixture_dir=fixtures)
    gen = generate_pairs(load_manifest(manifest), "CWE-284", cfg)
    ordered = all(p.chosen.score.overall > p.rejected.score.overall for p in gen.pairs)
    chosen_injected = [p for p in gen.pairs if p.chosen.query in injected]
    rejected_injected = sum(1 for p in gen.pairs if p.rejected.query in injected)
    ok = ordered and not chosen_injected and rejected_injected == len(gen.pairs) and len(gen.pairs) > 0
    verdict("preference-pair contract", ok,
            f"50 prompts, {len(gen.pairs)} pairs, strict ordering {ordered}, "
            f"injected runs chosen {len(chosen_injected)} times, rejected {rejected_injected} times")
