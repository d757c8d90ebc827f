import io
import json
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ckgdetect.evaluation import (
    ConfusionCounts, CweMismatch, ManifestError, PairRun, RubricScore, aggregate_metrics, evaluate,
    generate_pairs, load_manifest, make_preference_pair, parse_manifest, rubric_score, score_detection,
    score_report, timing_from_totals, timing_summary, write_pairs_jsonl,
)
from ckgdetect.llm import EndpointConfig
from ckgdetect.pipeline import DetectionReport, ExecutionOutcome, detect
from ckgdetect.sparql import FeasibilityReport

from _support import PLANTED_QUERY, fixture_source, seed_pair_corpus, seed_planted


def naive_metric(num: int, den: int) -> float:
    """Independent percentage: decimal string arithmetic, half-up at one place."""
    q = (Decimal(num) * 100 / Decimal(den)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)
    return float(q)


# -- manifest --------------------------------------------------------------------------------------


def test_empty_manifest(tmp_path):
    p = tmp_path / "m.json"
    p.write_text('{"entries": []}')
    m = load_manifest(p)
    assert len(m) == 0 and m.split == "eval"


def test_manifest_bad_label(tmp_path):
    (tmp_path / "a.sol").write_text("contract A {}")
    with pytest.raises(ManifestError) as info:
        parse_manifest({"entries": [{"path": "a.sol", "contract_id": "a", "labels": ["CWE-999"]}]}, tmp_path)
    assert info.value.index == 0 and "CWE-999" in str(info.value)


def test_manifest_duplicate_id(tmp_path):
    (tmp_path / "a.sol").write_text("contract A {}")
    rec = {"path": "a.sol", "contract_id": "a", "labels": []}
    with pytest.raises(ManifestError) as info:
        parse_manifest({"entries": [rec, rec]}, tmp_path)
    assert info.value.index == 1


def test_manifest_missing_path(tmp_path):
    with pytest.raises(ManifestError):
        parse_manifest({"entries": [{"path": "nope.sol", "contract_id": "a"}]}, tmp_path)
    m = parse_manifest({"entries": [{"path": "nope.sol", "contract_id": "a"}]}, tmp_path, check_paths=False)
    assert m.entries[0].path == tmp_path / "nope.sol"


@pytest.mark.parametrize("data", [[], {"entries": {}}, {"entries": [], "split": "test"}, {"entries": [3]}])
def test_manifest_shape_errors(data):
    with pytest.raises(ManifestError):
        parse_manifest(data, check_paths=False)


def test_manifest_invalid_json(tmp_path):
    p = tmp_path / "m.json"
    p.write_text("{")
    with pytest.raises(ManifestError):
        load_manifest(p)


def test_manifest_labels_normalized(tmp_path):
    (tmp_path / "a.sol").write_text("contract A {}")
    m = parse_manifest({"entries": [{"path": "a.sol", "contract_id": "a", "labels": ["cwe-284", "862"]}]}, tmp_path)
    assert m.entries[0].labels == {"CWE-284", "CWE-862"}


# -- scoring --------------------------------------------------------------------------------------------


def _report(verdict, cwe="CWE-284"):
    return DetectionReport("c", cwe, verdict)


@pytest.mark.parametrize("verdict,labels,expected", [
    ("vulnerable", ["CWE-284"], (1, 0, 0, 0)),
    ("vulnerable", [], (0, 1, 0, 0)),
    ("clean", ["CWE-284"], (0, 0, 1, 0)),
    ("clean", ["CWE-862"], (0, 0, 0, 1)),
    ("inconclusive", ["CWE-284"], (0, 0, 1, 0)),
])
def test_score_report(verdict, labels, expected):
    c = score_report(_report(verdict), labels, "CWE-284")
    assert (c.tp, c.fp, c.fn, c.tn) == expected


def test_score_inconclusive_unlabelled_ignored():
    c = score_report(_report("inconclusive"), [], "CWE-284")
    assert (c.tp, c.fp, c.fn, c.tn) == (0, 0, 0, 0) and c.ignored == ["c"]


def test_score_cwe_mismatch():
    with pytest.raises(CweMismatch):
        score_report(_report("clean", "CWE-862"), [], "CWE-284")


def test_negative_counts_rejected():
    with pytest.raises(ValueError):
        ConfusionCounts(tp=-1)


# -- metrics --------------------------------------------------------------------------------------------

METRIC_ROWS = [((276, 223, 180), (55.3, 60.5, 57.8)), ((314, 197, 134), (61.4, 70.1, 65.5)), ((348, 128, 105), (73.1, 76.8, 74.9))]


@pytest.mark.parametrize("counts,expected", METRIC_ROWS)
def test_metrics_reference_rows(counts, expected):
    m = aggregate_metrics(ConfusionCounts(*counts))
    assert (m.precision, m.recall, m.f1) == expected
    assert not m.degenerate


def test_metrics_degenerate():
    m = aggregate_metrics(ConfusionCounts(0, 0, 0))
    assert m.degenerate and m.precision is None
    m = aggregate_metrics(ConfusionCounts(0, 3, 4))
    assert m.degenerate and (m.precision, m.recall, m.f1) == (0.0, 0.0, None)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2000), st.integers(0, 2000), st.integers(0, 2000))
def test_metrics_match_naive_and_identities(tp, fp, fn):
    m = aggregate_metrics(ConfusionCounts(tp, fp, fn))
    if tp + fp:
        assert m.precision == naive_metric(tp, tp + fp)
    if tp + fn:
        assert m.recall == naive_metric(tp, tp + fn)
    if tp:
        assert m.f1 == naive_metric(2 * tp, 2 * tp + fp + fn)
        assert 0 <= m.f1 <= 100
        # F1 never exceeds the larger of P and R (exact comparison before rounding)
        assert Fraction(2 * tp, 2 * tp + fp + fn) <= max(Fraction(tp, tp + fp), Fraction(tp, tp + fn))
        if fp == fn:
            assert m.precision == m.recall == m.f1


TIMING_ROWS = [((6248, 553), 11.3), ((7442, 553), 13.5), ((8754, 553), 15.8)]


@pytest.mark.parametrize("totals,adt", TIMING_ROWS)
def test_timing_reference_rows(totals, adt):
    t = timing_from_totals(*totals)
    assert t.adt_seconds == adt and t.total_seconds == totals[0] and t.contract_count == 553


def test_timing_empty_flagged():
    t = timing_summary([])
    assert t.flagged and t.adt_seconds is None
    assert timing_from_totals(5, 0).flagged


def test_timing_from_reports():
    reports = []
    for total in (1.0, 2.0, 3.05):
        r = _report("clean")
        r.timings["total"] = total
        reports.append(r)
    t = timing_summary(reports)
    assert t.total_seconds == pytest.approx(6.05) and t.adt_seconds == 2.0


# -- rubric --------------------------------------------------------------------------------------------

FEASIBLE = FeasibilityReport("feasible")


def test_rubric_unparseable_formal_zero():
    s = rubric_score("SELECT ?f WHERE {", ExecutionOutcome(extracted=True), None, ["CWE-284"], [], "CWE-284")
    assert s.formal_validity == 0 and s.semantic_consistency == 0 and s.detection_accuracy == 0


def test_rubric_executes_empty_result():
    s = rubric_score(PLANTED_QUERY, ExecutionOutcome(True, True, True, 0, 0), FEASIBLE, [], [], "CWE-284")
    assert s.formal_validity == pytest.approx(0.8)
    assert s.detection_accuracy == 1.0  # clean and unlabelled


def test_rubric_perfect_detection_on_fixture(tmp_path):
    seed_planted(tmp_path)
    cfg = EndpointConfig(backend="mock", fixture_dir=tmp_path)
    report = detect(fixture_source("owned_unguarded.sol"), "CWE-284", endpoint_cfg=cfg, source_id="owned_unguarded.sol")
    s = score_detection(report, ["CWE-284"])
    assert s.detection_accuracy == 1.0
    assert s.formal_validity == 1.0 and s.semantic_consistency == 1.0 and s.overall == 1.0
    expected = [f.entity.value for f in report.findings]
    assert score_detection(report, ["CWE-284"], expected_entities=expected).detection_accuracy == 1.0
    assert score_detection(report, [], expected_entities=[]).detection_accuracy == 0.0


def test_rubric_semantic_by_feasibility():
    out = ExecutionOutcome(True, True, True, 1, 1)
    for status, want in (("feasible", 1.0), ("unknown-term", 0.5), ("infeasible", 0.0)):
        s = rubric_score(PLANTED_QUERY, out, FeasibilityReport(status), [], ["x"], "CWE-284")
        assert s.semantic_consistency == want


def test_rubric_judge_averaged():
    out = ExecutionOutcome(True, True, True, 1, 1)
    s = rubric_score(PLANTED_QUERY, out, FEASIBLE, [], [], "CWE-284", judge=lambda q: 0.0)
    assert s.semantic_consistency == 0.5
    s = rubric_score(PLANTED_QUERY, out, FEASIBLE, [], [], "CWE-284", judge=lambda q: 7.0)
    assert s.semantic_consistency == 1.0


_OUTCOMES = st.builds(
    lambda e, x, r: ExecutionOutcome(True, True, e, r if e else 0, min(x, r) if e else 0),
    st.booleans(), st.integers(0, 3), st.integers(0, 3),
)


@settings(max_examples=200, deadline=None)
@given(_OUTCOMES, st.sampled_from(["feasible", "unknown-term", "infeasible"]), st.booleans(), st.booleans())
def test_rubric_bounds_and_monotonicity(outcome, status, labelled, found):
    labels = ["CWE-284"] if labelled else []
    findings = ["urn:ckg:a.sol:A/f()"] if found else []
    s = rubric_score(PLANTED_QUERY, outcome, FeasibilityReport(status), labels, findings, "CWE-284")
    for v in (s.formal_validity, s.semantic_consistency, s.detection_accuracy, s.overall):
        assert 0.0 <= v <= 1.0
    assert s.overall == pytest.approx((s.formal_validity + s.semantic_consistency + s.detection_accuracy) / 3)
    # a parse failure never raises formal validity
    broken = rubric_score(PLANTED_QUERY[:-1], outcome, FeasibilityReport(status), labels, findings, "CWE-284")
    assert broken.formal_validity <= s.formal_validity
    # matching the labels exactly never scores below a mismatch
    right = rubric_score(PLANTED_QUERY, outcome, FeasibilityReport(status), labels, ["x"] if labelled else [], "CWE-284")
    assert right.detection_accuracy >= s.detection_accuracy


# -- preference pairs -----------------------------------------------------------------------------------


def _run(score, prompt="P", query="q"):
    return PairRun(query, {}, RubricScore(score, score, score, score, ""), prompt)


def test_pair_higher_score_chosen():
    pair, note = make_preference_pair("P", _run(0.4, query="low"), _run(0.9, query="high"))
    assert pair.chosen.query == "high" and pair.rejected.query == "low"
    assert "chosen" in note


def test_pair_tie_discarded():
    pair, note = make_preference_pair("P", _run(0.6), _run(0.6))
    assert pair is None and "tie" in note


def test_pair_prompt_mismatch():
    with pytest.raises(ValueError):
        make_preference_pair("P", _run(0.1), _run(0.2, prompt="Q"))


def test_pairs_jsonl_record():
    pair, _ = make_preference_pair("P", _run(0.9, query="good"), _run(0.4, query="bad"))
    buf = io.StringIO()
    assert write_pairs_jsonl([pair, pair], buf) == 2
    lines = buf.getvalue().splitlines()
    assert len(lines) == 2
    rec = json.loads(lines[0])
    assert list(rec) == ["prompt", "chosen", "rejected"]
    assert rec == {"prompt": "P", "chosen": "good", "rejected": "bad"}
    assert set(pair.to_dict()["chosen"]) == {"query", "score", "transcript"}


def test_generate_pairs_with_injected_failures(tmp_path):
    manifest, fixtures, injected = seed_pair_corpus(tmp_path, 12, seed=3)
    cfg = EndpointConfig(backend="mock", fixture_dir=fixtures)
    gen = generate_pairs(load_manifest(manifest), "CWE-284", cfg)
    assert len(gen.pairs) == 12
    for p in gen.pairs:
        assert p.chosen.score.overall > p.rejected.score.overall
        assert p.rejected.query in injected
        assert p.chosen.query not in injected
        assert p.chosen.prompt == p.rejected.prompt == p.prompt


# -- batch evaluation ------------------------------------------------------------------------------------


def test_evaluate_counts_conservation(tmp_path):
    manifest, fixtures, _ = seed_pair_corpus(tmp_path, 10, seed=5)
    cfg = EndpointConfig(backend="mock", fixture_dir=fixtures)
    m = load_manifest(manifest)
    result = evaluate(m, "CWE-284", cfg, workers=3)
    labelled = len(m.labelled("CWE-284"))
    assert result.counts.tp + result.counts.fn == labelled
    assert len(result.reports) == 10
    # contract i is unguarded for even i; detection is exact, so errors only come from labels
    for entry, report in zip(m.entries, result.reports):
        assert report.contract_id == entry.contract_id
        assert report.verdict == ("vulnerable" if int(entry.contract_id[1:4]) % 2 == 0 else "clean")
    assert result.timing.contract_count == 10
    text = result.render()
    assert "Precision" in text and "ADT(s)" in text


def test_evaluate_parallel_equals_sequential(tmp_path):
    manifest, fixtures, _ = seed_pair_corpus(tmp_path, 8, seed=9)
    cfg = EndpointConfig(backend="mock", fixture_dir=fixtures)
    m = load_manifest(manifest)
    a = evaluate(m, "CWE-284", cfg, workers=1)
    b = evaluate(m, "CWE-284", cfg, workers=4)
    assert (a.counts.tp, a.counts.fp, a.counts.fn, a.counts.tn) == (b.counts.tp, b.counts.fp, b.counts.fn, b.counts.tn)
    assert [r.to_json(mask_timings=True) for r in a.reports] == [r.to_json(mask_timings=True) for r in b.reports]
