"""Deterministic three-dimension query rubric."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional

from ..pipeline import DetectionReport, ExecutionOutcome
from ..prompts.cwe import normalize_cwe
from ..sparql.feasibility import FeasibilityReport
from ..sparql.parser import QuerySyntaxError, UnsupportedFeature, parse_query

FORMAL_PARSE = Fraction(1, 2)
FORMAL_EXECUTE = Fraction(3, 10)
FORMAL_RESULT = Fraction(1, 5)
SEMANTIC_BY_STATUS = {"feasible": Fraction(1), "unknown-term": Fraction(1, 2), "infeasible": Fraction(0)}

# Optional judge: (query text) -> score in [0, 1]; averaged with the rule-based semantic score.
Judge = Callable[[str], float]


@dataclass(frozen=True)
class RubricScore:
    formal_validity: float
    semantic_consistency: float
    detection_accuracy: float
    overall: float
    rationale: str

    def to_dict(self) -> dict:
        return {
            "formal_validity": self.formal_validity,
            "semantic_consistency": self.semantic_consistency,
            "detection_accuracy": self.detection_accuracy,
            "overall": self.overall,
            "rationale": self.rationale,
        }


def _parses(query: Optional[str]) -> bool:
    if not query:
        return False
    try:
        parse_query(query)
    except (QuerySyntaxError, UnsupportedFeature):
        return False
    return True


def _set_f1(found: set, expected: set) -> Fraction:
    if not found and not expected:
        return Fraction(1)
    hit = len(found & expected)
    return Fraction(2 * hit, len(found) + len(expected))


def rubric_score(
    query: Optional[str],
    outcome: ExecutionOutcome,
    feasibility: Optional[FeasibilityReport],
    labels: Iterable[str],
    findings: Iterable[str],
    cwe: str,
    expected_entities: Optional[Iterable[str]] = None,
    judge: Optional[Judge] = None,
) -> RubricScore:
    """Score one generated query.

    ``findings`` are the reported entity IRIs. Detection accuracy is the F1
    agreement of the contract-level verdict with the labels, or of the
    entities with ``expected_entities`` when those are known; it is 0 when
    the query did not execute.
    """
    notes: list[str] = []
    parses = _parses(query)
    formal = Fraction(0)
    if parses:
        formal += FORMAL_PARSE
        if outcome.executed:
            formal += FORMAL_EXECUTE
            if outcome.relevant_rows > 0:
                formal += FORMAL_RESULT
            else:
                notes.append("no result rows bind graph instances")
        else:
            notes.append("query did not execute")
    else:
        notes.append("query missing or unparseable")

    if parses and feasibility is not None:
        semantic = SEMANTIC_BY_STATUS[feasibility.status]
        notes.append(f"feasibility {feasibility.status}")
    else:
        semantic = Fraction(0)
    semantic_f = float(semantic)
    if judge is not None and parses:
        verdict = min(1.0, max(0.0, float(judge(query or ""))))
        semantic_f = (semantic_f + verdict) / 2
        notes.append(f"judge {verdict:.3f}")

    found = set(findings)
    if not outcome.executed:
        accuracy = Fraction(0)
    elif expected_entities is not None:
        accuracy = _set_f1(found, set(expected_entities))
    else:
        cwe = normalize_cwe(cwe)
        predicted = {cwe} if found else set()
        actual = {cwe} & {normalize_cwe(x) for x in labels}
        accuracy = _set_f1(predicted, actual)
    overall = (float(formal) + semantic_f + float(accuracy)) / 3
    return RubricScore(float(formal), semantic_f, float(accuracy), overall, "; ".join(notes))


def score_detection(
    report: DetectionReport,
    labels: Iterable[str],
    expected_entities: Optional[Iterable[str]] = None,
    judge: Optional[Judge] = None,
) -> RubricScore:
    return rubric_score(
        report.query,
        report.execution,
        report.feasibility,
        labels,
        [f.entity.value for f in report.findings],
        report.cwe,
        expected_entities,
        judge,
    )
