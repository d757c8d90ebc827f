"""Confusion counts, precision/recall/F1 and timing statistics."""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from typing import Iterable, Optional, Union

from ..pipeline import DetectionReport
from ..prompts.cwe import normalize_cwe


class CweMismatch(ValueError):
    pass


def round1(value: Union[Fraction, float, int]) -> float:
    """Round half up to one decimal, exactly for fractions."""
    if isinstance(value, Fraction):
        d = Decimal(value.numerator) / Decimal(value.denominator)
    else:
        d = Decimal(str(value))
    return float(d.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


@dataclass
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0
    ignored: list[str] = field(default_factory=list)  # unlabelled inconclusive contracts

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn,
            self.ignored + other.ignored,
        )


@dataclass(frozen=True)
class Metrics:
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]
    degenerate: bool

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1, "degenerate": self.degenerate}


def aggregate_metrics(c: ConfusionCounts) -> Metrics:
    """Percentages from exact fractions; a zero denominator yields None and sets ``degenerate``."""
    p = Fraction(c.tp, c.tp + c.fp) if c.tp + c.fp else None
    r = Fraction(c.tp, c.tp + c.fn) if c.tp + c.fn else None
    # F1 = 2PR/(P+R) = 2tp/(2tp+fp+fn); undefined when P + R == 0
    f = Fraction(2 * c.tp, 2 * c.tp + c.fp + c.fn) if (p is not None and r is not None and c.tp) else None
    degenerate = p is None or r is None or f is None
    return Metrics(_pct(p), _pct(r), _pct(f), degenerate)


def _pct(x: Optional[Fraction]) -> Optional[float]:
    return round1(x * 100) if x is not None else None


@dataclass(frozen=True)
class TimingSummary:
    total_seconds: float
    contract_count: int
    adt_seconds: Optional[float]

    @property
    def flagged(self) -> bool:
        return self.adt_seconds is None

    def to_dict(self) -> dict:
        return {"total_seconds": self.total_seconds, "contract_count": self.contract_count, "adt_seconds": self.adt_seconds}


def timing_from_totals(total: Union[float, int], count: int) -> TimingSummary:
    if count < 0:
        raise ValueError("count must be non-negative")
    adt = round1(Fraction(Decimal(str(total))) / count) if count else None
    return TimingSummary(float(total), count, adt)


def timing_summary(reports: Iterable[Union[DetectionReport, float]]) -> TimingSummary:
    totals = [r.timings["total"] if isinstance(r, DetectionReport) else float(r) for r in reports]
    total = sum(Decimal(str(t)) for t in totals)
    return timing_from_totals(float(total), len(totals)) if totals else TimingSummary(0.0, 0, None)


def score_report(report: DetectionReport, labels: Iterable[str], cwe: str) -> ConfusionCounts:
    """Contract-level contribution of one report for the CWE under evaluation."""
    cwe = normalize_cwe(cwe)
    if normalize_cwe(report.cwe) != cwe:
        raise CweMismatch(f"report is for {report.cwe}, evaluation is for {cwe}")
    labelled = cwe in {normalize_cwe(x) for x in labels}
    if report.verdict == "vulnerable":
        return ConfusionCounts(tp=1) if labelled else ConfusionCounts(fp=1)
    if report.verdict == "clean":
        return ConfusionCounts(fn=1) if labelled else ConfusionCounts(tn=1)
    return ConfusionCounts(fn=1) if labelled else ConfusionCounts(ignored=[report.contract_id])
