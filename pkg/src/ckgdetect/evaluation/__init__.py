"""Dataset manifests, metrics, rubric scoring and preference pairs."""

from .manifest import DatasetManifest, ManifestEntry, ManifestError, load_manifest, parse_manifest
from .metrics import (
    ConfusionCounts, CweMismatch, Metrics, TimingSummary, aggregate_metrics, round1,
    score_report, timing_from_totals, timing_summary,
)
from .pairs import PairRun, PreferencePair, make_preference_pair, write_pairs_jsonl
from .rubric import RubricScore, rubric_score, score_detection
from .runner import EvalResult, PairGeneration, evaluate, generate_pairs

__all__ = [
    "ConfusionCounts", "CweMismatch", "DatasetManifest", "EvalResult", "ManifestEntry",
    "ManifestError", "Metrics", "PairGeneration", "PairRun", "PreferencePair", "RubricScore",
    "TimingSummary", "aggregate_metrics", "evaluate", "generate_pairs", "load_manifest",
    "make_preference_pair", "parse_manifest", "round1", "rubric_score", "score_detection",
    "score_report", "timing_from_totals", "timing_summary", "write_pairs_jsonl",
]
