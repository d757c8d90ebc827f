"""Batch evaluation and preference-pair generation over a manifest."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import reduce
from typing import Optional

from ..llm import PAIR_TEMPERATURE, EndpointConfig, LlmGateway
from ..pipeline import DetectionReport, detect_file
from ..prompts.cwe import normalize_cwe
from ..pruning import PruneConfig
from .manifest import DatasetManifest, ManifestEntry
from .metrics import ConfusionCounts, Metrics, TimingSummary, aggregate_metrics, score_report, timing_summary
from .pairs import PairRun, PreferencePair, make_preference_pair
from .rubric import score_detection


@dataclass
class EvalResult:
    cwe: str
    counts: ConfusionCounts
    metrics: Metrics
    timing: TimingSummary
    reports: list[DetectionReport]

    def render(self) -> str:
        m, t, c = self.metrics, self.timing, self.counts

        def fmt(x: Optional[float]) -> str:
            return "n/a" if x is None else f"{x:.1f}"

        adt = "n/a" if t.adt_seconds is None else f"{t.adt_seconds:.1f}"
        lines = [
            f"CWE        {self.cwe}",
            f"TP/FP/FN   {c.tp}/{c.fp}/{c.fn}  (TN {c.tn}, ignored {len(c.ignored)})",
            f"Precision  {fmt(m.precision)}",
            f"Recall     {fmt(m.recall)}",
            f"F1         {fmt(m.f1)}" + ("  [degenerate]" if m.degenerate else ""),
            f"Time(s)    {t.total_seconds:.1f}",
            f"ADT(s)     {adt}  over {t.contract_count} contract(s)",
        ]
        return "\n".join(lines) + "\n"


def _run(entries: list[ManifestEntry], fn, workers: int) -> list:
    if workers <= 1:
        return [fn(e) for e in entries]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, entries))


def evaluate(
    manifest: DatasetManifest,
    cwe: str,
    endpoint_cfg: EndpointConfig,
    prune_cfg: PruneConfig = PruneConfig(),
    workers: int = 1,
) -> EvalResult:
    """Detect every contract (optionally in parallel), then reduce into counts sequentially."""
    cwe = normalize_cwe(cwe)
    with LlmGateway(endpoint_cfg) as gw:
        reports = _run(
            list(manifest.entries),
            lambda e: detect_file(e.path, cwe, endpoint_cfg, prune_cfg, contract_id=e.contract_id, gateway=gw),
            workers,
        )
    counts = reduce(
        lambda acc, pair: acc + score_report(pair[0], pair[1].labels, cwe),
        zip(reports, manifest.entries),
        ConfusionCounts(),
    )
    return EvalResult(cwe, counts, aggregate_metrics(counts), timing_summary(reports), reports)


@dataclass
class PairGeneration:
    pairs: list[PreferencePair] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)


def generate_pairs(
    manifest: DatasetManifest,
    cwe: str,
    endpoint_cfg: EndpointConfig,
    prune_cfg: PruneConfig = PruneConfig(),
) -> PairGeneration:
    """Run each prompt twice (samples 0 and 1) at sampling temperature and keep scored pairs."""
    cwe = normalize_cwe(cwe)
    cfg = replace(endpoint_cfg, temperature=PAIR_TEMPERATURE) if endpoint_cfg.temperature == 0 else endpoint_cfg
    out = PairGeneration()
    with LlmGateway(cfg) as gw:
        for e in manifest.entries:
            runs = []
            for sample in (0, 1):
                rep = detect_file(e.path, cwe, cfg, prune_cfg, contract_id=e.contract_id, gateway=gw, sample=sample)
                runs.append(PairRun.from_report(rep, score_detection(rep, e.labels)))
            if not runs[0].prompt or runs[0].prompt != runs[1].prompt:
                out.diagnostics.append(f"{e.contract_id}: no common prompt; skipped")
                continue
            pair, note = make_preference_pair(runs[0].prompt, runs[0], runs[1])
            out.diagnostics.append(f"{e.contract_id}: {note}")
            if pair is not None:
                out.pairs.append(pair)
    return out
