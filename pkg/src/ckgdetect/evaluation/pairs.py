"""Preference pairs from two runs of the same prompt."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional, TextIO

from ..pipeline import DetectionReport
from .rubric import RubricScore


@dataclass(frozen=True)
class PairRun:
    query: str
    transcript: dict
    score: RubricScore
    prompt: str

    @classmethod
    def from_report(cls, report: DetectionReport, score: RubricScore) -> "PairRun":
        tr = report.transcript
        prompt = tr.rounds[0].messages[-1].content if tr is not None and tr.rounds else ""
        return cls(report.query or "", tr.to_dict() if tr is not None else {}, score, prompt)


@dataclass(frozen=True)
class PreferencePair:
    prompt: str
    chosen: PairRun
    rejected: PairRun

    def to_record(self) -> dict:
        """DPO-style record: the prompt and the two completions as plain text."""
        return {"prompt": self.prompt, "chosen": self.chosen.query, "rejected": self.rejected.query}

    def to_dict(self) -> dict:
        def side(r: PairRun) -> dict:
            return {"query": r.query, "score": r.score.to_dict(), "transcript": r.transcript}

        return {"prompt": self.prompt, "chosen": side(self.chosen), "rejected": side(self.rejected)}


def make_preference_pair(prompt: str, run_a: PairRun, run_b: PairRun) -> tuple[Optional[PreferencePair], str]:
    """Higher overall score is chosen; an exact tie discards the pair."""
    if run_a.prompt != prompt or run_b.prompt != prompt:
        raise ValueError("both runs must come from the given prompt")
    a, b = run_a.score.overall, run_b.score.overall
    if a == b:
        return None, f"tie at overall score {a:.4f}; pair discarded"
    chosen, rejected = (run_a, run_b) if a > b else (run_b, run_a)
    return PreferencePair(prompt, chosen, rejected), f"chosen {chosen.score.overall:.4f} over {rejected.score.overall:.4f}"


def write_pairs_jsonl(pairs: Iterable[PreferencePair], out: TextIO) -> int:
    n = 0
    for p in pairs:
        out.write(json.dumps(p.to_record(), ensure_ascii=False) + "\n")
        n += 1
    return n
