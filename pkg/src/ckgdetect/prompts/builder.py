"""Two-round prompt construction from versioned template assets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from string import Template

from ..graph.ontology import OntologySchema
from ..graph.summary import KgSummary
from .cwe import CwePattern

TEMPLATE_VERSION = "ckg-prompts/1.0"
SECTION_NAMES = ("Task", "Input", "Instructions", "Output", "Example")
INSTRUCTION_HEADINGS = (
    "Intent Parsing",
    "Slot Justification",
    "KG Feasibility Check",
    "Query Plan Construction",
    "SPARQL Generation",
    "Confidence and Ambiguity Handling",
    "Output Formatting",
)
DEFAULT_TOKEN_BUDGET = 8000
EMPTY_SUMMARY_NOTE = "(no access-control entry points found; the pruned graph has no instances)"


class SummaryTooLarge(ValueError):
    def __init__(self, tokens: int, budget: int):
        super().__init__(f"round-1 prompt needs about {tokens} tokens, budget is {budget}; prune harder")
        self.tokens = tokens
        self.budget = budget


def estimate_tokens(text: str) -> int:
    """Whitespace tokens scaled by 1.3, rounded up."""
    return math.ceil(len(text.split()) * 1.3)


@dataclass(frozen=True)
class PromptRound:
    round: int
    sections: tuple[tuple[str, str], ...]

    def section(self, name: str) -> str:
        for n, body in self.sections:
            if n == name:
                return body
        raise KeyError(name)

    @property
    def text(self) -> str:
        return "\n\n".join(f"## {name}\n{body}" for name, body in self.sections) + "\n"

    @property
    def token_estimate(self) -> int:
        return estimate_tokens(self.text)


@lru_cache(maxsize=None)
def load_template(name: str) -> tuple[tuple[str, str], ...]:
    raw = resources.files(__package__).joinpath("templates", name).read_text(encoding="utf-8")
    return parse_template(raw)


def parse_template(raw: str) -> tuple[tuple[str, str], ...]:
    sections: list[tuple[str, list[str]]] = []
    for line in raw.splitlines():
        if line.startswith("@@ "):
            sections.append((line[3:].strip(), []))
        elif sections:
            sections[-1][1].append(line)
    out = tuple((name, "\n".join(body).strip("\n")) for name, body in sections)
    if tuple(n for n, _ in out) != SECTION_NAMES:
        raise ValueError(f"template sections must be {SECTION_NAMES}, got {tuple(n for n, _ in out)}")
    return out


def system_prompt() -> str:
    return resources.files(__package__).joinpath("templates", "system.txt").read_text(encoding="utf-8").strip()


def _render(name: str, values: dict[str, str], round_no: int) -> PromptRound:
    sections = tuple((sec, Template(body).substitute(values)) for sec, body in load_template(name))
    for sec, body in sections:
        if not body.strip():
            raise ValueError(f"section {sec} rendered empty")
    return PromptRound(round_no, sections)


def build_round_one(
    pattern: CwePattern,
    schema: OntologySchema,
    summary: KgSummary,
    token_budget: int = DEFAULT_TOKEN_BUDGET,
) -> PromptRound:
    """Round 1 asks for a structured reasoning record, not a query."""
    rendered = summary.render().strip() if not summary.is_empty() else ""
    values = {
        "cwe_id": pattern.id,
        "cwe_title": pattern.title,
        "cwe_pattern": pattern.nl_pattern,
        "target_classes": ", ".join(f"ckg:{c}" for c in pattern.target_classes),
        "schema": schema.render(),
        "summary": rendered or EMPTY_SUMMARY_NOTE,
    }
    prompt = _render("round1.txt", values, 1)
    tokens = prompt.token_estimate
    if tokens > token_budget:
        raise SummaryTooLarge(tokens, token_budget)
    return prompt


def build_round_two(round1_reply: str, pattern: CwePattern, schema: OntologySchema) -> PromptRound:
    """Round 2 embeds the round-1 reply verbatim and asks for one SPARQL block."""
    if not round1_reply.strip():
        raise ValueError("round-1 reply is empty")
    values = {
        "cwe_id": pattern.id,
        "cwe_title": pattern.title,
        "reasoning": round1_reply,
        "schema": schema.render(),
    }
    return _render("round2.txt", values, 2)
