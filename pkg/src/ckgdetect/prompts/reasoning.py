"""Lenient parsing of round-1 reasoning replies."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from ..graph.ontology import OntologySchema

CONFIDENCE_LEVELS = ("high", "medium", "low")

# canonical section -> accepted heading spellings (lower-case, without numbering)
_HEADINGS = {
    "intent": ("intent", "intent parsing"),
    "slots": ("slots", "slot justification", "slot"),
    "feasibility": ("feasibility", "kg feasibility check", "feasibility check"),
    "plan": ("query plan", "query plan construction", "plan"),
    "draft": ("draft query", "sparql generation", "sparql", "draft"),
    "confidence": ("confidence", "confidence and ambiguity handling"),
    "alternatives": ("alternatives", "ambiguity", "alternative"),
    "format": ("output formatting",),
}
_LOOKUP = {alias: key for key, aliases in _HEADINGS.items() for alias in aliases}
_HEADING = re.compile(
    r"^\s*(?:#{1,6}\s*)?(?:\d+[.)]\s*)?(?:\*\*)?(?P<name>[A-Za-z][A-Za-z ]*?)(?:\*\*)?\s*:(?:\*\*)?\s*(?P<rest>.*)$"
)
_SLOT = re.compile(r"^\s*[-*]?\s*(?P<phrase>.+?)\s*(?:->|=>|→)\s*(?P<field>.+?)\s*$")
_CKG_TERM = re.compile(r"ckg:([A-Za-z_][A-Za-z0-9_]*)")


@dataclass
class ReasoningOutput:
    intent: str = ""
    slots: list[tuple[str, str]] = field(default_factory=list)
    feasibility: str = "absent"
    query_plan: list[str] = field(default_factory=list)
    confidence: str = "low"
    alternatives: list[str] = field(default_factory=list)
    draft_query: str = ""
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "intent": self.intent,
            "slots": [list(s) for s in self.slots],
            "feasibility": self.feasibility,
            "query_plan": list(self.query_plan),
            "confidence": self.confidence,
            "alternatives": list(self.alternatives),
            "flags": list(self.flags),
        }


def _split_sections(text: str) -> dict[str, list[str]]:
    sections: dict[str, list[str]] = {}
    current: Optional[str] = None
    for line in text.splitlines():
        m = _HEADING.match(line)
        if m is not None:
            key = _LOOKUP.get(m.group("name").strip().lower())
            if key is not None:
                current = key
                sections.setdefault(key, [])
                rest = m.group("rest").strip()
                if rest:
                    sections[key].append(rest)
                continue
        if current is not None:
            sections[current].append(line)
    return sections


def _lines(body: list[str]) -> list[str]:
    out = []
    for line in body:
        s = line.strip()
        if not s or s.startswith("```"):
            continue
        out.append(re.sub(r"^(?:[-*]|\d+[.)])\s+", "", s))
    return out


def parse_reasoning(reply: str, schema: Optional[OntologySchema] = None) -> ReasoningOutput:
    """Best-effort extraction; never raises. Missing parts are defaulted and flagged."""
    out = ReasoningOutput()
    sections = _split_sections(reply or "")

    intent = " ".join(_lines(sections.get("intent", [])))
    if intent:
        out.intent = intent
    else:
        out.flags.append("intent absent")

    for line in _lines(sections.get("slots", [])):
        m = _SLOT.match(line)
        if m is not None:
            out.slots.append((m.group("phrase").strip(), m.group("field").strip()))
    if not out.slots:
        out.flags.append("slots absent")

    feas = " ".join(_lines(sections.get("feasibility", [])))
    if feas:
        out.feasibility = feas
    else:
        out.flags.append("feasibility absent")

    out.query_plan = _lines(sections.get("plan", []))
    if not out.query_plan:
        out.flags.append("query plan absent")

    out.draft_query = "\n".join(l for l in sections.get("draft", []) if not l.strip().startswith("```")).strip()

    conf_text = " ".join(_lines(sections.get("confidence", []))).lower()
    level = next((c for c in CONFIDENCE_LEVELS if re.search(rf"\b{c}\b", conf_text)), None)
    if level is None:
        out.flags.append("confidence absent")
    else:
        out.confidence = level

    alts = _lines(sections.get("alternatives", []))
    out.alternatives = [a for a in alts if a.lower().rstrip(".") not in ("none", "n/a", "no")]

    if schema is not None:
        vocab = schema.vocabulary()
        for phrase, target in out.slots:
            for term in _CKG_TERM.findall(target):
                if term not in vocab:
                    out.flags.append(f"slot {phrase!r} maps to undeclared ckg:{term}")
    return out
