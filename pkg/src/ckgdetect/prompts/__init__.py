"""Two-round prompt construction and reasoning parsing."""

from .builder import (
    DEFAULT_TOKEN_BUDGET,
    EMPTY_SUMMARY_NOTE,
    INSTRUCTION_HEADINGS,
    SECTION_NAMES,
    TEMPLATE_VERSION,
    PromptRound,
    SummaryTooLarge,
    build_round_one,
    build_round_two,
    estimate_tokens,
    system_prompt,
)
from .cwe import CWE_PATTERNS, SUPPORTED_CWES, CwePattern, UnknownCwe, cwe_pattern, normalize_cwe
from .reasoning import CONFIDENCE_LEVELS, ReasoningOutput, parse_reasoning

__all__ = [
    "CONFIDENCE_LEVELS",
    "CWE_PATTERNS",
    "CwePattern",
    "DEFAULT_TOKEN_BUDGET",
    "EMPTY_SUMMARY_NOTE",
    "INSTRUCTION_HEADINGS",
    "PromptRound",
    "ReasoningOutput",
    "SECTION_NAMES",
    "SUPPORTED_CWES",
    "SummaryTooLarge",
    "TEMPLATE_VERSION",
    "UnknownCwe",
    "build_round_one",
    "build_round_two",
    "cwe_pattern",
    "estimate_tokens",
    "normalize_cwe",
    "parse_reasoning",
    "system_prompt",
]
