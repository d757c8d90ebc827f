"""Built-in access-control weakness patterns.

Titles follow the public CWE catalog; the descriptions are short,
Solidity-oriented restatements written for this package.
"""

from __future__ import annotations

import re
from dataclasses import dataclass


class UnknownCwe(KeyError):
    def __init__(self, cwe_id: str):
        super().__init__(cwe_id)
        self.cwe_id = cwe_id

    def __str__(self) -> str:
        return f"unsupported CWE {self.cwe_id!r}; choose one of {', '.join(SUPPORTED_CWES)}"


@dataclass(frozen=True)
class CwePattern:
    id: str
    title: str
    nl_pattern: str
    target_classes: tuple[str, ...]


_PATTERNS = (
    CwePattern(
        "CWE-284",
        "Improper Access Control",
        "A contract lets callers reach privileged behaviour without restricting who the caller is. "
        "Typical shape: a public or external function changes ownership, roles, balances or other "
        "critical state and neither applies a guard modifier nor checks msg.sender itself.",
        ("Function", "Modifier", "StateVar", "Statement"),
    ),
    CwePattern(
        "CWE-285",
        "Improper Authorization",
        "A function does try to authorize its caller, but the check is wrong or incomplete for the "
        "action it protects: it compares msg.sender against the wrong variable, tests only part of "
        "the required condition, or is applied to some state-changing paths and not others.",
        ("Function", "Modifier", "Statement", "StateVar"),
    ),
    CwePattern(
        "CWE-863",
        "Incorrect Authorization",
        "An authorization check exists and runs, yet it reaches the wrong decision, for example by "
        "trusting tx.origin instead of msg.sender, by inverting a comparison, or by accepting any "
        "address that holds some unrelated role.",
        ("Function", "Statement", "BuiltinVar", "Modifier"),
    ),
    CwePattern(
        "CWE-862",
        "Missing Authorization",
        "A function that performs a sensitive operation, such as writing the owner, minting, "
        "withdrawing funds or self-destructing, performs no authorization check at all: there is no "
        "guard modifier and no require on the caller before the state change.",
        ("Function", "StateVar", "Modifier", "Statement"),
    ),
    CwePattern(
        "CWE-269",
        "Improper Privilege Management",
        "Privileges are granted, transferred or revoked carelessly. Role or owner variables can be "
        "reassigned by callers who should not control them, or a privileged account can hand "
        "itself extra rights without any restriction.",
        ("Function", "StateVar", "Modifier"),
    ),
    CwePattern(
        "CWE-276",
        "Incorrect Default Permissions",
        "Functions or state are more widely accessible by default than intended, such as a helper "
        "left public because no visibility was written down, or an initializer that anyone can "
        "call after deployment.",
        ("Function", "StateVar"),
    ),
    CwePattern(
        "CWE-732",
        "Incorrect Permission Assignment for Critical Resource",
        "A critical resource, such as the owner address, an admin or role mapping, or the contract "
        "balance, can be modified through an entry point whose permissions are broader than the "
        "resource requires.",
        ("StateVar", "Function", "Modifier"),
    ),
)

CWE_PATTERNS: dict[str, CwePattern] = {p.id: p for p in _PATTERNS}
SUPPORTED_CWES: tuple[str, ...] = tuple(CWE_PATTERNS)


def normalize_cwe(cwe_id: str) -> str:
    text = str(cwe_id).strip().upper()
    if re.fullmatch(r"[0-9]+", text):
        text = "CWE-" + text
    return text


def cwe_pattern(cwe_id: str) -> CwePattern:
    key = normalize_cwe(cwe_id)
    if key not in CWE_PATTERNS:
        raise UnknownCwe(str(cwe_id))
    return CWE_PATTERNS[key]
