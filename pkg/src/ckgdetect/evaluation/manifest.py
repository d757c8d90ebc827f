"""Labelled dataset manifests."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from ..prompts.cwe import SUPPORTED_CWES, normalize_cwe

SPLITS = ("train", "eval")


class ManifestError(ValueError):
    def __init__(self, message: str, index: Optional[int] = None):
        where = f"entry {index}: " if index is not None else ""
        super().__init__(where + message)
        self.index = index


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    contract_id: str
    labels: frozenset[str]


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]
    split: str = "eval"

    def __len__(self) -> int:
        return len(self.entries)

    def labelled(self, cwe: str) -> list[ManifestEntry]:
        return [e for e in self.entries if cwe in e.labels]


def parse_manifest(data: object, base: Path = Path("."), check_paths: bool = True) -> DatasetManifest:
    if not isinstance(data, dict):
        raise ManifestError("manifest must be a JSON object")
    split = data.get("split", "eval")
    if split not in SPLITS:
        raise ManifestError(f"split must be one of {SPLITS}, got {split!r}")
    raw = data.get("entries")
    if not isinstance(raw, list):
        raise ManifestError("'entries' must be a list")
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    for i, rec in enumerate(raw):
        if not isinstance(rec, dict):
            raise ManifestError("entry must be an object", i)
        path, cid, labels = rec.get("path"), rec.get("contract_id"), rec.get("labels", [])
        if not isinstance(path, str) or not path:
            raise ManifestError("'path' must be a non-empty string", i)
        if not isinstance(cid, str) or not cid:
            raise ManifestError("'contract_id' must be a non-empty string", i)
        if cid in seen:
            raise ManifestError(f"duplicate contract_id {cid!r}", i)
        seen.add(cid)
        if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
            raise ManifestError("'labels' must be a list of strings", i)
        norm = frozenset(normalize_cwe(x) for x in labels)
        bad = sorted(norm - set(SUPPORTED_CWES))
        if bad:
            raise ManifestError(f"unsupported label(s) {', '.join(bad)}", i)
        full = (base / path) if not Path(path).is_absolute() else Path(path)
        if check_paths and not full.is_file():
            raise ManifestError(f"contract file {full} does not exist", i)
        entries.append(ManifestEntry(full, cid, norm))
    return DatasetManifest(tuple(entries), split)


def load_manifest(path: Union[str, Path], check_paths: bool = True) -> DatasetManifest:
    """Entry paths are resolved relative to the manifest's directory."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"invalid JSON: {exc}") from None
    return parse_manifest(data, path.parent, check_paths)
