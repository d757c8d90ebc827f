"""C3 linearization of contract inheritance.

Solidity lists bases from "most base-like" to "most derived", so the merge
runs over the reversed base list: ``contract C is A, B`` linearizes to
``[C, B, A]`` when ``B is A``.
"""

from __future__ import annotations

from typing import Mapping, Sequence

from .ast import CompilationUnit


class LinearizationError(Exception):
    """No consistent C3 order exists (including inheritance cycles)."""


class UnresolvedBase(LinearizationError):
    def __init__(self, contract: str, base: str):
        super().__init__(f"contract {contract!r} inherits from unknown base {base!r}")
        self.contract = contract
        self.base = base


def _merge(sequences: list[list[str]], owner: str) -> list[str]:
    result: list[str] = []
    seqs = [list(s) for s in sequences if s]
    while seqs:
        for seq in seqs:
            head = seq[0]
            if not any(head in s[1:] for s in seqs):
                break
        else:
            raise LinearizationError(f"no consistent linearization for {owner!r}")
        result.append(head)
        for s in seqs:
            if s[0] == head:
                del s[0]
        seqs = [s for s in seqs if s]
    return result


def c3_linearize(bases: Mapping[str, Sequence[str]]) -> dict[str, list[str]]:
    """Linearize every key of ``bases`` (name -> declared base order)."""
    memo: dict[str, list[str]] = {}
    visiting: set[str] = set()

    def lin(name: str) -> list[str]:
        if name in memo:
            return memo[name]
        if name in visiting:
            raise LinearizationError(f"inheritance cycle through {name!r}")
        visiting.add(name)
        direct = list(reversed(bases[name]))
        order = [name] + _merge([lin(b) for b in direct] + [direct], name)
        visiting.discard(name)
        memo[name] = order
        return order

    return {name: lin(name) for name in bases}


def linearize_inheritance(unit: CompilationUnit, allow_external: bool = False) -> dict[str, list[str]]:
    """Return each contract's C3 order, the contract itself first.

    Unknown base names raise :class:`UnresolvedBase` unless ``allow_external``
    is set, in which case they are treated as base-less external contracts
    and appear in the order like any other base.
    """
    bases: dict[str, tuple[str, ...]] = {c.name: c.bases for c in unit.contracts}
    for c in unit.contracts:
        for b in c.bases:
            if b not in bases:
                if not allow_external:
                    raise UnresolvedBase(c.name, b)
    if allow_external:
        for c in unit.contracts:
            for b in c.bases:
                bases.setdefault(b, ())
    table = c3_linearize(bases)
    return {c.name: table[c.name] for c in unit.contracts}
