"""Static single assignment over a function CFG.

Classic dominance-frontier placement followed by a renaming walk over the
dominator tree. Trivial phis (all incoming versions equal) are removed and
versions are renumbered densely afterwards, so a phi only survives at a join
where the incoming versions really differ. Every variable starts with an
implicit version 0 at the entry block (parameters, state, unset locals).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Optional, Sequence

from .ast import Statement
from .cfg import Cfg

DefSite = tuple[str, int]  # ("entry", block) | ("stmt", index) | ("phi", block)


@dataclass(frozen=True)
class PhiNode:
    var: Hashable
    target: int
    sources: tuple[tuple[int, int], ...]  # (predecessor block, version)


@dataclass
class SsaForm:
    versioned_vars: dict[tuple[Hashable, int], DefSite] = field(default_factory=dict)
    phi_nodes: dict[int, list[PhiNode]] = field(default_factory=dict)
    uses: dict[int, dict[Hashable, int]] = field(default_factory=dict)
    defs: dict[int, dict[Hashable, int]] = field(default_factory=dict)

    def all_phis(self) -> list[tuple[int, PhiNode]]:
        return [(b, p) for b in sorted(self.phi_nodes) for p in self.phi_nodes[b]]

    def render(self, var: Hashable, version: int) -> str:
        return f"{var}_{version}"


def _tracked(ref: Hashable) -> bool:
    return getattr(ref, "scope", None) != "builtin"


def dominators(cfg: Cfg) -> dict[int, Optional[int]]:
    """Immediate dominators of reachable blocks (entry maps to None)."""
    reachable = {b.id for b in cfg.blocks if b.reachable}
    succ: dict[int, list[int]] = {b: [] for b in reachable}
    pred: dict[int, list[int]] = {b: [] for b in reachable}
    for e in cfg.edges:
        if e.src in reachable and e.dst in reachable:
            succ[e.src].append(e.dst)
            pred[e.dst].append(e.src)
    order: list[int] = []
    seen: set[int] = set()
    stack = [(cfg.entry, iter(sorted(set(succ[cfg.entry]))))]
    seen.add(cfg.entry)
    while stack:
        node, it = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            stack.pop()
            order.append(node)
        elif nxt not in seen:
            seen.add(nxt)
            stack.append((nxt, iter(sorted(set(succ[nxt])))))
    rpo = list(reversed(order))
    pos = {b: i for i, b in enumerate(rpo)}
    idom: dict[int, Optional[int]] = {cfg.entry: cfg.entry}

    def intersect(a: int, b: int) -> int:
        while a != b:
            while pos[a] > pos[b]:
                a = idom[a]  # type: ignore[assignment]
            while pos[b] > pos[a]:
                b = idom[b]  # type: ignore[assignment]
        return a

    changed = True
    while changed:
        changed = False
        for b in rpo[1:]:
            done = [p for p in pred[b] if p in idom]
            new = done[0]
            for p in done[1:]:
                new = intersect(p, new)
            if idom.get(b) != new:
                idom[b] = new
                changed = True
    result: dict[int, Optional[int]] = dict(idom)
    result[cfg.entry] = None
    return result


def dominance_frontiers(cfg: Cfg, idom: dict[int, Optional[int]]) -> dict[int, set[int]]:
    df: dict[int, set[int]] = {b: set() for b in idom}
    for b in idom:
        preds = {e.src for e in cfg.edges if e.dst == b and e.src in idom}
        if len(preds) < 2:
            continue
        for p in preds:
            runner: Optional[int] = p
            while runner is not None and runner != idom[b]:
                df[runner].add(b)
                runner = idom[runner]
    return df


def to_ssa(cfg: Cfg, statements: Sequence[Statement]) -> SsaForm:
    """Version every variable written or read in ``statements``."""
    idom = dominators(cfg)
    reachable = set(idom)
    df = dominance_frontiers(cfg, idom)
    preds: dict[int, list[int]] = {b: [] for b in reachable}
    succs: dict[int, list[int]] = {b.id: [] for b in cfg.blocks}
    for e in cfg.edges:
        if e.src in reachable and e.dst in reachable and e.src not in preds[e.dst]:
            preds[e.dst].append(e.src)
        if e.dst not in succs[e.src]:
            succs[e.src].append(e.dst)

    variables: set[Hashable] = set()
    defsites: dict[Hashable, set[int]] = {}
    for block in cfg.blocks:
        for i in block.indices:
            s = statements[i]
            for r in s.reads:
                if _tracked(r):
                    variables.add(r)
            for w in s.writes:
                if _tracked(w):
                    variables.add(w)
                    if block.reachable:
                        defsites.setdefault(w, set()).add(block.id)

    # phi placement on the iterated dominance frontier
    phi_vars: dict[int, list[Hashable]] = {b: [] for b in reachable}
    for var in sorted(variables, key=str):
        sites = set(defsites.get(var, ())) | {cfg.entry}
        placed: set[int] = set()
        work = list(sites)
        while work:
            x = work.pop()
            for y in df.get(x, ()):
                if y not in placed:
                    placed.add(y)
                    phi_vars[y].append(var)
                    if y not in sites:
                        sites.add(y)
                        work.append(y)

    counter: dict[Hashable, int] = {}
    stacks: dict[Hashable, list[int]] = {}
    versioned: dict[tuple[Hashable, int], DefSite] = {}
    phi_target: dict[tuple[int, Hashable], int] = {}
    phi_sources: dict[tuple[int, Hashable], dict[int, int]] = {}
    uses: dict[int, dict[Hashable, int]] = {}
    defs: dict[int, dict[Hashable, int]] = {}
    for var in variables:
        versioned[(var, 0)] = ("entry", cfg.entry)

    def top(var: Hashable) -> int:
        st = stacks.get(var)
        return st[-1] if st else 0

    def fresh(var: Hashable) -> int:
        counter[var] = counter.get(var, 0) + 1
        stacks.setdefault(var, []).append(counter[var])
        return counter[var]

    children: dict[int, list[int]] = {b: [] for b in reachable}
    for b, d in idom.items():
        if d is not None:
            children[d].append(b)

    def rename_block(b: int, track_phis: bool) -> list[Hashable]:
        pushed: list[Hashable] = []
        for var in phi_vars.get(b, ()):
            v = fresh(var)
            pushed.append(var)
            phi_target[(b, var)] = v
            versioned[(var, v)] = ("phi", b)
        block = cfg.blocks[b]
        for i in block.indices:
            s = statements[i]
            uses[i] = {r: top(r) for r in s.reads if _tracked(r)}
            d: dict[Hashable, int] = {}
            for w in sorted((w for w in s.writes if _tracked(w)), key=str):
                v = fresh(w)
                pushed.append(w)
                d[w] = v
                versioned[(w, v)] = ("stmt", i)
            defs[i] = d
        if track_phis:
            for sb in succs[b]:
                for var in phi_vars.get(sb, ()):
                    phi_sources.setdefault((sb, var), {})[b] = top(var)
        return pushed

    # iterative dominator-tree walk
    work: list[tuple[int, bool]] = [(cfg.entry, False)]
    pushed_by: dict[int, list[Hashable]] = {}
    while work:
        b, leaving = work.pop()
        if leaving:
            for var in pushed_by.pop(b):
                stacks[var].pop()
            continue
        pushed_by[b] = rename_block(b, True)
        work.append((b, True))
        for c in sorted(children[b], reverse=True):
            work.append((c, False))

    # unreachable code is versioned in isolation so single assignment still holds
    for block in cfg.blocks:
        if block.id in reachable:
            continue
        saved = {k: list(v) for k, v in stacks.items()}
        stacks.clear()
        rename_block(block.id, False)
        stacks.clear()
        stacks.update(saved)

    # drop phis whose incoming versions agree
    replace: dict[tuple[Hashable, int], int] = {}

    def resolve(var: Hashable, v: int) -> int:
        while (var, v) in replace:
            v = replace[(var, v)]
        return v

    live = {k: v for k, v in phi_target.items()}
    changed = True
    while changed:
        changed = False
        for (b, var), target in sorted(live.items(), key=lambda kv: (kv[0][0], str(kv[0][1]))):
            incoming = {resolve(var, v) for v in phi_sources.get((b, var), {}).values()}
            incoming.discard(target)
            if len(incoming) <= 1:
                replace[(var, target)] = incoming.pop() if incoming else 0
                del live[(b, var)]
                del versioned[(var, target)]
                changed = True

    # dense renumbering per variable, preserving order
    renumber: dict[tuple[Hashable, int], int] = {}
    by_var: dict[Hashable, list[int]] = {}
    for (var, v) in versioned:
        by_var.setdefault(var, []).append(v)
    for var, vs in by_var.items():
        for new, old in enumerate(sorted(vs)):
            renumber[(var, old)] = new

    def final(var: Hashable, v: int) -> int:
        return renumber[(var, resolve(var, v))]

    form = SsaForm()
    for (var, v), site in versioned.items():
        form.versioned_vars[(var, renumber[(var, v)])] = site
    for i, m in uses.items():
        form.uses[i] = {var: final(var, v) for var, v in m.items()}
    for i, m in defs.items():
        form.defs[i] = {var: final(var, v) for var, v in m.items()}
    for (b, var), target in sorted(live.items(), key=lambda kv: (kv[0][0], str(kv[0][1]))):
        srcs = phi_sources.get((b, var), {})
        sources = tuple(sorted((p, final(var, srcs.get(p, 0))) for p in preds[b]))
        form.phi_nodes.setdefault(b, []).append(PhiNode(var, final(var, target), sources))
    return form
