"""Control-flow graphs over flattened statement lists."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

from .ast import Statement

EDGE_KINDS = ("fallthrough", "true_branch", "false_branch", "loop_back")


@dataclass(frozen=True)
class BasicBlock:
    id: int
    start: int
    end: int  # exclusive
    reachable: bool = True

    @property
    def indices(self) -> range:
        return range(self.start, self.end)

    def __len__(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    kind: str


@dataclass(frozen=True)
class Cfg:
    blocks: tuple[BasicBlock, ...]
    edges: tuple[Edge, ...]
    entry: int
    exits: frozenset[int]

    def successors(self, block: int) -> list[int]:
        return [e.dst for e in self.edges if e.src == block]

    def predecessors(self, block: int) -> list[int]:
        return [e.src for e in self.edges if e.dst == block]

    def out_edges(self, block: int) -> list[Edge]:
        return [e for e in self.edges if e.src == block]

    def block_of(self, index: int) -> BasicBlock:
        for b in self.blocks:
            if b.start <= index < b.end:
                return b
        raise IndexError(index)


class _Loop:
    __slots__ = ("continue_target", "continue_kind", "breaks", "continues")

    def __init__(self, continue_target: Optional[int], continue_kind: str):
        self.continue_target = continue_target  # None: resolved after the body
        self.continue_kind = continue_kind
        self.breaks: list[int] = []
        self.continues: list[int] = []


class _Builder:
    def __init__(self, body: Sequence[Statement]):
        self.body = body
        self.ranges: list[list[int]] = []
        self.edges: list[Edge] = []
        self.exits: set[int] = set()
        self.loops: list[_Loop] = []
        self.do_starts: dict[int, list[int]] = {}
        for s in body:
            if s.kind == "loop" and s.loop == "do" and s.body_range and s.body_range[0] < s.index:
                self.do_starts.setdefault(s.body_range[0], []).append(s.index)

    def new_block(self, start: int) -> int:
        self.ranges.append([start, start])
        return len(self.ranges) - 1

    def edge(self, src: int, dst: int, kind: str) -> None:
        self.edges.append(Edge(src, dst, kind))

    def add(self, block: int, index: int) -> None:
        rng = self.ranges[block]
        assert rng[1] == index, "blocks must stay contiguous"
        rng[1] = index + 1

    def process(self, start: int, end: int, cur: Optional[int]) -> Optional[int]:
        i = start
        while i < end:
            s = self.body[i]
            if cur is None:
                cur = self.new_block(i)
            do_conds = [c for c in self.do_starts.get(i, ()) if c < end]
            if do_conds:
                c = max(do_conds)
                cur = self._do_loop(i, c, cur)
                i = c + 1
                continue
            if s.kind == "if":
                self.add(cur, i)
                cur, i = self._if(s, cur)
                continue
            if s.kind == "loop" and s.loop in ("while", "for"):
                cur, i = self._loop(s, cur)
                continue
            if s.kind == "loop" and s.loop == "do":
                # empty-bodied do/while: the condition block loops onto itself
                cond = self.new_block(i)
                self.add(cond, i)
                self.edge(cur, cond, "fallthrough")
                self.edge(cond, cond, "loop_back")
                cur = self.new_block(i + 1)
                self.edge(cond, cur, "false_branch")
                i += 1
                continue
            self.add(cur, i)
            if "break" in s.flags and self.loops:
                self.loops[-1].breaks.append(cur)
                cur = None
            elif "continue" in s.flags and self.loops:
                loop = self.loops[-1]
                if loop.continue_target is not None:
                    self.edge(cur, loop.continue_target, loop.continue_kind)
                else:
                    loop.continues.append(cur)
                cur = None
            elif "terminator" in s.flags:
                self.exits.add(cur)
                cur = None
            i += 1
        return cur

    def _if(self, s: Statement, cond: int) -> tuple[int, int]:
        assert s.then_range is not None
        t0, t1 = s.then_range
        then_b = self.new_block(t0)
        self.edge(cond, then_b, "true_branch")
        then_end = self.process(t0, t1, then_b)
        after = t1
        else_end: Optional[int] = None
        if s.else_range is not None:
            e0, e1 = s.else_range
            else_b = self.new_block(e0)
            self.edge(cond, else_b, "false_branch")
            else_end = self.process(e0, e1, else_b)
            after = e1
        join = self.new_block(after)
        if then_end is not None:
            self.edge(then_end, join, "fallthrough")
        if s.else_range is None:
            self.edge(cond, join, "false_branch")
        elif else_end is not None:
            self.edge(else_end, join, "fallthrough")
        return join, after

    def _loop(self, s: Statement, cur: int) -> tuple[int, int]:
        assert s.body_range is not None
        b0, b1 = s.body_range
        head = self.new_block(s.index)
        self.add(head, s.index)
        self.edge(cur, head, "fallthrough")
        body_b = self.new_block(b0)
        self.edge(head, body_b, "true_branch")
        has_post = "has_post" in s.flags
        loop = _Loop(None if has_post else head, "loop_back")
        self.loops.append(loop)
        body_end = self.process(b0, b1, body_b)
        self.loops.pop()
        after = b1
        if has_post:
            post = self.new_block(b1)
            self.add(post, b1)
            if body_end is not None:
                self.edge(body_end, post, "fallthrough")
            for src in loop.continues:
                self.edge(src, post, "fallthrough")
            self.edge(post, head, "loop_back")
            after = b1 + 1
        elif body_end is not None:
            self.edge(body_end, head, "loop_back")
        exit_b = self.new_block(after)
        self.edge(head, exit_b, "false_branch")
        for src in loop.breaks:
            self.edge(src, exit_b, "fallthrough")
        return exit_b, after

    def _do_loop(self, b0: int, c: int, cur: int) -> int:
        body_b = self.new_block(b0)
        self.edge(cur, body_b, "fallthrough")
        loop = _Loop(None, "fallthrough")
        self.loops.append(loop)
        body_end = self.process(b0, c, body_b)
        self.loops.pop()
        cond = self.new_block(c)
        self.add(cond, c)
        if body_end is not None:
            self.edge(body_end, cond, "fallthrough")
        for src in loop.continues:
            self.edge(src, cond, "fallthrough")
        self.edge(cond, body_b, "loop_back")
        exit_b = self.new_block(c + 1)
        self.edge(cond, exit_b, "false_branch")
        for src in loop.breaks:
            self.edge(src, exit_b, "fallthrough")
        return exit_b


def build_cfg(body: Sequence[Statement]) -> Cfg:
    """Partition ``body`` into basic blocks and connect them.

    Branch statements close their block; loop back-edges carry the
    ``loop_back`` kind. An empty body yields a single empty entry block.
    """
    b = _Builder(body)
    entry = b.new_block(0)
    last = b.process(0, len(body), entry)
    if last is not None:
        b.exits.add(last)

    succ: dict[int, list[int]] = {}
    for e in b.edges:
        succ.setdefault(e.src, []).append(e.dst)
    seen = {entry}
    queue = deque([entry])
    while queue:
        n = queue.popleft()
        for m in succ.get(n, ()):
            if m not in seen:
                seen.add(m)
                queue.append(m)
    blocks = tuple(
        BasicBlock(i, r[0], r[1], i in seen) for i, r in enumerate(b.ranges)
    )
    return Cfg(blocks=blocks, edges=tuple(b.edges), entry=entry, exits=frozenset(b.exits))
