"""Deterministic interpreter that runs a program graph on an input.

Execution starts at the entry block of the entry function. At every block
the hook is consulted first, then the crash flag. Calls made by a block run
in declaration order before the block's branch is taken. A branch with
``k > 1`` successors consumes one input byte and follows successor
``byte % k``; once the input is exhausted successor 0 is taken. A block with
no successors returns to the caller, and returning from the entry function
ends the run normally.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

from .icfg import BlockId, ICfg

DEFAULT_STEP_LIMIT = 100_000
DEFAULT_MAX_INPUT = 4096


class Status(enum.Enum):
    OK = "ok"
    CRASH = "crash"
    CUT = "cut"
    TIMEOUT = "timeout"


class Verdict(enum.Enum):
    CONTINUE = 0
    CUT = 1


CONTINUE = Verdict.CONTINUE
CUT = Verdict.CUT

Hook = Callable[[BlockId], Verdict]


@dataclass(frozen=True, eq=True)
class ExecutionResult:
    status: Status
    path: tuple[int, ...] = field(repr=False)
    blocks: tuple[BlockId, ...] = field(repr=False, compare=False)
    consumed: int = 0
    crash_site: Optional[BlockId] = None
    # pending (call-site ordinal, next call index) frames, innermost last; kept for CUT runs
    stack: tuple[tuple[int, int], ...] = ()

    @property
    def trace(self) -> list[BlockId]:
        return [self.blocks[i] for i in self.path]

    @property
    def steps(self) -> int:
        return len(self.path)

    @cached_property
    def edges(self) -> frozenset[tuple[BlockId, BlockId]]:
        t = self.trace
        return frozenset(zip(t, t[1:]))

    @property
    def last_block(self) -> Optional[BlockId]:
        return self.blocks[self.path[-1]] if self.path else None


class Program:
    """A graph lowered to ordinal tables for fast repeated execution."""

    def __init__(self, g: ICfg):
        self.graph = g
        self.blocks = g.blocks
        index = g.block_index
        self.entry = index[g.entry_block]
        self.succ = [tuple(index[s] for s in g.successors[b]) for b in g.blocks]
        # hidden edges are real at runtime
        self.calls = [tuple(index[g.function_entry(e.callee)] for e in g.calls[b])
                      for b in g.blocks]
        self.crash = [b in g.crash_blocks for b in g.blocks]


def execute(g: ICfg | Program, data: bytes = b"", hook: Hook | None = None,
            step_limit: int = DEFAULT_STEP_LIMIT) -> ExecutionResult:
    if step_limit < 1:
        raise ValueError("step_limit must be positive")
    prog = g if isinstance(g, Program) else Program(g)
    blocks, succ, calls, crash = prog.blocks, prog.succ, prog.calls, prog.crash
    n_data = len(data)
    pos = 0
    path: list[int] = []
    stack: list[tuple[int, int]] = []
    cur = prog.entry

    while True:
        if len(path) >= step_limit:
            return ExecutionResult(Status.TIMEOUT, tuple(path), blocks, pos)
        path.append(cur)
        if hook is not None and hook(blocks[cur]) is CUT:
            return ExecutionResult(Status.CUT, tuple(path), blocks, pos, None, tuple(stack))
        if crash[cur]:
            return ExecutionResult(Status.CRASH, tuple(path), blocks, pos, blocks[cur])

        # resolve the next block, unwinding returns as needed
        b, call_idx = cur, 0
        while True:
            cs = calls[b]
            if call_idx < len(cs):
                stack.append((b, call_idx + 1))
                cur = cs[call_idx]
                break
            s = succ[b]
            k = len(s)
            if k == 1:
                cur = s[0]
                break
            if k > 1:
                if pos < n_data:
                    cur = s[data[pos] % k]
                    pos += 1
                else:
                    cur = s[0]
                break
            if not stack:
                return ExecutionResult(Status.OK, tuple(path), blocks, pos)
            b, call_idx = stack.pop()
