"""Interprocedural control-flow graphs.

A graph file is line oriented; ``#`` starts a comment::

    function main entry 0
    block main:0
    block main:1 crash
    edge main:0 -> main:1
    call main:0 -> helper hidden
    target main:1

The first declared function is the program entry. Hidden call edges are
executed by the VM but invisible to the static analysis.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, NamedTuple


class GraphError(ValueError):
    """Base class for graph parse and validation failures."""


class GraphSyntaxError(GraphError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class DanglingReferenceError(GraphError):
    pass


class DuplicateDefinitionError(GraphError):
    pass


class BlockId(NamedTuple):
    function: str
    index: int

    def __str__(self) -> str:
        return f"{self.function}:{self.index}"

    @classmethod
    def parse(cls, text: str) -> "BlockId":
        name, sep, idx = text.rpartition(":")
        if not sep or not _NAME_RE.fullmatch(name) or not idx.isdigit():
            raise ValueError(f"malformed block id {text!r}")
        return cls(name, int(idx))


class CallEdge(NamedTuple):
    site: BlockId
    callee: str
    hidden: bool = False


_NAME_RE = re.compile(r"[^\s:#]+")


@dataclass(frozen=True)
class ICfg:
    """Immutable program graph.

    ``functions`` maps function name to its entry block index, in declaration
    order. ``blocks`` and both edge tuples also keep declaration order, which
    fixes successor order for branch decisions.
    """

    functions: dict[str, int]
    blocks: tuple[BlockId, ...]
    intra_edges: tuple[tuple[BlockId, BlockId], ...]
    call_edges: tuple[CallEdge, ...]
    targets: tuple[BlockId, ...]
    crash_blocks: frozenset[BlockId] = field(default_factory=frozenset)

    def __post_init__(self):
        _validate(self)

    @property
    def entry_function(self) -> str:
        return next(iter(self.functions))

    @property
    def entry_block(self) -> BlockId:
        name = self.entry_function
        return BlockId(name, self.functions[name])

    @property
    def last_target(self) -> BlockId:
        return self.targets[-1]

    def function_entry(self, name: str) -> BlockId:
        return BlockId(name, self.functions[name])

    @cached_property
    def successors(self) -> dict[BlockId, tuple[BlockId, ...]]:
        out: dict[BlockId, list[BlockId]] = {b: [] for b in self.blocks}
        for src, dst in self.intra_edges:
            out[src].append(dst)
        return {b: tuple(v) for b, v in out.items()}

    @cached_property
    def calls(self) -> dict[BlockId, tuple[CallEdge, ...]]:
        out: dict[BlockId, list[CallEdge]] = {b: [] for b in self.blocks}
        for edge in self.call_edges:
            out[edge.site].append(edge)
        return {b: tuple(v) for b, v in out.items()}

    @cached_property
    def input_arity(self) -> dict[BlockId, int]:
        return {b: len(s) for b, s in self.successors.items()}

    @cached_property
    def block_index(self) -> dict[BlockId, int]:
        return {b: i for i, b in enumerate(self.blocks)}

    def blocks_of(self, name: str) -> list[BlockId]:
        return [b for b in self.blocks if b.function == name]

    @property
    def hidden_edges(self) -> tuple[CallEdge, ...]:
        return tuple(e for e in self.call_edges if e.hidden)

    def to_text(self) -> str:
        lines = []
        for name, entry in self.functions.items():
            lines.append(f"function {name} entry {entry}")
        for b in self.blocks:
            lines.append(f"block {b}" + (" crash" if b in self.crash_blocks else ""))
        for src, dst in self.intra_edges:
            lines.append(f"edge {src} -> {dst}")
        for e in self.call_edges:
            lines.append(f"call {e.site} -> {e.callee}" + (" hidden" if e.hidden else ""))
        for t in self.targets:
            lines.append(f"target {t}")
        return "\n".join(lines) + "\n"


def _validate(g: ICfg) -> None:
    if not g.functions:
        raise GraphError("graph declares no functions")
    known = set(g.blocks)
    if len(known) != len(g.blocks):
        raise DuplicateDefinitionError("duplicate block definition")
    for b in g.blocks:
        if b.function not in g.functions:
            raise DanglingReferenceError(f"block {b} belongs to undeclared function {b.function!r}")
    for name, entry in g.functions.items():
        if BlockId(name, entry) not in known:
            raise DanglingReferenceError(f"entry block {name}:{entry} is not declared")
    for src, dst in g.intra_edges:
        for b in (src, dst):
            if b not in known:
                raise DanglingReferenceError(f"edge references undeclared block {b}")
        if src.function != dst.function:
            raise GraphError(f"intra edge {src} -> {dst} crosses functions")
    for e in g.call_edges:
        if e.site not in known:
            raise DanglingReferenceError(f"call references undeclared block {e.site}")
        if e.callee not in g.functions:
            raise DanglingReferenceError(f"call references undeclared function {e.callee!r}")
    if not g.targets:
        raise GraphError("graph has no target")
    for t in g.targets:
        if t not in known:
            raise DanglingReferenceError(f"target references undeclared block {t}")
    for b in g.crash_blocks:
        if b not in known:
            raise DanglingReferenceError(f"crash flag on undeclared block {b}")


def _block_token(tok: str, lineno: int, col: int) -> BlockId:
    try:
        return BlockId.parse(tok)
    except ValueError:
        raise GraphSyntaxError(f"expected <function>:<index>, got {tok!r}", lineno, col) from None


def parse_icfg(text: str) -> ICfg:
    functions: dict[str, int] = {}
    blocks: list[BlockId] = []
    seen_blocks: set[BlockId] = set()
    crash: set[BlockId] = set()
    intra: list[tuple[BlockId, BlockId]] = []
    calls: list[CallEdge] = []
    targets: list[BlockId] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        toks = [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", line)]
        if not toks:
            continue
        words = [t for t, _ in toks]
        kw, kcol = toks[0]

        def expect(n_min: int, n_max: int | None = None):
            n_max = n_min if n_max is None else n_max
            if not n_min <= len(words) <= n_max:
                col = toks[n_max][1] if len(toks) > n_max else len(raw.rstrip()) + 1
                raise GraphSyntaxError(
                    f"'{kw}' takes {n_min - 1}" + ("" if n_min == n_max else f"-{n_max - 1}")
                    + f" arguments, got {len(words) - 1}", lineno, col)

        if kw == "function":
            expect(4)
            name, _, idx = words[1:]
            if not _NAME_RE.fullmatch(name):
                raise GraphSyntaxError(f"invalid function name {name!r}", lineno, toks[1][1])
            if words[2] != "entry":
                raise GraphSyntaxError(f"expected 'entry', got {words[2]!r}", lineno, toks[2][1])
            if not idx.isdigit():
                raise GraphSyntaxError(f"expected block index, got {idx!r}", lineno, toks[3][1])
            if name in functions:
                raise DuplicateDefinitionError(f"line {lineno}: function {name!r} defined twice")
            functions[name] = int(idx)
        elif kw == "block":
            expect(2, 3)
            b = _block_token(words[1], lineno, toks[1][1])
            if len(words) == 3 and words[2] != "crash":
                raise GraphSyntaxError(f"unknown block flag {words[2]!r}", lineno, toks[2][1])
            if b in seen_blocks:
                raise DuplicateDefinitionError(f"line {lineno}: block {b} defined twice")
            seen_blocks.add(b)
            blocks.append(b)
            if len(words) == 3:
                crash.add(b)
        elif kw == "edge":
            expect(4)
            if words[2] != "->":
                raise GraphSyntaxError(f"expected '->', got {words[2]!r}", lineno, toks[2][1])
            intra.append((_block_token(words[1], lineno, toks[1][1]),
                          _block_token(words[3], lineno, toks[3][1])))
        elif kw == "call":
            expect(4, 5)
            if words[2] != "->":
                raise GraphSyntaxError(f"expected '->', got {words[2]!r}", lineno, toks[2][1])
            if not _NAME_RE.fullmatch(words[3]):
                raise GraphSyntaxError(f"invalid function name {words[3]!r}", lineno, toks[3][1])
            if len(words) == 5 and words[4] != "hidden":
                raise GraphSyntaxError(f"unknown call flag {words[4]!r}", lineno, toks[4][1])
            calls.append(CallEdge(_block_token(words[1], lineno, toks[1][1]), words[3],
                                  len(words) == 5))
        elif kw == "target":
            expect(2)
            targets.append(_block_token(words[1], lineno, toks[1][1]))
        else:
            raise GraphSyntaxError(f"unknown directive {kw!r}", lineno, kcol)

    return ICfg(functions=functions, blocks=tuple(blocks), intra_edges=tuple(intra),
                call_edges=tuple(calls), targets=tuple(targets), crash_blocks=frozenset(crash))


def load_icfg(path) -> ICfg:
    with open(path, encoding="utf-8") as fh:
        return parse_icfg(fh.read())


def analysis_view(g: ICfg) -> ICfg:
    """What static analysis sees: the graph minus hidden call edges."""
    if not g.hidden_edges:
        return g
    return replace(g, call_edges=tuple(e for e in g.call_edges if not e.hidden))


def execution_view(g: ICfg) -> ICfg:
    """What the program really does: every call edge, none of them hidden."""
    if not g.hidden_edges:
        return g
    return replace(g, call_edges=tuple(e._replace(hidden=False) for e in g.call_edges))


def reverse_reachable_blocks(g: ICfg, targets: Iterable[BlockId] | None = None) -> set[BlockId]:
    """Blocks from which the last target can be reached.

    Follows intra edges and visible call edges (call site -> callee entry).
    Returning from a callee is not modelled beyond the call site's own
    intra successors, which are already ordinary edges.
    """
    targets = list(g.targets if targets is None else targets)
    if not targets:
        raise ValueError("targets must be non-empty")
    goal = targets[-1]

    preds: dict[BlockId, list[BlockId]] = {b: [] for b in g.blocks}
    for src, dst in g.intra_edges:
        preds[dst].append(src)
    for e in g.call_edges:
        if not e.hidden:
            preds[g.function_entry(e.callee)].append(e.site)

    seen = {goal}
    todo = deque([goal])
    while todo:
        b = todo.popleft()
        for p in preds[b]:
            if p not in seen:
                seen.add(p)
                todo.append(p)
    return seen


def induced_subgraph(g: ICfg, keep: set[BlockId]) -> ICfg:
    """Restrict ``g`` to ``keep``.

    The entry block of every function that keeps at least one block is
    retained as well, so the result is still a valid graph.
    """
    functions = {f: e for f, e in g.functions.items() if any(b.function == f for b in keep)}
    if not functions:
        raise GraphError("induced subgraph has no functions")
    kept = set(keep) | {BlockId(f, e) for f, e in functions.items()}
    blocks = tuple(b for b in g.blocks if b in kept)
    return ICfg(
        functions=functions,
        blocks=blocks,
        intra_edges=tuple((s, d) for s, d in g.intra_edges if s in kept and d in kept),
        call_edges=tuple(e for e in g.call_edges if e.site in kept and e.callee in functions),
        targets=tuple(t for t in g.targets if t in kept) or (g.last_target,),
        crash_blocks=frozenset(b for b in g.crash_blocks if b in kept),
    )
