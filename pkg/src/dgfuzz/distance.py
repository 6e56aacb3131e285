"""Target distances at function, basic-block and test-case level.

Unreachable entries are ``None`` (``UNREACHABLE``) so that any accidental
arithmetic on them fails loudly. On disk they are written as ``-1``.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .icfg import BlockId, ICfg, analysis_view

UNREACHABLE = None
Distance = Optional[float]

DEFAULT_C_MULT = 10


class DistanceFileError(ValueError):
    pass


@dataclass(frozen=True)
class DistanceMap:
    bb: Mapping[BlockId, Distance]
    fn: Mapping[str, Distance] = field(default_factory=dict)
    c_mult: int = DEFAULT_C_MULT

    def __getitem__(self, block: BlockId) -> Distance:
        return self.bb[block]

    def unreachable_blocks(self) -> set[BlockId]:
        return {b for b, d in self.bb.items() if d is None}

    def finite_blocks(self) -> set[BlockId]:
        return {b for b, d in self.bb.items() if d is not None}


def harmonic_mean(values: Iterable[Distance]) -> Distance:
    """Harmonic mean of the finite, positive entries; ``None`` if there are none."""
    finite = [v for v in values if v is not None]
    if not finite:
        return UNREACHABLE
    if any(v == 0 for v in finite):
        return 0.0
    return len(finite) / sum(1.0 / v for v in finite)


def _bfs(adj: Mapping, start) -> dict:
    dist = {start: 0}
    todo = deque([start])
    while todo:
        u = todo.popleft()
        for v in adj.get(u, ()):
            if v not in dist:
                dist[v] = dist[u] + 1
                todo.append(v)
    return dist


def call_graph(g: ICfg) -> dict[str, set[str]]:
    """Function-level call graph over visible call edges."""
    cg: dict[str, set[str]] = {f: set() for f in g.functions}
    for e in g.call_edges:
        if not e.hidden:
            cg[e.site.function].add(e.callee)
    return cg


def cg_distances(g: ICfg, target_fns: Iterable[str]) -> dict[str, Distance]:
    target_fns = set(target_fns)
    reverse: dict[str, set[str]] = {f: set() for f in g.functions}
    for caller, callees in call_graph(g).items():
        for callee in callees:
            reverse[callee].add(caller)

    # hop counts from every function to each target function
    per_target = {t: _bfs(reverse, t) for t in sorted(target_fns)}
    out: dict[str, Distance] = {}
    for f in g.functions:
        if f in target_fns:
            out[f] = 0.0
        else:
            out[f] = harmonic_mean(float(d[f]) for d in per_target.values() if f in d)
    return out


def bb_distances(g: ICfg, cg: Mapping[str, Distance], targets: Sequence[BlockId],
                 c_mult: int = DEFAULT_C_MULT) -> dict[BlockId, Distance]:
    """Per-block distance.

    Target blocks are 0. A block whose visible calls reach a function with a
    finite call-graph distance gets ``c_mult`` times the smallest such distance.
    Every other block takes the harmonic mean, over the anchored blocks of its
    own function that it can reach, of hop count plus that block's distance.
    """
    target_set = set(targets)
    anchored: dict[BlockId, float] = {}
    for b in g.blocks:
        if b in target_set:
            anchored[b] = 0.0
            continue
        callee_d = [cg[e.callee] for e in g.calls[b] if not e.hidden and cg.get(e.callee) is not None]
        if callee_d:
            anchored[b] = float(c_mult * min(callee_d))

    out: dict[BlockId, Distance] = {}
    succ = g.successors
    for b in g.blocks:
        if b in anchored:
            out[b] = anchored[b]
            continue
        hops = _bfs(succ, b)
        out[b] = harmonic_mean(h + anchored[x] for x, h in hops.items() if x in anchored and x != b)
    return out


def compute_distance_map(g: ICfg, c_mult: int = DEFAULT_C_MULT) -> DistanceMap:
    """Distances of every block to the last target, on the analysis view."""
    view = analysis_view(g)
    target = g.last_target
    cg = cg_distances(view, {target.function})
    return DistanceMap(bb=bb_distances(view, cg, [target], c_mult), fn=cg, c_mult=c_mult)


def seed_distance(trace: Sequence[BlockId], dm: DistanceMap | Mapping[BlockId, Distance]) -> Distance:
    if not trace:
        raise ValueError("trace must be non-empty")
    bb = dm.bb if isinstance(dm, DistanceMap) else dm
    finite = [d for d in (bb[b] for b in trace) if d is not None]
    if not finite:
        return UNREACHABLE
    return sum(finite) / len(finite)


def normalize(d: Distance, min_seen: float, max_seen: float) -> Distance:
    if d is None:
        return UNREACHABLE
    if min_seen > max_seen:
        raise ValueError("min_seen > max_seen")
    if max_seen == min_seen:
        return 0.0
    return (d - min_seen) / (max_seen - min_seen)


def write_distance_file(dm: DistanceMap) -> str:
    lines = [f"# c_mult {dm.c_mult}"]
    for b, d in dm.bb.items():
        lines.append(f"{b} {'-1' if d is None else f'{d:.4f}'}")
    return "\n".join(lines) + "\n"


_LINE_RE = re.compile(r"(\S+)\s+(\S+)")


def read_distance_file(text: str, graph: ICfg | None = None) -> DistanceMap:
    bb: dict[BlockId, Distance] = {}
    c_mult = DEFAULT_C_MULT
    known = set(graph.blocks) if graph is not None else None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body, _, comment = raw.partition("#")
        m = re.fullmatch(r"\s*c_mult\s+(\d+)\s*", comment)
        if m and not body.strip():
            c_mult = int(m.group(1))
        body = body.strip()
        if not body:
            continue
        m = _LINE_RE.fullmatch(body)
        if not m:
            raise DistanceFileError(f"line {lineno}: malformed entry {body!r}")
        try:
            block = BlockId.parse(m.group(1))
        except ValueError as exc:
            raise DistanceFileError(f"line {lineno}: {exc}") from None
        if known is not None and block not in known:
            raise DistanceFileError(f"line {lineno}: unknown block {block}")
        if block in bb:
            raise DistanceFileError(f"line {lineno}: duplicate entry for {block}")
        value = m.group(2)
        if value == "-1":
            bb[block] = UNREACHABLE
            continue
        try:
            d = float(value)
        except ValueError:
            raise DistanceFileError(f"line {lineno}: bad distance {value!r}") from None
        if not d >= 0:
            raise DistanceFileError(f"line {lineno}: distance must be >= 0 or -1, got {value}")
        bb[block] = d
    if known is not None and len(bb) != len(known):
        missing = sorted(known - set(bb))
        raise DistanceFileError(f"distance file misses {len(missing)} blocks, e.g. {missing[0]}")
    return DistanceMap(bb=bb, c_mult=c_mult)
