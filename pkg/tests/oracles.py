"""Independent reference implementations used only by the tests.

These deliberately avoid the package's own helpers: reachability is a
Warshall transitive closure, shortest paths are Floyd-Warshall, harmonic
means are exact fractions, and the interpreter is recursive.
"""

from __future__ import annotations

import random
import sys
from fractions import Fraction

from dgfuzz.icfg import BlockId, CallEdge, ICfg

INF = float("inf")


def closure(nodes, edges):
    """Warshall transitive closure as a dict of reachable sets (reflexive)."""
    nodes = list(nodes)
    idx = {n: i for i, n in enumerate(nodes)}
    n = len(nodes)
    reach = [[i == j for j in range(n)] for i in range(n)]
    for a, b in edges:
        reach[idx[a]][idx[b]] = True
    for k in range(n):
        rk = reach[k]
        for i in range(n):
            if reach[i][k]:
                ri = reach[i]
                for j in range(n):
                    if rk[j]:
                        ri[j] = True
    return {a: {nodes[j] for j in range(n) if reach[idx[a]][j]} for a in nodes}


def floyd_warshall(nodes, edges):
    nodes = list(nodes)
    d = {a: {b: (0 if a == b else INF) for b in nodes} for a in nodes}
    for a, b in edges:
        if a != b:
            d[a][b] = min(d[a][b], 1)
    for k in nodes:
        dk = d[k]
        for i in nodes:
            dik = d[i][k]
            if dik == INF:
                continue
            di = d[i]
            for j in nodes:
                if dik + dk[j] < di[j]:
                    di[j] = dik + dk[j]
    return d


def block_edges(g: ICfg, include_hidden: bool):
    edges = list(g.intra_edges)
    for e in g.call_edges:
        if include_hidden or not e.hidden:
            edges.append((e.site, BlockId(e.callee, g.functions[e.callee])))
    return edges


def reach_oracle(g: ICfg, include_hidden: bool = False) -> set[BlockId]:
    goal = g.targets[-1]
    cl = closure(g.blocks, block_edges(g, include_hidden))
    return {b for b in g.blocks if goal in cl[b]}


def hmean(values):
    vals = [Fraction(v) for v in values]
    if not vals:
        return None
    if any(v == 0 for v in vals):
        return Fraction(0)
    return len(vals) / sum(1 / v for v in vals)


def cg_oracle(g: ICfg, target_fns) -> dict[str, Fraction | None]:
    edges = {(e.site.function, e.callee) for e in g.call_edges if not e.hidden}
    fw = floyd_warshall(g.functions, edges)
    out = {}
    for f in g.functions:
        if f in target_fns:
            out[f] = Fraction(0)
        else:
            out[f] = hmean(fw[f][t] for t in target_fns if fw[f][t] != INF)
    return out


def bb_oracle(g: ICfg, c_mult: int = 10) -> dict[BlockId, Fraction | None]:
    """Block distances to the last target, ignoring hidden call edges."""
    target = g.targets[-1]
    cg = cg_oracle(g, {target.function})
    anchored = {}
    for b in g.blocks:
        if b == target:
            anchored[b] = Fraction(0)
            continue
        ds = [cg[e.callee] for e in g.call_edges
              if e.site == b and not e.hidden and cg[e.callee] is not None]
        if ds:
            anchored[b] = c_mult * min(ds)
    out = {}
    for f in g.functions:
        blocks = [b for b in g.blocks if b.function == f]
        fw = floyd_warshall(blocks, [(s, d) for s, d in g.intra_edges if s.function == f])
        for b in blocks:
            if b in anchored:
                out[b] = anchored[b]
            else:
                out[b] = hmean(fw[b][x] + anchored[x] for x in blocks
                               if x in anchored and x != b and fw[b][x] != INF)
    return out


def format_distances(dm: dict, c_mult: int = 10) -> str:
    lines = [f"# c_mult {c_mult}"]
    for b, d in dm.items():
        lines.append(f"{b} " + ("-1" if d is None else f"{float(d):.4f}"))
    return "\n".join(lines) + "\n"


class _Stop(Exception):
    def __init__(self, status, site=None):
        self.status, self.site = status, site


def ref_execute(g: ICfg, data: bytes, cut_at=lambda b: False, step_limit: int = 500):
    """Recursive interpreter. Returns (status, trace, consumed, crash_site)."""
    succ = {b: [d for s, d in g.intra_edges if s == b] for b in g.blocks}
    calls = {b: [e.callee for e in g.call_edges if e.site == b] for b in g.blocks}
    trace: list[BlockId] = []
    pos = 0

    def visit(b):
        if len(trace) >= step_limit:
            raise _Stop("timeout")
        trace.append(b)
        if cut_at(b):
            raise _Stop("cut")
        if b in g.crash_blocks:
            raise _Stop("crash", b)

    def run_function(name):
        nonlocal pos
        b = BlockId(name, g.functions[name])
        while True:
            visit(b)
            for callee in calls[b]:
                run_function(callee)
            s = succ[b]
            if not s:
                return
            if len(s) == 1:
                b = s[0]
            elif pos < len(data):
                b = s[data[pos] % len(s)]
                pos += 1
            else:
                b = s[0]

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 4 * step_limit + 200))
    try:
        run_function(next(iter(g.functions)))
        status, site = "ok", None
    except _Stop as stop:
        status, site = stop.status, stop.site
    finally:
        sys.setrecursionlimit(old)
    return status, trace, pos, site


def random_graph(seed: int, max_blocks: int = 50, hidden_prob: float = 0.0,
                 connected_entries: bool = True, crash_prob: float = 0.05) -> ICfg:
    """Random program graph.

    With ``connected_entries`` every block is intra-reachable from its
    function's entry, which is what makes call-graph distances agree with
    block reachability.
    """
    rng = random.Random(seed)
    n_fn = rng.randint(1, 6)
    total = rng.randint(n_fn, max_blocks)
    sizes = [1] * n_fn
    for _ in range(total - n_fn):
        sizes[rng.randrange(n_fn)] += 1
    names = [f"f{i}" for i in range(n_fn)]
    functions, blocks, intra, calls = {}, [], [], []
    for name, size in zip(names, sizes):
        entry = rng.randrange(size)
        functions[name] = entry
        fb = [BlockId(name, i) for i in range(size)]
        blocks += fb
        order = [fb[entry]] + [b for b in fb if b.index != entry]
        for i in range(1, size):
            if connected_entries:
                intra.append((order[rng.randrange(i)], order[i]))
        for _ in range(rng.randint(0, size)):
            intra.append((rng.choice(fb), rng.choice(fb)))
    for _ in range(rng.randint(0, total // 2 + 1)):
        calls.append(CallEdge(rng.choice(blocks), rng.choice(names), rng.random() < hidden_prob))
    intra = list(dict.fromkeys(intra))
    targets = tuple(rng.choice(blocks) for _ in range(rng.randint(1, 2)))
    crash = frozenset(b for b in blocks if rng.random() < crash_prob)
    return ICfg(functions=functions, blocks=tuple(blocks), intra_edges=tuple(intra),
                call_edges=tuple(calls), targets=targets, crash_blocks=crash)
