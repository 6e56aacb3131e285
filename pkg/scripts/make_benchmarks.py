#!/usr/bin/env python3
"""Regenerate the bundled benchmark graphs and seeds under src/dgfuzz/benchmarks/."""

import argparse
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent / "src" / "dgfuzz" / "benchmarks"


class Builder:
    def __init__(self, title):
        self.lines = [f"# {title}", ""]
        self.fns = []
        self.body = []

    def function(self, name, comment=None):
        self.fns.append(f"function {name} entry 0" + (f"  # {comment}" if comment else ""))

    def block(self, fn, i, crash=False):
        self.body.append(f"block {fn}:{i}" + (" crash" if crash else ""))

    def edge(self, fn, i, j):
        self.body.append(f"edge {fn}:{i} -> {fn}:{j}")

    def call(self, fn, i, callee, hidden=False):
        self.body.append(f"call {fn}:{i} -> {callee}" + (" hidden" if hidden else ""))

    def comment(self, text):
        self.body.append(f"# {text}")

    def chain(self, fn, n, diamonds=(), crash_at=None):
        """Straight-line function of ``n`` blocks; each index in ``diamonds`` opens a 2-way branch."""
        self.comment(f"{fn}: {n}-block body")
        idx = 0
        self.block(fn, 0)
        nxt = 1
        while nxt < n:
            if idx in diamonds and nxt + 2 < n:
                a, b, join = nxt, nxt + 1, nxt + 2
                for k in (a, b, join):
                    self.block(fn, k, crash=(k == crash_at))
                self.edge(fn, idx, a)
                self.edge(fn, idx, b)
                self.edge(fn, a, join)
                self.edge(fn, b, join)
                idx, nxt = join, join + 1
            else:
                self.block(fn, nxt, crash=(nxt == crash_at))
                self.edge(fn, idx, nxt)
                idx, nxt = nxt, nxt + 1

    def text(self, targets):
        out = self.lines + self.fns + [""] + self.body + [""]
        out += [f"target {t}" for t in targets]
        return "\n".join(out) + "\n"


def gate_chain(b, fn, stages, wrong_callees, sink, pad=0, hidden=False):
    """``stages`` sequential ``k``-way branches; the last successor of each is the right one.

    Wrong successors call a function from ``wrong_callees`` and fall through to
    the function exit. Each right successor is followed by ``pad`` straight
    blocks. Passing every gate calls ``sink``.
    """
    exit_idx = 100
    b.comment(f"{fn}: {len(stages)} input-byte gates, last successor is the right one")
    cur = 0
    b.block(fn, 0)
    nxt = 1
    wrong_i = 0
    for k in stages:
        succ = []
        for _ in range(k - 1):
            b.block(fn, nxt)
            b.call(fn, nxt, wrong_callees[wrong_i % len(wrong_callees)])
            wrong_i += 1
            b.edge(fn, nxt, exit_idx)
            succ.append(nxt)
            nxt += 1
        b.block(fn, nxt)
        succ.append(nxt)
        for s in succ:
            b.edge(fn, cur, s)
        cur = nxt
        nxt += 1
        for _ in range(pad):
            b.block(fn, nxt)
            b.edge(fn, cur, nxt)
            cur = nxt
            nxt += 1
    b.call(fn, cur, sink, hidden=hidden)
    b.edge(fn, cur, exit_idx)
    b.block(fn, exit_idx)


def crash_fn(b, fn):
    b.comment(f"{fn}: crashes on entry")
    b.block(fn, 0, crash=True)
    return f"{fn}:0"


def demo_min2():
    b = Builder("easy crash: short gate chain, most mutants fall into long unreachable bodies")
    for name in ("main", "output", "write_rgba", "skip_tag", "dump_text"):
        b.function(name)
    b.comment("main: first byte selects a tag handler")
    for i in range(6):
        b.block("main", i)
    b.block("main", 9)
    for i in (1, 2, 3, 4):
        b.edge("main", 0, i)
    b.call("main", 1, "skip_tag")
    b.call("main", 2, "dump_text")
    b.call("main", 3, "skip_tag")
    b.call("main", 4, "output")
    for i in (1, 2, 3):
        b.edge("main", i, 9)
    b.edge("main", 4, 5)
    b.edge("main", 5, 9)
    gate_chain(b, "output", [4, 4, 4, 4], ["skip_tag", "dump_text"], "write_rgba")
    target = crash_fn(b, "write_rgba")
    b.chain("skip_tag", 30, diamonds=(3, 12))
    b.chain("dump_text", 26, diamonds=(5,))
    return b.text([target]), [bytes(12), b"B" * 12]


def demo_min1():
    b = Builder("hard crash: long gate chain; an irrelevant easy crash sits in unreachable code")
    for name in ("main", "parse_abc", "parse_action", "decode_abc", "free_action",
                 "skip_tag", "dump_text"):
        b.function(name)
    b.comment("main: first byte selects a handler")
    for i in range(6):
        b.block("main", i)
    b.block("main", 9)
    for i in (1, 2, 3, 4):
        b.edge("main", 0, i)
    b.call("main", 1, "skip_tag")
    b.call("main", 2, "dump_text")
    b.call("main", 3, "parse_action")
    b.call("main", 4, "parse_abc")
    for i in (1, 2, 3):
        b.edge("main", i, 9)
    b.edge("main", 4, 5)
    b.edge("main", 5, 9)
    gate_chain(b, "parse_abc", [4, 8, 4, 8, 4, 4], ["skip_tag", "dump_text"], "decode_abc")
    target = crash_fn(b, "decode_abc")
    b.comment("parse_action: cheap crash two gates deep, unrelated to the target")
    gate_chain(b, "parse_action", [4, 2], ["dump_text"], "free_action")
    crash_fn(b, "free_action")
    b.chain("skip_tag", 30, diamonds=(3, 12))
    b.chain("dump_text", 26, diamonds=(5,))
    return b.text([target]), [bytes(12), b"B" * 12]


def demo_min3():
    b = Builder("trap: every live route to the crash goes through a hidden (indirect) call")
    for name in ("main", "decode", "read_header", "read_bytes", "skip_tag", "dump_text"):
        b.function(name)
    b.comment("main: main:7 is dead code; the only static path to read_bytes starts there")
    for i in range(6):
        b.block("main", i)
    b.block("main", 7)
    b.block("main", 9)
    for i in (1, 2, 3, 4):
        b.edge("main", 0, i)
    b.call("main", 1, "skip_tag")
    b.call("main", 2, "dump_text")
    b.call("main", 3, "skip_tag")
    b.call("main", 4, "read_header")
    for i in (1, 2, 3):
        b.edge("main", i, 9)
    b.edge("main", 4, 5)
    b.edge("main", 5, 9)
    b.call("main", 7, "decode")
    b.edge("main", 7, 9)
    gate_chain(b, "decode", [4, 4], ["skip_tag"], "read_bytes")
    b.comment("read_header: statically unreachable, its final dispatch is an indirect call")
    gate_chain(b, "read_header", [4, 4], ["skip_tag", "dump_text"], "read_bytes", pad=2, hidden=True)
    b.comment("read_bytes: one gate guards the crash")
    for i in range(4):
        b.block("read_bytes", i, crash=(i == 3))
    b.edge("read_bytes", 0, 1)
    b.edge("read_bytes", 0, 2)
    b.edge("read_bytes", 2, 3)
    b.chain("skip_tag", 30, diamonds=(3, 12))
    b.chain("dump_text", 26, diamonds=(5,))
    return b.text(["read_bytes:3"]), [bytes(12), b"B" * 12]


def demo_min4():
    b = Builder("unreachable crash: the only caller of the crashing parser is dead code")
    for name in ("main", "parse_rgba", "read_rgba", "skip_tag", "dump_text"):
        b.function(name)
    b.comment("main: main:7 has no predecessor, so parse_rgba never runs")
    for i in range(6):
        b.block("main", i)
    b.block("main", 7)
    b.block("main", 9)
    for i in (1, 2, 3, 4):
        b.edge("main", 0, i)
    b.call("main", 1, "skip_tag")
    b.call("main", 2, "dump_text")
    b.call("main", 3, "skip_tag")
    b.call("main", 4, "dump_text")
    for i in (1, 2, 3):
        b.edge("main", i, 9)
    b.edge("main", 4, 5)
    b.edge("main", 5, 9)
    b.call("main", 7, "parse_rgba")
    b.edge("main", 7, 9)
    gate_chain(b, "parse_rgba", [2], ["dump_text"], "read_rgba")
    target = crash_fn(b, "read_rgba")
    b.chain("skip_tag", 30, diamonds=(3, 12))
    b.chain("dump_text", 26, diamonds=(5,))
    return b.text([target]), [bytes(12), b"B" * 12]


BENCHMARKS = {
    "demo_min1": demo_min1,
    "demo_min2": demo_min2,
    "demo_min3": demo_min3,
    "demo_min4": demo_min4,
}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=ROOT)
    args = parser.parse_args()
    for name, build in BENCHMARKS.items():
        text, seeds = build()
        d = args.out / name
        (d / "seeds").mkdir(parents=True, exist_ok=True)
        (d / "graph.icfg").write_text(text)
        for i, s in enumerate(seeds):
            (d / "seeds" / f"seed_{i:03d}").write_bytes(s)
        print(f"wrote {d}")


if __name__ == "__main__":
    main()
