import pytest
from hypothesis import given, strategies as st

from dgfuzz.icfg import BlockId, parse_icfg
from dgfuzz.vm import CONTINUE, CUT, Program, Status, execute

from oracles import random_graph, ref_execute

B = BlockId.parse


def straight_line(n: int, crash_at: int | None = None) -> str:
    lines = ["function main entry 0"]
    for i in range(n):
        lines.append(f"block main:{i}" + (" crash" if i == crash_at else ""))
    for i in range(n - 1):
        lines.append(f"edge main:{i} -> main:{i + 1}")
    lines.append(f"target main:{n - 1}")
    return "\n".join(lines) + "\n"


BRANCHY = """\
function main entry 0
function callee entry 0
block main:0
block main:1
block main:2
block main:3
block main:4
block callee:0
block callee:1
edge main:0 -> main:1
edge main:0 -> main:2
edge main:0 -> main:3
edge main:2 -> main:4
edge callee:0 -> callee:1
call main:2 -> callee
call main:2 -> callee hidden
target main:4
"""


def test_single_block_ok():
    r = execute(parse_icfg(straight_line(1)))
    assert r.status is Status.OK
    assert r.steps == 1


def test_entry_crash():
    r = execute(parse_icfg(straight_line(3, crash_at=0)))
    assert r.status is Status.CRASH
    assert r.steps == 1
    assert r.crash_site == B("main:0")


def test_cut_on_fourth_block_saves_six():
    g = parse_icfg(straight_line(10))
    r = execute(g, hook=lambda b: CUT if b.index == 3 else CONTINUE)
    assert r.status is Status.CUT
    assert r.steps == 4
    assert len(g.blocks) - r.steps == 6
    assert r.last_block == B("main:3")


def test_branch_uses_byte_mod_arity():
    g = parse_icfg(BRANCHY)
    assert execute(g, b"\x00").trace == [B("main:0"), B("main:1")]
    assert execute(g, b"\x05").trace[1] == B("main:3")
    assert execute(g, b"\x04").consumed == 1


def test_exhausted_input_takes_first_successor():
    r = execute(parse_icfg(BRANCHY), b"")
    assert r.trace == [B("main:0"), B("main:1")]
    assert r.consumed == 0


def test_calls_run_in_order_before_branch_and_return():
    r = execute(parse_icfg(BRANCHY), b"\x01")
    # the hidden edge is executed too
    assert r.trace == [B("main:0"), B("main:2"), B("callee:0"), B("callee:1"),
                       B("callee:0"), B("callee:1"), B("main:4")]
    assert r.status is Status.OK


def test_step_limit_gives_timeout():
    g = parse_icfg(straight_line(2) + "edge main:1 -> main:0\n")
    r = execute(g, step_limit=50)
    assert r.status is Status.TIMEOUT
    assert r.steps == 50
    with pytest.raises(ValueError):
        execute(g, step_limit=0)


def test_crash_checked_after_hook():
    g = parse_icfg(straight_line(2, crash_at=1))
    r = execute(g, hook=lambda b: CUT if b.index == 1 else CONTINUE)
    assert r.status is Status.CUT


def test_cut_keeps_pending_frames():
    g = parse_icfg(BRANCHY)
    r = execute(g, b"\x01", hook=lambda b: CUT if b == B("callee:1") else CONTINUE)
    assert r.status is Status.CUT
    idx = g.block_index
    assert r.stack == ((idx[B("main:2")], 1),)


def test_recursion_times_out_instead_of_overflowing():
    g = parse_icfg("function main entry 0\nblock main:0\ncall main:0 -> main\ntarget main:0\n")
    assert execute(g, step_limit=5000).status is Status.TIMEOUT


def test_program_reuse():
    g = parse_icfg(BRANCHY)
    prog = Program(g)
    assert execute(prog, b"\x01") == execute(g, b"\x01")


def test_edges_are_consecutive_pairs():
    r = execute(parse_icfg(BRANCHY), b"\x01")
    t = r.trace
    assert r.edges == frozenset(zip(t, t[1:]))


@given(st.integers(0, 10**9), st.binary(max_size=24), st.floats(0, 0.5))
def test_matches_recursive_interpreter(seed, data, hidden):
    g = random_graph(seed, hidden_prob=hidden, connected_entries=False)
    r = execute(g, data, step_limit=300)
    status, trace, consumed, site = ref_execute(g, data, step_limit=300)
    assert (r.status.value, r.trace, r.consumed, r.crash_site) == (status, trace, consumed, site)


@given(st.integers(0, 10**9), st.binary(max_size=24), st.integers(0, 20))
def test_cut_matches_recursive_interpreter(seed, data, k):
    g = random_graph(seed)
    victim = g.blocks[k % len(g.blocks)]
    r = execute(g, data, hook=lambda b: CUT if b == victim else CONTINUE, step_limit=300)
    status, trace, _, _ = ref_execute(g, data, cut_at=lambda b: b == victim, step_limit=300)
    assert (r.status.value, r.trace) == (status, trace)
    if r.status is Status.CUT:
        assert r.last_block == victim


@given(st.integers(0, 10**9), st.binary(max_size=32))
def test_deterministic_and_noop_hook(seed, data):
    g = random_graph(seed)
    a = execute(g, data, step_limit=2000)
    b = execute(g, data, step_limit=2000)
    c = execute(g, data, hook=lambda blk: CONTINUE, step_limit=2000)
    assert a == b == c
    assert a.trace == c.trace and a.steps == len(a.trace)
    if a.status is Status.CRASH:
        assert a.crash_site in g.crash_blocks
