"""Havoc-style stacked byte mutations."""

from __future__ import annotations

import random

OPS = ("flip", "set", "arith", "dup", "delete", "splice")
MAX_STACK = 8
ARITH_MAX = 35
SPLICE_MAX = 16


def apply_op(buf: bytearray, op: str, rng: random.Random, max_len: int) -> None:
    """Apply one operator in place.

    On an empty buffer every operator except ``delete`` inserts a random byte;
    ``delete`` is then a no-op.
    """
    n = len(buf)
    if n == 0:
        if op != "delete" and max_len > 0:
            buf.append(rng.randrange(256))
        return
    if op == "flip":
        bit = rng.randrange(n * 8)
        buf[bit >> 3] ^= 1 << (bit & 7)
    elif op == "set":
        buf[rng.randrange(n)] = rng.randrange(256)
    elif op == "arith":
        pos = rng.randrange(n)
        delta = rng.randint(1, ARITH_MAX)
        if rng.random() < 0.5:
            delta = -delta
        buf[pos] = (buf[pos] + delta) & 0xFF
    elif op == "dup":
        pos = rng.randrange(n)
        if n < max_len:
            buf.insert(pos, buf[pos])
    elif op == "delete":
        del buf[rng.randrange(n)]
    elif op == "splice":
        length = rng.randint(1, min(n, SPLICE_MAX))
        src = rng.randrange(n - length + 1)
        dst = rng.randrange(n + 1)
        chunk = buf[src:src + length]
        buf[dst:dst] = chunk
        del buf[max_len:]
    else:
        raise ValueError(f"unknown mutation operator {op!r}")


def mutate(data: bytes, rng: random.Random, max_len: int = 4096) -> bytes:
    buf = bytearray(data[:max_len])
    for _ in range(rng.randint(1, MAX_STACK)):
        apply_op(buf, OPS[rng.randrange(len(OPS))], rng, max_len)
    return bytes(buf)
