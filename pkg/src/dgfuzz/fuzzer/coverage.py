"""AFL-style edge coverage with hit-count buckets."""

from __future__ import annotations

from typing import Iterable

from ..vm import ExecutionResult

DEFAULT_MAP_SIZE = 1 << 16


def bucket(count: int) -> int:
    """Hit-count class as a single bit: 1, 2, 3, 4-7, 8-15, 16-31, 32-127, 128+."""
    if count <= 0:
        return 0
    if count <= 3:
        return 1 << (count - 1)
    if count < 8:
        return 1 << 3
    if count < 16:
        return 1 << 4
    if count < 32:
        return 1 << 5
    if count < 128:
        return 1 << 6
    return 1 << 7


_BUCKET_LUT = bytes(bucket(i) for i in range(129))


def _block_key(ordinal: int) -> int:
    # Knuth multiplicative hash; +1 keeps ordinal 0 distinct from the "no previous block" state
    return ((ordinal + 1) * 2654435761) & 0xFFFFFFFF


class CoverageMap:
    def __init__(self, size: int = DEFAULT_MAP_SIZE):
        if size < 1 or size & (size - 1):
            raise ValueError("coverage map size must be a power of two")
        self.size = size
        self._mask = size - 1
        self.virgin = bytearray(size)
        self._covered = 0

    def clear(self) -> None:
        self.virgin = bytearray(self.size)
        self._covered = 0

    def slot(self, prev: int | None, cur: int) -> int:
        prev_key = 0 if prev is None else _block_key(prev)
        return (_block_key(cur) ^ (prev_key >> 1)) & self._mask

    def classify(self, path: Iterable[int]) -> dict[int, int]:
        """Map each touched slot to its bucket bit for one run."""
        mask = self._mask
        counts: dict[int, int] = {}
        prev_key = 0
        for cur in path:
            key = ((cur + 1) * 2654435761) & 0xFFFFFFFF
            s = (key ^ (prev_key >> 1)) & mask
            counts[s] = counts.get(s, 0) + 1
            prev_key = key
        lut = _BUCKET_LUT
        return {s: lut[min(c, 128)] for s, c in counts.items()}

    def has_new_bits(self, run: dict[int, int]) -> bool:
        virgin = self.virgin
        return any(not virgin[s] & b for s, b in run.items())

    def merge(self, run: dict[int, int]) -> None:
        virgin = self.virgin
        for s, b in run.items():
            if not virgin[s]:
                self._covered += 1
            virgin[s] |= b

    def covered_slots(self) -> int:
        return self._covered


def is_interesting(result: ExecutionResult, global_map: CoverageMap) -> bool:
    """True when the run shows a (slot, bucket) pair never seen before; the map is updated then."""
    run = global_map.classify(result.path)
    if global_map.has_new_bits(run):
        global_map.merge(run)
        return True
    return False

