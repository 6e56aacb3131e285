"""Seed queue and the exponential simulated-annealing power schedule."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .cutloss import Phase
from .distance import Distance, normalize

DEFAULT_BASE_ENERGY = 16
MAX_ENERGY_FACTOR = 4096


@dataclass
class Seed:
    input: bytes
    distance: Distance
    found_at: int | float
    id: int
    fuzz_count: int = 0
    parent: Optional[int] = None


@dataclass
class AnnealState:
    t_x: float
    schedule: str = "exp"
    base_energy: int = DEFAULT_BASE_ENERGY
    min_seen: Optional[float] = None
    max_seen: Optional[float] = None

    def __post_init__(self):
        if self.t_x <= 0:
            raise ValueError("t_x must be positive")
        if self.schedule != "exp":
            raise ValueError(f"unsupported schedule {self.schedule!r}; only 'exp' is implemented")
        if self.base_energy < 1:
            raise ValueError("base_energy must be >= 1")

    def observe(self, d: Distance) -> None:
        if d is None:
            return
        self.min_seen = d if self.min_seen is None else min(self.min_seen, d)
        self.max_seen = d if self.max_seen is None else max(self.max_seen, d)


def temperature(now: float, st: AnnealState) -> float:
    t = 20.0 ** (-now / st.t_x)
    return min(1.0, max(0.0, t))


def phase_at(now: float, st: AnnealState) -> Phase:
    return Phase.EXPLOITATION if now >= st.t_x else Phase.EXPLORATION


def energy_weight(norm_distance: float, temp: float) -> float:
    return (1.0 - norm_distance) * (1.0 - temp) + 0.5 * temp


def energy(seed: Seed, now: float, st: AnnealState) -> int:
    """Number of mutants to derive from ``seed`` in this round."""
    e0 = st.base_energy
    if seed.distance is None or st.min_seen is None:
        return e0
    nd = normalize(seed.distance, st.min_seen, st.max_seen)
    w = energy_weight(nd, temperature(now, st))
    n = round(e0 * 2.0 ** (10.0 * (2.0 * w - 1.0)))
    return max(1, min(MAX_ENERGY_FACTOR * e0, n))


class EmptyQueueError(LookupError):
    pass


@dataclass
class SeedQueue:
    """Round-robin over seeds in admission order."""

    seeds: list[Seed] = field(default_factory=list)
    cursor: int = 0

    def __len__(self) -> int:
        return len(self.seeds)

    def __iter__(self):
        return iter(self.seeds)

    def admit(self, data: bytes, distance: Distance, now, parent: Optional[int] = None) -> Seed:
        seed = Seed(input=data, distance=distance, found_at=now, id=len(self.seeds), parent=parent)
        self.seeds.append(seed)
        return seed

    def next_seed(self) -> Seed:
        if not self.seeds:
            raise EmptyQueueError("seed queue is empty")
        seed = self.seeds[self.cursor % len(self.seeds)]
        self.cursor = (self.cursor + 1) % len(self.seeds)
        return seed


def next_seed(queue: SeedQueue) -> Seed:
    return queue.next_seed()

