"""Probabilistic exponential cut-the-loss.

Every time a run enters a block with no finite distance to the target, a
uniform integer ``u`` in ``[1, granularity]`` is drawn and the run is cut when
``u > (1 - p) * granularity``. Across the unreachable suffix of a run this
gives a geometric law over the termination point.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from typing import Mapping, Union

from .distance import DistanceMap
from .icfg import BlockId
from .vm import CONTINUE, CUT, Hook, Verdict

Number = Union[float, Fraction]


class Mode(enum.Enum):
    ALWAYS = "always"
    EXPLOITATION_ONLY = "exploitation_only"
    OFF = "off"


class Phase(enum.Enum):
    EXPLORATION = "exploration"
    EXPLOITATION = "exploitation"


def _exact(p: Number) -> Fraction:
    # float 0.1 is not 1/10; go through the shortest repr so 0.9 * 10 == 9
    return p if isinstance(p, Fraction) else Fraction(repr(float(p)))


@dataclass(frozen=True)
class CutLossConfig:
    p: float = 0.0
    mode: Mode = Mode.ALWAYS
    granularity: int = 10

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if self.granularity < 1:
            raise ValueError("granularity must be >= 1")
        if isinstance(self.mode, str):
            object.__setattr__(self, "mode", Mode(self.mode))

    @cached_property
    def threshold(self) -> Fraction:
        """Draws strictly above this value terminate the run."""
        return (1 - _exact(self.p)) * self.granularity

    @cached_property
    def first_cut_draw(self) -> int:
        """Smallest integer draw that exceeds the threshold; integer compare keeps the hot path fast."""
        return math.floor(self.threshold) + 1

    @property
    def effective_p(self) -> Fraction:
        """Actual per-block cut probability once p is quantised to the granularity."""
        g = self.granularity
        hits = sum(1 for u in range(1, g + 1) if u > self.threshold)
        return Fraction(hits, g)

    def active(self, phase: Phase) -> bool:
        if self.mode is Mode.OFF or self.p == 0:
            return False
        return self.mode is Mode.ALWAYS or phase is Phase.EXPLOITATION


def should_terminate(rng: random.Random, cfg: CutLossConfig) -> bool:
    return rng.randint(1, cfg.granularity) >= cfg.first_cut_draw


def never_cut(block: BlockId) -> Verdict:
    return CONTINUE


def make_hook(dm: DistanceMap | Mapping[BlockId, float | None], cfg: CutLossConfig,
              phase: Phase, rng: random.Random) -> Hook:
    """Per-block callback for the VM.

    The RNG is only touched at unreachable blocks while cutting is active, so
    an inactive configuration leaves the stream untouched.
    """
    if not cfg.active(phase):
        return never_cut
    bb = dm.bb if isinstance(dm, DistanceMap) else dm
    unreachable = frozenset(b for b, d in bb.items() if d is None)
    g = cfg.granularity
    first_cut = cfg.first_cut_draw
    randint = rng.randint

    def hook(block: BlockId) -> Verdict:
        if block in unreachable and randint(1, g) >= first_cut:
            return CUT
        return CONTINUE

    return hook


def prob_term_at(p: Number, i: int) -> Number:
    """Probability that a run is cut exactly at its i-th unreachable block."""
    if i < 1:
        raise ValueError("i counts from 1")
    return (1 - p) ** (i - 1) * p


def prob_term_within(p: Number, u: int) -> Number:
    """Probability that a run with u unreachable blocks is cut at all."""
    if u < 0:
        raise ValueError("u must be non-negative")
    return 1 - (1 - p) ** u
