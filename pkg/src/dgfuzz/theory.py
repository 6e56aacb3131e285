"""Analytical saving/speedup model for cut-the-loss and its Monte Carlo check.

A test case is modelled as ``r`` reachable blocks followed by ``u``
unreachable ones. Being cut at the i-th unreachable block is counted as
saving ``u + 1 - i`` blocks (the cut block itself is not charged).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .cutloss import Number, prob_term_at


@dataclass(frozen=True)
class OverheadModel:
    p: Number
    r_bar: Number
    u_bar: Number
    t1_over_t2: Number = 0.0

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if self.r_bar < 0 or self.u_bar < 0 or self.r_bar + self.u_bar <= 0:
            raise ValueError("need r_bar >= 0, u_bar >= 0 and r_bar + u_bar > 0")
        if self.t1_over_t2 < 0:
            raise ValueError("t1_over_t2 must be non-negative")


def saving_fraction(m: OverheadModel) -> Number:
    """Expected fraction of execution cost removed by cutting.

    The summation bound is ``floor(u_bar)`` when ``u_bar`` is fractional.
    """
    total = m.r_bar + m.u_bar
    s = 0 * m.p
    for i in range(1, math.floor(m.u_bar) + 1):
        s += prob_term_at(m.p, i) * (m.u_bar + 1 - i) / total
    return s


def predicted_speedup(s: Number, t1_over_t2: Number = 0.0) -> Number:
    """Whole-loop speedup when the execution share of the cost shrinks by ``s``."""
    if t1_over_t2 < 0:
        raise ValueError("t1_over_t2 must be non-negative")
    denom = t1_over_t2 + 1 - s
    if denom <= 0:
        raise ValueError(f"speedup has a pole at s={s}, t1/t2={t1_over_t2}")
    return (t1_over_t2 + 1) / denom


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    se: float
    runs: int


def monte_carlo_saving(p: float, r: int, u: int, runs: int,
                       rng: np.random.Generator | int | None = None,
                       chunk: int = 100_000) -> MonteCarloEstimate:
    """Simulate ``runs`` executions block by block and average the saved fraction."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if r < 0 or u < 0 or r + u == 0:
        raise ValueError("need r >= 0, u >= 0 and r + u > 0")
    rng = np.random.default_rng(rng)
    # integer accumulators keep the p = 0 and p = 1 estimates exact
    saved_sum = 0
    saved_sq = 0
    done = 0
    while done < runs:
        n = min(chunk, runs - done)
        if u:
            cut = rng.random((n, u)) < p
            first = cut.argmax(axis=1) + 1
            saved = np.where(cut.any(axis=1), u + 1 - first, 0).astype(np.int64)
            saved_sum += int(saved.sum())
            saved_sq += int((saved * saved).sum())
        done += n
    width = r + u
    mean = saved_sum / (runs * width)
    var = max(0.0, saved_sq / runs - (saved_sum / runs) ** 2) / (width * width)
    se = math.sqrt(var / runs)
    return MonteCarloEstimate(mean=mean, se=se, runs=runs)


@dataclass(frozen=True)
class ScanRow:
    p: float
    saving: float
    speedup: float


@dataclass(frozen=True)
class Scan:
    rows: list[ScanRow]
    strictly_increasing: bool


def default_p_grid(step: float = 0.01) -> list[float]:
    n = round(1 / step)
    return [round(k * step, 10) for k in range(1, n + 1)]


def theoretical_monotonicity_scan(p_grid: Sequence[float], r_bar: float, u_bar: float,
                                  t1_over_t2: float = 0.0) -> Scan:
    rows = []
    for p in p_grid:
        s = saving_fraction(OverheadModel(p, r_bar, u_bar, t1_over_t2))
        rows.append(ScanRow(p=p, saving=s, speedup=predicted_speedup(s, t1_over_t2)))
    increasing = all(b.saving > a.saving for a, b in zip(rows, rows[1:]))
    return Scan(rows=rows, strictly_increasing=increasing)


def theory_table(p_grid: Iterable[float], r_bar: float, u_bar: float, t1_over_t2: float = 0.0,
                 runs: int = 0, seed: int | None = 0) -> list[dict]:
    """Rows of ``p, s_theory, s_mc, se, I_theory``; Monte Carlo needs integral r and u."""
    rng = np.random.default_rng(seed)
    out = []
    for p in p_grid:
        s = saving_fraction(OverheadModel(p, r_bar, u_bar, t1_over_t2))
        row = {"p": p, "s_theory": s, "s_mc": None, "se": None,
               "I_theory": predicted_speedup(s, t1_over_t2)}
        if runs:
            if r_bar != int(r_bar) or u_bar != int(u_bar):
                raise ValueError("Monte Carlo needs integral r and u")
            est = monte_carlo_saving(p, int(r_bar), int(u_bar), runs, rng)
            row["s_mc"], row["se"] = est.mean, est.se
        out.append(row)
    return out


def format_theory_csv(rows: Iterable[dict]) -> str:
    lines = ["p,s_theory,s_mc,se,I_theory"]
    for r in rows:
        mc = "" if r["s_mc"] is None else f"{r['s_mc']:.6f}"
        se = "" if r["se"] is None else f"{r['se']:.6f}"
        lines.append(f"{r['p']:g},{float(r['s_theory']):.6f},{mc},{se},{float(r['I_theory']):.6f}")
    return "\n".join(lines) + "\n"
