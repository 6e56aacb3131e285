"""The directed fuzzing loop and multi-trial campaigns.

One round on a seed: ask the power schedule for an energy ``n``, derive ``n``
mutants, run each under the cut-the-loss hook, record crashes and admit runs
with new coverage to the queue. Virtual time is the running total of executed
blocks.
"""

from __future__ import annotations

import logging
import random
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..cutloss import CutLossConfig, Phase, make_hook
from ..distance import DistanceMap, compute_distance_map, read_distance_file, seed_distance
from ..icfg import BlockId, ICfg, execution_view, load_icfg, reverse_reachable_blocks
from ..scheduler import AnnealState, Seed, SeedQueue, energy, phase_at
from ..vm import ExecutionResult, Program, Status, execute
from .config import CampaignConfig, ConfigError, format_config, load_seeds
from .coverage import CoverageMap
from .mutate import mutate

log = logging.getLogger(__name__)

TIMEOUT_MARK = "TIMEOUT"


@dataclass(frozen=True)
class CrashRecord:
    input: bytes
    crash_site: BlockId
    found_at: float
    lineage: tuple[int, ...]


@dataclass
class TrialResult:
    trial: int
    rng_seed: int
    executions: int = 0
    executed_blocks: int = 0
    clock: float = 0
    status_counts: dict = field(default_factory=lambda: {s.value: 0 for s in Status})
    tp_cuts: int = 0
    fp_cuts: int = 0
    # cut block cannot reach the target but a pending return could have
    return_path_cuts: int = 0
    seeds_admitted: int = 0
    # per full (uncut) run: blocks before the first unreachable one, and the rest
    reach_blocks: int = 0
    unreach_blocks: int = 0
    full_runs: int = 0
    unreach_runs: int = 0
    tte: dict = field(default_factory=dict)
    crash_hits: dict = field(default_factory=dict)
    crashes: list = field(default_factory=list)
    # (clock, covered map slots, distance of the admitted seed)
    series: list = field(default_factory=list)

    @property
    def cut_runs(self) -> int:
        return self.status_counts[Status.CUT.value]


class TrialContext:
    """Mutable state of one trial: queue, coverage, clock and RNG streams."""

    def __init__(self, graph: ICfg, dm: DistanceMap, cfg: CampaignConfig, trial: int):
        self.graph = graph
        self.prog = Program(graph)
        self.dm = dm
        self.cfg = cfg
        self.target = graph.last_target
        trial_seed = cfg.rng_seed + trial
        self.rng = random.Random(trial_seed)
        # cut decisions draw from their own stream so that toggling cutting off
        # never shifts the mutation stream
        self.cut_rng = random.Random(f"cut-the-loss/{trial_seed}")
        self.coverage = CoverageMap(cfg.map_size)
        self.queue = SeedQueue()
        self.anneal = AnnealState(t_x=cfg.t_x, schedule=cfg.schedule, base_energy=cfg.base_energy)
        cut_cfg = CutLossConfig(p=cfg.p, mode=cfg.mode, granularity=cfg.granularity)
        self.hooks = {ph: make_hook(dm, cut_cfg, ph, self.cut_rng) for ph in Phase}
        index = graph.block_index
        self.exec_reach = {index[b] for b in reverse_reachable_blocks(execution_view(graph))}
        self.unreachable = {index[b] for b in dm.unreachable_blocks()}
        self.result = TrialResult(trial=trial, rng_seed=trial_seed)
        self.stopped = False
        self._wall_start = time.perf_counter()
        self._vclock = 0

    def now(self) -> float:
        if self.cfg.time_mode == "wall":
            return time.perf_counter() - self._wall_start
        return self._vclock

    def budget_left(self) -> bool:
        return not self.stopped and self.now() < self.cfg.budget

    def run(self, data: bytes, phase: Phase | None) -> ExecutionResult:
        hook = None if phase is None else self.hooks[phase]
        res = execute(self.prog, data, hook, self.cfg.step_limit)
        self._vclock += res.steps
        r = self.result
        r.executions += 1
        r.executed_blocks += res.steps
        r.status_counts[res.status.value] += 1
        if res.status is Status.CUT:
            self._classify_cut(res)
        else:
            self._record_segments(res)
        return res

    def _record_segments(self, res: ExecutionResult) -> None:
        unreachable = self.unreachable
        first = next((i for i, b in enumerate(res.path) if b in unreachable), res.steps)
        self.result.reach_blocks += first
        self.result.unreach_blocks += res.steps - first
        self.result.full_runs += 1
        if first < res.steps:
            self.result.unreach_runs += 1

    def _classify_cut(self, res: ExecutionResult) -> None:
        r = self.result
        if res.path[-1] in self.exec_reach:
            r.fp_cuts += 1
            return
        r.tp_cuts += 1
        calls, succ, reach = self.prog.calls, self.prog.succ, self.exec_reach
        for site, call_idx in reversed(res.stack):
            if any(c in reach for c in calls[site][call_idx:]) or any(s in reach for s in succ[site]):
                r.return_path_cuts += 1
                break

    def record_crash(self, res: ExecutionResult, data: bytes, lineage: tuple[int, ...]) -> None:
        site = str(res.crash_site)
        r = self.result
        r.crash_hits[site] = r.crash_hits.get(site, 0) + 1
        if site not in r.tte:
            found = self.now()
            r.tte[site] = found
            r.crashes.append(CrashRecord(data, res.crash_site, found, lineage))
            log.debug("trial %d: crash at %s after %s", r.trial, site, found)
            if self.cfg.stop_on_target and res.crash_site == self.target:
                self.stopped = True

    def admit(self, res: ExecutionResult, data: bytes, parent: Optional[int]) -> Seed:
        d = seed_distance(res.trace, self.dm)
        seed = self.queue.admit(data, d, self.now(), parent)
        self.anneal.observe(d)
        r = self.result
        r.seeds_admitted += 1
        r.series.append((self.now(), self.coverage.covered_slots(), d))
        return seed

    def lineage(self, seed: Seed) -> tuple[int, ...]:
        chain = []
        cur: Optional[Seed] = seed
        while cur is not None:
            chain.append(cur.id)
            cur = self.queue.seeds[cur.parent] if cur.parent is not None else None
        return tuple(reversed(chain))


def dry_run(ctx: TrialContext, inputs: Sequence[bytes]) -> None:
    """Execute the initial corpus uncut and admit every non-crashing input."""
    for data in inputs:
        if not ctx.budget_left():
            return
        res = ctx.run(data, None)
        if res.status is Status.CRASH:
            ctx.record_crash(res, data, ())
            continue
        ctx.coverage.merge(ctx.coverage.classify(res.path))
        ctx.admit(res, data, None)


def fuzz_one(seed: Seed, ctx: TrialContext) -> tuple[list[ExecutionResult], list[Seed]]:
    n = energy(seed, ctx.now(), ctx.anneal)
    seed.fuzz_count += 1
    results: list[ExecutionResult] = []
    admitted: list[Seed] = []
    cov = ctx.coverage
    for _ in range(n):
        if not ctx.budget_left():
            break
        data = mutate(seed.input, ctx.rng, ctx.cfg.max_len)
        res = ctx.run(data, phase_at(ctx.now(), ctx.anneal))
        results.append(res)
        if res.status is Status.CRASH:
            ctx.record_crash(res, data, ctx.lineage(seed))
        elif res.status is not Status.TIMEOUT:
            run_map = cov.classify(res.path)
            if cov.has_new_bits(run_map):
                cov.merge(run_map)
                admitted.append(ctx.admit(res, data, seed.id))
    return results, admitted


def run_trial(graph: ICfg, dm: DistanceMap, inputs: Sequence[bytes], cfg: CampaignConfig,
              trial: int) -> TrialResult:
    ctx = TrialContext(graph, dm, cfg, trial)
    dry_run(ctx, inputs)
    while ctx.budget_left() and len(ctx.queue):
        fuzz_one(ctx.queue.next_seed(), ctx)
    ctx.result.clock = ctx.now()
    return ctx.result


@dataclass
class CampaignReport:
    config: CampaignConfig
    trials: list[TrialResult]
    crash_sites: list[str]
    target: str

    def _fmt_time(self, t) -> str:
        if t is None:
            return TIMEOUT_MARK
        if self.config.time_mode == "virtual":
            return str(int(t))
        return f"{t:.6f}"

    COLUMNS = ("trial", "rng_seed", "executions", "executed_blocks", "ok", "crash", "cut",
               "timeout", "tp_cuts", "fp_cuts", "return_path_cuts", "seeds_admitted",
               "reach_blocks", "unreach_blocks", "full_runs", "unreach_runs")

    def to_csv(self) -> str:
        """Per-trial results. Configuration is deliberately left out (see ``summary``)."""
        header = list(self.COLUMNS) + [f"tte:{s}" for s in self.crash_sites]
        lines = [",".join(header)]
        for t in sorted(self.trials, key=lambda t: t.trial):
            row = [t.trial, t.rng_seed, t.executions, t.executed_blocks,
                   *(t.status_counts[s.value] for s in Status),
                   t.tp_cuts, t.fp_cuts, t.return_path_cuts, t.seeds_admitted,
                   t.reach_blocks, t.unreach_blocks, t.full_runs, t.unreach_runs]
            row += [self._fmt_time(t.tte.get(s)) for s in self.crash_sites]
            lines.append(",".join(str(v) for v in row))
        return "\n".join(lines) + "\n"

    def series_csv(self) -> str:
        lines = ["trial,clock,covered_slots,seed_distance"]
        for t in sorted(self.trials, key=lambda t: t.trial):
            for clock, covered, d in t.series:
                dist = "-1" if d is None else f"{d:.4f}"
                lines.append(f"{t.trial},{self._fmt_time(clock)},{covered},{dist}")
        return "\n".join(lines) + "\n"

    def tte_values(self, site: str | None = None) -> list[Optional[float]]:
        site = self.target if site is None else site
        return [t.tte.get(site) for t in sorted(self.trials, key=lambda t: t.trial)]

    def successes(self, site: str | None = None) -> int:
        return sum(v is not None for v in self.tte_values(site))

    def median_tte(self, site: str | None = None) -> float:
        """Median over all trials with timeouts counted as infinitely late."""
        vals = [float("inf") if v is None else v for v in self.tte_values(site)]
        return statistics.median(vals)

    @property
    def cut_runs(self) -> int:
        return sum(t.cut_runs for t in self.trials)

    @property
    def tp_cuts(self) -> int:
        return sum(t.tp_cuts for t in self.trials)

    @property
    def fp_cuts(self) -> int:
        return sum(t.fp_cuts for t in self.trials)

    def summary(self) -> str:
        unit = "executed blocks (virtual time)" if self.config.time_mode == "virtual" else "seconds"
        out = [
            "# campaign report",
            f"# time unit: {unit}; TTE is time to first crash at a site, "
            f"{TIMEOUT_MARK} when not reached within budget",
            "",
            "## configuration",
            format_config(self.config).rstrip(),
            "",
            f"target: {self.target}",
            f"trials: {len(self.trials)}",
            f"executions: {sum(t.executions for t in self.trials)}",
            f"executed blocks: {sum(t.executed_blocks for t in self.trials)}",
            f"cut runs: {self.cut_runs} (true positive {self.tp_cuts}, false positive "
            f"{self.fp_cuts}, return-path {sum(t.return_path_cuts for t in self.trials)})",
            "",
            "## time to exposure",
        ]
        for site in self.crash_sites:
            vals = self.tte_values(site)
            ok = [v for v in vals if v is not None]
            mean = self._fmt_time(statistics.fmean(ok)) if ok else "T.O."
            med = self.median_tte(site)
            med_s = "T.O." if med == float("inf") else self._fmt_time(med)
            tag = "  (target)" if site == self.target else ""
            out.append(f"{site:>16}  mean {mean:>10}  median {med_s:>10}  "
                       f"success {len(ok)}/{len(vals)}{tag}")
        return "\n".join(out) + "\n"


def load_campaign_inputs(cfg: CampaignConfig) -> tuple[ICfg, DistanceMap, list[bytes]]:
    try:
        graph = load_icfg(cfg.graph)
    except OSError as exc:
        raise ConfigError(f"cannot read graph {cfg.graph}: {exc}") from None
    if cfg.distances is not None:
        try:
            text = cfg.distances.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read distances {cfg.distances}: {exc}") from None
        dm = read_distance_file(text, graph)
    else:
        dm = compute_distance_map(graph, cfg.c_mult)
    return graph, dm, load_seeds(cfg.seeds, cfg.max_len)


def run_campaign(cfg: CampaignConfig, graph: ICfg | None = None, dm: DistanceMap | None = None,
                 inputs: Sequence[bytes] | None = None) -> CampaignReport:
    """Run ``cfg.trials`` independent trials; explicit arguments override files named in ``cfg``."""
    if graph is None or inputs is None:
        g, d, s = load_campaign_inputs(cfg)
        graph = graph or g
        dm = dm or (d if graph is g else None)
        inputs = s if inputs is None else inputs
    if dm is None:
        dm = compute_distance_map(graph, cfg.c_mult)
    if cfg.jobs > 1 and cfg.trials > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = [pool.submit(run_trial, graph, dm, inputs, cfg, i) for i in range(cfg.trials)]
            trials = [f.result() for f in futures]
    else:
        trials = [run_trial(graph, dm, inputs, cfg, i) for i in range(cfg.trials)]
    sites = [str(b) for b in graph.blocks if b in graph.crash_blocks]
    return CampaignReport(config=cfg, trials=trials, crash_sites=sites, target=str(graph.last_target))

