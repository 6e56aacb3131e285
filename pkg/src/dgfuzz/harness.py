"""Experiment orchestration: bundled benchmarks, p sweeps and TTE tables."""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from .cutloss import Mode
from .fuzzer.campaign import CampaignReport, load_campaign_inputs, run_campaign
from .fuzzer.config import CampaignConfig, ConfigError
from .theory import OverheadModel, saving_fraction, predicted_speedup

TIMEOUT_CELL = "T.O."


def benchmarks_root() -> Path:
    return Path(str(resources.files("dgfuzz") / "benchmarks"))


def bundled_benchmarks() -> list[str]:
    root = benchmarks_root()
    return sorted(p.name for p in root.iterdir() if (p / "graph.icfg").is_file())


@dataclass(frozen=True)
class Benchmark:
    label: str
    graph: Path
    seeds: Path


def resolve_benchmark(name_or_dir: str | Path) -> Benchmark:
    """A bundled benchmark name, or a directory holding ``graph.icfg`` and ``seeds/``."""
    path = Path(name_or_dir)
    if not (path / "graph.icfg").is_file():
        path = benchmarks_root() / str(name_or_dir)
    if not (path / "graph.icfg").is_file():
        known = ", ".join(bundled_benchmarks())
        raise ConfigError(f"unknown benchmark {name_or_dir!r} (bundled: {known})")
    return Benchmark(label=path.name, graph=path / "graph.icfg", seeds=path / "seeds")


@dataclass
class ExperimentSpec:
    benchmarks: Sequence[str | Path]
    p_values: Sequence[float] = (0.0, 0.1)
    trials: int = 7
    budget: float = 500_000
    t_x: float = 100_000
    rng_seed: int = 0
    out_dir: Optional[Path] = None
    mode: Mode = Mode.ALWAYS
    granularity: int = 10
    c_mult: int = 10
    base_energy: int = 16
    stop_on_target: bool = False
    time_mode: str = "virtual"
    jobs: int = 1
    t1_over_t2: float = 0.0

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.p_values:
            raise ConfigError("need at least one p value")
        for p in self.p_values:
            if not 0 <= p <= 1:
                raise ConfigError(f"p values must lie in [0, 1], got {p}")
        if not self.benchmarks:
            raise ConfigError("need at least one benchmark")

    def config_for(self, bench: Benchmark, p: float) -> CampaignConfig:
        return CampaignConfig(
            graph=bench.graph, seeds=bench.seeds, p=p, mode=self.mode, t_x=self.t_x,
            budget=self.budget, trials=self.trials, rng_seed=self.rng_seed,
            granularity=self.granularity, c_mult=self.c_mult, base_energy=self.base_energy,
            stop_on_target=self.stop_on_target, time_mode=self.time_mode, jobs=self.jobs)


@dataclass
class Cell:
    values: list[Optional[float]]

    @property
    def successes(self) -> list[float]:
        return [v for v in self.values if v is not None]

    @property
    def mean(self) -> Optional[float]:
        ok = self.successes
        return statistics.fmean(ok) if ok else None

    @property
    def median(self) -> Optional[float]:
        ok = self.successes
        return statistics.median(ok) if ok else None


@dataclass
class TteTable:
    p_values: list[float]
    trials: int
    # (benchmark, crash site) -> p -> cell
    rows: dict[tuple[str, str], dict[float, Cell]] = field(default_factory=dict)
    targets: dict[str, str] = field(default_factory=dict)

    @property
    def baseline(self) -> Optional[float]:
        return 0.0 if 0.0 in self.p_values else None

    def speedup(self, key: tuple[str, str], p: float) -> Optional[float]:
        if self.baseline is None:
            return None
        base, var = self.rows[key][self.baseline].mean, self.rows[key][p].mean
        if base is None or var is None or var == 0:
            return None
        return base / var

    def _cell_text(self, cell: Cell) -> str:
        ok = cell.successes
        if not ok:
            return TIMEOUT_CELL
        text = f"{cell.mean:.2f}"
        if len(ok) < len(cell.values):
            text += f" ({len(ok)})"
        return text

    def _speedup_text(self, key, p) -> str:
        s = self.speedup(key, p)
        if s is not None:
            return f"{s:.2f}"
        cells = self.rows[key]
        if cells[self.baseline].mean is None and cells[p].mean is None:
            return TIMEOUT_CELL
        return "-"

    def _variants(self) -> list[float]:
        return [p for p in self.p_values if p != self.baseline] if self.baseline is not None else []

    def header(self) -> list[str]:
        cols = ["benchmark", "crash_site"]
        cols += ["p=0 (baseline)" if p == self.baseline else f"p={p:g}" for p in self.p_values]
        cols += [f"speedup p={p:g}" for p in self._variants()]
        if self.baseline is not None and not self._variants():
            cols.append("speedup")
        return cols

    def body(self) -> list[list[str]]:
        out = []
        for key in sorted(self.rows):
            bench, site = key
            label = site + (" *" if self.targets.get(bench) == site else "")
            row = [bench, label] + [self._cell_text(self.rows[key][p]) for p in self.p_values]
            variants = self._variants()
            if variants:
                row += [self._speedup_text(key, p) for p in variants]
            elif self.baseline is not None:
                row.append(self._speedup_text(key, self.baseline))
            out.append(row)
        return out

    def render(self) -> str:
        header, body = self.header(), self.body()
        widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
        line = lambda r: "  ".join(c.ljust(w) if i < 2 else c.rjust(w)
                                   for i, (c, w) in enumerate(zip(r, widths)))
        out = [line(header), "  ".join("-" * w for w in widths)]
        out += [line(r) for r in body]
        out.append("")
        out.append(f"mean TTE over successful trials; (k) = k of {self.trials} trials succeeded; "
                   f"{TIMEOUT_CELL} = no trial succeeded; * marks the target site")
        return "\n".join(out) + "\n"

    def to_csv(self) -> str:
        cols = ["benchmark", "crash_site", "is_target"]
        for p in self.p_values:
            cols += [f"mean_tte_p{p:g}", f"median_tte_p{p:g}", f"success_p{p:g}"]
        cols += [f"speedup_p{p:g}" for p in self.p_values]
        lines = [",".join(cols)]
        fmt = lambda v: "T.O." if v is None else f"{v:.2f}"
        for key in sorted(self.rows):
            bench, site = key
            row = [bench, site, str(self.targets.get(bench) == site).lower()]
            for p in self.p_values:
                c = self.rows[key][p]
                row += [fmt(c.mean), fmt(c.median), str(len(c.successes))]
            for p in self.p_values:
                s = self.speedup(key, p)
                row.append("" if s is None else f"{s:.4f}")
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    reports: dict[tuple[str, float], CampaignReport]
    table: TteTable

    def theory_vs_practice(self) -> list[dict]:
        """Predicted speedup from baseline segment statistics next to the measured one."""
        rows = []
        spec = self.spec
        for bench in sorted({b for b, _ in self.reports}):
            base = self.reports.get((bench, 0.0))
            if base is None:
                continue
            runs = sum(t.full_runs for t in base.trials)
            if runs == 0:
                continue
            r_bar = sum(t.reach_blocks for t in base.trials) / runs
            u_bar = sum(t.unreach_blocks for t in base.trials) / runs
            target = base.target
            for p in spec.p_values:
                if p == 0.0:
                    continue
                s = saving_fraction(OverheadModel(p, r_bar, u_bar, spec.t1_over_t2))
                predicted = predicted_speedup(s, spec.t1_over_t2)
                measured = self.table.speedup((bench, target), p)
                rows.append({
                    "benchmark": bench, "p": p, "r_bar": r_bar, "u_bar": u_bar,
                    "s_theory": s, "I_theory": predicted, "I_measured": measured,
                    "ratio": None if measured is None else measured / predicted,
                })
        return rows

    def render_theory(self) -> str:
        lines = ["benchmark    p      r_bar   u_bar   s_theory  I_theory  I_measured  ratio"]
        for r in self.theory_vs_practice():
            meas = "-" if r["I_measured"] is None else f"{r['I_measured']:.2f}"
            ratio = "-" if r["ratio"] is None else f"{r['ratio']:.2f}"
            lines.append(f"{r['benchmark']:<12} {r['p']:<6g} {r['r_bar']:>6.2f}  {r['u_bar']:>6.2f}  "
                         f"{r['s_theory']:>8.4f}  {r['I_theory']:>8.3f}  {meas:>10}  {ratio:>5}")
        lines.append("")
        lines.append("I_theory assumes every test case has exactly r_bar reachable then u_bar "
                     "unreachable blocks; it ignores feedback effects and false positive cuts, "
                     "so the measured speedup is not expected to match it.")
        return "\n".join(lines) + "\n"


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    reports: dict[tuple[str, float], CampaignReport] = {}
    table = TteTable(p_values=list(spec.p_values), trials=spec.trials)
    for name in spec.benchmarks:
        bench = resolve_benchmark(name)
        base_cfg = spec.config_for(bench, spec.p_values[0])
        graph, dm, inputs = load_campaign_inputs(base_cfg)
        sites = [str(b) for b in graph.blocks if b in graph.crash_blocks]
        table.targets[bench.label] = str(graph.last_target)
        for p in spec.p_values:
            report = run_campaign(spec.config_for(bench, p), graph, dm, inputs)
            reports[(bench.label, p)] = report
            for site in sites:
                row = table.rows.setdefault((bench.label, site), {})
                row[p] = Cell(report.tte_values(site))
    return ExperimentResult(spec=spec, reports=reports, table=table)


def write_experiment(result: ExperimentResult, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "tte_table.txt").write_text(result.table.render())
    (out_dir / "tte_table.csv").write_text(result.table.to_csv())
    (out_dir / "theory_vs_practice.txt").write_text(result.render_theory())
    for (bench, p), report in sorted(result.reports.items()):
        stem = f"{bench}_p{p:g}"
        (out_dir / f"{stem}.csv").write_text(report.to_csv())
        (out_dir / f"{stem}_summary.txt").write_text(report.summary())
