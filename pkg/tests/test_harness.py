import pytest

from dgfuzz.cli import OUT_ENV, main
from dgfuzz.fuzzer.config import ConfigError
from dgfuzz.harness import (Cell, ExperimentSpec, TteTable, bundled_benchmarks, resolve_benchmark,
                            run_experiment, write_experiment)

from conftest import DATA_DIR

ALL_REACH = """\
function main entry 0
block main:0
block main:1
block main:2
edge main:0 -> main:1
edge main:0 -> main:2
edge main:2 -> main:1
target main:1
"""


@pytest.fixture(autouse=True)
def no_env_out(monkeypatch):
    monkeypatch.delenv(OUT_ENV, raising=False)


def write_campaign(tmp_path, **keys):
    bench = resolve_benchmark("demo_min2")
    lines = [f"graph={bench.graph}", f"seeds={bench.seeds}"]
    lines += [f"{k}={v}" for k, v in keys.items()]
    path = tmp_path / "campaign.cfg"
    path.write_text("\n".join(lines) + "\n")
    return path


def test_bundled_suite():
    assert bundled_benchmarks() == ["demo_min1", "demo_min2", "demo_min3", "demo_min4"]
    with pytest.raises(ConfigError, match="unknown benchmark"):
        resolve_benchmark("demo_min9")


def test_resolve_directory(tmp_path):
    (tmp_path / "graph.icfg").write_text(ALL_REACH)
    (tmp_path / "seeds").mkdir()
    b = resolve_benchmark(tmp_path)
    assert b.graph == tmp_path / "graph.icfg" and b.label == tmp_path.name


def test_distance_all_reachable(tmp_path, capsys):
    g = tmp_path / "g.icfg"
    g.write_text(ALL_REACH)
    assert main(["distance", str(g)]) == 0
    assert " -1" not in capsys.readouterr().out


def test_distance_isolated_component(tmp_path):
    g = tmp_path / "g.icfg"
    g.write_text(ALL_REACH + "function island entry 0\nblock island:0\nblock island:1\n"
                 "edge island:0 -> island:1\n")
    out = tmp_path / "d.txt"
    assert main(["distance", str(g), "-o", str(out)]) == 0
    text = out.read_text()
    assert "island:0 -1\n" in text and "island:1 -1\n" in text


def test_distance_bundled_matches_golden(tmp_path):
    out = tmp_path / "d.txt"
    assert main(["distance", str(resolve_benchmark("demo_min2").graph), "-o", str(out)]) == 0
    assert out.read_text() == (DATA_DIR / "demo_min2.distances").read_text()


def test_distance_bad_graph(tmp_path, capsys):
    g = tmp_path / "g.icfg"
    g.write_text("function main entry 0\nblock main:0\nedge main:0 -> main:4\ntarget main:0\n")
    assert main(["distance", str(g)]) == 2
    assert "undeclared block" in capsys.readouterr().err


def test_fuzz_empty_budget(tmp_path):
    cfg = write_campaign(tmp_path, budget=0, trials=1)
    out = tmp_path / "out"
    assert main(["fuzz", str(cfg), "--out", str(out), "-q"]) == 0
    rows = (out / "report.csv").read_text().splitlines()
    assert len(rows) == 2
    assert rows[1].split(",")[2] == "0"
    assert rows[1].endswith("TIMEOUT")
    assert "time unit" in (out / "summary.txt").read_text()


def test_fuzz_rerun_identical(tmp_path):
    cfg = write_campaign(tmp_path, budget=20000, p=0.1, trials=2)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["fuzz", str(cfg), "--out", str(a), "-q"]) == 0
    assert main(["fuzz", str(cfg), "--out", str(b), "-q"]) == 0
    for name in ("report.csv", "series.csv", "summary.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_fuzz_flags_override_config(tmp_path):
    cfg = write_campaign(tmp_path, budget=0)
    out = tmp_path / "out"
    assert main(["fuzz", str(cfg), "--out", str(out), "-q", "--budget", "5000", "--trials", "2",
                 "--p", "0.5", "--mode", "off"]) == 0
    summary = (out / "summary.txt").read_text()
    assert "budget=5000.0" in summary and "trials: 2" in summary and "mode=off" in summary
    assert len((out / "report.csv").read_text().splitlines()) == 3


def test_fuzz_env_overrides_out_dir(tmp_path, monkeypatch):
    cfg = write_campaign(tmp_path, budget=0)
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "from_env"))
    assert main(["fuzz", str(cfg), "--out", str(tmp_path / "ignored"), "-q"]) == 0
    assert (tmp_path / "from_env" / "report.csv").exists()
    assert not (tmp_path / "ignored").exists()


def test_fuzz_timeouts_still_exit_zero(tmp_path):
    bench = resolve_benchmark("demo_min4")
    cfg = tmp_path / "c.cfg"
    cfg.write_text(f"graph={bench.graph}\nseeds={bench.seeds}\nbudget=3000\n")
    assert main(["fuzz", str(cfg), "--out", str(tmp_path / "o"), "-q"]) == 0


def test_fuzz_writes_crash_inputs(tmp_path):
    cfg = write_campaign(tmp_path, budget=400000, p=0.1, stop_on_target="true")
    out = tmp_path / "o"
    assert main(["fuzz", str(cfg), "--out", str(out), "-q"]) == 0
    crashes = list((out / "crashes").iterdir())
    assert [c.name for c in crashes] == ["trial0_write_rgba_0"]


@pytest.mark.parametrize("text, msg", [
    ("graph=nowhere.icfg\nseeds=s\n", "cannot read graph"),
    ("graph=g\n", "missing required key"),
    ("graph=g\nseeds=s\np=2\n", "p must lie"),
])
def test_fuzz_config_errors_exit_nonzero(tmp_path, capsys, text, msg):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(text)
    assert main(["fuzz", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert msg in capsys.readouterr().err


def test_fuzz_missing_config(tmp_path, capsys):
    assert main(["fuzz", str(tmp_path / "missing.cfg")]) == 2
    assert "cannot read config" in capsys.readouterr().err


def test_fuzz_bad_seed_dir(tmp_path, capsys):
    bench = resolve_benchmark("demo_min2")
    cfg = tmp_path / "c.cfg"
    (tmp_path / "empty").mkdir()
    cfg.write_text(f"graph={bench.graph}\nseeds=empty\n")
    assert main(["fuzz", str(cfg)]) == 2
    assert "is empty" in capsys.readouterr().err


def test_compare_self_speedup(tmp_path, capsys):
    out = tmp_path / "cmp"
    assert main(["compare", "-b", "demo_min2", "--p", "0", "--trials", "1", "--budget", "400000",
                 "--stop-on-target", "--out", str(out)]) == 0
    table = (out / "tte_table.txt").read_text()
    row = next(line for line in table.splitlines() if line.startswith("demo_min2"))
    assert row.split()[-1] == "1.00"
    assert "T.O." not in row
    assert "virtual time" in capsys.readouterr().out


def test_compare_timeout_cells(tmp_path):
    spec = ExperimentSpec(benchmarks=["demo_min4"], p_values=[0.0, 0.1], trials=2, budget=5000)
    result = run_experiment(spec)
    row = next(line for line in result.table.render().splitlines() if line.startswith("demo_min4"))
    assert row.split()[-3:] == ["T.O.", "T.O.", "T.O."]
    assert "T.O.,T.O.,0" in result.table.to_csv()


def test_compare_deterministic(tmp_path):
    spec = ExperimentSpec(benchmarks=["demo_min2", "demo_min3"], p_values=[0.0, 0.2], trials=2,
                          budget=30000, t_x=10000)
    a, b = tmp_path / "a", tmp_path / "b"
    write_experiment(run_experiment(spec), a)
    write_experiment(run_experiment(spec), b)
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_table_partial_success_count():
    table = TteTable(p_values=[0.0, 0.1], trials=7)
    table.targets["bench"] = "f:1"
    table.rows[("bench", "f:1")] = {
        0.0: Cell([100.0] * 7),
        0.1: Cell([10.0, 20.0, 30.0, 40.0, 50.0, 60.0, None]),
    }
    row = table.body()[0]
    assert row[1] == "f:1 *"
    assert row[2] == "100.00"
    assert row[3] == "35.00 (6)"
    assert row[4] == "2.86"
    assert table.speedup(("bench", "f:1"), 0.0) == 1


def test_table_speedup_undefined_when_one_side_times_out():
    table = TteTable(p_values=[0.0, 0.4], trials=3)
    table.rows[("b", "x:0")] = {0.0: Cell([5.0, None, None]), 0.4: Cell([None] * 3)}
    row = table.body()[0]
    assert row[2:] == ["5.00 (1)", "T.O.", "-"]
    assert table.speedup(("b", "x:0"), 0.4) is None


def test_spec_validation():
    with pytest.raises(ConfigError):
        ExperimentSpec(benchmarks=["demo_min2"], trials=0)
    with pytest.raises(ConfigError):
        ExperimentSpec(benchmarks=["demo_min2"], p_values=[1.5])
    with pytest.raises(ConfigError):
        ExperimentSpec(benchmarks=[])


def test_theory_vs_practice_rows():
    spec = ExperimentSpec(benchmarks=["demo_min2"], p_values=[0.0, 0.1], trials=1, budget=20000)
    result = run_experiment(spec)
    (row,) = result.theory_vs_practice()
    assert row["u_bar"] > 0 and row["I_theory"] > 1
    assert "ratio" in result.render_theory()


def test_theory_cli(tmp_path, capsys):
    assert main(["theory", "--r-bar", "7", "--u-bar", "3", "--p-grid", "0.1", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "p,s_theory,s_mc,se,I_theory"
    assert lines[1] == "0.1,0.056100,,,1.059434"
    out = tmp_path / "t.csv"
    assert main(["theory", "--r-bar", "7", "--u-bar", "3", "--runs", "2000", "-o", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 21


def test_theory_cli_rejects_bad_p(capsys):
    assert main(["theory", "--r-bar", "7", "--u-bar", "3", "--p-grid", "1.5"]) == 2
    assert "[0, 1]" in capsys.readouterr().err


def test_benchmarks_cli(capsys):
    assert main(["benchmarks"]) == 0
    assert capsys.readouterr().out.split() == bundled_benchmarks()
