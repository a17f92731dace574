import io
import math

import numpy as np
import pytest

from convprim.bench import (
    CSV_COLUMNS,
    GRID,
    BenchRecord,
    ExperimentPlan,
    emit_csv,
    load_plan,
    parse_csv,
    read_csv,
    regress,
    run_experiment,
    run_sweep,
    grid_config,
)
from convprim.bench.cli import main
from convprim.bench.harness import measure, ols
from convprim.errors import ConfigurationError, InsufficientDataError
from convprim.layer import LayerSpec


def record(**kw):
    base = dict(experiment=1, primitive="standard", path="ref", groups=1, kernel=3,
                input_width=4, in_channels=2, out_channels=2, dec_input=0, dec_weight=0,
                dec_output=-8, seed=0, repeats=50, macs_theoretical=100, params=36,
                latency_mean_ns=1.0, latency_std_ns=0.0, mul_count=100, add_sub_count=100,
                abs_count=0, loads=150, stores=32)
    base.update(kw)
    return BenchRecord(**base)


def test_grid_defaults():
    assert GRID[1].swept_parameter == "groups"
    assert GRID[1].fixed == {"kernel": 3, "input_width": 10, "in_channels": 128,
                               "out_channels": 64, "dec_input": 0, "dec_weight": 0,
                               "dec_output": -8}
    assert GRID[2].sweep_values == (1, 3, 5, 7, 9, 11)
    assert GRID[2].fixed["groups"] == 2
    assert GRID[3].sweep_values[0] == 8 and GRID[3].sweep_values[-1] == 32
    assert GRID[4].swept_parameter == "in_channels"
    assert GRID[5].swept_parameter == "out_channels"
    for plan in GRID.values():
        for v in plan.sweep_values:
            plan.spec_at(v, "grouped")  # every default grouped point is valid


def test_filters_alias():
    plan = ExperimentPlan(9, "filters", [4, 8], dict(groups=1, kernel=1, input_width=2,
                                                     in_channels=2))
    assert plan.swept_parameter == "out_channels"


def test_invalid_points_are_skipped(caplog):
    plan = ExperimentPlan(7, "groups", [1, 3, 2], dict(kernel=1, input_width=3, in_channels=4,
                                                       out_channels=4))
    recs = run_experiment(plan, "grouped", "ref", repeats=1)
    assert [r.groups for r in recs] == [1, 2]
    assert "skipping groups=3" in caplog.text


def test_measure_rejects_fast_add():
    with pytest.raises(ConfigurationError):
        measure(LayerSpec("add", 3, 1, 1, 1), "fast", repeats=1)


def test_grouped_macs_halve_when_groups_double():
    recs = run_experiment(GRID[1], "grouped", "ref", repeats=1)
    macs = [r.macs_theoretical for r in recs]
    assert all(a == 2 * b for a, b in zip(macs, macs[1:]))
    assert all(r.mul_count == r.macs_theoretical for r in recs)


def test_non_timing_fields_deterministic():
    a = run_experiment(GRID[3], "shift", "fast", repeats=1, seed=3)
    b = run_experiment(GRID[3], "shift", "fast", repeats=1, seed=3)
    assert [r.non_timing() for r in a] == [r.non_timing() for r in b]


def test_latency_grows_with_kernel():
    recs = run_experiment(GRID[2], "standard", "ref", repeats=5)
    lat = [r.latency_mean_ns for r in recs]
    assert lat == sorted(lat), lat


def test_regress_perfect_line():
    recs = [record(macs_theoretical=m, latency_mean_ns=3.0 * m + 7) for m in (10, 20, 40, 80)]
    res = regress(recs, "macs", "latency")
    assert res.r2 == pytest.approx(1.0, abs=1e-12)
    assert res.slope == pytest.approx(3e-9)
    assert res.intercept == pytest.approx(7e-9)


def test_regress_constant_y():
    recs = [record(macs_theoretical=m, latency_mean_ns=5.0) for m in (1, 2, 3)]
    assert regress(recs).r2 == 0.0


def test_regress_needs_three_points():
    with pytest.raises(InsufficientDataError):
        regress([record(), record(macs_theoretical=2)])
    with pytest.raises(InsufficientDataError):
        ols([1, 1, 1], [1, 2, 3])


def test_regress_r2_matches_numpy(rng):
    x = rng.uniform(0, 100, 30)
    y = 2 * x + rng.normal(0, 10, 30)
    _, _, r2 = ols(x, y)
    assert r2 == pytest.approx(np.corrcoef(x, y)[0, 1] ** 2)


def test_csv_empty_is_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    emit_csv([], path)
    assert path.read_text() == ",".join(CSV_COLUMNS) + "\n"
    assert read_csv(path) == []


def test_csv_round_trip(tmp_path):
    recs = [record(latency_mean_ns=1234.5678901234, latency_std_ns=0.1),
            record(primitive="depthwise_separable", path="fast", latency_mean_ns=1e-3)]
    path = tmp_path / "two.csv"
    emit_csv(recs[:1], path)
    assert len(path.read_text().splitlines()) == 2
    emit_csv(recs, path)
    assert read_csv(path) == recs


def test_csv_header_order():
    buf = io.StringIO()
    emit_csv([record()], buf)
    assert buf.getvalue().splitlines()[0] == (
        "experiment,primitive,path,groups,kernel,input_width,in_channels,out_channels,"
        "dec_input,dec_weight,dec_output,seed,repeats,macs_theoretical,params,"
        "latency_mean_ns,latency_std_ns,mul_count,add_sub_count,abs_count,loads,stores")


def test_csv_io_error(tmp_path):
    with pytest.raises(OSError, match="cannot write"):
        emit_csv([], tmp_path / "missing" / "x.csv")


def test_csv_rejects_foreign_header():
    with pytest.raises(ConfigurationError):
        parse_csv("a,b\n1,2\n")


def test_full_grid_row_count():
    cfg = grid_config(repeats=1)
    recs = run_sweep(cfg)
    points = sum(len(p.sweep_values) for p in GRID.values())
    # five primitives on the reference path, four on the fast path (no add)
    assert len(recs) == points * 5 + points * 4
    assert not [r for r in recs if r.primitive == "add" and r.path == "fast"]
    buf = io.StringIO()
    emit_csv(recs, buf)
    assert [r.non_timing() for r in parse_csv(buf.getvalue())] == [r.non_timing() for r in recs]


PLAN = """\
experiment: 3
groups: 2
kernel: 3
in_channels: 4
out_channels: 4
primitives: [standard, dwsep]
paths: [ref, fast]
repeats: 2
seed: 5
sweep:
  parameter: input_width
  values: [4, 6, 8]
"""


def test_load_plan(tmp_path):
    path = tmp_path / "plan.yaml"
    path.write_text(PLAN)
    cfg = load_plan(path)
    assert cfg.repeats == 2 and cfg.seed == 5
    assert cfg.plans[0].sweep_values == (4, 6, 8)
    assert cfg.plans[0].fixed["in_channels"] == 4
    recs = run_sweep(cfg)
    assert len(recs) == 3 * 2 * 2
    assert {r.primitive for r in recs} == {"standard", "depthwise_separable"}


def test_load_plan_multi(tmp_path):
    path = tmp_path / "plans.yaml"
    path.write_text("repeats: 1\nplans:\n  - experiment: 2\n    sweep: {parameter: kernel, values: [1, 3]}\n"
                    "  - experiment: 5\n    sweep: {parameter: filters, values: [4]}\n")
    cfg = load_plan(path)
    assert [p.experiment_id for p in cfg.plans] == [2, 5]
    assert cfg.plans[0].fixed["input_width"] == 32  # grid defaults fill the rest


def test_load_plan_errors(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("experiment: 1\n")
    with pytest.raises(ConfigurationError):
        load_plan(path)


# -- CLI -------------------------------------------------------------------------


def test_cli_cost(capsys):
    assert main(["cost", "--kind", "grouped", "--kernel", "3", "--width", "32", "--in-ch", "16",
                 "--out-ch", "16", "--groups", "2"]) == 0
    out = capsys.readouterr().out
    assert "macs: 1179648" in out and "complexity_gain: 1/2" in out


def test_cli_cost_bad_groups(capsys):
    assert main(["cost", "--kind", "grouped", "--kernel", "3", "--width", "8", "--in-ch", "6",
                 "--out-ch", "6", "--groups", "4"]) == 1


def test_cli_usage_error_is_config_error():
    with pytest.raises(SystemExit) as e:
        main(["run", "--experiment", "9"])
    assert e.value.code == 1


def test_cli_run_and_regress(tmp_path, capsys):
    out = tmp_path / "exp3.csv"
    assert main(["run", "--experiment", "3", "--primitive", "shift", "--path", "fast",
                 "--repeats", "2", "--seed", "4", "--out", str(out)]) == 0
    recs = read_csv(out)
    assert len(recs) == len(GRID[3].sweep_values)
    assert {r.seed for r in recs} == {4}
    assert main(["regress", "--in", str(out), "--x", "macs", "--y", "latency"]) == 0
    assert "r2=" in capsys.readouterr().out


def test_cli_sweep(tmp_path):
    plan = tmp_path / "plan.yaml"
    plan.write_text(PLAN)
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--plan", str(plan), "--out", str(out)]) == 0
    assert len(read_csv(out)) == 12


def test_cli_io_errors(tmp_path):
    assert main(["regress", "--in", str(tmp_path / "nope.csv")]) == 3
    assert main(["sweep", "--plan", str(tmp_path / "nope.yaml"), "--out", "x.csv"]) == 3


def test_cli_verify(capsys):
    assert main(["verify", "--cases", "8", "--seed", "2"]) == 0
    out = capsys.readouterr().out
    assert out.count("pass ") == 8 and "8/8 cases bit-exact" in out


def test_cli_verify_failure_exit_code(monkeypatch, capsys):
    import convprim.bench.cli as cli
    from convprim.bench.verify import CaseResult

    def broken(cases, seed):
        yield CaseResult(LayerSpec("standard", 2, 1, 1, 1), 0, mismatches=3)

    monkeypatch.setattr(cli, "verify", broken)
    assert main(["verify", "--cases", "1"]) == 2
    assert "FAIL" in capsys.readouterr().out


def test_shipped_plan_file_is_grid():
    from pathlib import Path

    cfg = load_plan(Path(__file__).parent.parent / "scripts" / "grid.yaml")
    assert [p.experiment_id for p in cfg.plans] == [1, 2, 3, 4, 5]
    for p in cfg.plans:
        ref = GRID[p.experiment_id]
        assert (p.swept_parameter, p.sweep_values, p.fixed) == \
            (ref.swept_parameter, ref.sweep_values, ref.fixed)
    assert cfg.repeats == 50
