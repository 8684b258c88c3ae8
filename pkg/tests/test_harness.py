"""Harness tests: aggregation math, CSV round trips, reproducibility across
reruns and thread counts, config parsing, and the CLI surface."""

import filecmp
import os

import pytest

from stomp import cli, harness, presets
from stomp.harness import (ConfigError, ExperimentConfig, MenuSpec, RunLog,
                           TaskSpec, aggregate, load_config)


def _tiny_cfg(out_dir, runs=2):
    """A fast two-room config exercising every stage."""
    rr = TaskSpec("rr", hallway="H1", bonus=1.0)
    return ExperimentConfig(
        experiment_id="tiny", environment="two_room", runs=runs, base_seed=7,
        out_dir=str(out_dir),
        task_groups=((rr,),),
        option_steps=4000, option_eval_cadence=2000,
        model_steps=4000, model_eval_cadence=2000,
        snapshot_steps=(2000,),
        plan_updates=600, plan_eval_cadence=100,
        menus=(MenuSpec("primitives", ("primitives",)),
               MenuSpec("rr", ("primitives", rr.task_id))),
        snapshot_plan_menus=("rr",),
        export_option_maps=True,
    )


def test_aggregate_single_run_has_zero_stderr():
    log = RunLog()
    log.append(0, "s", "x", 1, "m", 3.0)
    rows = aggregate(log)
    assert rows == [("s", "x", 1.0, "m", 3.0, 0.0, 1)]


def test_aggregate_equal_values_zero_stderr():
    log = RunLog()
    for r in (0, 1):
        log.append(r, "s", "x", 1, "m", 5.0)
    ((_, _, _, _, mean, stderr, n),) = aggregate(log)
    assert (mean, stderr, n) == (5.0, 0.0, 2)


def test_aggregate_zero_and_two():
    log = RunLog()
    log.append(0, "s", "x", 1, "m", 0.0)
    log.append(1, "s", "x", 1, "m", 2.0)
    ((_, _, _, _, mean, stderr, n),) = aggregate(log)
    assert mean == 1.0
    assert stderr == pytest.approx(1.0)  # stddev sqrt(2) / sqrt(2)


def test_aggregate_rejects_mismatched_grids():
    log = RunLog()
    log.append(0, "s", "x", 1, "m", 0.0)
    log.append(1, "s", "x", 2, "m", 0.0)
    with pytest.raises(ValueError):
        aggregate(log)


def test_runlog_csv_round_trip(tmp_path):
    log = RunLog()
    log.append(0, "stage:a", "step", 100, "metric", 0.123456789012345)
    log.append(1, "stage:a", "step", 100, "metric", -1.0)
    path = tmp_path / "log.csv"
    log.to_csv(path)
    back = RunLog.from_csv(path)
    assert back.records == log.records


def test_experiment_reproducible_and_thread_invariant(tmp_path):
    out1 = harness.run_experiment(_tiny_cfg(tmp_path / "a"), threads=1)
    out2 = harness.run_experiment(_tiny_cfg(tmp_path / "b"), threads=2)
    for name in ("run_000.csv", "run_001.csv", "all_runs.csv", "aggregate.csv",
                 "layout.txt"):
        assert filecmp.cmp(os.path.join(out1, name), os.path.join(out2, name),
                           shallow=False), name


def test_csv_row_counts_complete(tmp_path):
    cfg = _tiny_cfg(tmp_path / "c", runs=3)
    out = harness.run_experiment(cfg)
    per_run = [len(RunLog.from_csv(os.path.join(out, f"run_{r:03d}.csv")))
               for r in range(3)]
    assert len(set(per_run)) == 1  # same logged points per run
    combined = RunLog.from_csv(os.path.join(out, "all_runs.csv"))
    assert len(combined) == sum(per_run)


def test_snapshot_models_serialized(tmp_path):
    cfg = _tiny_cfg(tmp_path / "d", runs=1)
    out = harness.run_experiment(cfg)
    snap_dir = os.path.join(out, "models")
    names = sorted(os.listdir(snap_dir))
    assert any("step2000" in n for n in names)
    assert any(n.startswith("option_rr_H1_w1") for n in names)


def test_config_validation_errors():
    cfg = _tiny_cfg("x")
    cfg.runs = 0
    with pytest.raises(ConfigError):
        cfg.validate()
    cfg = _tiny_cfg("x")
    cfg.menus = (MenuSpec("bad", ("primitives", "rr:H9:w1")),)
    with pytest.raises(ConfigError):
        cfg.validate()
    cfg = _tiny_cfg("x")
    cfg.task_groups = ((TaskSpec("rr", hallway="H9", bonus=1.0),),)
    from stomp import gridworld
    with pytest.raises(ConfigError):
        cfg.validate(gridworld.build_two_room())


def test_presets_all_validate():
    for name in presets.PRESETS:
        cfg = presets.get_preset(name, runs=2)
        cfg.validate()


def test_preset_hyperparameters_pin_reference_values():
    fig1 = presets.get_preset("fig1")
    assert fig1.option_hp.alpha == 0.1 and fig1.option_hp.alpha_prime == 0.1
    assert fig1.option_hp.lam == 0.0 and fig1.option_hp.lam_prime == 0.0
    assert fig1.option_hp.alpha_primary == 0.9  # two-room primary TD(0)
    assert fig1.model_hp.alpha_r == 0.1 and fig1.model_hp.alpha_p == 0.1
    assert fig1.option_steps == 50000 and fig1.model_steps == 50000
    assert fig1.plan_updates == 6000 and fig1.runs == 100
    fig5 = presets.get_preset("fig5")
    assert fig5.option_hp.alpha_primary == 0.1  # four-room primary TD(0)
    assert fig5.model_hp.alpha_r == 0.05 and fig5.model_hp.alpha_p == 0.05
    assert fig5.option_steps == 200000 and fig5.model_steps == 200000
    assert fig5.plan_updates == 20000 and fig5.runs == 30
    fig4 = presets.get_preset("fig4")
    bonuses = [g[0].bonus for g in fig4.task_groups]
    assert bonuses == [0.1, 1.0, 10.0, 100.0]


def test_shipped_configs_match_presets():
    root = os.path.join(os.path.dirname(__file__), "..", "configs")
    for name in ("fig1", "fig2", "fig3", "fig4", "fig5"):
        shipped = load_config(os.path.join(root, f"{name}.ini"))
        built = presets.get_preset(name)
        assert shipped.experiment_id == built.experiment_id
        assert shipped.option_steps == built.option_steps
        assert shipped.model_steps == built.model_steps
        assert shipped.plan_updates == built.plan_updates
        assert [m.menu_id for m in shipped.menus] == [m.menu_id for m in built.menus]
        assert ([[s.task_id for s in g] for g in shipped.task_groups]
                == [[s.task_id for s in g] for g in built.task_groups])


def test_config_file_round_trip(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text("""
[experiment]
id = custom_fig1        ; comments allowed
environment = two_room
runs = 4
base_seed = 11

[subtasks]
group1 = rr:H1:1.0, sp:H1

[option_learning]
steps = 12000
alpha = 0.1
alpha_primary = 0.9

[model_learning]
steps = 12000
snapshot_steps = 6000

[planning]
updates = 1000
menu_primitives = primitives
menu_rr = primitives, rr:H1:w1
snapshot_plan_menus = rr
""")
    cfg = load_config(path)
    assert cfg.experiment_id == "custom_fig1"
    assert cfg.runs == 4
    assert cfg.task_groups[0][0].task_id == "rr:H1:w1"
    assert cfg.task_groups[0][1].task_id == "sp:H1"
    assert cfg.option_steps == 12000
    assert cfg.snapshot_steps == (6000,)
    assert [m.menu_id for m in cfg.menus] == ["primitives", "rr"]
    assert cfg.snapshot_plan_menus == ("rr",)


def test_config_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/exp.ini")


def test_cli_validate_layout(capsys):
    assert cli.main(["validate-layout", "two_room"]) == 0
    out = capsys.readouterr().out
    assert "72 non-terminal cells" in out
    assert "verification passed" in out


def test_cli_oracle(tmp_path, capsys):
    cfg_path = tmp_path / "two_room.ini"
    cfg_path.write_text("""
[experiment]
id = oracle_test
environment = two_room

[subtasks]
group1 = rr:H1:1.0
""")
    assert cli.main(["oracle", "--config", str(cfg_path),
                     "--out", str(tmp_path / "oracle")]) == 0
    files = set(os.listdir(tmp_path / "oracle"))
    assert {"v_star.csv", "v_mu.csv", "layout.txt",
            "v_star_rr_H1_w1.csv", "ideal_action_up.csv",
            "ideal_optimal_rr_H1_w1.csv"} <= files


def test_cli_unknown_figure():
    assert cli.main(["reproduce", "fig1", "--runs", "0"]) == 1  # invalid runs


def test_cli_reproduce_smoke(tmp_path):
    # tiniest real preset invocation: fig2 learning stage only
    rc = cli.main(["reproduce", "fig2", "--runs", "1",
                   "--out", str(tmp_path / "fig2")])
    assert rc == 0
    assert os.path.exists(tmp_path / "fig2" / "aggregate.csv")


def test_stage_filtered_commands(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text("""
[experiment]
id = stagetest
environment = two_room
runs = 1

[subtasks]
group1 = rr:H1:1.0

[option_learning]
steps = 3000
eval_cadence = 1500
""")
    rc = cli.main(["learn-options", "--config", str(path),
                   "--out", str(tmp_path / "opt")])
    assert rc == 0
    log = RunLog.from_csv(tmp_path / "opt" / "run_000.csv")
    stages = {rec[1] for rec in log.records}
    assert any(s.startswith("options:") for s in stages)
    assert not any(s.startswith("models:") for s in stages)
