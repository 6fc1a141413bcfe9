import filecmp
import math
import os

import numpy as np
import pytest

from annealed_mpc.bench import cli
from annealed_mpc.bench.config import (
    PRESETS,
    ConfigError,
    load_config,
    parse_seeds,
    parse_text,
    build_config,
)
from annealed_mpc.bench.runner import (
    BudgetParityError,
    RunRecord,
    build_models,
    check_budget_parity,
    run_experiment,
    summarize,
    summary_csv,
    write_outputs,
)
from annealed_mpc.envs import ContactStageRecord, total_contact_score

SMALL = [("budget.samples", "16"), ("budget.iterations", "2"), ("budget.horizon", "5"),
         ("run.steps", "6"), ("run.seeds", "0,1")]


def test_parse_seeds():
    assert parse_seeds("0..3") == [0, 1, 2, 3]
    assert parse_seeds("5, 2,9") == [5, 2, 9]
    for bad in ("3..1", "a", "-2"):
        with pytest.raises(ValueError):
            parse_seeds(bad)
    with pytest.raises(ConfigError, match="run.seeds"):
        build_config(parse_text("run.seeds = "))


def test_unknown_key_reports_location(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("budget.samples = 64\nbudget.smaples = 32\n")
    with pytest.raises(ConfigError) as exc:
        load_config(str(path))
    assert "c.cfg:2" in str(exc.value) and "budget.smaples" in str(exc.value)


def test_bad_values_and_env_keys():
    with pytest.raises(ConfigError, match="budget.samples"):
        build_config(parse_text("budget.samples = many"))
    with pytest.raises(ConfigError, match="env.nope"):
        build_config(parse_text("env.nope = 1"))
    with pytest.raises(ConfigError, match="run.seeds"):
        build_config(parse_text("run.seeds = 4..1"))
    with pytest.raises(ConfigError, match="solvers"):
        build_config(parse_text("solvers = dial, ilqr"))
    with pytest.raises(ConfigError):
        build_config(parse_text("no equals sign here"))
    with pytest.raises(ConfigError, match="--preset"):
        load_config(preset="gpu-budget")


def test_layering_and_comments(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("# comment\nenv.id = pendulum  # trailing\nenv.damping = 0.2\n"
                    "budget.samples = 64\n")
    cfg = load_config(str(path), "paper-budget", [("budget.samples", "8")])
    assert cfg.env_id == "pendulum" and cfg.env_params == {"damping": 0.2}
    assert cfg.samples == 8 and cfg.horizon == 20 and cfg.dt == 0.02


def test_paper_budget_preset():
    cfg = load_config(preset="paper-budget")
    assert (cfg.samples, cfg.horizon, cfg.dt) == (2048, 20, 0.02)
    assert 1.0 / cfg.dt == pytest.approx(50.0)


def test_other_presets_resolve():
    for name in PRESETS:
        load_config(preset=name)
    c = load_config(preset="crate-climbing")
    assert (c.samples, c.horizon, c.iterations) == (4096, 40, 4)
    assert load_config(preset="trials-jump").seeds == list(range(5))
    assert load_config(preset="trials-climb").seeds == list(range(10))
    assert load_config(preset="wall-jump").seeds == list(range(100))


def test_budget_parity_error():
    cfg = load_config(overrides=[("solvers", "dial, mppi-explore"), ("mppi.iterations", "1")])
    _, model = build_models(cfg)
    with pytest.raises(BudgetParityError):
        check_budget_parity(cfg, model)
    cfg = load_config(overrides=[("solvers", "dial, mppi-explore, cmaes")])
    assert check_budget_parity(cfg, model) == cfg.samples * cfg.iterations


def test_empty_mismatch_models_coincide():
    true_model, solver_model = build_models(load_config(overrides=[("env.id", "hopper")]))
    assert true_model == solver_model
    assert true_model.checksum() == solver_model.checksum()


def test_mismatch_isolated_from_true_model():
    cfg = load_config(preset="hopper-mismatch", overrides=SMALL[:4] + [("run.seeds", "0")])
    true_model, solver_model = build_models(cfg)
    assert solver_model.body_mass == 4.0 and true_model.body_mass != 4.0
    before = true_model.checksum()
    recs = run_experiment(cfg)
    assert true_model.checksum() == before
    assert recs[0].states.shape[0] == cfg.steps + 1


def _rec(solver, seed, cost, success=None, contact=math.nan):
    return RunRecord(solver, seed, np.zeros((1, 1)), np.zeros((2, 1)), cost, success=success,
                     contact_score=contact)


def test_single_seed_has_zero_std():
    row = summarize([_rec("dial", 0, 3.5)])[0]
    assert row.std_cost == 0.0 and row.mean_cost == 3.5 and row.trials == 1


def test_success_rate_counts_by_hand():
    recs = [_rec("a", s, 1.0, success=ok) for s, ok in enumerate([True, False, True, True, False])]
    assert summarize(recs)[0].success_rate == 3 / 5
    assert math.isnan(summarize([_rec("b", 0, 1.0)])[0].success_rate)


def test_contact_score_is_passed_through():
    score = total_contact_score([ContactStageRecord(0, [0.2, 0.1]), ContactStageRecord(1, [0.3])])
    row = summarize([_rec("dial", 0, 1.0, contact=score)])[0]
    assert row.contact_score == score
    assert repr(score) in summary_csv([row])


def test_wall_jump_success_matches_hand_count():
    cfg = load_config(preset="wall-jump", overrides=SMALL + [("solvers", "mppi-exploit")])
    true_model, _ = build_models(cfg)
    recs = run_experiment(cfg)
    hand = [bool(true_model.is_success(r.states)) for r in recs]
    assert [r.success for r in recs] == hand
    assert summarize(recs)[0].success_rate == sum(hand) / len(hand)


def test_identical_config_gives_identical_bytes(tmp_path):
    cfg = load_config(overrides=SMALL + [("solvers", "dial, mppi-explore, cmaes")])
    for sub in ("a", "b"):
        recs = run_experiment(cfg)
        write_outputs(recs, summarize(recs), str(tmp_path / sub))
    cmp = filecmp.dircmp(tmp_path / "a", tmp_path / "b")
    assert not cmp.diff_files and not cmp.left_only and not cmp.right_only
    for name in ("runs.csv", "summary.csv", "summary.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    traj = tmp_path / "a" / "trajectories" / "dial" / "seed_1.csv"
    assert traj.read_text().startswith("# annealed-mpc")


def _argv(*extra):
    sets = []
    for k, v in SMALL:
        sets += ["--set", f"{k}={v}"]
    return list(extra) + sets


def test_cli_exit_codes(tmp_path, capsys):
    out = str(tmp_path / "o")
    assert cli.main(_argv("run", "--solver", "dial", "--out", out)) == 0
    assert os.path.exists(os.path.join(out, "summary.csv"))
    assert cli.main(_argv("run", "--solver", "dial,cmaes", "--out", out)) == cli.EXIT_CONFIG
    assert cli.main(_argv("compare", "--set", "bogus.key=1", "--out", out)) == cli.EXIT_CONFIG
    assert cli.main(_argv("compare", "--solver", "dial,mppi-exploit", "--set",
                          "mppi.iterations=1", "--out", out)) == cli.EXIT_RUNTIME
    err = capsys.readouterr().err
    assert "bogus.key" in err and "rollouts" in err


def test_cli_sweep_and_keys(tmp_path, capsys):
    out = str(tmp_path / "s")
    assert cli.main(_argv("sweep", "--seed", "0", "--set", "sweep.beta1=0.5,2",
                          "--out", out)) == 0
    lines = (tmp_path / "s" / "summary.csv").read_text().splitlines()
    assert "beta1" in lines[1] and len(lines) == 4
    assert cli.main(["keys"]) == 0
    assert "budget.samples" in capsys.readouterr().out


def test_cli_landscape(tmp_path):
    out = tmp_path / "land"
    assert cli.main(["landscape", "--out", str(out)]) == 0
    names = sorted(os.listdir(out))
    assert {"drift.csv", "landscape_1d.csv", "landscape_1d.svg", "landscape_2d.svg"} <= set(names)
    first = {n: (out / n).read_bytes() for n in names}
    assert cli.main(["landscape", "--out", str(out)]) == 0
    assert all((out / n).read_bytes() == b for n, b in first.items())
