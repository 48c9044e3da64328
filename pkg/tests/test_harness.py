"""End-to-end tests: training loop, output files, storage, config loading and the CLI."""

import json

import numpy as np
import pytest
from typer.testing import CliRunner

from causal_alarm_rl.cli import app
from causal_alarm_rl.config import EnvConfig, InitGraphSpec, build_run_config, load_run_config, parse_flat_config
from causal_alarm_rl.core.graph import load_graph
from causal_alarm_rl.errors import ConfigError, InvalidArgumentError
from causal_alarm_rl.orchestrator import ExperimentOrchestrator, emit_metrics, run_experiment, run_k_sweep, run_seed
from causal_alarm_rl.policy.checkpoint import load_checkpoint
from causal_alarm_rl.tools import AnalysisTools, RunStoreTools, TrajectoryTools

runner = CliRunner()

SMALL_ENV_LINES = """\
# three alarm types on four devices
env.num_nodes=4
env.num_types=3
env.step_max=15
env.max_hop=1
env.alpha_range=0.3,0.5
env.mu_range=0.0001,0.0002
env.warmup_time_range=10
env.root_cause_num=3
env.count_cap=5
env.boost_scale=5
truth_edge_prob=0.5
"""

SMALL_TRAIN_LINES = """\
train.hidden_size=16
train.batch_size=8
train.k_epochs=1
train.ppo_update_timestep=16
train.random_sample_timestep=10
train.topk=1
"""


def _with(config, **updates):
    train_updates = {k[len("train_"):]: v for k, v in updates.items() if k.startswith("train_")}
    top = {k: v for k, v in updates.items() if not k.startswith("train_")}
    if train_updates:
        top["train"] = config.train.model_copy(update=train_updates)
    return config.model_copy(update=top)


def test_run_seed_records_every_episode(small_run_config):
    result = run_seed(small_run_config, 0)
    assert [r.episode for r in result.records] == [0, 1, 2]
    assert result.structure_updates == 3
    assert result.graph_reads > 0
    assert result.policy is not None
    for record in result.records:
        assert 1 <= record.intervention_steps <= small_run_config.env.step_max
        assert 0.0 <= record.f1 <= 1.0 and 0.0 <= record.accuracy <= 1.0
        assert record.mean_active_alarms > 0
        assert "wall_ms" not in record.metrics_dict()
    assert result.records[-1].graph_edges == result.learned_graph.num_edges


def test_plain_baseline_never_reads_the_graph(small_run_config):
    result = run_seed(_with(small_run_config, mask_mode="none"), 0)
    assert result.graph_reads == 0
    assert len(result.records) == 3


def test_true_graph_without_discovery_keeps_perfect_metrics(small_run_config):
    config = _with(small_run_config, init_graph=InitGraphSpec(kind="truth"), discovery_enabled=False)
    result = run_seed(config, 1)
    assert result.structure_updates == 0
    assert all(r.f1 == 1.0 and r.shd == 0 for r in result.records)
    assert result.learned_graph == result.initial_graph


def test_dqn_variant_runs(small_run_config):
    config = _with(
        small_run_config,
        train_algo="dqn",
        train_dqn_update_timestep=2,
        train_random_sample_timestep=0,
        train_batch_size=2,
        episodes=2,
    )
    result = run_seed(config, 0)
    assert len(result.records) == 2
    assert result.policy_updates > 0


def test_same_seed_gives_identical_metrics(small_run_config, tmp_path):
    first = emit_metrics([run_seed(small_run_config, 3)], tmp_path / "a")
    second = emit_metrics([run_seed(small_run_config, 3)], tmp_path / "b")
    assert (tmp_path / "a" / "metrics.jsonl").read_bytes() == (tmp_path / "b" / "metrics.jsonl").read_bytes()
    assert first.keys() == second.keys()


def test_run_experiment_returns_records_per_seed(small_run_config):
    records = run_experiment(_with(small_run_config, seeds=[0, 1], episodes=2))
    assert sorted(records) == [0, 1]
    assert all(len(rows) == 2 for rows in records.values())


def test_orchestrator_writes_outputs(small_run_config):
    results = ExperimentOrchestrator(small_run_config).run()
    out = small_run_config.out_dir
    assert results["errors"] == []
    assert results["run_id"] is None

    lines = (out / "metrics.jsonl").read_text().splitlines()
    assert len(lines) == 3
    row = json.loads(lines[0])
    assert list(row) == sorted(row)
    assert row["seed"] == 0 and row["episode"] == 0

    assert load_graph(out / "learned_graph.csv") == results["seeds"][0].learned_graph
    echo = json.loads((out / "config_echo.json").read_text())
    assert echo["episodes"] == 3 and echo["init_graph"]["kind"] == "random"

    summary = json.loads((out / "summary.json").read_text())
    assert summary["num_seeds"] == 1
    assert summary["structure_updates"] == {"0": 3}
    assert summary["topology_seed"] == {"0": 0}
    assert set(summary["initial_graph"]["0"]) >= {"f1", "shd"}

    net, meta = load_checkpoint(out / "policy_seed0.json")
    assert meta["counters"]["episodes"] == 3
    assert net.input_size == small_run_config.env.observation_size


def test_fixed_topology_seed_is_recorded(small_run_config, tmp_path):
    config = _with(small_run_config, topology_seed=42, episodes=1)
    results = [run_seed(config, 3), run_seed(config, 5)]
    assert [r.topology_seed for r in results] == [42, 42]

    emit_metrics(results, tmp_path / "fixed", config)
    summary = json.loads((tmp_path / "fixed" / "summary.json").read_text())
    assert summary["topology_seed"] == {"3": 42, "5": 42}

    stored = RunStoreTools.store_run(config, results)
    assert stored["status"] == "success"
    listed = RunStoreTools.list_runs(limit=1)
    assert listed["runs"][0]["topology_seeds"] == {"3": 42, "5": 42}


def test_emit_metrics_without_results(tmp_path):
    files = emit_metrics([], tmp_path / "empty")
    assert (tmp_path / "empty" / "metrics.jsonl").read_text() == ""
    summary = json.loads((tmp_path / "empty" / "summary.json").read_text())
    assert summary["num_seeds"] == 0 and summary["overall"] == {}
    assert "learned_graph" not in files


def test_summary_matches_numpy_oracle(tmp_path, rng):
    rows = []
    for seed in (4, 9):
        for episode in range(12):
            rows.append(
                {
                    "seed": seed,
                    "episode": episode,
                    "cumulative_reward": float(rng.normal()),
                    "intervention_steps": int(rng.integers(1, 50)),
                    "f1": float(rng.random()),
                }
            )
    path = AnalysisTools.write_jsonl(tmp_path / "metrics.jsonl", rows[::-1])
    result = AnalysisTools.summarize_metrics_file(path, window=10)
    assert result["status"] == "success" and result["episodes"] == 24
    summary = result["summary"]

    seed_means = []
    for seed in (4, 9):
        tail = [r["cumulative_reward"] for r in rows if r["seed"] == seed][-10:]
        stats = summary["per_seed"][str(seed)]["cumulative_reward"]
        assert stats["mean"] == pytest.approx(np.mean(tail))
        assert stats["std"] == pytest.approx(np.std(tail))
        seed_means.append(np.mean(tail))
    overall = summary["overall"]["cumulative_reward"]
    assert overall["mean"] == pytest.approx(np.mean(seed_means))
    assert overall["std"] == pytest.approx(np.std(seed_means))
    assert "shd" not in summary["overall"]


def test_summarize_missing_file_fails(tmp_path):
    assert AnalysisTools.summarize_metrics_file(tmp_path / "nope.jsonl")["status"] == "failed"


def test_k_sweep_writes_one_run_per_k(small_run_config):
    config = _with(small_run_config, episodes=2)
    sweep = run_k_sweep(config, [1, 2])
    assert sweep["ks"] == [1, 2]
    for k in ("1", "2"):
        row = sweep["results"][k]
        assert row["errors"] == []
        assert (config.out_dir / f"k{k}" / "metrics.jsonl").exists()
        assert row["final_f1_mean"] is not None
    assert json.loads((config.out_dir / "sweep_summary.json").read_text())["ks"] == [1, 2]


def test_store_and_list_runs(small_run_config):
    config = _with(small_run_config, episodes=2)
    stored = RunStoreTools.store_run(config, [run_seed(config, 0)])
    assert stored["status"] == "success" and stored["episodes"] == 2

    listed = RunStoreTools.list_runs(limit=5)
    assert listed["status"] == "success"
    assert listed["runs"][0]["id"] == stored["run_id"]
    assert listed["runs"][0]["seeds"] == [0]
    assert listed["runs"][0]["topology_seeds"] == {"0": 0}

    episodes = RunStoreTools.get_run_episodes(stored["run_id"])
    assert [e["episode"] for e in episodes["episodes"]] == [0, 1]
    assert RunStoreTools.get_run_episodes(10**9)["status"] == "not_found"


def test_trajectory_dump_and_load(tmp_path, small_run_config):
    from causal_alarm_rl.env.fault_alarm import FaultAlarmEnv
    from causal_alarm_rl.env.trajectory import sample_trajectories
    from causal_alarm_rl.orchestrator.experiment_orchestrator import build_topology, build_truth_graph

    rng = np.random.default_rng(0)
    env = FaultAlarmEnv(
        small_run_config.env, build_truth_graph(small_run_config, rng), build_topology(small_run_config, rng), rng
    )
    transitions = sample_trajectories(env, 2, rng)
    dumped = TrajectoryTools.dump_transitions(transitions, tmp_path / "traj.jsonl")
    assert dumped["status"] == "success" and dumped["count"] == len(transitions)
    loaded = TrajectoryTools.load_transitions(tmp_path / "traj.jsonl")
    assert [t.action for t in loaded] == [t.action for t in transitions]

    with pytest.raises(InvalidArgumentError):
        TrajectoryTools.load_transitions(tmp_path / "missing.jsonl")


def test_flat_config_parsing(tmp_path):
    tree = parse_flat_config(SMALL_ENV_LINES + "seeds=1,2\n")
    assert tree["env"]["num_nodes"] == "4"
    assert tree["env"]["alpha_range"] == ["0.3", "0.5"]

    path = tmp_path / "run.cfg"
    path.write_text(SMALL_ENV_LINES)
    config = load_run_config(path, {"seeds": "1,2", "train.topk": 3, "episodes": None})
    assert config.seeds == [1, 2]
    assert config.train.topk == 3
    assert config.episodes == 200
    assert config.env.alpha_range == (0.3, 0.5)
    assert config.train.eta_causal == pytest.approx(0.3)


@pytest.mark.parametrize(
    "overrides",
    [
        {"train.algo": "sac"},
        {"env.unknown": 1},
        {"init_graph": "gaussian"},
        {"seeds": ""},
        {"env.alpha_range": "0.5,0.1"},
    ],
)
def test_invalid_overrides_raise_config_error(overrides):
    with pytest.raises(ConfigError):
        build_run_config({}, overrides)


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "absent.cfg")
    with pytest.raises(ConfigError):
        parse_flat_config("env.num_nodes 4\n")


def test_topology_free_preset():
    env = EnvConfig.topology_free_preset(max_hop=3)
    assert env.num_nodes == 1 and env.num_types == 100
    assert env.max_hop == 1
    assert env.action_space_size == 100 and env.observation_size == 200
    assert str(InitGraphSpec.parse("random:0.2")) == "random:0.2"


def _write_config(tmp_path, extra=""):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL_ENV_LINES + SMALL_TRAIN_LINES + extra)
    return path


def test_cli_run_and_metrics(tmp_path):
    cfg = _write_config(tmp_path)
    out = tmp_path / "cli-run"
    result = runner.invoke(app, ["run", "--config", str(cfg), "--episodes", "2", "--out", str(out), "--no-store"])
    assert result.exit_code == 0, result.output
    assert (out / "metrics.jsonl").exists() and (out / "policy_seed0.json").exists()

    result = runner.invoke(app, ["metrics", str(out), "--window", "1"])
    assert result.exit_code == 0, result.output
    summary = json.loads((out / "summary.json").read_text())
    assert summary["window"] == 1
    assert "structure_updates" in summary


def test_cli_run_rejects_bad_algo(tmp_path):
    result = runner.invoke(app, ["run", "--algo", "sac", "--out", str(tmp_path / "bad"), "--no-store"])
    assert result.exit_code == 1


def test_cli_env_sample_then_discover(tmp_path):
    cfg = _write_config(tmp_path)
    traj, truth = tmp_path / "traj.jsonl", tmp_path / "truth.csv"
    result = runner.invoke(
        app, ["env-sample", "--out", str(traj), "--config", str(cfg), "--episodes", "4", "--truth-out", str(truth)]
    )
    assert result.exit_code == 0, result.output
    assert traj.exists() and load_graph(truth).num_types == 3

    out = tmp_path / "discovered"
    result = runner.invoke(app, ["discover", "--trajectories", str(traj), "--truth", str(truth), "--out", str(out)])
    assert result.exit_code == 0, result.output
    learned = load_graph(out / "learned_graph.csv")
    assert learned.type_names == load_graph(truth).type_names
    metrics = json.loads((out / "graph_metrics.json").read_text())
    assert 0.0 <= metrics["f1"] <= 1.0


def test_cli_discover_rejects_empty_dump(tmp_path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    result = runner.invoke(app, ["discover", "--trajectories", str(empty), "--out", str(tmp_path / "d")])
    assert result.exit_code == 1


def test_cli_check_bounds(tmp_path):
    result = runner.invoke(app, ["check-bounds", "--lemma-instances", "50", "--mdp-instances", "10"])
    assert result.exit_code == 0, result.output


def test_cli_runs_lists_stored_runs(small_run_config):
    config = _with(small_run_config, episodes=1)
    RunStoreTools.store_run(config, [run_seed(config, 0)])
    result = runner.invoke(app, ["runs", "--limit", "3"])
    assert result.exit_code == 0, result.output


def test_cli_discover_aligns_edge_list_truth_to_trajectory_types(tmp_path):
    cfg = _write_config(tmp_path)
    traj = tmp_path / "traj.jsonl"
    result = runner.invoke(app, ["env-sample", "--out", str(traj), "--config", str(cfg), "--episodes", "3"])
    assert result.exit_code == 0, result.output

    # names the types out of index order and leaves s0 out entirely
    truth = tmp_path / "truth_edges.csv"
    truth.write_text("cause,effect\ns2,s1\n")
    out = tmp_path / "discovered"
    result = runner.invoke(app, ["discover", "--trajectories", str(traj), "--truth", str(truth), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert load_graph(out / "learned_graph.csv").type_names == ("s0", "s1", "s2")
    assert (out / "graph_metrics.json").exists()
