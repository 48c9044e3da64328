"""
CLI for causal-alarm-rl.

Runs experiments, offline structure discovery, trajectory sampling and the
numeric bound checks from the command line.
"""

import json
from pathlib import Path
from typing import Optional

import numpy as np
import typer
from loguru import logger
from rich.console import Console
from rich.table import Table

from causal_alarm_rl.config import EnvConfig, RunConfig, load_run_config, settings
from causal_alarm_rl.core.graph import CausalGraph, load_graph, save_graph
from causal_alarm_rl.core.metrics import graph_metrics
from causal_alarm_rl.discovery.buffer import InterventionLog
from causal_alarm_rl.discovery.structure import update_structure
from causal_alarm_rl.env.fault_alarm import FaultAlarmEnv, alarm_type_names
from causal_alarm_rl.env.trajectory import sample_trajectories
from causal_alarm_rl.orchestrator import ExperimentOrchestrator, run_k_sweep
from causal_alarm_rl.orchestrator.experiment_orchestrator import build_topology, build_truth_graph
from causal_alarm_rl.theory.bounds import run_lemma1_suite, run_theorem3_suite
from causal_alarm_rl.tools import AnalysisTools, RunStoreTools, TrajectoryTools

app = typer.Typer(
    name="causal-alarm-rl",
    help="Online causal reinforcement learning for alarm root-cause repair",
    add_completion=False,
)
console = Console(markup=True)

ConfigOption = typer.Option(
    None,
    "--config",
    "-c",
    help="Flat key=value config file (env., train., discovery. namespaces)",
    exists=True,
    dir_okay=False,
    readable=True,
)


def _load_config(config: Optional[Path], overrides: dict, topology_free: bool = False) -> RunConfig:
    run_config = load_run_config(config, overrides)
    if topology_free:
        run_config = run_config.model_copy(update={"env": EnvConfig.topology_free_preset()})
    return run_config


def _print_errors(errors: list) -> None:
    if errors:
        console.print(f"\n[yellow]Errors encountered: {len(errors)}[/yellow]")
        for error in errors:
            console.print(f"  • {error}")


@app.command()
def run(
    config: Optional[Path] = ConfigOption,
    seed: Optional[str] = typer.Option(None, "--seed", "-s", help="Seed or comma-separated seeds"),
    episodes: Optional[int] = typer.Option(None, "--episodes", "-e", help="Episodes per seed"),
    algo: Optional[str] = typer.Option(None, "--algo", help="ppo or dqn"),
    mask: Optional[str] = typer.Option(None, "--mask", help="causal or none (plain baseline)"),
    k: Optional[int] = typer.Option(None, "--k", help="Root-most active alarm types kept by the mask"),
    init_graph: Optional[str] = typer.Option(
        None, "--init-graph", help="random:p, file:PATH or truth"
    ),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output directory", file_okay=False),
    workers: Optional[int] = typer.Option(None, "--workers", "-w", help="Parallel seed workers"),
    topology_free: bool = typer.Option(
        False, "--topology-free", help="Use the topology-free preset (replaces env. settings)"
    ),
    no_store: bool = typer.Option(False, "--no-store", help="Do not record the run in the database"),
):
    """
    Train the causal policy and learn the causal graph online.

    Writes metrics.jsonl, timing.jsonl, learned_graph.csv, config_echo.json
    and summary.json into the output directory.
    """
    try:
        overrides = {
            "seeds": seed,
            "episodes": episodes,
            "train.algo": algo,
            "mask_mode": mask,
            "train.topk": k,
            "init_graph": init_graph,
            "out_dir": out,
            "workers": workers,
        }
        run_config = _load_config(config, overrides, topology_free)

        console.print("\n[bold cyan]Causal Alarm RL: training run[/bold cyan]")
        console.print(f"Algorithm: {run_config.train.algo}  Mask: {run_config.mask_mode}  K: {run_config.train.topk}")
        console.print(f"Seeds: {run_config.seeds}  Episodes: {run_config.episodes}")
        console.print(f"Initial graph: {run_config.init_graph}")
        console.print(f"Output directory: {Path(run_config.out_dir).absolute()}\n")

        results = ExperimentOrchestrator(run_config, store=not no_store).run()
        if not results["seeds"]:
            _print_errors(results["errors"])
            raise RuntimeError("no seed completed")

        table = Table(title="Final-window summary")
        table.add_column("Seed", justify="right")
        table.add_column("Reward", justify="right")
        table.add_column("Steps", justify="right")
        table.add_column("F1", justify="right")
        summary = json.loads(Path(results["files"]["summary"]).read_text(encoding="utf-8"))
        for seed_key, stats in summary["per_seed"].items():
            table.add_row(
                seed_key,
                f"{stats['cumulative_reward']['mean']:.3f}",
                f"{stats['intervention_steps']['mean']:.1f}",
                f"{stats['f1']['mean']:.3f}",
            )
        console.print(table)

        _print_errors(results["errors"])
        console.print("\n[bold]Results stored in:[/bold]")
        console.print(f"  Metrics: {results['files']['metrics']}")
        if results["run_id"] is not None:
            console.print(f"  Database: {settings.DATABASE_URL} (run {results['run_id']})")
        console.print(f"  Logs: {settings.LOG_DIR / 'trace.jsonl'}")

    except Exception as e:
        console.print(f"\n[red]Error: {str(e)}[/red]")
        logger.exception("Run failed")
        raise typer.Exit(code=1)


@app.command("sweep-k")
def sweep_k(
    config: Optional[Path] = ConfigOption,
    ks: str = typer.Option("2,7,16", "--ks", help="Comma-separated K values"),
    seed: Optional[str] = typer.Option(None, "--seed", "-s", help="Seed or comma-separated seeds"),
    episodes: Optional[int] = typer.Option(None, "--episodes", "-e", help="Episodes per seed"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output directory", file_okay=False),
    workers: Optional[int] = typer.Option(None, "--workers", "-w", help="Parallel seed workers"),
    no_store: bool = typer.Option(False, "--no-store", help="Do not record the runs in the database"),
):
    """
    Repeat the training run for several mask sizes K.

    Each K gets its own sub-directory; sweep_summary.json compares final-window rewards.
    """
    try:
        k_values = [int(part) for part in ks.split(",") if part.strip()]
        if not k_values:
            raise ValueError("--ks needs at least one value")
        overrides = {"seeds": seed, "episodes": episodes, "out_dir": out, "workers": workers}
        run_config = _load_config(config, overrides)

        console.print(f"\n[bold cyan]K sweep over {k_values}[/bold cyan]\n")
        sweep = run_k_sweep(run_config, k_values, store=not no_store)

        table = Table(title="Final-window reward by K")
        table.add_column("K", justify="right")
        table.add_column("Reward", justify="right")
        table.add_column("Steps", justify="right")
        table.add_column("F1", justify="right")
        for key, row in sweep["results"].items():
            table.add_row(
                key,
                "-" if row["final_reward_mean"] is None else f"{row['final_reward_mean']:.3f}",
                "-" if row["final_steps_mean"] is None else f"{row['final_steps_mean']:.1f}",
                "-" if row["final_f1_mean"] is None else f"{row['final_f1_mean']:.3f}",
            )
        console.print(table)
        console.print(f"\nSweep summary: {Path(run_config.out_dir) / 'sweep_summary.json'}")

    except Exception as e:
        console.print(f"\n[red]Error: {str(e)}[/red]")
        logger.exception("K sweep failed")
        raise typer.Exit(code=1)


@app.command("env-sample")
def env_sample(
    out: Path = typer.Option(..., "--out", "-o", help="Transition JSONL file to write", dir_okay=False),
    config: Optional[Path] = ConfigOption,
    seed: int = typer.Option(0, "--seed", "-s", help="Random seed"),
    episodes: int = typer.Option(10, "--episodes", "-e", help="Episodes to sample"),
    truth_out: Optional[Path] = typer.Option(
        None, "--truth-out", help="Also write the ground-truth graph CSV", dir_okay=False
    ),
    topology_free: bool = typer.Option(
        False, "--topology-free", help="Use the topology-free preset (replaces env. settings)"
    ),
):
    """
    Dump trajectories of uniform active-alarm repairs for offline discovery.
    """
    try:
        run_config = _load_config(config, {"seeds": str(seed)}, topology_free)
        streams = np.random.SeedSequence(seed).spawn(3)
        truth_rng, params_rng, env_rng = (np.random.default_rng(s) for s in streams)

        truth = build_truth_graph(run_config, truth_rng)
        topology = build_topology(run_config, np.random.default_rng(seed))
        env = FaultAlarmEnv(run_config.env, truth, topology, params_rng)
        transitions = sample_trajectories(env, episodes, env_rng)

        dumped = TrajectoryTools.dump_transitions(transitions, out)
        if dumped["status"] != "success":
            raise RuntimeError(dumped["error"])
        console.print(f"[green]Wrote {dumped['count']} transitions to {out}[/green]")
        if truth_out is not None:
            save_graph(truth, truth_out)
            console.print(f"[green]Wrote ground truth ({truth.num_edges} edges) to {truth_out}[/green]")

    except Exception as e:
        console.print(f"\n[red]Error: {str(e)}[/red]")
        logger.exception("Trajectory sampling failed")
        raise typer.Exit(code=1)


@app.command()
def discover(
    trajectories: Path = typer.Option(
        ..., "--trajectories", "-t", help="Transition JSONL file", exists=True, dir_okay=False
    ),
    out: Path = typer.Option(Path("results/discover"), "--out", "-o", help="Output directory", file_okay=False),
    initial: Optional[Path] = typer.Option(
        None, "--initial", help="Initial graph CSV (default: empty graph)", exists=True, dir_okay=False
    ),
    truth: Optional[Path] = typer.Option(
        None, "--truth", help="Ground-truth graph CSV for metrics", exists=True, dir_okay=False
    ),
    config: Optional[Path] = ConfigOption,
):
    """
    Learn a causal graph offline from a trajectory dump.

    Writes learned_graph.csv and, when --truth is given, graph_metrics.json.
    """
    try:
        run_config = _load_config(config, {})
        transitions = TrajectoryTools.load_transitions(trajectories)
        if not transitions:
            raise ValueError(f"no transitions in {trajectories}")
        log = InterventionLog.from_transitions(transitions)

        # trajectories carry no names; use the ones the sampling run gave its types
        names = alarm_type_names(log.num_types, run_config.env.topology_free)
        truth_graph = load_graph(truth, type_names=names) if truth is not None else None
        current = load_graph(initial, type_names=names) if initial is not None else CausalGraph.empty(names)

        learned = update_structure(current, log, run_config.discovery)
        out.mkdir(parents=True, exist_ok=True)
        save_graph(learned, out / "learned_graph.csv")
        console.print(f"[green]Learned {learned.num_edges} edges from {len(log)} transitions[/green]")
        console.print(f"Graph: {out / 'learned_graph.csv'}")

        if truth_graph is not None:
            metrics = graph_metrics(learned, truth_graph).to_dict()
            AnalysisTools.write_json(out / "graph_metrics.json", metrics)
            console.print(
                f"F1 {metrics['f1']:.3f}  precision {metrics['precision']:.3f}  "
                f"recall {metrics['recall']:.3f}  SHD {metrics['shd']}"
            )

    except Exception as e:
        console.print(f"\n[red]Error: {str(e)}[/red]")
        logger.exception("Discovery failed")
        raise typer.Exit(code=1)


@app.command("check-bounds")
def check_bounds(
    lemma_instances: int = typer.Option(1000, "--lemma-instances", help="Random masked-policy pairs"),
    mdp_instances: int = typer.Option(500, "--mdp-instances", help="Random tabular MDPs"),
    seed: int = typer.Option(0, "--seed", "-s", help="Random seed"),
):
    """
    Check the policy-distance and value-gap bounds on random instances.
    """
    try:
        rng = np.random.default_rng(seed)
        reports = {
            "policy distance": run_lemma1_suite(lemma_instances, rng),
            "value gap": run_theorem3_suite(mdp_instances, rng),
        }

        table = Table(title="Masked-policy bound checks")
        table.add_column("Bound")
        table.add_column("Held", justify="right")
        table.add_column("Tightest lhs/rhs", justify="right")
        for name, report in reports.items():
            style = "green" if report.all_passed else "red"
            table.add_row(name, f"[{style}]{report.passed}/{report.total}[/{style}]", f"{report.tightest_ratio:.4f}")
        console.print(table)

        if not all(r.all_passed for r in reports.values()):
            console.print("\n[red]At least one bound was violated[/red]")
            raise typer.Exit(code=1)

    except typer.Exit:
        raise
    except Exception as e:
        console.print(f"\n[red]Error: {str(e)}[/red]")
        logger.exception("Bound checks failed")
        raise typer.Exit(code=1)


@app.command()
def metrics(
    run_dir: Path = typer.Argument(..., help="Run output directory", exists=True, file_okay=False),
    window: int = typer.Option(10, "--window", help="Final episodes averaged per seed"),
):
    """
    Re-aggregate summary.json from a run's metrics.jsonl.
    """
    try:
        result = AnalysisTools.summarize_metrics_file(run_dir / "metrics.jsonl", window)
        if result["status"] != "success":
            raise RuntimeError(result["error"])

        summary_path = run_dir / "summary.json"
        summary = {}
        if summary_path.exists():
            summary = json.loads(summary_path.read_text(encoding="utf-8"))
        summary.update(result["summary"])
        AnalysisTools.write_json(summary_path, summary)

        overall = result["summary"]["overall"]
        console.print(f"[green]Re-aggregated {result['episodes']} episode records[/green]")
        for name in ("cumulative_reward", "intervention_steps", "f1"):
            if name in overall:
                console.print(f"  {name}: {overall[name]['mean']:.4f} ± {overall[name]['std']:.4f}")

    except Exception as e:
        console.print(f"\n[red]Error: {str(e)}[/red]")
        logger.exception("Metric aggregation failed")
        raise typer.Exit(code=1)


@app.command()
def runs(limit: int = typer.Option(20, "--limit", "-n", help="Most recent runs to show")):
    """
    List runs stored in the results database.
    """
    try:
        result = RunStoreTools.list_runs(limit)
        if result["status"] != "success":
            raise RuntimeError(result["error"])
        if not result["runs"]:
            console.print("[yellow]No stored runs.[/yellow]")
            return

        table = Table(title=f"Stored runs ({settings.DATABASE_URL})")
        for column in ("ID", "Algo", "Mask", "K", "Episodes", "Seeds", "Reward", "F1", "Created"):
            table.add_column(column)
        for r in result["runs"]:
            table.add_row(
                str(r["id"]),
                r["algo"],
                r["mask_mode"],
                str(r["topk"]),
                str(r["episodes"]),
                ",".join(str(s) for s in r["seeds"] or []),
                "-" if r["final_reward_mean"] is None else f"{r['final_reward_mean']:.3f}",
                "-" if r["final_f1_mean"] is None else f"{r['final_f1_mean']:.3f}",
                r["created_at"],
            )
        console.print(table)

    except Exception as e:
        console.print(f"\n[red]Error: {str(e)}[/red]")
        logger.exception("Listing runs failed")
        raise typer.Exit(code=1)


def main():
    """Entry point for the CLI."""
    app()


if __name__ == "__main__":
    main()
