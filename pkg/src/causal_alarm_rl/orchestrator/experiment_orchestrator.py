"""
Experiment Orchestrator for causal-alarm-rl.

Runs the online causal RL loop for every seed: roll out an episode with the
causal policy (mask rebuilt from the current graph at each step), update the
graph from the accumulated intervention history, and let the learner update
on its own cadence. Seeds are independent and may run in worker processes.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from causal_alarm_rl.config import InitGraphSpec, RunConfig
from causal_alarm_rl.core.graph import CausalGraph, load_graph, random_dag
from causal_alarm_rl.core.metrics import GraphMetrics, graph_metrics
from causal_alarm_rl.core.topology import Topology, generate_topology, load_topology_csv
from causal_alarm_rl.core.types import active_flags
from causal_alarm_rl.discovery.buffer import InterventionLog
from causal_alarm_rl.discovery.structure import update_structure
from causal_alarm_rl.env.fault_alarm import ALARM_TYPE_NAMES, FaultAlarmEnv, load_alarm_ground_truth
from causal_alarm_rl.env.trajectory import make_transition
from causal_alarm_rl.orchestrator.metrics_writer import emit_metrics
from causal_alarm_rl.policy.agents import Phase, make_agent
from causal_alarm_rl.policy.mask import CausalMaskProvider, NoMaskProvider, allow_all
from causal_alarm_rl.policy.mlp import PolicyNet
from causal_alarm_rl.tools.analysis_tools import AnalysisTools
from causal_alarm_rl.tools.db_tools import RunStoreTools


@dataclass
class EpisodeRecord:
    seed: int
    episode: int
    cumulative_reward: float
    intervention_steps: int
    mean_active_alarms: float
    f1: float
    precision: float
    recall: float
    accuracy: float
    shd: int
    graph_edges: int
    wall_ms: float = field(default=0.0, compare=False)

    def metrics_dict(self) -> Dict:
        """Everything except wall-clock time, which is written to timing.jsonl."""
        data = asdict(self)
        data.pop("wall_ms")
        return data


@dataclass
class SeedResult:
    seed: int
    records: List[EpisodeRecord]
    initial_graph: CausalGraph
    initial_metrics: GraphMetrics
    learned_graph: CausalGraph
    structure_updates: int
    graph_reads: int
    topology_seed: int
    policy: Optional[PolicyNet] = None
    policy_updates: int = 0


def build_truth_graph(config: RunConfig, rng: np.random.Generator) -> CausalGraph:
    """Bundled alarm graph for the 18-type setting, a file, or a random DAG otherwise."""
    V = config.env.num_types
    if config.truth_file is not None:
        return load_graph(config.truth_file)
    if not config.env.topology_free and V == len(ALARM_TYPE_NAMES):
        return load_alarm_ground_truth()
    return random_dag(V, config.truth_edge_prob, rng)


def build_topology(config: RunConfig, rng: np.random.Generator) -> Topology:
    env = config.env
    if env.topology_free:
        return Topology.single_hop(env.num_nodes)
    if config.topology_file is not None:
        return load_topology_csv(config.topology_file, env.max_hop)
    return generate_topology(env.num_nodes, env.topology_density, env.max_hop, rng)


def build_initial_graph(spec: InitGraphSpec, truth: CausalGraph, rng: np.random.Generator) -> CausalGraph:
    if spec.kind == "truth":
        return truth
    if spec.kind == "file":
        return load_graph(spec.path, type_names=truth.type_names)
    return random_dag(truth.num_types, spec.edge_prob, rng, truth.type_names)


def _seed_streams(seed: int) -> Tuple[np.random.Generator, ...]:
    # truth, params, init graph, env, agent init, action selection, updates
    return tuple(np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(7))


def run_seed(config: RunConfig, seed: int) -> SeedResult:
    """One independent training run."""
    truth_rng, params_rng, init_rng, env_rng, net_rng, act_rng, update_rng = _seed_streams(seed)
    topology_seed = config.topology_seed if config.topology_seed is not None else seed

    truth = build_truth_graph(config, truth_rng)
    topology = build_topology(config, np.random.default_rng(topology_seed))
    env = FaultAlarmEnv(config.env, truth, topology, params_rng)

    graph = build_initial_graph(config.init_graph, truth, init_rng)
    initial_graph, initial_metrics = graph, graph_metrics(graph, truth)

    train = config.train
    if config.mask_mode == "causal":
        provider = CausalMaskProvider(graph, train.topk)
    else:
        provider = NoMaskProvider(env.num_actions)
        train = train.model_copy(update={"eta_causal": 0.0})

    agent = make_agent(env.observation_size, env.num_actions, train, net_rng)
    history = InterventionLog(truth.num_types)
    records: List[EpisodeRecord] = []
    global_step = 0
    structure_updates = 0

    for episode in range(config.episodes):
        started = time.perf_counter()
        obs = env.reset(env_rng)
        mask = provider(obs)
        cumulative, steps, active_total = 0.0, 0, 0
        transitions = []
        done = False

        while not done:
            phase = Phase.WARMUP if global_step < train.random_sample_timestep else Phase.TRAIN
            choice = agent.act(obs, mask, act_rng, phase)
            result = env.step(choice.action, env_rng)
            transition = make_transition(obs, result)
            next_mask = allow_all(env.num_actions) if result.done else provider(result.next_obs)
            agent.observe(choice, mask, transition, next_mask, update_rng, phase)

            transitions.append(transition)
            active_total += int(active_flags(obs).sum())
            cumulative += result.reward
            steps += 1
            global_step += 1
            obs, mask, done = result.next_obs, next_mask, result.done

        history.extend(transitions)
        if config.discovery_enabled:
            graph = update_structure(graph, history, config.discovery)
            structure_updates += 1
            if isinstance(provider, CausalMaskProvider):
                provider.graph = graph

        metrics = graph_metrics(graph, truth)
        record = EpisodeRecord(
            seed=seed,
            episode=episode,
            cumulative_reward=cumulative,
            intervention_steps=steps,
            mean_active_alarms=active_total / steps,
            f1=metrics.f1,
            precision=metrics.precision,
            recall=metrics.recall,
            accuracy=metrics.accuracy,
            shd=metrics.shd,
            graph_edges=graph.num_edges,
            wall_ms=(time.perf_counter() - started) * 1000.0,
        )
        records.append(record)
        logger.info(
            f"[seed {seed}] episode {episode}: reward={cumulative:.3f} steps={steps} "
            f"f1={metrics.f1:.3f} shd={metrics.shd}"
        )

    return SeedResult(
        seed=seed,
        records=records,
        initial_graph=initial_graph,
        initial_metrics=initial_metrics,
        learned_graph=graph,
        structure_updates=structure_updates,
        graph_reads=provider.graph_reads,
        topology_seed=topology_seed,
        policy=agent.net,
        policy_updates=agent.learner.updates,
    )


class ExperimentOrchestrator:
    """
    Coordinates a full experiment.

    Workflow:
    1. Run every seed (in worker processes when ``workers > 1``)
    2. Write metric files to ``out_dir``
    3. Optionally store the run in the results database
    """

    def __init__(self, config: RunConfig, store: bool = False):
        self.config = config
        self.store = store
        logger.info(
            f"Initializing experiment: algo={config.train.algo} mask={config.mask_mode} "
            f"K={config.train.topk} seeds={config.seeds} episodes={config.episodes}"
        )

    def run_seeds(self) -> Tuple[List[SeedResult], List[Dict]]:
        results: List[SeedResult] = []
        errors: List[Dict] = []
        seeds = list(self.config.seeds)

        if self.config.workers > 1 and len(seeds) > 1:
            with ProcessPoolExecutor(max_workers=min(self.config.workers, len(seeds))) as pool:
                futures = [(seed, pool.submit(run_seed, self.config, seed)) for seed in seeds]
                for seed, future in futures:
                    try:
                        results.append(future.result())
                    except Exception as e:
                        logger.error(f"Seed {seed} failed: {str(e)}")
                        errors.append({"stage": "training", "seed": seed, "error": str(e)})
        else:
            for seed in seeds:
                try:
                    results.append(run_seed(self.config, seed))
                except Exception as e:
                    logger.error(f"Seed {seed} failed: {str(e)}")
                    errors.append({"stage": "training", "seed": seed, "error": str(e)})
        return results, errors

    def run(self) -> Dict:
        results: Dict = {"seeds": [], "files": {}, "run_id": None, "errors": []}

        logger.info("Stage 1: Training")
        seed_results, errors = self.run_seeds()
        results["seeds"] = seed_results
        results["errors"].extend(errors)
        if not seed_results:
            logger.error("No seed finished. Aborting experiment.")
            return results

        logger.info("Stage 2: Writing metrics")
        results["files"] = emit_metrics(seed_results, self.config.out_dir, self.config)

        if self.store:
            logger.info("Stage 3: Storing run")
            stored = RunStoreTools.store_run(self.config, seed_results)
            if stored["status"] == "success":
                results["run_id"] = stored["run_id"]
            else:
                results["errors"].append({"stage": "storage", "error": stored.get("error")})

        logger.info(f"Experiment complete: {len(seed_results)} seed(s), outputs in {self.config.out_dir}")
        return results


def run_experiment(config: RunConfig) -> Dict[int, List[EpisodeRecord]]:
    """Episode records per seed; raises if any seed fails."""
    orchestrator = ExperimentOrchestrator(config)
    seed_results, errors = orchestrator.run_seeds()
    if errors:
        raise RuntimeError(f"{len(errors)} seed(s) failed: {errors[0]['error']}")
    return {r.seed: r.records for r in seed_results}


def run_k_sweep(config: RunConfig, ks: Sequence[int], store: bool = False) -> Dict:
    """Repeat the experiment for each TopK value into ``out_dir/k<K>``."""
    rows = {}
    for k in ks:
        sub = config.model_copy(
            update={
                "train": config.train.model_copy(update={"topk": k}),
                "out_dir": Path(config.out_dir) / f"k{k}",
            }
        )
        outcome = ExperimentOrchestrator(sub, store=store).run()
        records = [r for seed in outcome["seeds"] for r in seed.records]
        summary = AnalysisTools.summarize_records([r.metrics_dict() for r in records])
        rows[str(k)] = {
            "out_dir": str(sub.out_dir),
            "final_reward_mean": summary["overall"].get("cumulative_reward", {}).get("mean"),
            "final_steps_mean": summary["overall"].get("intervention_steps", {}).get("mean"),
            "final_f1_mean": summary["overall"].get("f1", {}).get("mean"),
            "errors": outcome["errors"],
        }

    sweep = {"ks": list(ks), "results": rows}
    AnalysisTools.write_json(Path(config.out_dir) / "sweep_summary.json", sweep)
    return sweep
