"""
Experiment orchestration: per-seed training loops and their output files.
"""

from causal_alarm_rl.orchestrator.experiment_orchestrator import (
    EpisodeRecord,
    ExperimentOrchestrator,
    SeedResult,
    run_experiment,
    run_k_sweep,
    run_seed,
)
from causal_alarm_rl.orchestrator.metrics_writer import emit_metrics

__all__ = [
    "EpisodeRecord",
    "ExperimentOrchestrator",
    "SeedResult",
    "emit_metrics",
    "run_experiment",
    "run_k_sweep",
    "run_seed",
]
