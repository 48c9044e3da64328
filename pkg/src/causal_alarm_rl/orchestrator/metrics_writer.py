"""
Writes the outputs of an experiment.

Files in ``out_dir``:
- metrics.jsonl: one line per (seed, episode), sorted keys, no timings
- timing.jsonl: wall-clock milliseconds per (seed, episode)
- learned_graph.csv: final graph of the first seed (plus one file per seed)
- policy_seed<k>.json: final policy network per seed
- config_echo.json: the validated run configuration
- summary.json: final-window mean/std per seed and across seeds, plus the
  initial-graph metrics, structure update counts and topology seed per seed
"""

from pathlib import Path
from typing import Dict, Optional, Sequence

from loguru import logger

from causal_alarm_rl.config import RunConfig
from causal_alarm_rl.core.graph import save_graph
from causal_alarm_rl.policy.checkpoint import save_checkpoint
from causal_alarm_rl.tools.analysis_tools import DEFAULT_WINDOW, AnalysisTools


def emit_metrics(
    seed_results: Sequence,
    out_dir: Path,
    config: Optional[RunConfig] = None,
    window: int = DEFAULT_WINDOW,
) -> Dict[str, str]:
    """Write every output file and return their paths by name."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ordered = sorted(seed_results, key=lambda r: r.seed)
    files: Dict[str, str] = {}

    records = [rec for result in ordered for rec in sorted(result.records, key=lambda r: r.episode)]
    metric_rows = [rec.metrics_dict() for rec in records]
    timing_rows = [
        {"seed": rec.seed, "episode": rec.episode, "wall_ms": rec.wall_ms} for rec in records
    ]
    files["metrics"] = str(AnalysisTools.write_jsonl(out_dir / "metrics.jsonl", metric_rows))
    files["timing"] = str(AnalysisTools.write_jsonl(out_dir / "timing.jsonl", timing_rows))

    for i, result in enumerate(ordered):
        path = save_graph(result.learned_graph, out_dir / f"learned_graph_seed{result.seed}.csv")
        if i == 0:
            save_graph(result.learned_graph, out_dir / "learned_graph.csv")
            files["learned_graph"] = str(out_dir / "learned_graph.csv")
        files[f"learned_graph_seed{result.seed}"] = str(path)
        if result.policy is not None:
            checkpoint = save_checkpoint(
                out_dir / f"policy_seed{result.seed}.json",
                result.policy,
                config=config.train.model_dump(mode="json") if config is not None else None,
                counters={"episodes": len(result.records), "updates": result.policy_updates},
            )
            files[f"policy_seed{result.seed}"] = str(checkpoint)

    if config is not None:
        files["config_echo"] = str(
            AnalysisTools.write_json(out_dir / "config_echo.json", config.model_dump(mode="json"))
        )

    summary = AnalysisTools.summarize_records(metric_rows, window)
    summary["initial_graph"] = {
        str(result.seed): result.initial_metrics.to_dict() for result in ordered
    }
    summary["structure_updates"] = {str(r.seed): r.structure_updates for r in ordered}
    summary["topology_seed"] = {str(r.seed): r.topology_seed for r in ordered}
    files["summary"] = str(AnalysisTools.write_json(out_dir / "summary.json", summary))

    logger.info(f"Wrote {len(metric_rows)} episode records for {len(ordered)} seed(s) to {out_dir}")
    return files
