"""
Analysis Tools for causal-alarm-rl.

Aggregates per-episode metric records into the run summary: the final window
of episodes per seed is averaged, then the per-seed means are averaged across
seeds.
"""

import json
from pathlib import Path
from typing import Dict, List, Sequence

import pandas as pd
from loguru import logger

SUMMARY_METRICS = (
    "cumulative_reward",
    "intervention_steps",
    "mean_active_alarms",
    "f1",
    "precision",
    "recall",
    "accuracy",
    "shd",
)
DEFAULT_WINDOW = 10


def _stats(mean: pd.Series, std: pd.Series) -> Dict[str, Dict[str, float]]:
    return {m: {"mean": float(mean[m]), "std": float(std[m])} for m in mean.index}


class AnalysisTools:
    """Tools for summarizing experiment metrics."""

    @staticmethod
    def summarize_frame(df: pd.DataFrame, window: int = DEFAULT_WINDOW) -> dict:
        """
        Summarize a metrics table with one row per (seed, episode).

        Standard deviations use ``ddof=0`` so a single seed or episode gives 0.
        """
        summary: dict = {"window": window, "num_seeds": 0, "per_seed": {}, "overall": {}}
        if df.empty:
            return summary

        columns = [c for c in SUMMARY_METRICS if c in df.columns]
        df = df.sort_values(["seed", "episode"])
        tail = df.groupby("seed", sort=True).tail(window)
        grouped = tail.groupby("seed", sort=True)[columns]
        means = grouped.mean()
        stds = grouped.std(ddof=0)

        for seed in means.index:
            summary["per_seed"][str(int(seed))] = _stats(means.loc[seed], stds.loc[seed])
        summary["num_seeds"] = int(len(means))
        summary["overall"] = _stats(means.mean(), means.std(ddof=0))
        return summary

    @staticmethod
    def summarize_records(records: Sequence[dict], window: int = DEFAULT_WINDOW) -> dict:
        return AnalysisTools.summarize_frame(pd.DataFrame(list(records)), window)

    @staticmethod
    def load_metrics(path: Path) -> pd.DataFrame:
        """Read ``metrics.jsonl``; an empty file is an empty table."""
        path = Path(path)
        if path.stat().st_size == 0:
            return pd.DataFrame()
        return pd.read_json(path, lines=True)

    @staticmethod
    def summarize_metrics_file(path: Path, window: int = DEFAULT_WINDOW) -> dict:
        """
        Re-aggregate a written ``metrics.jsonl``.

        Returns:
        - Dictionary with 'summary' and 'status', or 'error' on failure
        """
        try:
            df = AnalysisTools.load_metrics(path)
            summary = AnalysisTools.summarize_frame(df, window)
            logger.info(f"Summarized {len(df)} episode records from {path}")
            return {"summary": summary, "episodes": int(len(df)), "status": "success"}
        except Exception as e:
            logger.error(f"Error summarizing {path}: {str(e)}")
            return {"error": str(e), "status": "failed"}

    @staticmethod
    def write_json(path: Path, data: dict) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f, indent=2, sort_keys=True)
        logger.info(f"Wrote {path.name} to {path}")
        return path

    @staticmethod
    def write_jsonl(path: Path, rows: List[dict]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            for row in rows:
                f.write(json.dumps(row, sort_keys=True) + "\n")
        logger.info(f"Wrote {len(rows)} rows to {path}")
        return path
