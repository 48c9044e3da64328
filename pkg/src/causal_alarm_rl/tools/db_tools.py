"""
Database Tools for causal-alarm-rl.

Stores finished runs with their episode metrics and lists stored runs.
"""

from typing import Optional, Sequence

from loguru import logger

from causal_alarm_rl.config import RunConfig
from causal_alarm_rl.database import retry_on_lock, session_scope
from causal_alarm_rl.models import EpisodeRow, Run
from causal_alarm_rl.tools.analysis_tools import AnalysisTools

EPISODE_COLUMNS = (
    "cumulative_reward",
    "intervention_steps",
    "mean_active_alarms",
    "f1",
    "precision",
    "recall",
    "accuracy",
    "shd",
)


@retry_on_lock
def _insert_run(config: RunConfig, seed_results: Sequence) -> tuple:
    metric_rows = [rec.metrics_dict() for r in seed_results for rec in r.records]
    with session_scope() as session:
        run = Run(
            algo=config.train.algo,
            mask_mode=config.mask_mode,
            topk=config.train.topk,
            episodes=config.episodes,
            seeds=list(config.seeds),
            topology_seeds={str(r.seed): r.topology_seed for r in seed_results},
            out_dir=str(config.out_dir),
            config=config.model_dump(mode="json"),
            summary=AnalysisTools.summarize_records(metric_rows),
        )
        for row in metric_rows:
            run.episode_rows.append(
                EpisodeRow(
                    seed=row["seed"],
                    episode=row["episode"],
                    **{c: row[c] for c in EPISODE_COLUMNS},
                )
            )
        session.add(run)
        session.commit()
        return run.id, len(metric_rows)


class RunStoreTools:
    """Tools for database operations on runs."""

    @staticmethod
    def store_run(config: RunConfig, seed_results: Sequence) -> dict:
        """
        Store a finished run.

        Parameters:
        - config: validated run configuration
        - seed_results: per-seed results with their episode records

        Returns:
        - Dictionary with 'run_id', 'status', 'error' (if any)
        """
        try:
            run_id, count = _insert_run(config, seed_results)
            logger.info(f"Stored run {run_id} with {count} episode records")
            return {"run_id": run_id, "episodes": count, "status": "success"}

        except Exception as e:
            logger.error(f"Error storing run: {str(e)}")
            return {"error": str(e), "status": "failed"}

    @staticmethod
    def list_runs(limit: Optional[int] = None) -> dict:
        """
        List stored runs, newest first.

        Returns:
        - Dictionary with 'runs' (id, algo, mask_mode, topk, episodes, seeds,
          topology seeds, final reward mean, created_at), 'count' and 'status'
        """
        try:
            with session_scope() as session:
                query = session.query(Run).order_by(Run.id.desc())
                if limit is not None:
                    query = query.limit(limit)

                runs = []
                for run in query.all():
                    overall = (run.summary or {}).get("overall", {})
                    runs.append(
                        {
                            "id": run.id,
                            "algo": run.algo,
                            "mask_mode": run.mask_mode,
                            "topk": run.topk,
                            "episodes": run.episodes,
                            "seeds": run.seeds,
                            "topology_seeds": run.topology_seeds,
                            "out_dir": run.out_dir,
                            "final_reward_mean": overall.get("cumulative_reward", {}).get("mean"),
                            "final_f1_mean": overall.get("f1", {}).get("mean"),
                            "created_at": str(run.created_at),
                        }
                    )

            logger.info(f"Retrieved {len(runs)} runs")
            return {"runs": runs, "count": len(runs), "status": "success"}

        except Exception as e:
            logger.error(f"Error listing runs: {str(e)}")
            return {"error": str(e), "status": "failed", "runs": []}

    @staticmethod
    def get_run_episodes(run_id: int) -> dict:
        """Episode metrics of one run, ordered by seed then episode."""
        try:
            with session_scope() as session:
                run = session.query(Run).filter(Run.id == run_id).first()
                if not run:
                    logger.warning(f"Run {run_id} not found")
                    return {"error": f"Run {run_id} not found", "status": "not_found"}

                rows = (
                    session.query(EpisodeRow)
                    .filter(EpisodeRow.run_id == run_id)
                    .order_by(EpisodeRow.seed, EpisodeRow.episode)
                    .all()
                )
                episodes = [
                    {"seed": r.seed, "episode": r.episode, **{c: getattr(r, c) for c in EPISODE_COLUMNS}}
                    for r in rows
                ]
            return {"run_id": run_id, "episodes": episodes, "status": "success"}

        except Exception as e:
            logger.error(f"Error retrieving run {run_id}: {str(e)}")
            return {"error": str(e), "status": "failed", "run_id": run_id}
