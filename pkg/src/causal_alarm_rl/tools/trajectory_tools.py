"""
Trajectory Tools for causal-alarm-rl.

Transitions are exchanged as JSON Lines, one transition per line, so that
sampled trajectories can be fed to structure discovery offline.
"""

import json
from pathlib import Path
from typing import List, Sequence

from loguru import logger

from causal_alarm_rl.core.types import Transition
from causal_alarm_rl.errors import InvalidArgumentError


class TrajectoryTools:
    """Tools for reading and writing transition files."""

    @staticmethod
    def dump_transitions(transitions: Sequence[Transition], path: Path) -> dict:
        """
        Write transitions to a JSONL file.

        Returns:
        - Dictionary with 'path', 'count' and 'status', or 'error' on failure
        """
        try:
            path = Path(path)
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8") as f:
                for tr in transitions:
                    f.write(json.dumps(tr.to_dict()) + "\n")
            logger.info(f"Wrote {len(transitions)} transitions to {path}")
            return {"path": str(path), "count": len(transitions), "status": "success"}
        except Exception as e:
            logger.error(f"Error writing transitions to {path}: {str(e)}")
            return {"error": str(e), "status": "failed"}

    @staticmethod
    def load_transitions(path: Path) -> List[Transition]:
        """Read a JSONL transition file; malformed lines raise ``InvalidArgumentError``."""
        path = Path(path)
        if not path.exists():
            raise InvalidArgumentError(f"Transition file not found: {path}")

        transitions: List[Transition] = []
        with open(path, encoding="utf-8") as f:
            for line_no, line in enumerate(f, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as e:
                    raise InvalidArgumentError(f"{path}:{line_no}: invalid JSON ({e.msg})") from e
                transitions.append(Transition.from_dict(record))

        logger.info(f"Loaded {len(transitions)} transitions from {path}")
        return transitions
