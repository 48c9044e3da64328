"""
JSON checkpoints for policy networks.

Parameters are written as nested lists of Python floats, whose shortest
``repr`` round-trips float64 exactly.
"""

import json
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np
from loguru import logger

from causal_alarm_rl.errors import InvalidArgumentError
from causal_alarm_rl.policy.mlp import PolicyNet

CHECKPOINT_FORMAT = "causal-alarm-rl/policy"
CHECKPOINT_VERSION = 1


def save_checkpoint(
    path: Path,
    net: PolicyNet,
    config: Optional[Dict[str, Any]] = None,
    counters: Optional[Dict[str, int]] = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "value_head": net.value_head,
        "config": config or {},
        "counters": counters or {},
        "params": {
            name: {"shape": list(value.shape), "data": value.ravel().tolist()}
            for name, value in net.params.items()
        },
    }
    path.write_text(json.dumps(payload), encoding="utf-8")
    logger.info(f"Saved checkpoint to {path}")
    return path


def load_checkpoint(path: Path) -> Tuple[PolicyNet, Dict[str, Any]]:
    path = Path(path)
    if not path.exists():
        raise InvalidArgumentError(f"Checkpoint not found: {path}")
    payload = json.loads(path.read_text(encoding="utf-8"))
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise InvalidArgumentError(f"{path} is not a policy checkpoint")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise InvalidArgumentError(
            f"{path}: unsupported checkpoint version {payload.get('version')}"
        )
    params = {
        name: np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
        for name, entry in payload["params"].items()
    }
    net = PolicyNet(params, bool(payload["value_head"]))
    meta = {"config": payload["config"], "counters": payload["counters"]}
    return net, meta
