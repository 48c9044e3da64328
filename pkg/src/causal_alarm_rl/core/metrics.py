"""Structure-recovery metrics between a learned and a ground-truth graph."""

from dataclasses import asdict, dataclass
from typing import Dict

import numpy as np

from causal_alarm_rl.core.graph import CausalGraph
from causal_alarm_rl.errors import InvalidArgumentError


@dataclass(frozen=True)
class GraphMetrics:
    f1: float
    precision: float
    recall: float
    accuracy: float
    shd: int

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def graph_metrics(pred: CausalGraph, truth: CausalGraph) -> GraphMetrics:
    """
    Compare directed edge sets.

    Precision, recall and F1 count directed edges. Accuracy classifies every
    ordered off-diagonal pair. SHD counts unordered pairs whose edge state
    differs, so a reversed edge costs 1. Two empty graphs score a perfect 1.
    """
    if pred.num_types != truth.num_types:
        raise InvalidArgumentError(
            f"graphs have {pred.num_types} and {truth.num_types} types"
        )
    if pred.type_names != truth.type_names:
        raise InvalidArgumentError("graphs use different type orderings")

    V = truth.num_types
    off_diag = ~np.eye(V, dtype=bool)
    p = pred.adj & off_diag
    t = truth.adj & off_diag

    tp = int((p & t).sum())
    fp = int((p & ~t).sum())
    fn = int((~p & t).sum())

    if tp + fp + fn == 0:
        precision = recall = f1 = 1.0
    else:
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0

    pairs = V * (V - 1)
    accuracy = float(((p == t) & off_diag).sum()) / pairs if pairs else 1.0

    diff = (p != t).astype(np.int64)
    shd = int(np.triu(np.clip(diff + diff.T, 0, 1), k=1).sum())

    return GraphMetrics(
        f1=float(f1),
        precision=float(precision),
        recall=float(recall),
        accuracy=accuracy,
        shd=shd,
    )
