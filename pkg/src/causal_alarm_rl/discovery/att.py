"""Average treatment effect on the treated between alarm types."""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from causal_alarm_rl.config import DiscoveryConfig
from causal_alarm_rl.core.graph import default_type_names
from causal_alarm_rl.discovery.buffer import Buffer, as_log
from causal_alarm_rl.discovery.counterfactual import CounterfactualModel


@dataclass(frozen=True, eq=False)
class AttMatrix:
    """
    ``att[i, j]``: mean effect on type ``j``'s next-step arrivals of repairing type ``i``.

    ``n_treated[i, j]`` counts the transitions that treated ``i``; ``valid``
    marks cells with at least ``n_min`` of them and a usable counterfactual.
    Repairs only lower exposure, so direct causes show negative values.
    """

    att: np.ndarray
    n_treated: np.ndarray
    valid: np.ndarray
    type_names: Tuple[str, ...]

    @property
    def num_types(self) -> int:
        return self.att.shape[0]


def estimate_att(
    buffer: Buffer,
    cf: CounterfactualModel,
    config: DiscoveryConfig,
    type_names: Optional[Sequence[str]] = None,
) -> AttMatrix:
    log = as_log(buffer)
    V = log.num_types
    names = tuple(type_names) if type_names is not None else tuple(default_type_names(V))

    # untreated outcome at the exposure the repair removed
    predicted = cf.predict_all(log.exposure) if len(log) else np.zeros((0, V))
    residual = log.new_events - predicted
    usable = np.isfinite(predicted).all(axis=0) if len(log) else np.zeros(V, dtype=bool)
    residual = np.where(np.isfinite(residual), residual, 0.0)

    treated = log.treated.astype(np.float64)
    n = treated.sum(axis=0).astype(np.int64)
    sums = treated.T @ residual
    att = np.divide(sums, n[:, None], out=np.zeros((V, V)), where=n[:, None] > 0)

    n_treated = np.repeat(n[:, None], V, axis=1)
    valid = (n_treated >= config.n_min) & ~np.eye(V, dtype=bool) & usable[None, :]
    att[:, ~usable] = 0.0
    np.fill_diagonal(att, 0.0)

    logger.debug(f"ATT estimated on {len(log)} transitions: {int(valid.sum())} valid cells")
    return AttMatrix(att=att, n_treated=n_treated, valid=valid, type_names=names)
