"""
Untreated-outcome model for ATT estimation.

For each type ``j`` a linear Poisson rate of ``j``'s new arrivals is fitted on
the transitions that did not treat ``j``, with the post-repair exposures of
every other type as covariates. Evaluated at a treated row's pre-repair
exposure it gives the arrivals ``j`` would have seen without the repair.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from loguru import logger

from causal_alarm_rl.discovery.buffer import Buffer, as_log
from causal_alarm_rl.discovery.poisson import PoissonRateFit, fit_linear_poisson
from causal_alarm_rl.errors import InvalidArgumentError


def _others(exposure: np.ndarray, j: int) -> np.ndarray:
    """(T, (V-1)*H) covariates: every type's exposure except ``j``'s."""
    exposure = np.asarray(exposure, dtype=np.float64)
    rest = np.delete(exposure, j, axis=1)
    return rest.reshape(rest.shape[0], rest.shape[1] * rest.shape[2])


@dataclass(frozen=True)
class CounterfactualModel:
    fits: Tuple[Optional[PoissonRateFit], ...]

    @property
    def num_types(self) -> int:
        return len(self.fits)

    def predict(self, j: int, exposure: np.ndarray) -> np.ndarray:
        """Expected untreated arrivals of type ``j`` at (T, V, H) exposures; NaN without untreated data."""
        exposure = np.asarray(exposure, dtype=np.float64)
        fit = self.fits[j]
        if fit is None:
            return np.full(exposure.shape[0], np.nan)
        return fit.rate(_others(exposure, j))

    def predict_all(self, exposure: np.ndarray) -> np.ndarray:
        """(T, V) matrix of ``predict`` over all types."""
        return np.column_stack([self.predict(j, exposure) for j in range(self.num_types)])


def fit_counterfactual(buffer: Buffer, max_iter: int = 200) -> CounterfactualModel:
    log = as_log(buffer)
    if len(log) == 0:
        raise InvalidArgumentError("cannot fit a counterfactual model on an empty buffer")

    fits = []
    for j in range(log.num_types):
        untreated = ~log.treated[:, j]
        if not untreated.any():
            logger.warning(f"Type {j} has no untreated transitions; its ATT cells are invalid")
            fits.append(None)
            continue
        fits.append(
            fit_linear_poisson(
                log.new_events[untreated, j],
                _others(log.post_exposure[untreated], j),
                max_iter=max_iter,
            )
        )
    return CounterfactualModel(fits=tuple(fits))
