"""
Columnar history of type-level transitions.

Discovery reads four columns per transition: treatment flags (V,), per-hop
exposures before and after the repair (V, H) and new arrivals per type (V,).
The run history is kept as stacked arrays rather than full ``Transition``
objects.
"""

from typing import Iterable, List, Optional, Sequence, Union

import numpy as np

from causal_alarm_rl.core.types import Transition
from causal_alarm_rl.errors import InvalidArgumentError


class InterventionLog:
    """Append-only (treated, exposure, post_exposure, new_events) rows."""

    def __init__(self, num_types: int):
        self.num_types = num_types
        self.num_hops: Optional[int] = None
        self._chunks: List[tuple] = []
        self._cache = None

    @classmethod
    def from_transitions(cls, transitions: Sequence[Transition]) -> "InterventionLog":
        if not transitions:
            raise InvalidArgumentError("cannot infer the number of types from an empty buffer")
        log = cls(transitions[0].num_types)
        log.extend(transitions)
        return log

    def extend(self, transitions: Iterable[Transition]) -> None:
        rows = list(transitions)
        if not rows:
            return
        self.extend_arrays(
            np.stack([t.treated_types for t in rows]),
            np.stack([t.exposure for t in rows]),
            np.stack([t.post_exposure for t in rows]),
            np.stack([t.new_events for t in rows]),
        )

    def append(self, transition: Transition) -> None:
        self.extend([transition])

    def extend_arrays(
        self,
        treated: np.ndarray,
        exposure: np.ndarray,
        post_exposure: np.ndarray,
        new_events: np.ndarray,
    ) -> None:
        """Append rows; 2-D (T, V) exposures are read as a single hop."""
        treated = np.atleast_2d(np.asarray(treated, dtype=bool))
        new_events = np.atleast_2d(np.asarray(new_events, dtype=np.int64))
        exposure = np.asarray(exposure, dtype=np.float64)
        post_exposure = np.asarray(post_exposure, dtype=np.float64)
        if exposure.ndim == 2:
            exposure = exposure[:, :, None]
        if post_exposure.ndim == 2:
            post_exposure = post_exposure[:, :, None]

        if exposure.ndim != 3 or exposure.shape != post_exposure.shape:
            raise InvalidArgumentError("exposure/post_exposure must share a (T, V, H) shape")
        if not (treated.shape == new_events.shape == exposure.shape[:2]):
            raise InvalidArgumentError("treated/exposure/new_events row shapes differ")
        if treated.shape[1] != self.num_types:
            raise InvalidArgumentError(
                f"rows have {treated.shape[1]} types, log expects {self.num_types}"
            )
        if self.num_hops is not None and exposure.shape[2] != self.num_hops:
            raise InvalidArgumentError(
                f"rows have {exposure.shape[2]} hops, log expects {self.num_hops}"
            )
        if (new_events < 0).any():
            raise InvalidArgumentError("new_events must be non-negative")

        self.num_hops = exposure.shape[2]
        self._chunks.append((treated, exposure, post_exposure, new_events))
        self._cache = None

    def _columns(self):
        if self._cache is None:
            if self._chunks:
                self._cache = tuple(np.concatenate(col) for col in zip(*self._chunks))
                self._chunks = [self._cache]
            else:
                V, H = self.num_types, self.num_hops or 1
                self._cache = (
                    np.zeros((0, V), dtype=bool),
                    np.zeros((0, V, H)),
                    np.zeros((0, V, H)),
                    np.zeros((0, V), dtype=np.int64),
                )
        return self._cache

    @property
    def treated(self) -> np.ndarray:
        return self._columns()[0]

    @property
    def exposure(self) -> np.ndarray:
        return self._columns()[1]

    @property
    def post_exposure(self) -> np.ndarray:
        return self._columns()[2]

    @property
    def new_events(self) -> np.ndarray:
        return self._columns()[3]

    @property
    def num_interventions(self) -> int:
        return int(self.treated.any(axis=1).sum())

    def __len__(self) -> int:
        return sum(chunk[0].shape[0] for chunk in self._chunks)

    def __repr__(self) -> str:
        return f"<InterventionLog(rows={len(self)}, types={self.num_types}, hops={self.num_hops})>"


Buffer = Union[Sequence[Transition], InterventionLog]


def as_log(buffer: Buffer) -> InterventionLog:
    if isinstance(buffer, InterventionLog):
        return buffer
    return InterventionLog.from_transitions(list(buffer))
