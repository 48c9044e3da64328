"""
Device topology and its normalized adjacency powers.

Alarms propagate between devices through ``Â^k`` where
``Â = D^{-1/2} A D^{-1/2}``. Degree-0 devices get a zero ``D^{-1/2}`` entry,
so they take no part in propagation.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from causal_alarm_rl.errors import InvalidArgumentError


def _check_adjacency(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidArgumentError(f"topology adjacency must be square, got shape {A.shape}")
    if not np.isin(A, (0, 1)).all():
        raise InvalidArgumentError("topology adjacency must be a 0/1 matrix")
    if not np.array_equal(A, A.T):
        raise InvalidArgumentError("topology adjacency must be symmetric")
    if np.diagonal(A).any():
        raise InvalidArgumentError("topology adjacency must have a zero diagonal")
    return A.astype(np.float64)


def normalized_adjacency_powers(A: np.ndarray, K: int) -> List[np.ndarray]:
    """Return ``[I, Â, Â², ..., Â^K]`` for the symmetric 0/1 matrix ``A``."""
    if K < 0:
        raise InvalidArgumentError(f"max hop must be >= 0, got {K}")
    A = _check_adjacency(A)
    deg = A.sum(axis=1)
    with np.errstate(divide="ignore"):
        dinv = np.where(deg > 0, 1.0 / np.sqrt(deg), 0.0)
    a_hat = dinv[:, None] * A * dinv[None, :]

    powers = [np.eye(A.shape[0])]
    for _ in range(K):
        powers.append(powers[-1] @ a_hat)
    return powers


@dataclass(frozen=True, eq=False)
class Topology:
    """Undirected device graph with precomputed propagation matrices."""

    adj: np.ndarray
    norm_adj_powers: Tuple[np.ndarray, ...]

    @classmethod
    def from_adjacency(cls, A: np.ndarray, max_hop: int) -> "Topology":
        powers = normalized_adjacency_powers(A, max_hop)
        adj = np.asarray(A, dtype=np.int64)
        adj.setflags(write=False)
        return cls(adj, tuple(powers))

    @classmethod
    def single_hop(cls, num_nodes: int) -> "Topology":
        """Topology-free setting: no device links, both hops act on the device itself."""
        eye = np.eye(num_nodes)
        return cls(np.zeros((num_nodes, num_nodes), dtype=np.int64), (eye, eye.copy()))

    @property
    def num_nodes(self) -> int:
        return self.adj.shape[0]

    @property
    def max_hop(self) -> int:
        return len(self.norm_adj_powers) - 1

    def stacked_powers(self) -> np.ndarray:
        """Powers as a ``(K+1, N, N)`` array."""
        return np.stack(self.norm_adj_powers)

    def __repr__(self) -> str:
        return f"<Topology(nodes={self.num_nodes}, links={int(self.adj.sum()) // 2}, K={self.max_hop})>"


def generate_topology(
    num_nodes: int, density: float, max_hop: int, rng: np.random.Generator
) -> Topology:
    """Random connected device graph: a random spanning tree plus extra links with prob ``density``."""
    if num_nodes < 1:
        raise InvalidArgumentError(f"num_nodes must be >= 1, got {num_nodes}")
    if not 0.0 <= density <= 1.0:
        raise InvalidArgumentError(f"topology density must be in [0, 1], got {density}")

    A = np.zeros((num_nodes, num_nodes), dtype=np.int64)
    order = rng.permutation(num_nodes)
    for pos in range(1, num_nodes):
        anchor = order[rng.integers(pos)]
        A[order[pos], anchor] = A[anchor, order[pos]] = 1

    extra = np.triu(rng.random((num_nodes, num_nodes)) < density, k=1)
    A |= (extra | extra.T).astype(np.int64)

    topology = Topology.from_adjacency(A, max_hop)
    logger.debug(f"Generated {topology!r}")
    return topology


def load_topology_csv(path: Path, max_hop: int) -> Topology:
    """Load a square 0/1 adjacency CSV (an optional label column named ``adj`` is skipped)."""
    path = Path(path)
    if not path.exists():
        raise InvalidArgumentError(f"Topology file not found: {path}")
    df = pd.read_csv(path)
    if df.columns[0] == "adj":
        df = df.drop(columns="adj")
    return Topology.from_adjacency(df.to_numpy(dtype=np.int64), max_hop)


def save_topology_csv(topology: Topology, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    labels = [f"d{n}" for n in range(topology.num_nodes)]
    df = pd.DataFrame(topology.adj, columns=labels)
    df.insert(0, "adj", labels)
    df.to_csv(path, index=False)
    return path
