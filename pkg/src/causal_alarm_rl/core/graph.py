"""
Causal graph over alarm types.

``CausalGraph`` is an immutable DAG stored as a boolean adjacency matrix where
``adj[i, j]`` means ``s_i -> s_j``. Graph files are either a ``cause,effect``
edge list using type names or a square 0/1 matrix whose first header cell is
``adj``.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import pandas as pd
from loguru import logger

from causal_alarm_rl.errors import CyclicGraphError, InvalidArgumentError


def default_type_names(num_types: int) -> List[str]:
    return [f"s{i}" for i in range(num_types)]


def _to_digraph(adj: np.ndarray) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(range(adj.shape[0]))
    graph.add_edges_from(zip(*np.nonzero(adj)))
    return graph


def find_cycle(adj: np.ndarray) -> Optional[List[Tuple[int, int]]]:
    """Return the edges of one directed cycle, or None if ``adj`` is acyclic."""
    try:
        cycle = nx.find_cycle(_to_digraph(adj), orientation="original")
    except nx.NetworkXNoCycle:
        return None
    return [(int(u), int(v)) for u, v, _ in cycle]


def order_from_adjacency(adj: np.ndarray) -> List[int]:
    """Topological order with ties broken by ascending index."""
    graph = _to_digraph(adj)
    try:
        return [int(v) for v in nx.lexicographical_topological_sort(graph)]
    except nx.NetworkXUnfeasible:
        cycle = find_cycle(adj) or []
        raise CyclicGraphError([u for u, _ in cycle])


@dataclass(frozen=True, eq=False)
class CausalGraph:
    """Directed acyclic graph over ``num_types`` alarm types."""

    adj: np.ndarray
    type_names: Tuple[str, ...]

    def __post_init__(self):
        adj = np.array(self.adj, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise InvalidArgumentError(f"adjacency must be square, got shape {adj.shape}")
        names = tuple(str(n) for n in self.type_names)
        if len(names) != adj.shape[0]:
            raise InvalidArgumentError(
                f"{len(names)} type names for a {adj.shape[0]}-type graph"
            )
        if len(set(names)) != len(names):
            raise InvalidArgumentError("type names must be unique")
        if adj.diagonal().any():
            raise InvalidArgumentError("self-loops are not allowed")
        try:
            order_from_adjacency(adj)
        except CyclicGraphError as e:
            raise CyclicGraphError(e.cycle, list(names)) from None
        adj.setflags(write=False)
        object.__setattr__(self, "adj", adj)
        object.__setattr__(self, "type_names", names)

    @classmethod
    def empty(cls, type_names: Sequence[str]) -> "CausalGraph":
        n = len(type_names)
        return cls(np.zeros((n, n), dtype=bool), tuple(type_names))

    @classmethod
    def from_edges(
        cls, edges: Iterable[Tuple[int, int]], type_names: Sequence[str]
    ) -> "CausalGraph":
        n = len(type_names)
        adj = np.zeros((n, n), dtype=bool)
        for i, j in edges:
            adj[i, j] = True
        return cls(adj, tuple(type_names))

    @property
    def num_types(self) -> int:
        return self.adj.shape[0]

    @property
    def num_edges(self) -> int:
        return int(self.adj.sum())

    def edges(self) -> List[Tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.adj))]

    def parents(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.adj[:, j])

    def with_adjacency(self, adj: np.ndarray) -> "CausalGraph":
        return CausalGraph(adj, self.type_names)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CausalGraph):
            return NotImplemented
        return self.type_names == other.type_names and np.array_equal(self.adj, other.adj)

    def __hash__(self) -> int:
        return hash((self.type_names, self.adj.tobytes()))

    def __repr__(self) -> str:
        return f"<CausalGraph(types={self.num_types}, edges={self.num_edges})>"


def topological_order(g: CausalGraph) -> List[int]:
    """Causal order of ``g``; every edge points from an earlier to a later type."""
    try:
        return order_from_adjacency(g.adj)
    except CyclicGraphError as e:
        raise CyclicGraphError(e.cycle, list(g.type_names)) from None


def transitive_closure(g: CausalGraph) -> CausalGraph:
    """Ancestor relation of ``g`` as a graph (edge i->j iff i is an ancestor of j)."""
    reach = g.adj.copy()
    while True:
        grown = reach | ((reach.astype(np.int64) @ g.adj.astype(np.int64)) > 0)
        if np.array_equal(grown, reach):
            return g.with_adjacency(reach)
        reach = grown


def random_dag(
    num_types: int,
    edge_prob: float,
    rng: np.random.Generator,
    type_names: Optional[Sequence[str]] = None,
) -> CausalGraph:
    """Random DAG: a random causal order, each forward pair joined with ``edge_prob``."""
    if not 0.0 <= edge_prob <= 1.0:
        raise InvalidArgumentError(f"edge probability must be in [0, 1], got {edge_prob}")
    names = list(type_names) if type_names is not None else default_type_names(num_types)
    order = rng.permutation(num_types)
    upper = np.triu(rng.random((num_types, num_types)) < edge_prob, k=1)
    adj = np.zeros((num_types, num_types), dtype=bool)
    adj[np.ix_(order, order)] = upper
    return CausalGraph(adj, tuple(names))


def load_graph(path: Path, type_names: Optional[Sequence[str]] = None) -> CausalGraph:
    """
    Load a graph CSV.

    Edge lists (header ``cause,effect``) name types; without ``type_names`` the
    type order is the order of first appearance. Adjacency files (first header
    cell ``adj``) carry their own names and are reordered to ``type_names``
    when given.
    """
    path = Path(path)
    if not path.exists():
        raise InvalidArgumentError(f"Graph file not found: {path}")
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    columns = [c.strip() for c in df.columns]

    if columns and columns[0] == "adj":
        names = columns[1:]
        row_names = [r.strip() for r in df.iloc[:, 0]]
        if sorted(row_names) != sorted(names):
            raise InvalidArgumentError(f"{path}: row labels do not match column labels")
        matrix = df.iloc[:, 1:].astype(int).to_numpy() != 0
        row_pos = [row_names.index(n) for n in names]
        adj = matrix[row_pos, :]
        file_names = names
    elif columns[:2] == ["cause", "effect"]:
        causes = [c.strip() for c in df.iloc[:, 0]]
        effects = [e.strip() for e in df.iloc[:, 1]]
        file_names = []
        for cause, effect in zip(causes, effects):
            for name in (cause, effect):
                if name not in file_names:
                    file_names.append(name)
        if type_names is not None:
            unknown = sorted(set(file_names) - set(type_names))
            if unknown:
                raise InvalidArgumentError(f"{path}: unknown type names {unknown}")
            file_names = list(type_names)
        index = {name: i for i, name in enumerate(file_names)}
        adj = np.zeros((len(file_names), len(file_names)), dtype=bool)
        for cause, effect in zip(causes, effects):
            adj[index[cause], index[effect]] = True
    else:
        raise InvalidArgumentError(
            f"{path}: expected header 'cause,effect' or a first header cell 'adj'"
        )

    graph = CausalGraph(adj, tuple(file_names))
    if type_names is not None and tuple(type_names) != graph.type_names:
        if sorted(type_names) != sorted(graph.type_names):
            raise InvalidArgumentError(f"{path}: type names do not match the expected set")
        perm = [graph.type_names.index(n) for n in type_names]
        graph = CausalGraph(graph.adj[np.ix_(perm, perm)], tuple(type_names))

    logger.debug(f"Loaded graph from {path}: {graph.num_types} types, {graph.num_edges} edges")
    return graph


def save_graph(g: CausalGraph, path: Path, fmt: str = "adjacency") -> Path:
    """Write ``g`` as an adjacency CSV (lossless) or a ``cause,effect`` edge list."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "adjacency":
        df = pd.DataFrame(g.adj.astype(int), columns=list(g.type_names))
        df.insert(0, "adj", list(g.type_names))
    elif fmt == "edges":
        df = pd.DataFrame(
            [(g.type_names[i], g.type_names[j]) for i, j in g.edges()],
            columns=["cause", "effect"],
        )
    else:
        raise InvalidArgumentError(f"unknown graph format {fmt!r}")
    df.to_csv(path, index=False)
    logger.debug(f"Wrote graph ({g.num_edges} edges) to {path}")
    return path
