# graphs/models.py
import hashlib
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional

import numpy as np
from logzero import logger

from sego.exceptions import ContractViolation


def _frozen(arr, dtype):
    arr = np.array(arr, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph with node features (the basic view)."""

    node_count: int
    edges: np.ndarray                      # (E, 2), each row i < j, rows unique and sorted
    node_features: np.ndarray              # (node_count, feature_dim)
    node_labels: Optional[np.ndarray] = None
    graph_label: Optional[int] = None

    def __post_init__(self):
        n = int(self.node_count)
        if n < 0:
            raise ContractViolation(f"node_count must be nonnegative, got {n}")
        object.__setattr__(self, "node_count", n)

        edges = _frozen(np.asarray(self.edges, dtype=np.int64).reshape(-1, 2), np.int64)
        if len(edges):
            if edges.min() < 0 or edges.max() >= n:
                raise ContractViolation(f"edge endpoint out of range for node_count={n}")
            if np.any(edges[:, 0] >= edges[:, 1]):
                raise ContractViolation("edges must be stored as (i, j) with i < j and no self-loops")
            if len(np.unique(edges, axis=0)) != len(edges):
                raise ContractViolation("duplicate edges in storage")
        object.__setattr__(self, "edges", edges)

        features = np.asarray(self.node_features, dtype=np.float64)
        if features.ndim == 1:
            features = features.reshape(n, -1) if n else features.reshape(0, 0)
        if features.shape[0] != n:
            raise ContractViolation(
                f"node_features has {features.shape[0]} rows, expected node_count={n}")
        object.__setattr__(self, "node_features", _frozen(features, np.float64))

        if self.node_labels is not None:
            labels = _frozen(self.node_labels, np.int64).reshape(-1)
            if len(labels) != n:
                raise ContractViolation(f"{len(labels)} node labels for {n} nodes")
            object.__setattr__(self, "node_labels", labels)
        if self.graph_label is not None:
            object.__setattr__(self, "graph_label", int(self.graph_label))

    @classmethod
    def from_pairs(cls, node_count, pairs, node_features=None, node_labels=None, graph_label=None):
        """Build a graph from arbitrary (possibly directed, repeated) pairs.

        Pairs are symmetrized and deduplicated; self-loops are dropped with a warning.
        """
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        loops = pairs[:, 0] == pairs[:, 1]
        if loops.any():
            logger.warning(f"Dropping {int(loops.sum())} self-loop(s): nodes {sorted(set(pairs[loops, 0].tolist()))}")
        pairs = pairs[~loops]
        canon = np.sort(pairs, axis=1)
        canon = np.unique(canon, axis=0) if len(canon) else canon.reshape(0, 2)
        if node_features is None:
            node_features = np.zeros((node_count, 0))
        return cls(node_count, canon, node_features, node_labels, graph_label)

    @property
    def feature_dim(self):
        return self.node_features.shape[1]

    @cached_property
    def degrees(self):
        deg = np.zeros(self.node_count, dtype=np.int64)
        np.add.at(deg, self.edges[:, 0], 1)
        np.add.at(deg, self.edges[:, 1], 1)
        deg.setflags(write=False)
        return deg

    def adjacency(self):
        """Dense symmetric 0/1 adjacency matrix."""
        a = np.zeros((self.node_count, self.node_count))
        a[self.edges[:, 0], self.edges[:, 1]] = 1.0
        a[self.edges[:, 1], self.edges[:, 0]] = 1.0
        return a

    def directed_edges(self):
        """Both orientations of every edge, as (src, dst) index arrays."""
        src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        dst = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        return src, dst

    @cached_property
    def fingerprint(self):
        h = hashlib.blake2b(digest_size=16)
        h.update(np.int64(self.node_count).tobytes())
        h.update(self.edges.tobytes())
        h.update(np.int64(self.feature_dim).tobytes())
        h.update(self.node_features.tobytes())
        return h.hexdigest()

    def with_features(self, node_features):
        return replace(self, node_features=node_features)

    def permuted(self, perm):
        """Relabel node i as perm[i]."""
        perm = np.asarray(perm, dtype=np.int64)
        inverse = np.argsort(perm)
        pairs = perm[self.edges] if len(self.edges) else self.edges
        labels = None if self.node_labels is None else self.node_labels[inverse]
        return Graph.from_pairs(self.node_count, pairs, self.node_features[inverse], labels, self.graph_label)

    def __str__(self):
        return f"Graph(n={self.node_count}, m={len(self.edges)}, d={self.feature_dim})"


@dataclass(frozen=True)
class Dataset:
    name: str
    graphs: tuple = field(default_factory=tuple)
    feature_dim: int = 0

    def __post_init__(self):
        graphs = tuple(self.graphs)
        if not graphs:
            raise ContractViolation(f"dataset {self.name!r} is empty")
        dims = {g.feature_dim for g in graphs}
        if len(dims) != 1:
            raise ContractViolation(f"dataset {self.name!r} mixes feature dims {sorted(dims)}")
        object.__setattr__(self, "graphs", graphs)
        object.__setattr__(self, "feature_dim", dims.pop())

    def __len__(self):
        return len(self.graphs)

    def __getitem__(self, index):
        return self.graphs[index]

    def __iter__(self):
        return iter(self.graphs)

    @property
    def has_node_labels(self):
        return all(g.node_labels is not None for g in self.graphs)

    @property
    def has_graph_labels(self):
        return all(g.graph_label is not None for g in self.graphs)

    def subset(self, indices, name=None):
        return Dataset(name or self.name, tuple(self.graphs[i] for i in indices))

    def __str__(self):
        return f"{self.name} ({len(self.graphs)} graphs, feature_dim={self.feature_dim})"
