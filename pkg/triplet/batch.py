# triplet/batch.py
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from sego.exceptions import ContractViolation


class TreeLevel(NamedTuple):
    parent_index: np.ndarray   # row in this level for every row of the level below
    size: int                  # number of rows in this level


@dataclass(frozen=True, eq=False)
class GraphBatch:
    """Block-diagonal batch of triplet views."""

    n_graphs: int
    features: np.ndarray       # (M, feature_dim), basic view X
    topo: np.ndarray           # (M, r + 1), topo view P
    src: np.ndarray            # directed edges, both orientations
    dst: np.ndarray
    node_graph: np.ndarray     # (M,) owning graph of every node
    nodes_per_graph: np.ndarray
    leaf_rows: np.ndarray      # node row for every depth-k tree row
    tree_levels: tuple         # TreeLevel for depths k-1, ..., 0

    @property
    def n_nodes(self):
        return len(self.node_graph)

    @property
    def tree_height(self):
        return len(self.tree_levels)


def tree_index(tree):
    """Row layout of one uniform-depth coding tree for bottom-up aggregation.

    Returns the graph node of every depth-k row and, for depths k-1 .. 0,
    the parent row of every row one level down plus the level size.
    """
    if not tree.is_uniform:
        raise ContractViolation("anchor leaves must all sit at the tree height")
    k = tree.height
    rows = [tree.nodes_at_depth(d) for d in range(k + 1)]
    leaf_rows = tree.leaf_of[rows[k]]
    levels = []
    for d in range(k - 1, -1, -1):
        position = np.full(tree.size, -1, dtype=np.int64)
        position[rows[d]] = np.arange(len(rows[d]))
        levels.append((position[tree.parent[rows[d + 1]]], len(rows[d])))
    return leaf_rows, levels


def collate(views):
    """Stack a list of TripletViews into one GraphBatch."""
    if not views:
        raise ContractViolation("cannot collate an empty batch")
    heights = {v.anchor.height for v in views}
    if len(heights) != 1:
        raise ContractViolation(f"anchors of one batch must share a height, got {sorted(heights)}")
    k = heights.pop()

    counts = np.array([v.basic.node_count for v in views], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])

    src, dst, leaf_rows = [], [], []
    parents = [[] for _ in range(k)]
    level_offsets = np.zeros(k, dtype=np.int64)
    for view, offset in zip(views, offsets):
        s, d = view.basic.directed_edges()
        src.append(s + offset)
        dst.append(d + offset)
        leaves, levels = tree_index(view.anchor)
        leaf_rows.append(leaves + offset)
        for i, (parent_index, size) in enumerate(levels):
            parents[i].append(parent_index + level_offsets[i])
            level_offsets[i] += size

    return GraphBatch(
        n_graphs=len(views),
        features=np.concatenate([v.basic.node_features for v in views]),
        topo=np.concatenate([v.topo for v in views]),
        src=np.concatenate(src),
        dst=np.concatenate(dst),
        node_graph=np.repeat(np.arange(len(views)), counts),
        nodes_per_graph=counts,
        leaf_rows=np.concatenate(leaf_rows),
        tree_levels=tuple(TreeLevel(np.concatenate(p), int(size)) for p, size in zip(parents, level_offsets)),
    )
