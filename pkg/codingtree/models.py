# codingtree/models.py
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from graphs.measures import cut, volume
from sego.exceptions import ContractViolation


@dataclass(frozen=True, eq=False)
class CodingTree:
    """Hierarchical partition tree over a graph's nodes (the anchor view).

    Nodes live in an arena indexed 0..size-1; leaves come first, so the leaf
    for graph node v is usually node v, but `leaf_of` is authoritative.
    """

    parent: np.ndarray        # -1 at the root
    children: tuple           # tuple of tuples of node ids
    leaf_of: np.ndarray       # graph node index, -1 for internal nodes
    vol: np.ndarray
    g_cut: np.ndarray
    depth: np.ndarray
    root: int
    height: int

    @property
    def size(self):
        return len(self.parent)

    def is_leaf(self, node):
        return self.leaf_of[node] >= 0

    @cached_property
    def leaves(self):
        return np.flatnonzero(self.leaf_of >= 0)

    def members(self, node):
        """Graph nodes under `node`, sorted."""
        out, stack = [], [node]
        while stack:
            u = stack.pop()
            if self.leaf_of[u] >= 0:
                out.append(int(self.leaf_of[u]))
            stack.extend(self.children[u])
        return sorted(out)

    def nodes_at_depth(self, d):
        return np.flatnonzero(self.depth == d)

    @property
    def is_uniform(self):
        return bool(np.all(self.depth[self.leaves] == self.height))

    def preorder(self):
        stack = [self.root]
        while stack:
            u = stack.pop()
            yield u
            stack.extend(reversed(self.children[u]))

    def validate(self, g):
        """Raise ContractViolation unless every cached field matches the graph."""
        leaf_targets = sorted(int(v) for v in self.leaf_of[self.leaves])
        if leaf_targets != list(range(g.node_count)):
            raise ContractViolation("leaves are not a bijection onto graph nodes")
        if self.parent[self.root] != -1:
            raise ContractViolation("root has a parent")
        for u in range(self.size):
            kids = self.children[u]
            if self.leaf_of[u] >= 0 and kids:
                raise ContractViolation(f"leaf {u} has children")
            if self.leaf_of[u] < 0 and not kids:
                raise ContractViolation(f"internal node {u} has no children")
            for c in kids:
                if self.parent[c] != u:
                    raise ContractViolation(f"node {c} does not point back to parent {u}")
                if self.depth[c] != self.depth[u] + 1:
                    raise ContractViolation(f"depth of node {c} is inconsistent")
            members = self.members(u)
            if self.vol[u] != volume(g, members):
                raise ContractViolation(f"cached vol of node {u} is {self.vol[u]}, expected {volume(g, members)}")
            if self.g_cut[u] != cut(g, members):
                raise ContractViolation(f"cached g_cut of node {u} is {self.g_cut[u]}, expected {cut(g, members)}")
        if self.g_cut[self.root] != 0:
            raise ContractViolation("root g_cut must be 0")
        if self.height != int(self.depth[self.leaves].max(initial=0)):
            raise ContractViolation("height is not the maximum leaf depth")
