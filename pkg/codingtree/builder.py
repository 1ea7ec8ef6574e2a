# codingtree/builder.py
"""
Greedy coding-tree construction: MERGE root children pairwise into a full-height
binary tree, DROP internal nodes until the height fits k, then pad every leaf to
depth k with single-child chain nodes.
"""

import heapq
import math

import numpy as np
from logzero import logger

from codingtree.entropy import node_term
from codingtree.models import CodingTree
from sego import settings
from sego.exceptions import ConfigurationError, ContractViolation

DELTA_TOLERANCE = 1e-9


class TreeNode:
    __slots__ = ("id", "parent", "children", "leaf_of", "vol", "g")

    def __init__(self, id, vol, g, leaf_of=-1, parent=None, children=None):
        self.id = id
        self.vol = vol
        self.g = g
        self.leaf_of = leaf_of
        self.parent = parent
        self.children = children if children is not None else []

    def __repr__(self):
        return f"TreeNode(id={self.id}, vol={self.vol}, g={self.g}, children={self.children})"


class WorkingTree:
    """Mutable coding tree with incremental entropy deltas."""

    def __init__(self, graph):
        self.graph = graph
        self.total_vol = 2 * len(graph.edges)
        self.nodes = {}
        self.root = None
        self._next_id = 0
        self._links = None

    # construction

    def new_node(self, vol, g, leaf_of=-1, children=None):
        node = TreeNode(self._next_id, vol, g, leaf_of, children=children)
        self.nodes[node.id] = node
        self._next_id += 1
        return node

    @classmethod
    def flat(cls, graph):
        tree = cls(graph)
        degrees = graph.degrees
        leaves = [tree.new_node(int(degrees[v]), int(degrees[v]), leaf_of=v) for v in range(graph.node_count)]
        root = tree.new_node(tree.total_vol, 0, children=[leaf.id for leaf in leaves])
        for leaf in leaves:
            leaf.parent = root.id
        tree.root = root.id
        return tree

    @classmethod
    def from_tree(cls, graph, t):
        tree = cls(graph)
        for u in range(t.size):
            node = tree.new_node(int(t.vol[u]), int(t.g_cut[u]), int(t.leaf_of[u]), list(t.children[u]))
            node.parent = None if t.parent[u] < 0 else int(t.parent[u])
        tree.root = int(t.root)
        return tree

    def freeze(self):
        ids = sorted(self.nodes)
        index = {old: new for new, old in enumerate(ids)}
        size = len(ids)
        parent = np.full(size, -1, dtype=np.int64)
        leaf_of = np.full(size, -1, dtype=np.int64)
        vol = np.zeros(size, dtype=np.int64)
        g_cut = np.zeros(size, dtype=np.int64)
        children = []
        for old in ids:
            node = self.nodes[old]
            new = index[old]
            if node.parent is not None:
                parent[new] = index[node.parent]
            leaf_of[new] = node.leaf_of
            vol[new] = node.vol
            g_cut[new] = node.g
            children.append(tuple(index[c] for c in node.children))

        depth = np.zeros(size, dtype=np.int64)
        root = index[self.root]
        stack = [root]
        while stack:
            u = stack.pop()
            for c in children[u]:
                depth[c] = depth[u] + 1
                stack.append(c)
        leaves = leaf_of >= 0
        height = int(depth[leaves].max(initial=0))
        for arr in (parent, leaf_of, vol, g_cut, depth):
            arr.setflags(write=False)
        return CodingTree(parent, tuple(children), leaf_of, vol, g_cut, depth, root, height)

    # structure queries

    def depths(self):
        depth = {self.root: 0}
        stack = [self.root]
        while stack:
            u = stack.pop()
            for c in self.nodes[u].children:
                depth[c] = depth[u] + 1
                stack.append(c)
        return depth

    def subtree_heights(self):
        heights = {}
        order = list(self.depths().items())
        order.sort(key=lambda item: -item[1])
        for u, _ in order:
            kids = self.nodes[u].children
            heights[u] = 0 if not kids else 1 + max(heights[c] for c in kids)
        return heights

    def height(self):
        return self.subtree_heights()[self.root]

    def entropy(self):
        if self.total_vol == 0:
            return 0.0
        h = 0.0
        for node in self.nodes.values():
            if node.parent is None:
                continue
            h += node_term(node.g, node.vol, self.nodes[node.parent].vol, self.total_vol)
        return h

    def root_children(self):
        return list(self.nodes[self.root].children)

    def links(self):
        """Edge counts between root children: {child: {other_child: count}}."""
        if self._links is None:
            owner = np.full(self.graph.node_count, -1, dtype=np.int64)
            for c in self.root_children():
                stack = [c]
                while stack:
                    u = stack.pop()
                    node = self.nodes[u]
                    if node.leaf_of >= 0:
                        owner[node.leaf_of] = c
                    stack.extend(node.children)
            links = {c: {} for c in self.root_children()}
            for i, j in self.graph.edges:
                a, b = int(owner[i]), int(owner[j])
                if a != b:
                    links[a][b] = links[a].get(b, 0) + 1
                    links[b][a] = links[b].get(a, 0) + 1
            self._links = links
        return self._links

    # MERGE

    def merge_delta(self, a, b):
        """Entropy change from fusing root children a and b under a new root child."""
        if self.total_vol == 0:
            return 0.0
        shared = self.links()[a].get(b, 0)
        merged_vol = self.nodes[a].vol + self.nodes[b].vol
        if shared == 0 or merged_vol == 0:
            return 0.0
        return 2.0 * shared * math.log2(merged_vol / self.total_vol) / self.total_vol

    def merge(self, a, b):
        root = self.nodes[self.root]
        if self.nodes[a].parent != self.root or self.nodes[b].parent != self.root or a == b:
            raise ContractViolation(f"merge needs two distinct root children, got {a} and {b}")
        links = self.links()
        shared = links[a].get(b, 0)
        na, nb = self.nodes[a], self.nodes[b]
        node = self.new_node(na.vol + nb.vol, na.g + nb.g - 2 * shared, children=[a, b])
        node.parent = self.root
        na.parent = nb.parent = node.id
        root.children = [c for c in root.children if c not in (a, b)] + [node.id]

        merged = {}
        for old in (a, b):
            for other, count in links.pop(old).items():
                if other in (a, b):
                    continue
                merged[other] = merged.get(other, 0) + count
                del links[other][old]
        for other, count in merged.items():
            links[other][node.id] = count
        links[node.id] = merged
        return node.id

    # DROP

    def drop_delta(self, v):
        """Entropy change from deleting internal node v (children re-attach to its parent)."""
        node = self.nodes[v]
        if self.total_vol == 0 or node.vol == 0:
            return 0.0
        internal = sum(self.nodes[c].g for c in node.children) - node.g
        parent_vol = self.nodes[node.parent].vol
        return internal * math.log2(parent_vol / node.vol) / self.total_vol

    def drop(self, v):
        node = self.nodes[v]
        if node.parent is None or node.leaf_of >= 0:
            raise ContractViolation(f"only non-root internal nodes can be dropped, got {v}")
        parent = self.nodes[node.parent]
        at = parent.children.index(v)
        parent.children[at:at + 1] = node.children
        for c in node.children:
            self.nodes[c].parent = parent.id
        del self.nodes[v]
        self._links = None

    # padding

    def pad_leaves(self, k):
        """Insert single-child chain nodes above shallow leaves so every leaf sits at depth k."""
        depth = self.depths()
        for u, d in sorted(depth.items()):
            node = self.nodes[u]
            if node.leaf_of < 0 or d >= k:
                continue
            parent = self.nodes[node.parent]
            below = u
            for _ in range(k - d):
                chain = self.new_node(node.vol, node.g, children=[below])
                self.nodes[below].parent = chain.id
                below = chain.id
            parent.children[parent.children.index(u)] = below
            self.nodes[below].parent = parent.id
        self._links = None


def _check_delta(tree, delta, apply, label):
    before = tree.entropy()
    apply()
    recomputed = tree.entropy() - before
    if abs(recomputed - delta) > DELTA_TOLERANCE:
        raise AssertionError(f"{label}: incremental delta {delta!r} != recomputed {recomputed!r}")


def _merge_stage(tree, verify, trace):
    links = tree.links()
    heap = []
    for a, neighbours in links.items():
        for b in neighbours:
            if a < b:
                heapq.heappush(heap, (tree.merge_delta(a, b), a, b))

    while len(tree.nodes[tree.root].children) > 2:
        alive = set(tree.nodes[tree.root].children)
        while heap and (heap[0][1] not in alive or heap[0][2] not in alive):
            heapq.heappop(heap)

        if heap and heap[0][0] < 0.0:
            delta, a, b = heapq.heappop(heap)
        else:
            # every remaining pair leaves entropy unchanged; take the smallest ids
            a, b = sorted(alive)[:2]
            delta = tree.merge_delta(a, b)

        if verify:
            merged = {}
            _check_delta(tree, delta, lambda: merged.setdefault("id", tree.merge(a, b)), f"MERGE({a},{b})")
            new_id = merged["id"]
        else:
            new_id = tree.merge(a, b)
        if trace is not None:
            trace.append(("merge", (a, b), delta))

        for other in tree.links()[new_id]:
            lo, hi = min(other, new_id), max(other, new_id)
            heapq.heappush(heap, (tree.merge_delta(lo, hi), lo, hi))


def _drop_stage(tree, k, verify, trace):
    while True:
        heights = tree.subtree_heights()
        if heights[tree.root] <= k:
            return
        depth = tree.depths()
        candidates = [
            (tree.drop_delta(u), u)
            for u, node in tree.nodes.items()
            if node.parent is not None and node.leaf_of < 0 and depth[u] + heights[u] > k
        ]
        delta, v = min(candidates)
        if verify:
            _check_delta(tree, delta, lambda: tree.drop(v), f"DROP({v})")
        else:
            tree.drop(v)
        if trace is not None:
            trace.append(("drop", (v,), delta))


def build_coding_tree(g, k, verify=None, trace=None):
    """Greedy height-k coding tree of g with every leaf at depth exactly k.

    `trace`, when a list, receives one (operator, node ids, delta) tuple per step.
    """
    if k < 1:
        raise ConfigurationError(f"coding tree height k must be >= 1, got {k}")
    if g.node_count < 1:
        raise ContractViolation("cannot build a coding tree for an empty graph")
    if verify is None:
        verify = settings.DEBUG_ENTROPY

    tree = WorkingTree.flat(g)
    if len(g.edges) == 0:
        logger.warning(f"{g} has no edges; using the padded flat tree")
    else:
        _merge_stage(tree, verify, trace)
        _drop_stage(tree, k, verify, trace)
    tree.pad_leaves(k)
    return tree.freeze()


def flat_tree(g):
    """Height-1 tree: the root directly over every graph node."""
    if g.node_count < 1:
        raise ContractViolation("cannot build a coding tree for an empty graph")
    return WorkingTree.flat(g).freeze()


def entropy_delta_merge(g, t, a, b):
    return WorkingTree.from_tree(g, t).merge_delta(a, b)


def entropy_delta_drop(g, t, v):
    return WorkingTree.from_tree(g, t).drop_delta(v)


def apply_merge(g, t, a, b):
    tree = WorkingTree.from_tree(g, t)
    tree.merge(a, b)
    return tree.freeze()


def apply_drop(g, t, v):
    tree = WorkingTree.from_tree(g, t)
    tree.drop(v)
    return tree.freeze()


def tree_from_partitions(g, levels):
    """Uniform-depth tree from nested partitions, coarsest level first.

    Each level is a list of node-id blocks and must refine the level above it.
    """
    tree = WorkingTree(g)
    degrees = g.degrees
    leaf_ids = [tree.new_node(int(degrees[v]), int(degrees[v]), leaf_of=v).id for v in range(g.node_count)]

    # below[v] = tree node currently representing the block that holds v
    below = {v: leaf_ids[v] for v in range(g.node_count)}
    for level in reversed(levels):
        created = {}
        for block in level:
            block = sorted(block)
            kids = sorted({below[v] for v in block})
            members = set(block)
            vol = int(degrees[block].sum())
            crossing = sum(1 for i, j in g.edges if (i in members) != (j in members))
            node = tree.new_node(vol, crossing, children=kids)
            for c in kids:
                if tree.nodes[c].parent is not None:
                    raise ContractViolation("levels are not nested")
                tree.nodes[c].parent = node.id
            for v in block:
                created[v] = node.id
        if sorted(created) != list(range(g.node_count)):
            raise ContractViolation("each level must partition every graph node")
        below = created

    top = sorted(set(below.values()))
    root = tree.new_node(tree.total_vol, 0, children=top)
    for c in top:
        tree.nodes[c].parent = root.id
    tree.root = root.id
    return tree.freeze()
