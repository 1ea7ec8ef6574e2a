# codingtree/oracle.py
"""Exhaustive minimum-entropy search over small graphs (test oracle)."""

import numpy as np

from codingtree.builder import flat_tree, tree_from_partitions
from codingtree.entropy import node_term, structural_entropy
from sego.exceptions import ConfigurationError, RefusalError

MAX_NODES = 8
MAX_HEIGHT = 3


def set_partitions(items):
    """Yield every set partition of `items` as a list of lists."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def _mask_tables(g):
    n = g.node_count
    size = 1 << n
    degrees = g.degrees
    vol = np.zeros(size, dtype=np.int64)
    boundary = np.zeros(size, dtype=np.int64)
    for mask in range(1, size):
        low = mask & -mask
        v = low.bit_length() - 1
        vol[mask] = vol[mask ^ low] + degrees[v]
    for mask in range(size):
        boundary[mask] = sum(1 for i, j in g.edges if ((mask >> i) & 1) != ((mask >> j) & 1))
    return vol, boundary


def _as_mask(block):
    mask = 0
    for v in block:
        mask |= 1 << int(v)
    return mask


def brute_force_min_entropy(g, k):
    """Minimum structural entropy over all coding trees of height <= k.

    Limited to node_count <= 8 and k <= 3. Returns (tree, entropy).
    """
    if k < 1:
        raise ConfigurationError(f"coding tree height k must be >= 1, got {k}")
    if g.node_count > MAX_NODES or k > MAX_HEIGHT:
        raise RefusalError(
            f"brute force limited to {MAX_NODES} nodes and height {MAX_HEIGHT}, "
            f"got {g.node_count} nodes and k={k}")

    flat = flat_tree(g)
    best_h = structural_entropy(g, flat)
    if k == 1 or len(g.edges) == 0:
        return flat, best_h

    total = 2 * len(g.edges)
    vol, boundary = _mask_tables(g)
    degrees = [int(d) for d in g.degrees]
    nodes = list(range(g.node_count))
    best_levels = []

    def leaf_terms(blocks):
        h = 0.0
        for block in blocks:
            parent_vol = int(vol[_as_mask(block)])
            for v in block:
                h += node_term(degrees[v], degrees[v], parent_vol, total)
        return h

    for fine in set_partitions(nodes):
        fine_masks = [_as_mask(b) for b in fine]
        base = leaf_terms(fine)

        h2 = base + sum(node_term(int(boundary[m]), int(vol[m]), total, total) for m in fine_masks)
        if h2 < best_h - 1e-12:
            best_h, best_levels = h2, [fine]

        if k < 3:
            continue
        for grouping in set_partitions(list(range(len(fine)))):
            h3 = base
            for group in grouping:
                top = 0
                for b in group:
                    top |= fine_masks[b]
                h3 += node_term(int(boundary[top]), int(vol[top]), total, total)
                for b in group:
                    m = fine_masks[b]
                    h3 += node_term(int(boundary[m]), int(vol[m]), int(vol[top]), total)
            if h3 < best_h - 1e-12:
                coarse = [sorted(v for b in group for v in fine[b]) for group in grouping]
                best_h, best_levels = h3, [coarse, fine]

    if not best_levels:
        return flat, best_h
    return tree_from_partitions(g, best_levels), best_h
