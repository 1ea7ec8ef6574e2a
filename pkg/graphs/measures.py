# graphs/measures.py
import numpy as np


def _member_mask(g, s):
    mask = np.zeros(g.node_count, dtype=bool)
    idx = np.fromiter(s, dtype=np.int64)
    mask[idx] = True
    return mask


def degree(g, v):
    return int(g.degrees[v])


def volume(g, s):
    """Sum of member degrees; the empty set has volume 0."""
    idx = np.fromiter(s, dtype=np.int64)
    return int(g.degrees[idx].sum()) if len(idx) else 0


def cut(g, s):
    """Number of edges with exactly one endpoint in s."""
    if len(g.edges) == 0:
        return 0
    mask = _member_mask(g, s)
    return int(np.count_nonzero(mask[g.edges[:, 0]] != mask[g.edges[:, 1]]))
