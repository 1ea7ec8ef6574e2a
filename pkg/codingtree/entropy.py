# codingtree/entropy.py
import math

from logzero import logger


def node_term(g_cut, vol, parent_vol, total_vol):
    """One node's contribution to structural entropy, in bits."""
    if vol == 0 or g_cut == 0:
        return 0.0
    return -(g_cut / total_vol) * math.log2(vol / parent_vol)


def structural_entropy(g, t):
    """Structural entropy of graph g under coding tree t (log base 2)."""
    total_vol = 2 * len(g.edges)
    if total_vol == 0:
        logger.warning(f"Structural entropy of an edgeless graph ({g}) is taken as 0")
        return 0.0
    h = 0.0
    for u in range(t.size):
        p = t.parent[u]
        if p < 0:
            continue
        h += node_term(int(t.g_cut[u]), int(t.vol[u]), int(t.vol[p]), total_vol)
    return h
