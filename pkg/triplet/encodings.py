# triplet/encodings.py
import numpy as np

from sego.exceptions import ContractViolation

DEFAULT_WALK_LENGTH = 8


def _inverse_degrees(adjacency, power=1.0):
    degrees = adjacency.sum(axis=0)
    inv = np.zeros_like(degrees)
    nonzero = degrees > 0
    inv[nonzero] = degrees[nonzero] ** -power
    return inv


def random_walk_encoding(g, r=DEFAULT_WALK_LENGTH):
    """Return probabilities diag(RW^t), t = 1..r, with RW = A D^-1.

    Degree-0 nodes have a zero RW row and column, so their rows stay zero.
    """
    if r < 1:
        raise ContractViolation(f"walk length r must be >= 1, got {r}")
    adjacency = g.adjacency()
    rw = adjacency * _inverse_degrees(adjacency)[np.newaxis, :]
    out = np.zeros((g.node_count, r))
    power = rw
    for t in range(r):
        out[:, t] = np.diagonal(power)
        if t + 1 < r:
            power = power @ rw
    return out


def laplacian_pe(g):
    """Diagonal of I - D^-1/2 A D^-1/2; equals 1 on every node of a simple graph."""
    adjacency = g.adjacency()
    inv_sqrt = _inverse_degrees(adjacency, power=0.5)
    normalized = inv_sqrt[:, np.newaxis] * adjacency * inv_sqrt[np.newaxis, :]
    return 1.0 - np.diagonal(normalized)


def topo_features(g, r=DEFAULT_WALK_LENGTH):
    """[rw_1 .. rw_r | lp] per node."""
    return np.hstack([random_walk_encoding(g, r), laplacian_pe(g)[:, np.newaxis]])
