# graphs/fixtures.py
"""Small named graphs shared by tests and the selftest command."""

import networkx as nx
import numpy as np

from graphs.models import Graph


def from_networkx(nxg, feature_dim=1):
    nxg = nx.convert_node_labels_to_integers(nxg)
    n = nxg.number_of_nodes()
    return Graph.from_pairs(n, list(nxg.edges()), node_features=np.ones((n, feature_dim)))


def k2():
    return from_networkx(nx.complete_graph(2))


def k3():
    return from_networkx(nx.complete_graph(3))


def path3():
    return from_networkx(nx.path_graph(3))


def single_node():
    return Graph.from_pairs(1, [], node_features=np.ones((1, 1)))


def two_triangles():
    """Triangles {0,1,2} and {3,4,5} joined by the bridge 2-3."""
    return Graph.from_pairs(6, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (3, 5)],
                            node_features=np.ones((6, 1)))


def random_connected(rng, max_nodes=6, p=0.5):
    """Random connected graph with 2..max_nodes nodes."""
    while True:
        n = int(rng.integers(2, max_nodes + 1))
        nxg = nx.gnp_random_graph(n, p, seed=int(rng.integers(2**31)))
        if nx.is_connected(nxg):
            return from_networkx(nxg)
