# encoders/model.py
import numpy as np

from autograd.tensor import Tensor
from encoders.layers import GINEncoder, ProjectionHead, TreeEncoder
from objective.losses import BatchEmbeddings

HEADS = ("local_b", "local_t", "global_b", "global_t", "tree")


class SegoModel:
    """Basic-view GIN, topo-view GIN, tree encoder and five projection heads.

    The three encoders share no parameters. Parameters are created in a fixed
    order from one seeded generator, so a seed determines the whole model.
    """

    def __init__(self, feature_dim, topo_dim, cfg):
        rng = np.random.default_rng(cfg.seed)
        h, c = cfg.hidden_dim, cfg.contrast_dim
        self.feature_dim = feature_dim
        self.topo_dim = topo_dim
        self.tau = cfg.tau
        self.epoch_losses = []
        self.gin_b = GINEncoder("gin_b", feature_dim, h, cfg.num_layers, rng)
        self.gin_t = GINEncoder("gin_t", topo_dim, h, cfg.num_layers, rng)
        self.tree = TreeEncoder("tree", feature_dim, h, cfg.k, rng)
        width = self.gin_b.output_dim
        self.heads = {
            "local_b": ProjectionHead("head_local_b", width, c, rng),
            "local_t": ProjectionHead("head_local_t", width, c, rng),
            "global_b": ProjectionHead("head_global_b", width, c, rng),
            "global_t": ProjectionHead("head_global_t", width, c, rng),
            "tree": ProjectionHead("head_tree", h, c, rng),
        }

    @classmethod
    def init(cls, feature_dim, topo_dim, cfg):
        return cls(feature_dim, topo_dim, cfg)

    def parameters(self):
        params = self.gin_b.parameters() + self.gin_t.parameters() + self.tree.parameters()
        for name in HEADS:
            params += self.heads[name].parameters()
        return params

    def named_parameters(self):
        return {p.name: p for p in self.parameters()}

    def forward(self, batch):
        x = Tensor(batch.features)
        p = Tensor(batch.topo)
        nodes_b, graphs_b = self.gin_b(x, batch.src, batch.dst, batch.node_graph, batch.n_graphs)
        nodes_t, graphs_t = self.gin_t(p, batch.src, batch.dst, batch.node_graph, batch.n_graphs)
        roots = self.tree(x, batch.leaf_rows, batch.tree_levels)
        return BatchEmbeddings(
            node_b=self.heads["local_b"](nodes_b),
            node_t=self.heads["local_t"](nodes_t),
            graph_b=self.heads["global_b"](graphs_b),
            graph_t=self.heads["global_t"](graphs_t),
            tree=self.heads["tree"](roots),
            node_graph=batch.node_graph,
            nodes_per_graph=batch.nodes_per_graph,
            tau=self.tau,
        )

    __call__ = forward
