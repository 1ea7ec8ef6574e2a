# encoders/layers.py
import numpy as np

from autograd import ops
from autograd.tensor import Tensor
from sego.exceptions import ContractViolation
from triplet.batch import tree_index


def init_uniform(rng, fan_in, shape, name):
    bound = 1.0 / np.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True, name=name)


class MLP:
    """Two linear layers with a relu between them."""

    def __init__(self, name, in_dim, hidden_dim, out_dim, rng):
        self.name = name
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.w1 = init_uniform(rng, in_dim, (in_dim, hidden_dim), f"{name}.w1")
        self.b1 = init_uniform(rng, in_dim, (1, hidden_dim), f"{name}.b1")
        self.w2 = init_uniform(rng, hidden_dim, (hidden_dim, out_dim), f"{name}.w2")
        self.b2 = init_uniform(rng, hidden_dim, (1, out_dim), f"{name}.b2")

    def parameters(self):
        return [self.w1, self.b1, self.w2, self.b2]

    def __call__(self, x):
        if x.shape[1] != self.in_dim:
            raise ContractViolation(f"{self.name}: input width {x.shape[1]}, expected {self.in_dim}")
        hidden = ops.relu(ops.add_bias_rowwise(ops.matmul(x, self.w1), self.b1))
        return ops.add_bias_rowwise(ops.matmul(hidden, self.w2), self.b2)


class GINEncoder:
    """h_i <- MLP(h_i + sum of neighbour h_j), repeated num_layers times."""

    def __init__(self, name, input_dim, hidden_dim, num_layers, rng):
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.layers = [
            MLP(f"{name}.layer{l}", input_dim if l == 0 else hidden_dim, hidden_dim, hidden_dim, rng)
            for l in range(num_layers)
        ]

    @property
    def output_dim(self):
        return self.hidden_dim * len(self.layers)

    def parameters(self):
        return [p for layer in self.layers for p in layer.parameters()]

    def __call__(self, x, src, dst, node_graph, n_graphs):
        """Return (node embeddings, graph embeddings).

        Node embeddings concatenate every layer's output; a graph embedding is
        the sum of its node embeddings.
        """
        n = x.shape[0]
        h, outputs = x, []
        for layer in self.layers:
            neighbours = ops.sum_rows_grouped(ops.gather_rows(h, src), dst, n)
            h = layer(ops.add(h, neighbours))
            outputs.append(h)
        nodes = ops.concat_cols(*outputs)
        return nodes, ops.sum_rows_grouped(nodes, node_graph, n_graphs)


class TreeEncoder:
    """Bottom-up aggregation over coding-tree levels, one MLP per level."""

    def __init__(self, name, input_dim, hidden_dim, height, rng):
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.levels = [
            MLP(f"{name}.level{l}", input_dim if l == 0 else hidden_dim, hidden_dim, hidden_dim, rng)
            for l in range(height)
        ]

    @property
    def height(self):
        return len(self.levels)

    def parameters(self):
        return [p for level in self.levels for p in level.parameters()]

    def __call__(self, x, leaf_rows, tree_levels):
        """`tree_levels` holds (parent_index, size) pairs from the leaves upward; returns root rows."""
        if len(tree_levels) != self.height:
            raise ContractViolation(f"tree height {len(tree_levels)} does not match encoder height {self.height}")
        h = ops.gather_rows(x, leaf_rows)
        for mlp, (parent_index, size) in zip(self.levels, tree_levels):
            h = mlp(ops.sum_rows_grouped(h, parent_index, size))
        return h


class ProjectionHead:

    def __init__(self, name, in_dim, out_dim, rng):
        self.mlp = MLP(name, in_dim, out_dim, out_dim, rng)

    def parameters(self):
        return self.mlp.parameters()

    def __call__(self, h):
        return ops.l2_normalize_rows(self.mlp(h))


def gin_forward(enc, adjacency, features):
    """Single-graph GIN pass from a dense adjacency matrix."""
    adjacency = np.asarray(adjacency)
    x = features if isinstance(features, Tensor) else Tensor(features)
    if adjacency.shape != (x.shape[0], x.shape[0]):
        raise ContractViolation(f"adjacency {adjacency.shape} for {x.shape[0]} feature rows")
    dst, src = np.nonzero(adjacency)
    nodes, graph = enc(x, src, dst, np.zeros(x.shape[0], dtype=np.int64), 1)
    return nodes, graph


def tree_forward(enc, tree, leaf_features):
    """Root representation of one coding tree."""
    if tree.height != enc.height:
        raise ContractViolation(f"tree height {tree.height} does not match encoder height {enc.height}")
    x = leaf_features if isinstance(leaf_features, Tensor) else Tensor(leaf_features)
    leaf_rows, levels = tree_index(tree)
    return enc(x, leaf_rows, levels)


def project(head, h):
    return head(h)
