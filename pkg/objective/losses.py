# objective/losses.py
"""
Contrastive objective over one batch of embeddings.

Every loss is an InfoNCE over cosine similarities at temperature tau. The
local term contrasts node embeddings of the basic and topo views, the global
term contrasts their graph embeddings, and the tree term contrasts a graph
embedding with the coding-tree root embedding. The total weights the local
and global terms by the spread of their per-graph errors.
"""

from dataclasses import dataclass, field

import numpy as np

from autograd import ops
from autograd.tensor import Tensor
from sego.exceptions import ContractViolation

TREE_PARTNERS = ("basic", "topo", "both")


@dataclass(frozen=True, eq=False)
class BatchEmbeddings:
    node_b: Tensor              # (M, c) projected node embeddings, basic view
    node_t: Tensor              # (M, c) topo view
    graph_b: Tensor             # (B, c)
    graph_t: Tensor             # (B, c)
    tree: Tensor                # (B, c) coding-tree roots
    node_graph: np.ndarray      # (M,) owning graph of every node row
    nodes_per_graph: np.ndarray
    tau: float

    @property
    def n_graphs(self):
        return self.graph_b.shape[0]


@dataclass(frozen=True)
class LossReport:
    total: float
    l_local: float
    l_global: float
    l_tree: float
    per_graph_local_errors: np.ndarray
    per_graph_global_errors: np.ndarray
    per_graph_tree_errors: np.ndarray
    sigma_l: float
    sigma_g: float
    w_local: float
    w_global: float
    w_tree: float
    loss: Tensor = field(repr=False, default=None)

    def as_record(self):
        return {
            "l_tree": self.l_tree,
            "l_local": self.l_local,
            "l_global": self.l_global,
            "sigma_l": self.sigma_l,
            "sigma_g": self.sigma_g,
            "w_tree": self.w_tree,
            "w_local": self.w_local,
            "w_global": self.w_global,
            "total": self.total,
        }


def infonce_rows(za, zb, tau):
    """Per-anchor InfoNCE losses as an (N, 1) column.

    Row i has positive (za_i, zb_i) and negatives za_j, zb_j for j != i.
    Each row is shifted by its largest negative similarity (a constant) before
    exponentiating, so the sum of exponentials is at least 1 for any tau.
    """
    n = za.shape[0]
    if zb.shape != za.shape:
        raise ContractViolation(f"infonce: anchor set {za.shape} and partner set {zb.shape} differ")
    if n < 2:
        raise ContractViolation(f"infonce needs at least 2 rows for negatives, got {n}")
    s_ab = ops.scale(ops.cosine_similarity_matrix(za, zb), 1.0 / tau)
    s_aa = ops.scale(ops.cosine_similarity_matrix(za, za), 1.0 / tau)
    off_diagonal = 1.0 - np.eye(n)
    row_max = np.maximum(np.where(off_diagonal > 0, s_aa.data, -np.inf).max(axis=1),
                         np.where(off_diagonal > 0, s_ab.data, -np.inf).max(axis=1)).reshape(n, 1)
    shifted = Tensor(np.repeat(row_max, n, axis=1))

    def masked_exp(s):
        # diagonal zeroed before exp so a large positive cannot overflow
        return ops.mul(ops.exp(ops.mul(ops.sub(s, shifted), off_diagonal)), off_diagonal)

    negatives = ops.add(masked_exp(s_aa), masked_exp(s_ab))
    log_sum = ops.add(ops.log(ops.sum_cols(negatives)), Tensor(row_max))
    return ops.sub(log_sum, ops.diagonal(s_ab))


def infonce(za, zb, i, tau):
    return float(infonce_rows(za, zb, tau).data[i, 0])


def _symmetric(za, zb, tau):
    return ops.scale(ops.add(infonce_rows(za, zb, tau), infonce_rows(zb, za, tau)), 0.5)


def local_loss(emb):
    """Mean over graphs of each graph's mean symmetric node term; negatives span the whole batch."""
    if np.any(emb.nodes_per_graph < 1):
        raise ContractViolation("local loss needs every graph to have a node")
    node_terms = ops.add(infonce_rows(emb.node_b, emb.node_t, emb.tau), infonce_rows(emb.node_t, emb.node_b, emb.tau))
    weights = (1.0 / (2.0 * emb.nodes_per_graph)).reshape(-1, 1)
    per_graph = ops.mul(ops.sum_rows_grouped(node_terms, emb.node_graph, emb.n_graphs), weights)
    return ops.mean(per_graph), per_graph.data[:, 0].copy()


def global_loss(emb):
    per_graph = _symmetric(emb.graph_b, emb.graph_t, emb.tau)
    return ops.mean(per_graph), per_graph.data[:, 0].copy()


def tree_loss(emb, partner="basic"):
    """Contrast the tree roots with the basic graph embeddings, the topo ones, or both (mean)."""
    if partner not in TREE_PARTNERS:
        raise ContractViolation(f"tree partner must be one of {TREE_PARTNERS}, got {partner!r}")
    if partner == "basic":
        per_graph = _symmetric(emb.graph_b, emb.tree, emb.tau)
    elif partner == "topo":
        per_graph = _symmetric(emb.graph_t, emb.tree, emb.tau)
    else:
        per_graph = ops.scale(ops.add(_symmetric(emb.graph_b, emb.tree, emb.tau),
                                      _symmetric(emb.graph_t, emb.tree, emb.tau)), 0.5)
    return ops.mean(per_graph), per_graph.data[:, 0].copy()


def adaptive_weight(errors, theta):
    """sigma ** theta with sigma the population std of the errors; 0 ** 0 is 1."""
    sigma = float(np.std(errors))
    return sigma, float(sigma ** theta)


def total_loss(emb, theta, partner="basic", use_tree=True, use_local=True, use_global=True):
    """Tree term plus local and global terms weighted by sigma ** theta.

    The weights are constants for differentiation. A disabled term has weight 0.
    """
    l_local, local_errors = local_loss(emb)
    l_global, global_errors = global_loss(emb)
    l_tree, tree_errors = tree_loss(emb, partner)

    sigma_l, w_local = adaptive_weight(local_errors, theta)
    sigma_g, w_global = adaptive_weight(global_errors, theta)
    w_local = w_local if use_local else 0.0
    w_global = w_global if use_global else 0.0
    w_tree = 1.0 if use_tree else 0.0

    loss = ops.add(ops.scale(l_tree, w_tree), ops.add(ops.scale(l_local, w_local), ops.scale(l_global, w_global)))
    return LossReport(
        total=loss.item(),
        l_local=l_local.item(),
        l_global=l_global.item(),
        l_tree=l_tree.item(),
        per_graph_local_errors=local_errors,
        per_graph_global_errors=global_errors,
        per_graph_tree_errors=tree_errors,
        sigma_l=sigma_l,
        sigma_g=sigma_g,
        w_local=w_local,
        w_global=w_global,
        w_tree=w_tree,
        loss=loss,
    )
