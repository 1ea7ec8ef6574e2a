# detector/scoring.py
"""
Per-graph errors and z-scored OOD scores.

A graph's local error is its mean symmetric node InfoNCE term and its global
error its symmetric graph InfoNCE term, both against the other graphs of its
evaluation batch. Scores add the z-scores of the two errors against the
training distribution; higher means more likely OOD.
"""

from dataclasses import dataclass

import numpy as np
from logzero import logger

from detector.training import batch_indices
from objective.losses import global_loss, local_loss, tree_loss
from sego.exceptions import ContractViolation
from triplet.batch import collate

MIN_SIGMA = 1e-12


@dataclass(frozen=True)
class ScoreStats:
    mu_l: float
    sigma_l: float
    mu_g: float
    sigma_g: float
    mu_t: float = 0.0
    sigma_t: float = 1.0

    def as_array(self):
        return np.array([[self.mu_l, self.sigma_l, self.mu_g, self.sigma_g, self.mu_t, self.sigma_t]])

    @classmethod
    def from_array(cls, arr):
        return cls(*(float(v) for v in np.asarray(arr).reshape(-1)))


@dataclass(frozen=True, eq=False)
class GraphErrors:
    s_l: np.ndarray
    s_g: np.ndarray
    s_t: np.ndarray


def graph_errors(model, views, batch_size, cfg):
    """Errors of every graph, in the order given, from consecutive evaluation batches."""
    if len(views) < 2:
        raise ContractViolation(f"scoring needs at least 2 graphs for negatives, got {len(views)}")
    s_l, s_g, s_t = (np.zeros(len(views)) for _ in range(3))
    for idx in batch_indices(np.arange(len(views)), batch_size):
        emb = model(collate([views[i] for i in idx]))
        s_l[idx] = local_loss(emb)[1]
        s_g[idx] = global_loss(emb)[1]
        s_t[idx] = tree_loss(emb, cfg.tree_partner.value)[1]
    return GraphErrors(s_l, s_g, s_t)


def _spread(values, label):
    sigma = float(np.std(values))
    if sigma < MIN_SIGMA:
        logger.warning(f"Training {label} errors are constant; using sigma=1")
        return 1.0
    return sigma


def fit_score_stats(model, views, cfg, batch_size=None):
    """Mean and population std of the training graphs' errors.

    Graphs are batched in fingerprint order, so the result does not depend on
    the order of `views`.
    """
    order = sorted(range(len(views)), key=lambda i: views[i].basic.fingerprint)
    errors = graph_errors(model, [views[i] for i in order], batch_size or cfg.batch_size, cfg)
    stats = ScoreStats(
        mu_l=float(np.mean(errors.s_l)),
        sigma_l=_spread(errors.s_l, "local"),
        mu_g=float(np.mean(errors.s_g)),
        sigma_g=_spread(errors.s_g, "global"),
        mu_t=float(np.mean(errors.s_t)),
        sigma_t=_spread(errors.s_t, "tree") if cfg.score_tree_term else 1.0,
    )
    logger.info(f"Score stats: {stats}")
    return stats


def z_scores(errors, stats, tree_term=False):
    s = (errors.s_l - stats.mu_l) / stats.sigma_l + (errors.s_g - stats.mu_g) / stats.sigma_g
    if tree_term:
        s = s + (errors.s_t - stats.mu_t) / stats.sigma_t
    return s


def score(model, stats, views, cfg, batch_size=None):
    """Return (GraphErrors, s_G) for `views` in the order given."""
    errors = graph_errors(model, views, batch_size or cfg.batch_size, cfg)
    return errors, z_scores(errors, stats, cfg.score_tree_term)
