# detector/metrics.py
import numpy as np
from scipy.stats import rankdata

from sego.exceptions import ContractViolation, UndefinedMetricError


def auc(scores, labels):
    """ROC AUC as the Mann-Whitney statistic; label 1 marks OOD, ties count one half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ContractViolation(f"{len(scores)} scores for {len(labels)} labels")
    positive = labels == 1
    n_pos, n_neg = int(positive.sum()), int((~positive).sum())
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError(f"AUC needs both classes, got {n_pos} OOD and {n_neg} ID")
    ranks = rankdata(scores)
    u = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))
