# graphs/features.py
from enum import Enum

import numpy as np
from logzero import logger

from graphs.models import Dataset
from sego.exceptions import ConfigurationError

DEFAULT_DEGREE_CAP = 10


class FeatureScheme(str, Enum):
    AUTO = "auto"
    ATTRIBUTES = "attributes"
    ONE_HOT_LABEL = "one_hot_label"
    ONE_HOT_DEGREE = "one_hot_degree"


def label_alphabet(dataset):
    if not dataset.has_node_labels:
        raise ConfigurationError(f"{dataset.name}: one_hot_label needs node labels")
    return np.unique(np.concatenate([g.node_labels for g in dataset.graphs]))


def _one_hot_labels(g, alphabet):
    rows = np.zeros((g.node_count, len(alphabet)))
    cols = np.searchsorted(alphabet, g.node_labels)
    known = (cols < len(alphabet)) & (alphabet[np.minimum(cols, len(alphabet) - 1)] == g.node_labels)
    rows[np.flatnonzero(known), cols[known]] = 1.0
    return rows, int((~known).sum())


def _one_hot_degrees(g, cap):
    rows = np.zeros((g.node_count, cap + 1))
    rows[np.arange(g.node_count), np.minimum(g.degrees, cap)] = 1.0
    return rows


def resolve_scheme(dataset, scheme):
    scheme = FeatureScheme(scheme)
    if scheme is FeatureScheme.AUTO:
        scheme = FeatureScheme.ONE_HOT_LABEL if dataset.has_node_labels else FeatureScheme.ONE_HOT_DEGREE
        logger.info(f"{dataset.name}: feature scheme auto -> {scheme.value}")
    return scheme


def synthesize_features(dataset, scheme, cap=DEFAULT_DEGREE_CAP, alphabet=None):
    """Replace node features with one-hot label or capped one-hot degree rows.

    `alphabet` fixes the label columns (defaults to the dataset's own labels);
    labels outside it give an all-zero row.
    """
    scheme = resolve_scheme(dataset, scheme)
    if scheme is FeatureScheme.ATTRIBUTES:
        if dataset.feature_dim == 0:
            raise ConfigurationError(f"{dataset.name}: no node attributes to use")
        return dataset

    if scheme is FeatureScheme.ONE_HOT_LABEL:
        if alphabet is None:
            alphabet = label_alphabet(dataset)
        elif not dataset.has_node_labels:
            raise ConfigurationError(f"{dataset.name}: one_hot_label needs node labels")
        alphabet = np.asarray(alphabet, dtype=np.int64)
        graphs, unseen = [], 0
        for g in dataset.graphs:
            rows, missing = _one_hot_labels(g, alphabet)
            unseen += missing
            graphs.append(g.with_features(rows))
        if unseen:
            logger.warning(f"{dataset.name}: {unseen} node(s) carry labels outside the "
                           f"{len(alphabet)}-label alphabet; their feature rows are zero")
        return Dataset(dataset.name, tuple(graphs))

    if cap < 1:
        raise ConfigurationError(f"degree cap must be >= 1, got {cap}")
    return Dataset(dataset.name, tuple(g.with_features(_one_hot_degrees(g, cap)) for g in dataset.graphs))


def align_features(reference, other, scheme, cap=DEFAULT_DEGREE_CAP):
    """Synthesize features for a dataset pair so both share one feature space.

    The label alphabet comes from `reference` only.
    """
    scheme = resolve_scheme(reference, scheme)
    if scheme is FeatureScheme.ATTRIBUTES:
        if reference.feature_dim != other.feature_dim:
            raise ConfigurationError(
                f"attribute dims differ: {reference.name}={reference.feature_dim}, "
                f"{other.name}={other.feature_dim}")
        return synthesize_features(reference, scheme), synthesize_features(other, scheme)
    alphabet = label_alphabet(reference) if scheme is FeatureScheme.ONE_HOT_LABEL else None
    return (synthesize_features(reference, scheme, cap, alphabet),
            synthesize_features(other, scheme, cap, alphabet))
