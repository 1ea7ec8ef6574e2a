# graphs/tudataset.py
"""
Reader and writer for the TU graph-classification text format.

    <name>_A.txt               "i, j" per line, 1-based node ids, directed lines
    <name>_graph_indicator.txt line v holds the 1-based graph id of node v
    <name>_node_labels.txt     optional, one integer per node line
    <name>_node_attributes.txt optional, comma-separated reals per node line
    <name>_graph_labels.txt    optional, one integer per graph line
"""

from itertools import islice
from pathlib import Path

import numpy as np
import pandas as pd
from logzero import logger

from graphs.models import Dataset, Graph
from sego.exceptions import DataIntegrityError, ParseError


def _tu_path(directory, name, suffix):
    return Path(directory) / f"{name}_{suffix}.txt"


def _file_line(path, row):
    """1-based line in `path` of data row `row`; empty lines are not rows."""
    with open(path) as f:
        lines = (number for number, text in enumerate(f, 1) if text.strip("\r\n"))
        return next(islice(lines, row, None), row + 1)


def _read_table(path, dtype):
    """Read a headerless comma-separated file into a 2-D numpy array."""
    try:
        frame = pd.read_csv(path, header=None, sep=",", skipinitialspace=True, dtype=dtype)
    except pd.errors.EmptyDataError:
        return np.zeros((0, 0), dtype=dtype)
    except ValueError as e:
        raise ParseError(path, f"unparseable content ({e})") from e
    if frame.isna().any().any():
        bad_line = _file_line(path, int(frame.isna().any(axis=1).to_numpy().argmax()))
        raise ParseError(path, f"line {bad_line}: missing value")
    return frame.to_numpy(dtype=dtype)


def _read_column(path, dtype):
    table = _read_table(path, dtype)
    if table.size == 0:
        return np.zeros(0, dtype=dtype)
    if table.shape[1] != 1:
        raise ParseError(path, f"expected one value per line, found {table.shape[1]} columns")
    return table[:, 0]


def parse_tu_dataset(directory, name):
    """Parse `<directory>/<name>_*.txt` into a Dataset, one Graph per distinct graph id."""
    a_path = _tu_path(directory, name, "A")
    indicator_path = _tu_path(directory, name, "graph_indicator")
    for path in (a_path, indicator_path):
        if not path.is_file():
            raise ParseError(path, "missing mandatory file")

    indicator = _read_column(indicator_path, np.int64)
    total_nodes = len(indicator)
    if total_nodes == 0:
        raise ParseError(indicator_path, "no nodes")

    pairs = _read_table(a_path, np.int64)
    if pairs.size == 0:
        pairs = np.zeros((0, 2), dtype=np.int64)
    elif pairs.shape[1] != 2:
        raise ParseError(a_path, f"expected 'i, j' per line, found {pairs.shape[1]} columns")

    unknown = (pairs < 1) | (pairs > total_nodes)
    if unknown.any():
        row = int(unknown.any(axis=1).argmax())
        bad = int(pairs[row][unknown[row]][0])
        raise DataIntegrityError(f"{a_path}:{_file_line(a_path, row)}: edge references unknown node id {bad}")
    pairs = pairs - 1

    src_graph = indicator[pairs[:, 0]]
    dst_graph = indicator[pairs[:, 1]]
    if np.any(src_graph != dst_graph):
        row = int(np.argmax(src_graph != dst_graph))
        raise DataIntegrityError(f"{a_path}:{_file_line(a_path, row)}: edge joins nodes of graphs "
                                 f"{src_graph[row]} and {dst_graph[row]}")

    node_labels = None
    labels_path = _tu_path(directory, name, "node_labels")
    if labels_path.is_file():
        node_labels = _read_column(labels_path, np.int64)
        if len(node_labels) != total_nodes:
            raise DataIntegrityError(f"{labels_path}: {len(node_labels)} lines for {total_nodes} nodes")

    attributes = np.zeros((total_nodes, 0))
    attributes_path = _tu_path(directory, name, "node_attributes")
    if attributes_path.is_file():
        attributes = _read_table(attributes_path, np.float64)
        if len(attributes) != total_nodes:
            raise DataIntegrityError(f"{attributes_path}: {len(attributes)} lines for {total_nodes} nodes")

    graph_ids = np.unique(indicator)
    graph_labels = None
    graph_labels_path = _tu_path(directory, name, "graph_labels")
    if graph_labels_path.is_file():
        graph_labels = _read_column(graph_labels_path, np.int64)
        if len(graph_labels) != len(graph_ids):
            raise DataIntegrityError(
                f"{graph_labels_path}: {len(graph_labels)} lines for {len(graph_ids)} graphs")

    # 0-based position of every node inside its own graph
    order = np.argsort(indicator, kind="stable")
    node_bounds = np.searchsorted(indicator[order], graph_ids, side="left")
    node_ends = np.searchsorted(indicator[order], graph_ids, side="right")
    local_index = np.empty(total_nodes, dtype=np.int64)
    for start, end in zip(node_bounds, node_ends):
        local_index[order[start:end]] = np.arange(end - start)

    edge_order = np.argsort(src_graph, kind="stable")
    sorted_graph = src_graph[edge_order]
    edge_starts = np.searchsorted(sorted_graph, graph_ids, side="left")
    edge_ends = np.searchsorted(sorted_graph, graph_ids, side="right")

    graphs = []
    for gi, gid in enumerate(graph_ids):
        members = order[node_bounds[gi]:node_ends[gi]]
        local_pairs = local_index[pairs[edge_order[edge_starts[gi]:edge_ends[gi]]]]
        graphs.append(Graph.from_pairs(
            len(members),
            local_pairs,
            node_features=attributes[members],
            node_labels=None if node_labels is None else node_labels[members],
            graph_label=None if graph_labels is None else int(graph_labels[gi]),
        ))

    dataset = Dataset(name, tuple(graphs))
    logger.info(f"Parsed {dataset} from {Path(directory)}")
    return dataset


def write_tu_dataset(dataset, directory, name=None):
    """Serialize a Dataset to the TU text format (edges written in both directions)."""
    name = name or dataset.name
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    offsets = np.cumsum([0] + [g.node_count for g in dataset.graphs])
    edge_blocks, indicator = [], []
    for gi, g in enumerate(dataset.graphs):
        indicator.append(np.full(g.node_count, gi + 1, dtype=np.int64))
        if len(g.edges):
            both = np.concatenate([g.edges, g.edges[:, ::-1]])
            edge_blocks.append(both + offsets[gi] + 1)
    edges = np.concatenate(edge_blocks) if edge_blocks else np.zeros((0, 2), dtype=np.int64)

    np.savetxt(_tu_path(directory, name, "A"), edges, fmt="%d, %d")
    np.savetxt(_tu_path(directory, name, "graph_indicator"), np.concatenate(indicator), fmt="%d")

    if dataset.has_node_labels:
        labels = np.concatenate([g.node_labels for g in dataset.graphs])
        np.savetxt(_tu_path(directory, name, "node_labels"), labels, fmt="%d")
    if dataset.feature_dim > 0:
        attributes = np.concatenate([g.node_features for g in dataset.graphs])
        np.savetxt(_tu_path(directory, name, "node_attributes"), attributes, fmt="%.17g", delimiter=", ")
    if dataset.has_graph_labels:
        np.savetxt(_tu_path(directory, name, "graph_labels"),
                   np.array([g.graph_label for g in dataset.graphs]), fmt="%d")
    logger.info(f"Wrote {dataset} to {directory}")
