# triplet/views.py
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from logzero import logger

from codingtree.builder import build_coding_tree
from codingtree.models import CodingTree
from graphs.models import Graph
from sego.exceptions import ContractViolation
from triplet.encodings import DEFAULT_WALK_LENGTH, topo_features


@dataclass(frozen=True, eq=False)
class TripletViews:
    """Basic view (A, X), topo view (A, P) and the coding-tree anchor of one graph."""

    basic: Graph
    topo: np.ndarray
    anchor: CodingTree

    def __post_init__(self):
        n = self.basic.node_count
        if self.topo.shape[0] != n:
            raise ContractViolation(f"topo view has {self.topo.shape[0]} rows for {n} nodes")
        if len(self.anchor.leaves) != n:
            raise ContractViolation(f"anchor has {len(self.anchor.leaves)} leaves for {n} nodes")
        self.topo.setflags(write=False)


def build_triplet_views(g, k, r=DEFAULT_WALK_LENGTH):
    """Perturbation-free views: the graph itself, its structural encodings, its coding tree."""
    return TripletViews(basic=g, topo=topo_features(g, r), anchor=build_coding_tree(g, k))


def _build_one(args):
    g, k, r = args
    return build_triplet_views(g, k, r)


def build_dataset_views(dataset, k, r=DEFAULT_WALK_LENGTH, workers=1, cache=None):
    """Views for every graph of a dataset, in dataset order.

    Cached views are reused; the rest are built, in a process pool when workers > 1.
    """
    views = [None] * len(dataset)
    if cache is not None:
        for i, g in enumerate(dataset.graphs):
            views[i] = cache.load(dataset.name, i, k, r, g)

    todo = [i for i, v in enumerate(views) if v is None]
    if todo:
        logger.info(f"Building views for {len(todo)}/{len(dataset)} graphs of {dataset.name} "
                    f"(k={k}, r={r}, workers={workers})")
        jobs = [(dataset.graphs[i], k, r) for i in todo]
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                built = list(pool.map(_build_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
        else:
            built = [_build_one(job) for job in jobs]
        for i, view in zip(todo, built):
            # results from worker processes carry their own copy of the graph
            views[i] = TripletViews(dataset.graphs[i], view.topo.copy(), view.anchor)
            if cache is not None:
                cache.store(dataset.name, i, k, r, views[i])
    return views
