# triplet/cache.py
"""
On-disk cache of computed views, one binary file per (dataset, graph index, k, r).

The cache never changes results: an entry is only used when its stored node
count and structure digest match the graph being asked for.
"""

import hashlib
from pathlib import Path

import numpy as np
from logzero import logger

from codingtree.models import CodingTree
from sego.binio import read_arrays, write_arrays
from sego.exceptions import DataIntegrityError
from triplet.views import TripletViews

MAGIC = b"SEGOVIEW"


def structure_digest(graph):
    """Digest of the adjacency only; views do not depend on node features."""
    h = hashlib.blake2b(digest_size=16)
    h.update(np.int64(graph.node_count).tobytes())
    h.update(np.ascontiguousarray(graph.edges).tobytes())
    return h.digest()


def _pack_children(children):
    counts = np.array([len(c) for c in children], dtype=np.int64)
    flat = np.array([c for kids in children for c in kids], dtype=np.int64)
    return counts, flat


def _unpack_children(counts, flat):
    out, at = [], 0
    for n in counts:
        out.append(tuple(int(c) for c in flat[at:at + n]))
        at += n
    return tuple(out)


class ViewCache:

    def __init__(self, directory):
        self.directory = Path(directory)

    def path(self, name, index, k, r):
        return self.directory / name / f"k{k}_r{r}" / f"{index}.bin"

    def load(self, name, index, k, r, graph):
        path = self.path(name, index, k, r)
        if not path.is_file():
            return None
        try:
            arrays = read_arrays(path, magic=MAGIC)
            header = arrays["header"].reshape(-1)
            stored = arrays["structure"].reshape(-1).astype(np.uint8).tobytes()
            if int(header[0]) != graph.node_count or stored != structure_digest(graph):
                logger.warning(f"Stale view cache entry {path}; rebuilding")
                return None
            tree = CodingTree(
                parent=arrays["parent"].reshape(-1),
                children=_unpack_children(arrays["child_counts"].reshape(-1), arrays["child_ids"].reshape(-1)),
                leaf_of=arrays["leaf_of"].reshape(-1),
                vol=arrays["vol"].reshape(-1),
                g_cut=arrays["g_cut"].reshape(-1),
                depth=arrays["depth"].reshape(-1),
                root=int(header[1]),
                height=int(header[2]),
            )
            return TripletViews(graph, arrays["topo"], tree)
        except (DataIntegrityError, KeyError) as e:
            logger.warning(f"Unreadable view cache entry {path} ({e}); rebuilding")
            return None

    def store(self, name, index, k, r, views):
        path = self.path(name, index, k, r)
        path.parent.mkdir(parents=True, exist_ok=True)
        tree = views.anchor
        counts, flat = _pack_children(tree.children)
        write_arrays(path, {
            "header": np.array([views.basic.node_count, tree.root, tree.height], dtype=np.int64),
            "structure": np.frombuffer(structure_digest(views.basic), dtype=np.uint8).astype(np.int64),
            "topo": views.topo,
            "parent": tree.parent,
            "child_counts": counts,
            "child_ids": flat,
            "leaf_of": tree.leaf_of,
            "vol": tree.vol,
            "g_cut": tree.g_cut,
            "depth": tree.depth,
        }, magic=MAGIC)
