import tempfile
import unittest

import numpy as np

from codingtree.builder import build_coding_tree
from graphs import fixtures
from graphs.models import Dataset
from sego.exceptions import ContractViolation
from triplet.batch import collate
from triplet.cache import ViewCache
from triplet.encodings import laplacian_pe, random_walk_encoding, topo_features
from triplet.views import build_dataset_views, build_triplet_views


class EncodingTests(unittest.TestCase):

    def test_k2_random_walk(self):
        np.testing.assert_allclose(random_walk_encoding(fixtures.k2(), 3), [[0, 1, 0], [0, 1, 0]])

    def test_k3_random_walk(self):
        np.testing.assert_allclose(random_walk_encoding(fixtures.k3(), 2), [[0, 0.5]] * 3)

    def test_laplacian_pe_is_one(self):
        np.testing.assert_allclose(laplacian_pe(fixtures.two_triangles()), np.ones(6))

    def test_isolated_node_has_zero_walk_row(self):
        rw = random_walk_encoding(fixtures.single_node(), 4)
        np.testing.assert_array_equal(rw, np.zeros((1, 4)))

    def test_topo_shape(self):
        self.assertEqual(topo_features(fixtures.path3(), 8).shape, (3, 9))

    def test_walk_length_must_be_positive(self):
        with self.assertRaises(ContractViolation):
            random_walk_encoding(fixtures.k2(), 0)

    def test_permutation_equivariance(self):
        g = fixtures.two_triangles()
        perm = np.array([4, 0, 5, 1, 3, 2])
        before = topo_features(g, 5)
        after = topo_features(g.permuted(perm), 5)
        np.testing.assert_allclose(after[perm], before)

    def test_inputs_not_mutated(self):
        g = fixtures.two_triangles()
        edges = g.edges.copy()
        features = g.node_features.copy()
        build_triplet_views(g, 2)
        np.testing.assert_array_equal(g.edges, edges)
        np.testing.assert_array_equal(g.node_features, features)


class ViewTests(unittest.TestCase):

    def test_views_share_the_graph(self):
        g = fixtures.two_triangles()
        views = build_triplet_views(g, 2)
        self.assertIs(views.basic, g)
        self.assertEqual(views.anchor.height, 2)
        self.assertEqual(views.topo.shape, (6, 9))

    def test_dataset_views_keep_order(self):
        ds = Dataset("mini", (fixtures.k2(), fixtures.k3(), fixtures.path3()))
        views = build_dataset_views(ds, k=2, r=3)
        self.assertEqual([v.basic.node_count for v in views], [2, 3, 3])
        for g, v in zip(ds, views):
            self.assertIs(v.basic, g)


class BatchTests(unittest.TestCase):

    def setUp(self):
        self.graphs = [fixtures.two_triangles(), fixtures.k2()]
        self.views = [build_triplet_views(g, 2) for g in self.graphs]
        self.batch = collate(self.views)

    def test_block_layout(self):
        b = self.batch
        self.assertEqual(b.n_graphs, 2)
        self.assertEqual(b.n_nodes, 8)
        self.assertEqual(b.node_graph.tolist(), [0] * 6 + [1] * 2)
        self.assertEqual(b.nodes_per_graph.tolist(), [6, 2])

    def test_edges_are_offset(self):
        b = self.batch
        pairs = set(zip(b.src.tolist(), b.dst.tolist()))
        self.assertIn((6, 7), pairs)
        self.assertIn((7, 6), pairs)
        self.assertEqual(len(b.src), 2 * (7 + 1))

    def test_tree_levels_end_in_one_root_per_graph(self):
        b = self.batch
        self.assertEqual(b.tree_height, 2)
        self.assertEqual(len(b.leaf_rows), 8)
        self.assertEqual(sorted(b.leaf_rows.tolist()), list(range(8)))
        self.assertEqual(b.tree_levels[-1].size, 2)
        self.assertTrue(np.all(b.tree_levels[-1].parent_index < 2))

    def test_leaves_group_by_graph(self):
        b = self.batch
        roots = b.tree_levels[1].parent_index[b.tree_levels[0].parent_index]
        np.testing.assert_array_equal(roots, b.node_graph[b.leaf_rows])

    def test_mixed_heights_rejected(self):
        with self.assertRaises(ContractViolation):
            collate([build_triplet_views(fixtures.k3(), 2), build_triplet_views(fixtures.k3(), 3)])

    def test_empty_batch_rejected(self):
        with self.assertRaises(ContractViolation):
            collate([])


class CacheTests(unittest.TestCase):

    def test_round_trip(self):
        g = fixtures.two_triangles()
        views = build_triplet_views(g, 2, 4)
        with tempfile.TemporaryDirectory() as tmp:
            cache = ViewCache(tmp)
            cache.store("mini", 0, 2, 4, views)
            loaded = cache.load("mini", 0, 2, 4, g)
        self.assertIsNotNone(loaded)
        np.testing.assert_array_equal(loaded.topo, views.topo)
        np.testing.assert_array_equal(loaded.anchor.parent, views.anchor.parent)
        self.assertEqual(loaded.anchor.children, views.anchor.children)
        loaded.anchor.validate(g)

    def test_stale_entry_is_ignored(self):
        with tempfile.TemporaryDirectory() as tmp:
            cache = ViewCache(tmp)
            cache.store("mini", 0, 2, 4, build_triplet_views(fixtures.k3(), 2, 4))
            self.assertIsNone(cache.load("mini", 0, 2, 4, fixtures.path3()))

    def test_missing_entry(self):
        with tempfile.TemporaryDirectory() as tmp:
            self.assertIsNone(ViewCache(tmp).load("mini", 0, 2, 4, fixtures.k2()))

    def test_dataset_views_use_cache(self):
        ds = Dataset("mini", (fixtures.k3(), fixtures.path3()))
        with tempfile.TemporaryDirectory() as tmp:
            cache = ViewCache(tmp)
            first = build_dataset_views(ds, k=2, r=3, cache=cache)
            second = build_dataset_views(ds, k=2, r=3, cache=cache)
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a.topo, b.topo)
            self.assertEqual(a.anchor.children, b.anchor.children)


if __name__ == "__main__":
    unittest.main()
