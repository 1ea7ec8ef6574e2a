import math
import unittest

import numpy as np

from codingtree.builder import (apply_drop, apply_merge, build_coding_tree, entropy_delta_drop,
                                entropy_delta_merge, flat_tree, tree_from_partitions)
from codingtree.dump import dump_tree
from codingtree.entropy import structural_entropy
from codingtree.oracle import brute_force_min_entropy
from graphs import fixtures
from graphs.models import Graph
from sego.exceptions import ConfigurationError, RefusalError


def height_one_communities(t):
    """Member sets of the root's children, as sorted tuples."""
    return sorted(tuple(t.members(c)) for c in t.children[t.root])


class EntropyTests(unittest.TestCase):

    def test_k2_flat(self):
        g = fixtures.k2()
        self.assertAlmostEqual(structural_entropy(g, flat_tree(g)), 1.0, delta=1e-9)

    def test_k3_flat(self):
        g = fixtures.k3()
        self.assertAlmostEqual(structural_entropy(g, flat_tree(g)), math.log2(3), delta=1e-9)

    def test_flat_tree_is_degree_entropy(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            g = fixtures.random_connected(rng, max_nodes=8)
            p = g.degrees / g.degrees.sum()
            expected = -float(np.sum(p * np.log2(p)))
            self.assertAlmostEqual(structural_entropy(g, flat_tree(g)), expected, delta=1e-9)

    def test_edgeless_is_zero(self):
        g = fixtures.single_node()
        self.assertEqual(structural_entropy(g, flat_tree(g)), 0.0)

    def test_single_community_term_vanishes(self):
        g = fixtures.k3()
        t = tree_from_partitions(g, [[[0, 1, 2]]])
        self.assertAlmostEqual(structural_entropy(g, t), math.log2(3), delta=1e-12)

    def test_flat_tree_shape(self):
        t = flat_tree(fixtures.k2())
        self.assertEqual(t.size, 3)
        self.assertEqual(t.height, 1)

    def test_relabeling_invariance(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            g = fixtures.random_connected(rng, max_nodes=7)
            perm = rng.permutation(g.node_count)
            blocks = {}
            for v in range(g.node_count):
                blocks.setdefault(int(rng.integers(0, 3)), []).append(v)
            levels = [list(blocks.values())]
            moved = [[[int(perm[v]) for v in block] for block in level] for level in levels]
            h = structural_entropy(g, tree_from_partitions(g, levels))
            h_perm = structural_entropy(g.permuted(perm), tree_from_partitions(g.permuted(perm), moved))
            self.assertAlmostEqual(h, h_perm, delta=1e-12)


class BuildTests(unittest.TestCase):

    def test_two_triangles_k2(self):
        g = fixtures.two_triangles()
        t = build_coding_tree(g, 2)
        t.validate(g)
        self.assertEqual(height_one_communities(t), [(0, 1, 2), (3, 4, 5)])

    def test_k2_padding_keeps_entropy(self):
        g = fixtures.k2()
        t = build_coding_tree(g, 5)
        t.validate(g)
        self.assertEqual(t.height, 5)
        self.assertTrue(t.is_uniform)
        self.assertAlmostEqual(structural_entropy(g, t), 1.0, delta=1e-12)

    def test_no_drop_when_k_large(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            g = fixtures.random_connected(rng, max_nodes=7)
            trace = []
            build_coding_tree(g, g.node_count, trace=trace)
            self.assertFalse([step for step in trace if step[0] == "drop"])

    def test_invalid_k(self):
        with self.assertRaises(ConfigurationError):
            build_coding_tree(fixtures.k3(), 0)

    def test_edgeless_graph_gives_padded_flat_tree(self):
        g = Graph.from_pairs(3, [], node_features=np.ones((3, 1)))
        t = build_coding_tree(g, 3)
        t.validate(g)
        self.assertEqual(t.height, 3)
        self.assertEqual(len(t.children[t.root]), 3)

    def test_isolated_nodes_are_kept(self):
        g = Graph.from_pairs(5, [(0, 1), (1, 2), (0, 2)], node_features=np.ones((5, 1)))
        t = build_coding_tree(g, 3)
        t.validate(g)
        self.assertTrue(t.is_uniform)

    def test_invariants_on_random_graphs(self):
        rng = np.random.default_rng(17)
        for _ in range(30):
            g = fixtures.random_connected(rng, max_nodes=10, p=0.4)
            k = int(rng.integers(1, 6))
            trace = []
            t = build_coding_tree(g, k, verify=True, trace=trace)
            t.validate(g)
            self.assertEqual(t.height, k)
            self.assertTrue(t.is_uniform)
            for op, _, delta in trace:
                if op == "merge":
                    self.assertLessEqual(delta, 0.0)
                else:
                    self.assertGreaterEqual(delta, -1e-12)
            if k >= 2:
                self.assertLessEqual(structural_entropy(g, t), structural_entropy(g, flat_tree(g)) + 1e-9)

    def test_merge_choice_is_minimal(self):
        rng = np.random.default_rng(23)
        g = fixtures.random_connected(rng, max_nodes=7)
        trace = []
        build_coding_tree(g, g.node_count, trace=trace)
        # without drops the builder and the frozen trees number nodes identically,
        # so the merges can be replayed one by one
        t = flat_tree(g)
        for op, (a, b), delta in [s for s in trace if s[0] == "merge"]:
            kids = list(t.children[t.root])
            best = min(entropy_delta_merge(g, t, x, y) for i, x in enumerate(kids) for y in kids[i + 1:])
            self.assertAlmostEqual(delta, best, delta=1e-12)
            t = apply_merge(g, t, a, b)


class DeltaTests(unittest.TestCase):

    def test_merge_k2_leaves_matches_recompute(self):
        g = fixtures.k2()
        t = flat_tree(g)
        delta = entropy_delta_merge(g, t, 0, 1)
        after = apply_merge(g, t, 0, 1)
        self.assertAlmostEqual(delta, structural_entropy(g, after) - structural_entropy(g, t), delta=1e-9)

    def test_chain_node_drop_is_free(self):
        g = fixtures.k2()
        t = build_coding_tree(g, 3)
        chain = [u for u in range(t.size) if len(t.children[u]) == 1 and u != t.root]
        self.assertTrue(chain)
        self.assertEqual(entropy_delta_drop(g, t, chain[0]), 0.0)

    def test_random_merges_and_drops_match_recompute(self):
        rng = np.random.default_rng(31)
        for _ in range(40):
            g = fixtures.random_connected(rng, max_nodes=6)
            t = flat_tree(g)
            while len(t.children[t.root]) > 2:
                kids = list(t.children[t.root])
                a, b = rng.choice(kids, size=2, replace=False)
                delta = entropy_delta_merge(g, t, int(a), int(b))
                after = apply_merge(g, t, int(a), int(b))
                self.assertLess(abs(delta - (structural_entropy(g, after) - structural_entropy(g, t))), 1e-9)
                t = after
            internal = [u for u in range(t.size) if u != t.root and not t.is_leaf(u)]
            for v in internal:
                delta = entropy_delta_drop(g, t, v)
                after = apply_drop(g, t, v)
                self.assertLess(abs(delta - (structural_entropy(g, after) - structural_entropy(g, t))), 1e-9)


class OracleTests(unittest.TestCase):

    def test_k2_height_one(self):
        t, h = brute_force_min_entropy(fixtures.k2(), 1)
        self.assertEqual(t.height, 1)
        self.assertAlmostEqual(h, 1.0, delta=1e-12)

    def test_k3_not_above_flat(self):
        g = fixtures.k3()
        t, h = brute_force_min_entropy(g, 2)
        self.assertLessEqual(h, math.log2(3) + 1e-12)
        self.assertAlmostEqual(h, structural_entropy(g, t), delta=1e-12)

    def test_two_triangles_partition(self):
        g = fixtures.two_triangles()
        t, h = brute_force_min_entropy(g, 2)
        self.assertEqual(height_one_communities(t), [(0, 1, 2), (3, 4, 5)])
        self.assertAlmostEqual(h, structural_entropy(g, t), delta=1e-12)

    def test_height_three_is_no_worse(self):
        g = fixtures.two_triangles()
        _, h2 = brute_force_min_entropy(g, 2)
        t3, h3 = brute_force_min_entropy(g, 3)
        self.assertLessEqual(h3, h2 + 1e-12)
        self.assertAlmostEqual(h3, structural_entropy(g, t3), delta=1e-12)

    def test_refuses_large_inputs(self):
        with self.assertRaises(RefusalError):
            brute_force_min_entropy(Graph.from_pairs(9, [(i, i + 1) for i in range(8)]), 2)
        with self.assertRaises(RefusalError):
            brute_force_min_entropy(fixtures.k3(), 4)

    def test_greedy_between_optimum_and_flat(self):
        rng = np.random.default_rng(2024)
        hits = 0
        trials = 200
        for _ in range(trials):
            g = fixtures.random_connected(rng, max_nodes=6)
            _, optimum = brute_force_min_entropy(g, 2)
            built = structural_entropy(g, build_coding_tree(g, 2))
            flat = structural_entropy(g, flat_tree(g))
            self.assertGreaterEqual(built, optimum - 1e-9)
            self.assertLessEqual(built, flat + 1e-9)
            hits += abs(built - optimum) <= 1e-9
        self.assertGreaterEqual(hits / trials, 0.6)


class DumpTests(unittest.TestCase):

    def test_k2_dump(self):
        g = fixtures.k2()
        text = dump_tree(g, flat_tree(g))
        self.assertEqual(text.splitlines(), [
            "0 2 2 0",
            "  1 0 1 1 leaf->0",
            "  1 1 1 1 leaf->1",
            "entropy=1.000000",
        ])
