import tempfile
import unittest
from pathlib import Path

import numpy as np
from logzero import logger

from graphs import fixtures
from graphs.features import FeatureScheme, align_features, synthesize_features
from graphs.measures import cut, degree, volume
from graphs.models import Dataset, Graph
from graphs.tudataset import parse_tu_dataset, write_tu_dataset
from sego import settings
from sego.exceptions import ConfigurationError, ContractViolation, DataIntegrityError, ParseError


def write_lines(directory, name, suffix, lines):
    Path(directory, f"{name}_{suffix}.txt").write_text("\n".join(lines) + "\n")


class GraphModelTests(unittest.TestCase):

    def test_from_pairs_symmetrizes_and_dedupes(self):
        g = Graph.from_pairs(3, [(0, 1), (1, 0), (2, 1), (1, 2)])
        self.assertEqual(g.edges.tolist(), [[0, 1], [1, 2]])

    def test_self_loops_are_dropped(self):
        g = Graph.from_pairs(2, [(0, 0), (0, 1)])
        self.assertEqual(g.edges.tolist(), [[0, 1]])

    def test_invalid_endpoint_rejected(self):
        with self.assertRaises(ContractViolation):
            Graph(2, np.array([[0, 2]]), np.zeros((2, 1)))

    def test_feature_rows_must_match(self):
        with self.assertRaises(ContractViolation):
            Graph(3, np.zeros((0, 2)), np.zeros((2, 1)))

    def test_arrays_are_read_only(self):
        g = fixtures.k3()
        with self.assertRaises(ValueError):
            g.node_features[0, 0] = 5.0

    def test_dataset_rejects_mixed_feature_dims(self):
        with self.assertRaises(ContractViolation):
            Dataset("mixed", (fixtures.k2(), fixtures.k3().with_features(np.zeros((3, 2)))))

    def test_dataset_must_be_nonempty(self):
        with self.assertRaises(ContractViolation):
            Dataset("empty", ())


class MeasureTests(unittest.TestCase):

    def test_triangle_single_node(self):
        g = fixtures.k3()
        self.assertEqual(volume(g, {0}), 2)
        self.assertEqual(cut(g, {0}), 2)

    def test_triangle_all_nodes(self):
        g = fixtures.k3()
        self.assertEqual(volume(g, {0, 1, 2}), 6)
        self.assertEqual(cut(g, {0, 1, 2}), 0)

    def test_bridge_cut(self):
        self.assertEqual(cut(fixtures.two_triangles(), {0, 1, 2}), 1)

    def test_empty_set(self):
        g = fixtures.k3()
        self.assertEqual(volume(g, set()), 0)
        self.assertEqual(cut(g, set()), 0)

    def test_handshake_and_complement_symmetry(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            g = fixtures.random_connected(rng, max_nodes=7)
            total = sum(degree(g, v) for v in range(g.node_count))
            self.assertEqual(total, 2 * len(g.edges))
            self.assertEqual(total, volume(g, range(g.node_count)))
            s = set(np.flatnonzero(rng.random(g.node_count) < 0.5).tolist())
            rest = set(range(g.node_count)) - s
            self.assertEqual(cut(g, s), cut(g, rest))


class TuFormatTests(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def test_smallest_graph(self):
        write_lines(self.dir, "T", "A", ["1, 2", "2, 1"])
        write_lines(self.dir, "T", "graph_indicator", ["1", "1"])
        ds = parse_tu_dataset(self.dir, "T")
        self.assertEqual(len(ds), 1)
        self.assertEqual(ds[0].node_count, 2)
        self.assertEqual(ds[0].edges.tolist(), [[0, 1]])

    def test_self_loop_removed_with_warning(self):
        write_lines(self.dir, "T", "A", ["1, 1", "1, 2"])
        write_lines(self.dir, "T", "graph_indicator", ["1", "1"])
        with self.assertLogs(logger, level="WARNING"):
            ds = parse_tu_dataset(self.dir, "T")
        self.assertEqual(ds[0].edges.tolist(), [[0, 1]])

    def test_per_graph_reindexing(self):
        write_lines(self.dir, "T", "A", ["1, 2", "3, 4", "4, 5"])
        write_lines(self.dir, "T", "graph_indicator", ["1", "1", "2", "2", "2"])
        write_lines(self.dir, "T", "graph_labels", ["0", "1"])
        write_lines(self.dir, "T", "node_labels", ["3", "3", "1", "2", "1"])
        ds = parse_tu_dataset(self.dir, "T")
        self.assertEqual([g.node_count for g in ds], [2, 3])
        self.assertEqual(ds[1].edges.tolist(), [[0, 1], [1, 2]])
        self.assertEqual(ds[1].graph_label, 1)
        self.assertEqual(ds[1].node_labels.tolist(), [1, 2, 1])

    def test_missing_mandatory_file(self):
        write_lines(self.dir, "T", "A", ["1, 2"])
        with self.assertRaises(ParseError) as ctx:
            parse_tu_dataset(self.dir, "T")
        self.assertIn("graph_indicator", str(ctx.exception))

    def test_unknown_node_names_line(self):
        write_lines(self.dir, "T", "A", ["1, 2", "2, 9"])
        write_lines(self.dir, "T", "graph_indicator", ["1", "1"])
        with self.assertRaises(DataIntegrityError) as ctx:
            parse_tu_dataset(self.dir, "T")
        self.assertIn(":2:", str(ctx.exception))

    def test_line_number_counts_blank_lines(self):
        write_lines(self.dir, "T", "A", ["1, 2", "", "2, 1", "", "2, 9"])
        write_lines(self.dir, "T", "graph_indicator", ["1", "1"])
        with self.assertRaises(DataIntegrityError) as ctx:
            parse_tu_dataset(self.dir, "T")
        self.assertIn("T_A.txt:5:", str(ctx.exception))

    def test_cross_graph_edge_line_after_blank(self):
        write_lines(self.dir, "T", "A", ["", "1, 2", "2, 3"])
        write_lines(self.dir, "T", "graph_indicator", ["1", "1", "2"])
        with self.assertRaises(DataIntegrityError) as ctx:
            parse_tu_dataset(self.dir, "T")
        self.assertIn("T_A.txt:3:", str(ctx.exception))

    def test_round_trip(self):
        rng = np.random.default_rng(11)
        graphs = []
        for i in range(6):
            g = fixtures.random_connected(rng, max_nodes=7)
            graphs.append(Graph.from_pairs(
                g.node_count, g.edges, rng.normal(size=(g.node_count, 3)),
                node_labels=rng.integers(0, 4, g.node_count), graph_label=i % 2))
        ds = Dataset("RT", tuple(graphs))
        write_tu_dataset(ds, self.dir)
        again = parse_tu_dataset(self.dir, "RT")
        self.assertEqual(len(again), len(ds))
        for a, b in zip(ds, again):
            np.testing.assert_array_equal(a.edges, b.edges)
            np.testing.assert_array_equal(a.node_features, b.node_features)
            np.testing.assert_array_equal(a.node_labels, b.node_labels)
            self.assertEqual(a.graph_label, b.graph_label)

    @unittest.skipUnless((settings.DATA_DIR / "BZR" / "BZR_A.txt").is_file(), "BZR not available")
    def test_bzr_graph_count(self):
        self.assertEqual(len(parse_tu_dataset(settings.DATA_DIR / "BZR", "BZR")), 405)


class FeatureTests(unittest.TestCase):

    def test_degree_scheme(self):
        ds = synthesize_features(Dataset("P", (fixtures.path3(),)), FeatureScheme.ONE_HOT_DEGREE, cap=2)
        np.testing.assert_array_equal(ds[0].node_features, [[0, 1, 0], [0, 0, 1], [0, 1, 0]])
        self.assertEqual(ds.feature_dim, 3)

    def test_degree_cap_shares_last_bucket(self):
        star = Graph.from_pairs(5, [(0, i) for i in range(1, 5)])
        ds = synthesize_features(Dataset("S", (star,)), "one_hot_degree", cap=2)
        self.assertEqual(ds[0].node_features[0].tolist(), [0, 0, 1])

    def test_label_scheme(self):
        g = Graph.from_pairs(2, [(0, 1)], node_labels=[0, 1])
        ds = synthesize_features(Dataset("L", (g,)), "one_hot_label")
        np.testing.assert_array_equal(ds[0].node_features, np.eye(2))

    def test_single_label_alphabet(self):
        g = Graph.from_pairs(3, [(0, 1)], node_labels=[7, 7, 7])
        ds = synthesize_features(Dataset("L", (g,)), "one_hot_label")
        self.assertEqual(ds.feature_dim, 1)
        np.testing.assert_array_equal(ds[0].node_features, np.ones((3, 1)))

    def test_label_scheme_without_labels(self):
        with self.assertRaises(ConfigurationError):
            synthesize_features(Dataset("K", (fixtures.k2(),)), "one_hot_label")

    def test_align_uses_reference_alphabet(self):
        ref = Dataset("R", (Graph.from_pairs(2, [(0, 1)], node_labels=[0, 1]),))
        other = Dataset("O", (Graph.from_pairs(2, [(0, 1)], node_labels=[1, 5]),))
        a, b = align_features(ref, other, "auto")
        self.assertEqual(a.feature_dim, b.feature_dim)
        np.testing.assert_array_equal(b[0].node_features, [[0, 1], [0, 0]])
