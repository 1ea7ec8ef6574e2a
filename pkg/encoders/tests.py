import dataclasses
import unittest

import numpy as np

from autograd.tensor import Tensor
from codingtree.builder import build_coding_tree
from detector.config import TrainConfig
from encoders.layers import GINEncoder, MLP, ProjectionHead, TreeEncoder, gin_forward, project, tree_forward
from encoders.model import SegoModel
from graphs import fixtures
from sego.exceptions import ContractViolation
from triplet.batch import collate
from triplet.views import build_triplet_views


def small_config(**overrides):
    values = dict(hidden_dim=4, contrast_dim=3, num_layers=2, k=2, r=3, seed=11)
    values.update(overrides)
    return TrainConfig(**values)


class GINTests(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(0)
        self.enc = GINEncoder("gin_b", 3, 4, 2, self.rng)

    def test_isolated_node_has_no_neighbour_sum(self):
        x = self.rng.normal(size=(1, 3))
        nodes, _ = gin_forward(self.enc, np.zeros((1, 1)), x)
        first = self.enc.layers[0](Tensor(x))
        np.testing.assert_allclose(nodes.data[:, :4], first.data)

    def test_symmetric_nodes_match(self):
        nodes, _ = gin_forward(self.enc, fixtures.k2().adjacency(), np.ones((2, 3)))
        np.testing.assert_allclose(nodes.data[0], nodes.data[1])

    def test_sum_readout(self):
        nodes, graph = gin_forward(self.enc, fixtures.k2().adjacency(), self.rng.normal(size=(2, 3)))
        np.testing.assert_allclose(graph.data[0], nodes.data.sum(axis=0))

    def test_embedding_concatenates_layers(self):
        nodes, graph = gin_forward(self.enc, fixtures.k3().adjacency(), np.ones((3, 3)))
        self.assertEqual(nodes.shape, (3, 8))
        self.assertEqual(graph.shape, (1, 8))

    def test_permutation_equivariance(self):
        g = fixtures.two_triangles().with_features(self.rng.normal(size=(6, 3)))
        perm = np.array([3, 5, 0, 1, 4, 2])
        h = g.permuted(perm)
        nodes, graph = gin_forward(self.enc, g.adjacency(), g.node_features)
        nodes_p, graph_p = gin_forward(self.enc, h.adjacency(), h.node_features)
        np.testing.assert_allclose(nodes_p.data[perm], nodes.data, atol=1e-12)
        np.testing.assert_allclose(graph_p.data, graph.data, atol=1e-12)

    def test_feature_width_is_checked(self):
        with self.assertRaises(ContractViolation):
            gin_forward(self.enc, np.zeros((2, 2)), np.ones((2, 5)))


class TreeEncoderTests(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(1)
        self.enc = TreeEncoder("tree", 2, 4, 3, self.rng)

    def test_padded_single_leaf_composes_levels(self):
        tree = build_coding_tree(fixtures.single_node(), 3)
        x = Tensor([[0.5, -1.0]])
        expected = x
        for mlp in self.enc.levels:
            expected = mlp(expected)
        np.testing.assert_allclose(tree_forward(self.enc, tree, x).data, expected.data)

    def test_child_order_does_not_matter(self):
        g = fixtures.two_triangles()
        tree = build_coding_tree(g, 3)
        flipped = dataclasses.replace(tree, children=tuple(tuple(reversed(c)) for c in tree.children))
        x = self.rng.normal(size=(6, 2))
        np.testing.assert_allclose(tree_forward(self.enc, tree, x).data, tree_forward(self.enc, flipped, x).data)

    def test_two_leaf_root_sums_children(self):
        enc = TreeEncoder("tree", 2, 4, 1, self.rng)
        tree = build_coding_tree(fixtures.k2(), 1)
        x = Tensor([[1.0, 2.0], [3.0, -1.0]])
        expected = enc.levels[0](Tensor([[4.0, 1.0]]))
        np.testing.assert_allclose(tree_forward(enc, tree, x).data, expected.data)

    def test_height_mismatch(self):
        with self.assertRaises(ContractViolation):
            tree_forward(self.enc, build_coding_tree(fixtures.k3(), 2), np.ones((3, 2)))


class ProjectionTests(unittest.TestCase):

    def test_rows_are_unit_or_zero(self):
        rng = np.random.default_rng(2)
        head = ProjectionHead("head_tree", 4, 3, rng)
        norms = np.linalg.norm(project(head, Tensor(rng.normal(size=(7, 4)))).data, axis=1)
        self.assertTrue(np.all((norms == 0) | (np.abs(norms - 1) < 1e-9)))

    def test_zero_bias_zero_input_gives_zero_row(self):
        head = ProjectionHead("head_tree", 4, 3, np.random.default_rng(3))
        head.mlp.b1.data[...] = 0.0
        head.mlp.b2.data[...] = 0.0
        np.testing.assert_array_equal(project(head, Tensor(np.zeros((1, 4)))).data, np.zeros((1, 3)))

    def test_identical_inputs(self):
        head = ProjectionHead("head_tree", 2, 2, np.random.default_rng(4))
        out = head(Tensor([[1.0, 2.0], [1.0, 2.0]])).data
        np.testing.assert_array_equal(out[0], out[1])

    def test_mlp_shapes(self):
        mlp = MLP("m", 3, 5, 2, np.random.default_rng(5))
        self.assertEqual([p.shape for p in mlp.parameters()], [(3, 5), (1, 5), (5, 2), (1, 2)])


class ModelTests(unittest.TestCase):

    def setUp(self):
        self.cfg = small_config()
        views = [build_triplet_views(g, 2, 3) for g in (fixtures.two_triangles(), fixtures.k3(), fixtures.path3())]
        self.batch = collate(views)

    def test_parameter_names(self):
        names = SegoModel.init(1, 4, self.cfg).named_parameters()
        for expected in ("gin_b.layer0.w1", "gin_t.layer1.b2", "tree.level1.w2",
                         "head_local_b.w1", "head_global_t.b1", "head_tree.w2"):
            self.assertIn(expected, names)
        self.assertEqual(len(names), 4 * (2 + 2 + 2 + 5))

    def test_forward_shapes(self):
        emb = SegoModel.init(1, 4, self.cfg).forward(self.batch)
        self.assertEqual(emb.node_b.shape, (12, 3))
        self.assertEqual(emb.graph_t.shape, (3, 3))
        self.assertEqual(emb.tree.shape, (3, 3))
        self.assertEqual(emb.n_graphs, 3)

    def test_seed_determines_forward(self):
        a = SegoModel.init(1, 4, self.cfg).forward(self.batch)
        b = SegoModel.init(1, 4, self.cfg).forward(self.batch)
        c = SegoModel.init(1, 4, small_config(seed=12)).forward(self.batch)
        self.assertEqual(a.graph_b.data.tobytes(), b.graph_b.data.tobytes())
        self.assertFalse(np.allclose(a.graph_b.data, c.graph_b.data))


if __name__ == "__main__":
    unittest.main()
