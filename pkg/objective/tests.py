import math
import unittest

import numpy as np

from autograd import ops
from autograd.gradcheck import check_gradients
from autograd.tensor import Tensor
from objective.losses import (
    BatchEmbeddings, adaptive_weight, global_loss, infonce, infonce_rows, local_loss, total_loss, tree_loss,
)
from sego.exceptions import ContractViolation


def embeddings(node_b, node_t, graph_b, graph_t, tree, nodes_per_graph, tau=0.2):
    nodes_per_graph = np.asarray(nodes_per_graph)
    return BatchEmbeddings(
        node_b=node_b if isinstance(node_b, Tensor) else Tensor(node_b),
        node_t=node_t if isinstance(node_t, Tensor) else Tensor(node_t),
        graph_b=graph_b if isinstance(graph_b, Tensor) else Tensor(graph_b),
        graph_t=graph_t if isinstance(graph_t, Tensor) else Tensor(graph_t),
        tree=tree if isinstance(tree, Tensor) else Tensor(tree),
        node_graph=np.repeat(np.arange(len(nodes_per_graph)), nodes_per_graph),
        nodes_per_graph=nodes_per_graph,
        tau=tau,
    )


def identical(nodes_per_graph, dim=3):
    m, b = int(np.sum(nodes_per_graph)), len(nodes_per_graph)
    row = np.arange(1.0, dim + 1) / np.linalg.norm(np.arange(1.0, dim + 1))
    return embeddings(np.tile(row, (m, 1)), np.tile(row, (m, 1)), np.tile(row, (b, 1)),
                      np.tile(row, (b, 1)), np.tile(row, (b, 1)), nodes_per_graph)


def random_embeddings(rng, nodes_per_graph, dim=3, tau=0.2):
    m, b = int(np.sum(nodes_per_graph)), len(nodes_per_graph)
    return embeddings(rng.normal(size=(m, dim)), rng.normal(size=(m, dim)), rng.normal(size=(b, dim)),
                      rng.normal(size=(b, dim)), rng.normal(size=(b, dim)), nodes_per_graph, tau)


class InfoNCETests(unittest.TestCase):

    def test_identical_embeddings(self):
        for n in (2, 4, 8):
            z = Tensor(np.ones((n, 4)))
            self.assertAlmostEqual(infonce(z, z, 0, 0.2), math.log(2 * (n - 1)), places=12)

    def test_two_identical_rows(self):
        z = Tensor(np.ones((2, 2)))
        self.assertAlmostEqual(infonce(z, z, 1, 0.5), math.log(2), places=12)

    def test_opposite_negatives(self):
        z = Tensor([[1.0, 0.0], [-1.0, 0.0]])
        self.assertAlmostEqual(infonce(z, z, 0, 1.0), math.log(2) - 2, places=12)

    def test_needs_negatives(self):
        z = Tensor([[1.0, 0.0]])
        with self.assertRaises(ContractViolation):
            infonce_rows(z, z, 0.2)

    def test_rotation_invariance(self):
        rng = np.random.default_rng(0)
        a, b = rng.normal(size=(5, 3)), rng.normal(size=(5, 3))
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        before = infonce_rows(Tensor(a), Tensor(b), 0.2).data
        after = infonce_rows(Tensor(a @ q), Tensor(b @ q), 0.2).data
        np.testing.assert_allclose(after, before, atol=1e-10)

    def test_small_temperature_is_finite(self):
        rng = np.random.default_rng(1)
        z = Tensor(rng.normal(size=(6, 3)))
        self.assertTrue(np.all(np.isfinite(infonce_rows(z, Tensor(-z.data), 0.01).data)))

    def test_tiny_temperature_matches_logsumexp(self):
        rng = np.random.default_rng(4)
        a, b = rng.normal(size=(4, 16)), rng.normal(size=(4, 16))
        tau = 5e-4
        values = infonce_rows(Tensor(a), Tensor(b), tau).data[:, 0]
        self.assertTrue(np.all(np.isfinite(values)))

        unit_a = a / np.linalg.norm(a, axis=1, keepdims=True)
        unit_b = b / np.linalg.norm(b, axis=1, keepdims=True)
        s_ab, s_aa = unit_a @ unit_b.T / tau, unit_a @ unit_a.T / tau
        for i in range(4):
            negatives = np.concatenate([np.delete(s_aa[i], i), np.delete(s_ab[i], i)])
            top = negatives.max()
            expected = top + np.log(np.exp(negatives - top).sum()) - s_ab[i, i]
            self.assertAlmostEqual(values[i], expected, delta=1e-3)

    def test_dominant_positive_does_not_overflow(self):
        z = Tensor([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])
        values = infonce_rows(z, z, 1e-3).data
        self.assertTrue(np.all(np.isfinite(values)))

    def test_shifted_form_gradients(self):
        rng = np.random.default_rng(5)
        inputs = [Tensor(rng.normal(size=(4, 3))), Tensor(rng.normal(size=(4, 3)))]
        self.assertLess(check_gradients(lambda a, b: ops.mean(infonce_rows(a, b, 0.1)), inputs), 1e-4)


class ComponentLossTests(unittest.TestCase):

    def test_local_loss_identical(self):
        loss, per_graph = local_loss(identical([2, 3, 1]))
        self.assertAlmostEqual(loss.item(), math.log(2 * 5), places=12)
        np.testing.assert_allclose(per_graph, [math.log(10)] * 3)

    def test_local_loss_single_two_node_graph(self):
        loss, _ = local_loss(identical([2]))
        self.assertAlmostEqual(loss.item(), math.log(2), places=12)

    def test_local_loss_single_one_node_graph(self):
        with self.assertRaises(ContractViolation):
            local_loss(identical([1]))

    def test_per_graph_error_is_mean_of_node_terms(self):
        emb = random_embeddings(np.random.default_rng(2), [2, 3])
        _, per_graph = local_loss(emb)
        terms = (infonce_rows(emb.node_b, emb.node_t, emb.tau).data + infonce_rows(emb.node_t, emb.node_b, emb.tau).data)[:, 0]
        np.testing.assert_allclose(per_graph, [terms[:2].sum() / 4, terms[2:].sum() / 6])

    def test_global_loss_identical(self):
        loss, per_graph = global_loss(identical([1, 1, 1, 1]))
        self.assertAlmostEqual(loss.item(), math.log(6), places=12)
        self.assertEqual(len(per_graph), 4)

    def test_global_loss_two_graphs(self):
        self.assertAlmostEqual(global_loss(identical([1, 2]))[0].item(), math.log(2), places=12)

    def test_global_loss_needs_two_graphs(self):
        with self.assertRaises(ContractViolation):
            global_loss(identical([3]))

    def test_tree_loss_identical(self):
        for partner in ("basic", "topo", "both"):
            self.assertAlmostEqual(tree_loss(identical([1, 1, 1]), partner)[0].item(), math.log(4), places=12)

    def test_tree_loss_ignores_graph_order(self):
        emb = random_embeddings(np.random.default_rng(3), [1, 1, 1])
        order = [2, 0, 1]
        swapped = embeddings(emb.node_b, emb.node_t, emb.graph_b.data[order], emb.graph_t.data[order],
                             emb.tree.data[order], [1, 1, 1])
        self.assertAlmostEqual(tree_loss(emb)[0].item(), tree_loss(swapped)[0].item(), places=12)

    def test_unknown_partner(self):
        with self.assertRaises(ContractViolation):
            tree_loss(identical([1, 1]), "anchor")


class TotalLossTests(unittest.TestCase):

    def test_theta_zero_sums_terms(self):
        report = total_loss(random_embeddings(np.random.default_rng(4), [2, 2, 3]), theta=0.0)
        self.assertAlmostEqual(report.total, report.l_tree + report.l_local + report.l_global, places=12)

    def test_zero_spread_leaves_tree_term(self):
        report = total_loss(identical([2, 2]), theta=1.0)
        self.assertLess(report.sigma_l, 1e-12)
        self.assertLess(report.sigma_g, 1e-12)
        self.assertAlmostEqual(report.total, report.l_tree, places=9)

    def test_adaptive_weight_arithmetic(self):
        sigma_l, w_l = adaptive_weight([0.0, 1.0], 1.0)
        sigma_g, w_g = adaptive_weight([0.0, 4.0], 1.0)
        self.assertEqual((sigma_l, sigma_g), (0.5, 2.0))
        self.assertEqual(1.0 + w_l * 1.0 + w_g * 1.0, 3.5)
        self.assertEqual(adaptive_weight([1.0, 1.0], 0.0), (0.0, 1.0))

    def test_total_identity(self):
        rng = np.random.default_rng(5)
        for theta in (0.0, 0.5, 1.0):
            r = total_loss(random_embeddings(rng, [1, 3, 2, 2]), theta=theta)
            expected = r.w_tree * r.l_tree + r.w_local * r.l_local + r.w_global * r.l_global
            self.assertLess(abs(r.total - expected), 1e-9)
            self.assertAlmostEqual(r.w_local, r.sigma_l ** theta, places=12)

    def test_disabled_terms_get_zero_weight(self):
        r = total_loss(random_embeddings(np.random.default_rng(6), [2, 2]), theta=1.0,
                       use_tree=False, use_local=False)
        self.assertEqual((r.w_tree, r.w_local), (0.0, 0.0))
        self.assertAlmostEqual(r.total, r.w_global * r.l_global, places=12)

    def test_gradients_end_to_end(self):
        rng = np.random.default_rng(7)
        sizes = [2, 1, 3]
        inputs = [Tensor(rng.normal(size=(6, 3))), Tensor(rng.normal(size=(6, 3))),
                  Tensor(rng.normal(size=(3, 3))), Tensor(rng.normal(size=(3, 3))), Tensor(rng.normal(size=(3, 3)))]

        def fn(node_b, node_t, graph_b, graph_t, tree):
            return total_loss(embeddings(node_b, node_t, graph_b, graph_t, tree, sizes), theta=0.0, partner="both").loss

        self.assertLess(check_gradients(fn, inputs), 1e-4)

    def test_record_fields(self):
        record = total_loss(identical([1, 1]), theta=1.0).as_record()
        self.assertEqual(set(record), {"l_tree", "l_local", "l_global", "sigma_l", "sigma_g",
                                       "w_tree", "w_local", "w_global", "total"})


if __name__ == "__main__":
    unittest.main()
