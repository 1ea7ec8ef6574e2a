import tempfile
import unittest
from pathlib import Path

import numpy as np

from autograd import ops
from autograd.checkpoint import load_checkpoint, save_checkpoint
from autograd.gradcheck import check_gradients
from autograd.optim import Adam, adam_step
from autograd.tensor import Tape, Tensor
from sego.exceptions import ContractViolation, DataIntegrityError, UsageError

TOLERANCE = 1e-4


def uniform(rng, *shape, low=-2.0, high=2.0):
    return Tensor(rng.uniform(low, high, size=shape), requires_grad=True)


def away_from_kink(rng, *shape):
    while True:
        x = rng.uniform(-2.0, 2.0, size=shape)
        if np.all(np.abs(x) > 1e-3):
            return Tensor(x, requires_grad=True)


class ForwardTests(unittest.TestCase):

    def test_relu_forward_and_backward(self):
        x = Tensor([[-1.0, 2.0]], requires_grad=True)
        with Tape() as tape:
            y = ops.relu(x)
            loss = ops.sum_all(y)
        np.testing.assert_array_equal(y.data, [[0.0, 2.0]])
        tape.backward(loss)
        np.testing.assert_array_equal(x.grad, [[0.0, 1.0]])

    def test_cosine_of_identical_unit_rows(self):
        a = Tensor([[0.6, 0.8]])
        self.assertAlmostEqual(ops.cosine_similarity_matrix(a, a).item(), 1.0, places=12)

    def test_cosine_values_are_bounded(self):
        rng = np.random.default_rng(3)
        s = ops.cosine_similarity_matrix(Tensor(rng.normal(size=(6, 4))), Tensor(rng.normal(size=(5, 4)))).data
        self.assertTrue(np.all(np.abs(s) <= 1.0 + 1e-9))

    def test_zero_row_normalizes_to_zero(self):
        y = ops.l2_normalize_rows(Tensor([[0.0, 0.0], [3.0, 4.0]]))
        np.testing.assert_allclose(y.data, [[0.0, 0.0], [0.6, 0.8]])

    def test_forward_is_deterministic(self):
        rng = np.random.default_rng(0)
        a, b = Tensor(rng.normal(size=(4, 3))), Tensor(rng.normal(size=(3, 2)))
        self.assertEqual(ops.matmul(a, b).data.tobytes(), ops.matmul(a, b).data.tobytes())

    def test_no_recording_without_tape(self):
        x = Tensor([[1.0]], requires_grad=True)
        self.assertFalse(ops.exp(x).requires_grad)

    def test_shape_mismatch_names_both_shapes(self):
        with self.assertRaisesRegex(ContractViolation, r"\(2, 3\).*\(3, 2\)"):
            ops.add(Tensor(np.zeros((2, 3))), Tensor(np.zeros((3, 2))))

    def test_matmul_inner_dimension(self):
        with self.assertRaises(ContractViolation):
            ops.matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 3))))

    def test_bias_must_be_a_row(self):
        with self.assertRaises(ContractViolation):
            ops.add_bias_rowwise(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 3))))

    def test_grouped_sum(self):
        x = Tensor([[1.0], [2.0], [4.0]])
        np.testing.assert_array_equal(ops.sum_rows_grouped(x, [1, 0, 1], 2).data, [[2.0], [5.0]])


class BackwardTests(unittest.TestCase):

    def test_mean_gradient(self):
        x = Tensor(np.ones((2, 2)), requires_grad=True)
        with Tape() as tape:
            loss = ops.mean(x)
        tape.backward(loss)
        np.testing.assert_array_equal(x.grad, np.full((2, 2), 0.25))

    def test_gradients_accumulate(self):
        rng = np.random.default_rng(1)
        x = uniform(rng, 3, 2)
        with Tape() as tape:
            loss = ops.mean(ops.exp(x))
        tape.backward(loss)
        once = x.grad.copy()
        tape.backward(loss)
        np.testing.assert_array_equal(x.grad, 2 * once)
        x.zero_grad()
        np.testing.assert_array_equal(x.grad, np.zeros((3, 2)))

    def test_backward_without_operations(self):
        x = Tensor([[1.0]], requires_grad=True)
        with self.assertRaises(UsageError):
            Tape().backward(x)

    def test_loss_from_another_tape(self):
        x = Tensor([[1.0]], requires_grad=True)
        with Tape():
            loss = ops.exp(x)
        with Tape() as other:
            ops.exp(x)
        with self.assertRaises(UsageError):
            other.backward(loss)

    def test_loss_must_be_scalar(self):
        x = Tensor(np.ones((2, 2)), requires_grad=True)
        with Tape() as tape:
            y = ops.exp(x)
        with self.assertRaises(ContractViolation):
            tape.backward(y)

    def test_constants_get_no_gradient(self):
        x = Tensor([[1.0, 2.0]], requires_grad=True)
        c = Tensor([[3.0, 4.0]])
        with Tape() as tape:
            loss = ops.sum_all(ops.mul(x, c))
        tape.backward(loss)
        self.assertIsNone(c.grad)
        np.testing.assert_array_equal(x.grad, [[3.0, 4.0]])


class GradientCheckTests(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(42)

    def assertGradientsMatch(self, fn, *inputs):
        self.assertLess(check_gradients(fn, list(inputs)), TOLERANCE)

    def test_matmul(self):
        self.assertGradientsMatch(lambda a, b: ops.sum_all(ops.matmul(a, b)),
                                  uniform(self.rng, 2, 3), uniform(self.rng, 3, 2))

    def test_elementwise(self):
        a, b = uniform(self.rng, 3, 4), uniform(self.rng, 3, 4)
        self.assertGradientsMatch(lambda a, b: ops.mean(ops.mul(ops.add(a, b), ops.sub(a, b))), a, b)

    def test_bias(self):
        self.assertGradientsMatch(lambda x, b: ops.sum_all(ops.mul(ops.add_bias_rowwise(x, b), x)),
                                  uniform(self.rng, 4, 3), uniform(self.rng, 1, 3))

    def test_relu(self):
        x = away_from_kink(self.rng, 4, 4)
        self.assertGradientsMatch(lambda x: ops.sum_all(ops.mul(ops.relu(x), x)), x)

    def test_scale_shift_exp_log(self):
        x = uniform(self.rng, 3, 3)
        self.assertGradientsMatch(lambda x: ops.mean(ops.log(ops.shift(ops.exp(ops.scale(x, 0.5)), 1.0))), x)

    def test_grouped_sum_and_gather(self):
        x = uniform(self.rng, 5, 3)
        fn = lambda x: ops.sum_all(ops.exp(ops.gather_rows(ops.sum_rows_grouped(x, [0, 1, 1, 2, 0], 3), [2, 0, 0, 1])))
        self.assertGradientsMatch(fn, x)

    def test_normalize_and_cosine(self):
        a, b = uniform(self.rng, 4, 3), uniform(self.rng, 5, 3)
        self.assertGradientsMatch(lambda a, b: ops.sum_all(ops.exp(ops.cosine_similarity_matrix(a, b))), a, b)

    def test_structural_ops(self):
        a, b = uniform(self.rng, 3, 2), uniform(self.rng, 3, 1)
        fn = lambda a, b: ops.sum_all(ops.mul(ops.diagonal(ops.matmul(ops.concat_cols(a, b), ops.transpose(ops.concat_cols(b, a)))),
                                              ops.sum_cols(ops.concat_cols(a, b))))
        self.assertGradientsMatch(fn, a, b)

    def test_composed_random_shapes(self):
        for _ in range(5):
            n, d, h = (int(v) for v in self.rng.integers(2, 6, size=3))
            x, w, b = uniform(self.rng, n, d), uniform(self.rng, d, h), uniform(self.rng, 1, h)

            def fn(x, w, b):
                hidden = ops.add_bias_rowwise(ops.matmul(x, w), b)
                sims = ops.scale(ops.cosine_similarity_matrix(hidden, hidden), 2.0)
                return ops.mean(ops.log(ops.sum_cols(ops.exp(sims))))

            self.assertGradientsMatch(fn, x, w, b)

    def test_check_leaves_callers_tensors_alone(self):
        x = uniform(self.rng, 2, 2)
        before = x.data.copy()
        check_gradients(lambda x: ops.mean(ops.exp(x)), [x])
        np.testing.assert_array_equal(x.data, before)
        self.assertIsNone(x.grad)


class AdamTests(unittest.TestCase):

    def test_first_step_moves_by_learning_rate(self):
        p = Tensor([[1.0]], requires_grad=True)
        p.grad = np.array([[1.0]])
        Adam([p], lr=0.001).step()
        self.assertAlmostEqual(p.item(), 1.0 - 0.001, places=9)

    def test_zero_gradient_leaves_parameter(self):
        p = Tensor([[0.5]], requires_grad=True)
        p.zero_grad()
        adam_step([p], None, lr=0.001)
        self.assertEqual(p.item(), 0.5)

    def test_identical_parameters_update_identically(self):
        a = Tensor([[0.3, -0.2]], requires_grad=True)
        b = Tensor([[0.3, -0.2]], requires_grad=True)
        a.grad = np.array([[0.7, -1.1]])
        b.grad = a.grad.copy()
        opt = Adam([a, b], lr=0.01)
        opt.step()
        opt.step()
        np.testing.assert_array_equal(a.data, b.data)


class CheckpointTests(unittest.TestCase):

    def test_round_trip_is_bit_exact(self):
        rng = np.random.default_rng(5)
        params = {"gin_b.layer0.w1": Tensor(rng.normal(size=(3, 4))), "gin_b.layer0.b1": Tensor(rng.normal(size=(1, 4)))}
        restored = {name: Tensor(np.zeros(t.shape)) for name, t in params.items()}
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp, "model.bin")
            save_checkpoint(path, params, extras={"score_stats": np.array([[1.0, 2.0]])})
            extras = load_checkpoint(path, restored)
        for name in params:
            self.assertEqual(params[name].data.tobytes(), restored[name].data.tobytes())
        np.testing.assert_array_equal(extras["score_stats"], [[1.0, 2.0]])

    def test_shape_mismatch(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp, "model.bin")
            save_checkpoint(path, {"w": Tensor(np.zeros((2, 2)))})
            with self.assertRaises(DataIntegrityError):
                load_checkpoint(path, {"w": Tensor(np.zeros((3, 2)))})

    def test_truncated_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp, "model.bin")
            save_checkpoint(path, {"w": Tensor(np.ones((4, 4)))})
            path.write_bytes(path.read_bytes()[:-8])
            with self.assertRaises(DataIntegrityError):
                load_checkpoint(path, {"w": Tensor(np.zeros((4, 4)))})


if __name__ == "__main__":
    unittest.main()
