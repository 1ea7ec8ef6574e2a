# autograd/gradcheck.py
import numpy as np

from autograd.tensor import Tape, Tensor


def numeric_gradient(fn, inputs, index, eps=1e-5):
    """Central-difference gradient of the scalar fn(*inputs) w.r.t. inputs[index]."""
    target = inputs[index]
    grad = np.zeros_like(target.data)
    for pos in np.ndindex(target.shape):
        saved = target.data[pos]
        target.data[pos] = saved + eps
        plus = fn(*inputs).item()
        target.data[pos] = saved - eps
        minus = fn(*inputs).item()
        target.data[pos] = saved
        grad[pos] = (plus - minus) / (2 * eps)
    return grad


def check_gradients(fn, inputs, eps=1e-5):
    """Largest norm-relative error between tape and finite-difference gradients.

    `fn` maps the input tensors to a 1x1 tensor. Inputs are copied, so the
    caller's tensors keep their data and gradients.
    """
    inputs = [Tensor(t.data, requires_grad=True) for t in inputs]
    with Tape() as tape:
        loss = fn(*inputs)
    tape.backward(loss)

    worst = 0.0
    for i, t in enumerate(inputs):
        analytic = t.grad if t.grad is not None else np.zeros_like(t.data)
        numeric = numeric_gradient(fn, inputs, i, eps)
        scale = np.linalg.norm(analytic) + np.linalg.norm(numeric)
        if scale == 0.0:
            continue
        worst = max(worst, float(np.linalg.norm(analytic - numeric) / scale))
    return worst
