# autograd/ops.py
"""Differentiable primitives over 2-D float64 tensors."""

import numpy as np

from autograd.tensor import Tape, Tensor
from sego.exceptions import ContractViolation

NORM_EPS = 1e-8


def _apply(data, inputs, backward):
    tape = Tape.current()
    needs_grad = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=needs_grad)
    if needs_grad:
        tape.record(out, inputs, backward)
    return out


def _same_shape(op, a, b):
    if a.shape != b.shape:
        raise ContractViolation(f"{op}: shapes {a.shape} and {b.shape} differ")


def _constant(x, like):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.broadcast_to(np.asarray(x, dtype=np.float64), like.shape))


def matmul(a, b):
    if a.shape[1] != b.shape[0]:
        raise ContractViolation(f"matmul: shapes {a.shape} and {b.shape} do not chain")
    x, y = a.data, b.data
    return _apply(x @ y, (a, b), lambda g: (g @ y.T, x.T @ g))


def add(a, b):
    _same_shape("add", a, b)
    return _apply(a.data + b.data, (a, b), lambda g: (g, g))


def sub(a, b):
    _same_shape("sub", a, b)
    return _apply(a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a, b):
    """Elementwise product; `b` may be a constant array of the same shape."""
    b = _constant(b, a)
    _same_shape("mul", a, b)
    x, y = a.data, b.data
    return _apply(x * y, (a, b), lambda g: (g * y, g * x))


def add_bias_rowwise(x, b):
    if b.shape != (1, x.shape[1]):
        raise ContractViolation(f"add_bias_rowwise: bias {b.shape} for input {x.shape}")
    return _apply(x.data + b.data, (x, b), lambda g: (g, g.sum(axis=0, keepdims=True)))


def _relu_backward(x, g):
    return g * (x > 0)


def relu(x):
    data = x.data
    return _apply(np.maximum(data, 0.0), (x,), lambda g: (_relu_backward(data, g),))


def scale(x, c):
    c = float(c)
    return _apply(x.data * c, (x,), lambda g: (g * c,))


def shift(x, c):
    return _apply(x.data + float(c), (x,), lambda g: (g,))


def transpose(x):
    return _apply(x.data.T.copy(), (x,), lambda g: (g.T,))


def exp(x):
    out = np.exp(x.data)
    return _apply(out, (x,), lambda g: (g * out,))


def log(x):
    data = x.data
    if np.any(data <= 0):
        raise ContractViolation("log: input has non-positive entries")
    return _apply(np.log(data), (x,), lambda g: (g / data,))


def mean(x):
    n = x.data.size
    return _apply(np.array([[x.data.mean()]]), (x,), lambda g: (np.full(x.shape, g[0, 0] / n),))


def sum_all(x):
    return _apply(np.array([[x.data.sum()]]), (x,), lambda g: (np.full(x.shape, g[0, 0]),))


def sum_cols(x):
    """Row sums as an (n, 1) column."""
    cols = x.shape[1]
    return _apply(x.data.sum(axis=1, keepdims=True), (x,), lambda g: (np.repeat(g, cols, axis=1),))


def diagonal(x):
    """Diagonal of a square matrix as an (n, 1) column."""
    n = x.shape[0]
    if x.shape[1] != n:
        raise ContractViolation(f"diagonal: matrix {x.shape} is not square")
    return _apply(np.diagonal(x.data).reshape(n, 1).copy(), (x,), lambda g: (np.diagflat(g[:, 0]),))


def concat_cols(*tensors):
    rows = {t.shape[0] for t in tensors}
    if len(rows) != 1:
        raise ContractViolation(f"concat_cols: row counts {[t.shape for t in tensors]} differ")
    bounds = np.cumsum([t.shape[1] for t in tensors])[:-1]
    return _apply(np.hstack([t.data for t in tensors]), tuple(tensors),
                  lambda g: tuple(np.split(g, bounds, axis=1)))


def gather_rows(x, index):
    index = np.asarray(index, dtype=np.int64)
    n = x.shape[0]

    def backward(g):
        out = np.zeros((n, g.shape[1]))
        np.add.at(out, index, g)
        return (out,)

    return _apply(x.data[index], (x,), backward)


def sum_rows_grouped(x, groups, n_groups):
    """Row i of x is added into output row groups[i]."""
    groups = np.asarray(groups, dtype=np.int64)
    if len(groups) != x.shape[0]:
        raise ContractViolation(f"sum_rows_grouped: {len(groups)} group ids for {x.shape[0]} rows")
    out = np.zeros((n_groups, x.shape[1]))
    np.add.at(out, groups, x.data)
    return _apply(out, (x,), lambda g: (g[groups],))


def l2_normalize_rows(x, eps=NORM_EPS):
    """x / max(||x||, eps) per row; rows under the floor are scaled by 1/eps."""
    norms = np.sqrt((x.data ** 2).sum(axis=1, keepdims=True))
    denom = np.maximum(norms, eps)
    y = x.data / denom
    floored = norms <= eps

    def backward(g):
        projected = g - y * (g * y).sum(axis=1, keepdims=True)
        return (np.where(floored, g, projected) / denom,)

    return _apply(y, (x,), backward)


def cosine_similarity_matrix(a, b):
    """S[i, j] = cos(a_i, b_j)."""
    if a.shape[1] != b.shape[1]:
        raise ContractViolation(f"cosine_similarity_matrix: widths {a.shape} and {b.shape} differ")
    return matmul(l2_normalize_rows(a), transpose(l2_normalize_rows(b)))
