# autograd/tensor.py
"""
Dense 2-D tensors and the tape that records operations on them.

Operations only record while a tape is active in the current thread and at
least one input requires a gradient:

    with Tape() as tape:
        loss = ops.mean(ops.relu(ops.matmul(x, w)))
    tape.backward(loss)
    w.grad  # d loss / d w
"""

import threading

import numpy as np

from sego.exceptions import ContractViolation, UsageError

_local = threading.local()


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name")

    def __init__(self, data, requires_grad=False, name=None):
        data = np.array(data, dtype=np.float64)
        if data.ndim == 0:
            data = data.reshape(1, 1)
        elif data.ndim == 1:
            data = data.reshape(1, -1)
        if data.ndim != 2:
            raise ContractViolation(f"tensors are 2-D, got shape {data.shape}")
        self.data = data
        self.grad = None
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def item(self):
        if self.data.size != 1:
            raise ContractViolation(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.data[0, 0])

    def numpy(self):
        return self.data.copy()

    def detach(self):
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def accumulate(self, grad):
        if grad.shape != self.data.shape:
            raise ContractViolation(f"gradient of shape {grad.shape} for {self.name or 'tensor'} {self.shape}")
        self.grad = grad.copy() if self.grad is None else self.grad + grad

    def __repr__(self):
        label = f" {self.name}" if self.name else ""
        return f"<Tensor{label} {self.shape[0]}x{self.shape[1]} requires_grad={self.requires_grad}>"


class _Record:
    __slots__ = ("output", "inputs", "backward")

    def __init__(self, output, inputs, backward):
        self.output = output
        self.inputs = inputs
        self.backward = backward


class Tape:

    def __init__(self):
        self.records = []
        self._produced = set()

    @staticmethod
    def current():
        stack = getattr(_local, "stack", None)
        return stack[-1] if stack else None

    def __enter__(self):
        if not hasattr(_local, "stack"):
            _local.stack = []
        _local.stack.append(self)
        return self

    def __exit__(self, *exc):
        _local.stack.pop()
        return False

    def record(self, output, inputs, backward):
        """`backward(upstream)` returns one gradient (or None) per input."""
        self.records.append(_Record(output, inputs, backward))
        self._produced.add(id(output))

    def backward(self, loss):
        """Propagate d loss from `loss` back to every leaf tensor that requires a gradient.

        Leaf gradients accumulate across calls until `zero_grad`.
        """
        if loss.data.shape != (1, 1):
            raise ContractViolation(f"loss must be 1x1, got {loss.shape}")
        if not self.records:
            raise UsageError("backward called on a tape with no recorded operations")
        if id(loss) not in self._produced:
            raise UsageError("loss was not produced on this tape")

        grads = {id(loss): np.ones((1, 1))}
        leaves = {}
        for rec in reversed(self.records):
            upstream = grads.pop(id(rec.output), None)
            if upstream is None:
                continue
            for tensor, grad in zip(rec.inputs, rec.backward(upstream)):
                if grad is None or not tensor.requires_grad:
                    continue
                key = id(tensor)
                if key in self._produced:
                    grads[key] = grad if key not in grads else grads[key] + grad
                else:
                    leaves[key] = tensor
                    tensor.accumulate(grad)
        return list(leaves.values())

