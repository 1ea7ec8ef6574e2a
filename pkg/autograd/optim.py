# autograd/optim.py
import numpy as np


class Adam:
    """Adam with bias-corrected moments; parameters are updated in place."""

    def __init__(self, params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self):
        self.t += 1
        correction1 = 1.0 - self.beta1 ** self.t
        correction2 = 1.0 - self.beta2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            if p.grad is None:
                continue
            m *= self.beta1
            m += (1.0 - self.beta1) * p.grad
            v *= self.beta2
            v += (1.0 - self.beta2) * p.grad ** 2
            p.data -= self.lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)


def adam_step(params, state, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
    """Functional form: `state` is an Adam created on the same params, or None."""
    if state is None:
        state = Adam(params, lr=lr, betas=(beta1, beta2), eps=eps)
    state.lr = lr
    state.step()
    return state
