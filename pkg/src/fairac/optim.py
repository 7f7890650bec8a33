"""Adam optimizer (decoupled weight decay) and finite-difference grad checking."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .autodiff import Tensor


class Adam:
    """Standard Adam with decoupled weight decay.

    The decay `p -= lr * wd * p` is applied before the adaptive step, so it
    never enters the moment estimates. Gradients are cleared after each step.
    """

    def __init__(self, params: Sequence[Tensor], lr: float = 1e-3,
                 weight_decay: float = 0.0, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for i, p in enumerate(self.params):
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            if g.shape != p.data.shape:
                raise ValueError(f"grad shape {g.shape} != param shape {p.data.shape}")
            if self.weight_decay:
                p.data -= self.lr * self.weight_decay * p.data
            self.m[i] = b1 * self.m[i] + (1 - b1) * g
            self.v[i] = b2 * self.v[i] + (1 - b2) * g * g
            m_hat = self.m[i] / (1 - b1 ** self.t)
            v_hat = self.v[i] / (1 - b2 ** self.t)
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
            p.grad = None


def grad_check(loss_fn: Callable[[], Tensor], params: Sequence[Tensor],
               rtol: float = 1e-4, eps: float = 1e-5) -> dict:
    """Compare analytic gradients with central finite differences.

    `loss_fn` must rebuild the scalar loss from the current parameter values
    on every call. Returns per-parameter max relative error and a pass flag.
    """
    for p in params:
        p.zero_grad()
    loss = loss_fn()
    loss.backward()
    analytic = [np.array(p.grad if p.grad is not None else np.zeros_like(p.data))
                for p in params]
    for p in params:
        p.zero_grad()

    errors = []
    for p, a in zip(params, analytic):
        numeric = np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        num_flat = numeric.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + eps
            up = loss_fn().data
            flat[j] = orig - eps
            down = loss_fn().data
            flat[j] = orig
            num_flat[j] = (up - down) / (2 * eps)
        denom = np.maximum(np.abs(a) + np.abs(numeric), 1e-8)
        errors.append(float(np.max(np.abs(a - numeric) / denom)))

    return {
        "max_rel_error": max(errors) if errors else 0.0,
        "per_param": errors,
        "passed": all(e < rtol for e in errors),
        "rtol": rtol,
    }
