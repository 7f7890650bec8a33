"""Minimal reverse-mode automatic differentiation over dense numpy arrays.

A Tensor wraps an ndarray and, when requires_grad is set anywhere upstream,
records its parents and a backward closure on a global-order tape implied by
the graph structure. Everything runs in float64 with a fixed evaluation
order, so repeated runs are bit-identical.
"""

from __future__ import annotations

import numpy as np

_CLIP = 1e-7  # probability clamp so cross-entropy never sees log(0)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self._parents: tuple = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    def detach(self) -> "Tensor":
        """A view of the same values cut off from the graph."""
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    # -- graph construction helpers -------------------------------------

    @staticmethod
    def _node(data, parents, backward) -> "Tensor":
        out = Tensor(data)
        if any(p.requires_grad or p._parents for p in parents):
            out.requires_grad = False
            out._parents = parents
            out._backward = backward
        return out

    # -- arithmetic ------------------------------------------------------

    def __add__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        out_data = self.data + other.data

        def backward(g):
            return (_unbroadcast(g, self.data.shape),
                    _unbroadcast(g, other.data.shape))

        return Tensor._node(out_data, (self, other), backward)

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        return self + (-other)

    def __rsub__(self, other):
        return Tensor(other) + (-self)

    def __mul__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        out_data = self.data * other.data
        a, b = self, other

        def backward(g):
            return (_unbroadcast(g * b.data, a.data.shape),
                    _unbroadcast(g * a.data, b.data.shape))

        return Tensor._node(out_data, (self, other), backward)

    __rmul__ = __mul__

    def matmul(self, other: "Tensor") -> "Tensor":
        a, b = self, other
        if a.data.shape[-1] != b.data.shape[0]:
            raise ValueError(f"matmul shape mismatch {a.shape} @ {b.shape}")
        out_data = a.data @ b.data

        def backward(g):
            return (g @ b.data.T, a.data.T @ g)

        return Tensor._node(out_data, (a, b), backward)

    __matmul__ = matmul

    @property
    def T(self) -> "Tensor":
        def backward(g):
            return (g.T,)

        return Tensor._node(self.data.T, (self,), backward)

    def take_rows(self, idx) -> "Tensor":
        idx = np.asarray(idx, dtype=np.intp)
        out_data = self.data[idx]

        def backward(g):
            full = np.zeros_like(self.data)
            np.add.at(full, idx, g)
            return (full,)

        return Tensor._node(out_data, (self,), backward)

    def sum(self) -> "Tensor":
        def backward(g):
            return (np.full_like(self.data, g),)

        return Tensor._node(self.data.sum(), (self,), backward)

    def mean(self) -> "Tensor":
        n = self.data.size

        def backward(g):
            return (np.full_like(self.data, g / n),)

        return Tensor._node(self.data.mean(), (self,), backward)

    # -- nonlinearities ---------------------------------------------------

    def tanh(self) -> "Tensor":
        y = np.tanh(self.data)

        def backward(g):
            return (g * (1.0 - y * y),)

        return Tensor._node(y, (self,), backward)

    def sigmoid(self) -> "Tensor":
        x = self.data
        y = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                     np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))

        def backward(g):
            return (g * y * (1.0 - y),)

        return Tensor._node(y, (self,), backward)

    def leaky_relu(self, slope: float = 0.01) -> "Tensor":
        mask = np.where(self.data > 0, 1.0, slope)

        def backward(g):
            return (g * mask,)

        return Tensor._node(self.data * mask, (self,), backward)

    def softmax_rows(self) -> "Tensor":
        """Row-wise softmax; rows must be non-empty."""
        if self.data.ndim != 2 or self.data.shape[1] == 0:
            raise ValueError(f"softmax_rows needs a non-empty 2-d input, got {self.shape}")
        z = self.data - self.data.max(axis=1, keepdims=True)
        e = np.exp(z)
        y = e / e.sum(axis=1, keepdims=True)

        def backward(g):
            return (y * (g - (g * y).sum(axis=1, keepdims=True)),)

        return Tensor._node(y, (self,), backward)

    def row_l2_mean(self) -> "Tensor":
        """Mean over rows of the Euclidean norm of each row."""
        if self.data.ndim != 2 or self.data.shape[0] == 0:
            raise ValueError("row_l2_mean needs a non-empty 2-d input")
        norms = np.sqrt((self.data ** 2).sum(axis=1))
        n = self.data.shape[0]
        safe = np.maximum(norms, 1e-12)

        def backward(g):
            return (g / n * self.data / safe[:, None],)

        return Tensor._node(norms.mean(), (self,), backward)

    def bce_mean(self, targets) -> "Tensor":
        """Mean binary cross-entropy of probabilities against 0/1 targets.

        Probabilities are clamped to [1e-7, 1-1e-7]; gradient is zero where
        the clamp is active.
        """
        t = np.asarray(targets, dtype=np.float64)
        if t.shape != self.data.shape:
            raise ValueError(f"bce_mean target shape {t.shape} != {self.shape}")
        p = np.clip(self.data, _CLIP, 1.0 - _CLIP)
        inside = (self.data > _CLIP) & (self.data < 1.0 - _CLIP)
        loss = -(t * np.log(p) + (1.0 - t) * np.log(1.0 - p)).mean()
        n = self.data.size

        def backward(g):
            dp = (p - t) / (p * (1.0 - p)) / n
            return (g * dp * inside,)

        return Tensor._node(loss, (self,), backward)

    # -- backward pass ----------------------------------------------------

    def backward(self) -> None:
        """Populate .grad on every reachable requires_grad Tensor.

        Repeated calls accumulate gradients until zero_grad.
        """
        if self.data.shape != ():
            raise ValueError(f"backward requires a scalar loss, got shape {self.shape}")

        order: list[Tensor] = []
        seen = set()

        def visit(t: Tensor):
            stack = [(t, False)]
            while stack:
                node, done = stack.pop()
                if done:
                    order.append(node)
                    continue
                if id(node) in seen:
                    continue
                seen.add(id(node))
                stack.append((node, True))
                for p in node._parents:
                    stack.append((p, False))

        visit(self)
        adjoint: dict[int, np.ndarray] = {id(self): np.ones(())}
        for node in reversed(order):
            g = adjoint.get(id(node))
            if g is None:
                continue
            if node.requires_grad:
                node._accumulate(g)
            if node._backward is None:
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                key = id(parent)
                if key in adjoint:
                    adjoint[key] = adjoint[key] + pg
                else:
                    adjoint[key] = pg


def parameter(data, rng: np.random.Generator | None = None, shape=None) -> Tensor:
    """Trainable tensor; Glorot-uniform initialized when rng+shape given."""
    if rng is not None:
        fan_in = shape[0] if len(shape) > 1 else shape[0]
        fan_out = shape[1] if len(shape) > 1 else shape[0]
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        data = rng.uniform(-bound, bound, size=shape)
    return Tensor(data, requires_grad=True)
