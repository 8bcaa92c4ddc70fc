"""Parameters and numerically-safe activations (float64 throughout)."""
from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch

LOGIT_CLAMP = 30.0
EPS_LOG = 1e-12


class Parameter:
    """A named trainable matrix with an accumulated gradient."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = np.ascontiguousarray(value, dtype=np.float64)
        if self.value.ndim != 2:
            raise ShapeMismatch(f"parameter {name!r} must be 2-D, got {self.value.shape}")
        self.grad = np.zeros_like(self.value)

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self):
        self.grad[:] = 0.0

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.value.shape})"


def glorot(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def leaky_relu(x: np.ndarray, slope: float = 0.2) -> np.ndarray:
    return np.where(x > 0.0, x, slope * x)


def leaky_relu_grad(x: np.ndarray, slope: float = 0.2) -> np.ndarray:
    return np.where(x > 0.0, 1.0, slope)


def sigmoid(x):
    """Clamped logistic; output lies strictly inside (0, 1)."""
    z = np.clip(x, -LOGIT_CLAMP, LOGIT_CLAMP)
    return 1.0 / (1.0 + np.exp(-z))


def softmax(z: np.ndarray) -> np.ndarray:
    """Shift-stabilised softmax over the last axis; every component is
    strictly positive (shifted logits floored at -30)."""
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    shifted = np.maximum(shifted, -LOGIT_CLAMP)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)
