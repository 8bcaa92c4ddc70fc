"""Adam with decoupled weight decay."""
from __future__ import annotations

import numpy as np

from .core import Parameter


class Adam:
    """Decoupled weight decay (applied to the values first), then the
    standard bias-corrected Adam update; gradients are zeroed after each
    step."""

    def __init__(self, params, lr: float = 1e-5, weight_decay: float = 0.01,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params: list[Parameter] = list(params)
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {p.name: np.zeros_like(p.value) for p in self.params}
        self.v = {p.name: np.zeros_like(p.value) for p in self.params}

    def step(self, lr: float | None = None, weight_decay: float | None = None):
        lr = self.lr if lr is None else lr
        wd = self.weight_decay if weight_decay is None else weight_decay
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for p in self.params:
            if wd:
                p.value *= 1.0 - lr * wd
            g = p.grad
            m = self.m[p.name]
            v = self.v[p.name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            p.value -= lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            p.zero_grad()

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for p in self.params:
            out[f"{p.name}/m"] = self.m[p.name]
            out[f"{p.name}/v"] = self.v[p.name]
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray], t: int):
        self.t = t
        for p in self.params:
            if f"{p.name}/m" in arrays:
                self.m[p.name][:] = arrays[f"{p.name}/m"]
                self.v[p.name][:] = arrays[f"{p.name}/v"]
