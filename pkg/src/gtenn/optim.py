"""Parameter initialization and first-order optimizers."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .autodiff import Parameter
from .errors import ShapeError, ValidationError


def glorot_uniform(rng: np.random.Generator, rows: int, cols: int, name: str | None = None) -> Parameter:
    """Uniform in +-sqrt(6 / (fan_in + fan_out)) with fan_in=rows, fan_out=cols."""
    bound = np.sqrt(6.0 / (rows + cols))
    return Parameter(rng.uniform(-bound, bound, size=(rows, cols)), name=name)


def zeros(rows: int, cols: int, name: str | None = None) -> Parameter:
    return Parameter(np.zeros((rows, cols)), name=name)


def _check_shapes(params: Sequence[Parameter], grads: Sequence[np.ndarray]) -> None:
    if len(params) != len(grads):
        raise ShapeError(f"{len(params)} parameters but {len(grads)} gradients")
    for p, g in zip(params, grads):
        if np.shape(g) != p.shape:
            raise ShapeError(f"gradient shape {np.shape(g)} does not match parameter {p.name or ''} {p.shape}")


class SGD:
    """Plain gradient descent: ``p <- p - lr * g``."""

    def __init__(self, params: Sequence[Parameter], lr: float = 1e-3):
        if lr < 0:
            raise ValidationError(f"learning rate must be non-negative, got {lr}")
        self.params = list(params)
        self.lr = lr
        self.step_count = 0

    def step(self, grads: Sequence[np.ndarray]) -> None:
        _check_shapes(self.params, grads)
        self.step_count += 1
        if self.lr == 0:
            return
        for p, g in zip(self.params, grads):
            p.assign(p.value - self.lr * g)


class Adam:
    """Adaptive moment estimation with bias-corrected first and second moments."""

    def __init__(
        self,
        params: Sequence[Parameter],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        if lr < 0:
            raise ValidationError(f"learning rate must be non-negative, got {lr}")
        if not (0 <= beta1 < 1 and 0 <= beta2 < 1):
            raise ValidationError("Adam betas must lie in [0, 1)")
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros(p.shape) for p in self.params]
        self.v = [np.zeros(p.shape) for p in self.params]

    def step(self, grads: Sequence[np.ndarray]) -> None:
        _check_shapes(self.params, grads)
        self.step_count += 1
        t = self.step_count
        c1 = 1.0 - self.beta1**t
        c2 = 1.0 - self.beta2**t
        for i, (p, g) in enumerate(zip(self.params, grads)):
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g
            if self.lr == 0:
                continue
            m_hat = self.m[i] / c1
            v_hat = self.v[i] / c2
            p.assign(p.value - self.lr * m_hat / (np.sqrt(v_hat) + self.eps))


def make_optimizer(kind: str, params: Sequence[Parameter], lr: float):
    if kind == "adam":
        return Adam(params, lr=lr)
    if kind == "sgd":
        return SGD(params, lr=lr)
    raise ValidationError(f"unknown optimizer {kind!r} (expected 'adam' or 'sgd')")
