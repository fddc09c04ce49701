"""Parameter update rules: AdaGrad and Adam on the inverse-sqrt warmup schedule."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict

import numpy as np

OPTIMIZERS = ("adagrad", "noam_adam")
PRECISIONS = ("high", "fast")


@dataclass
class TrainConfig:
    optimizer: str = "adagrad"
    lr: float = 0.1
    weight_decay: float = 1e-6
    dropout: float = 0.1
    warmup_steps: int = 400
    batch_size: int = 32
    epochs: int = 10
    seed: int = 0
    precision: str = "high"
    noam_factor: float = 1.0
    grad_clip: float = 0.0

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.precision not in PRECISIONS:
            raise ValueError(f"unknown precision {self.precision!r}")


class AdaGrad:
    """Accumulated squared gradients; update = lr * g / (sqrt(acc) + eps),
    with decoupled weight decay lr * wd * param."""

    def __init__(self, lr: float = 0.1, weight_decay: float = 1e-6,
                 eps: float = 1e-10):
        self.lr = lr
        self.weight_decay = weight_decay
        self.eps = eps
        self.acc: Dict[str, np.ndarray] = {}

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]):
        for name, g in grads.items():
            if name not in self.acc:
                self.acc[name] = np.zeros_like(params[name])
            self.acc[name] += g * g
            update = self.lr * g / (np.sqrt(self.acc[name]) + self.eps)
            if self.weight_decay:
                update = update + self.lr * self.weight_decay * params[name]
            params[name] -= update


def noam_lr(step: int, d_model: int, warmup: int, factor: float = 1.0) -> float:
    """Inverse-sqrt schedule with linear warmup; peaks at step == warmup."""
    return factor * d_model ** -0.5 * min(step ** -0.5, step * warmup ** -1.5)


class NoamAdam:
    """Adam whose learning rate follows ``noam_lr``."""

    def __init__(self, d_model: int, warmup: int = 400, factor: float = 1.0,
                 beta1: float = 0.9, beta2: float = 0.98, eps: float = 1e-9,
                 weight_decay: float = 0.0):
        self.d_model = d_model
        self.warmup = warmup
        self.factor = factor
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]):
        self.t += 1
        lr = noam_lr(self.t, self.d_model, self.warmup, self.factor)
        b1, b2 = self.beta1, self.beta2
        for name, g in grads.items():
            if name not in self.m:
                self.m[name] = np.zeros_like(params[name])
                self.v[name] = np.zeros_like(params[name])
            self.m[name] = b1 * self.m[name] + (1 - b1) * g
            self.v[name] = b2 * self.v[name] + (1 - b2) * g * g
            m_hat = self.m[name] / (1 - b1 ** self.t)
            v_hat = self.v[name] / (1 - b2 ** self.t)
            update = lr * m_hat / (np.sqrt(v_hat) + self.eps)
            if self.weight_decay:
                update = update + lr * self.weight_decay * params[name]
            params[name] -= update


def make_optimizer(cfg: TrainConfig, d_model: int):
    if cfg.optimizer == "adagrad":
        return AdaGrad(lr=cfg.lr, weight_decay=cfg.weight_decay)
    return NoamAdam(d_model=d_model, warmup=cfg.warmup_steps,
                    factor=cfg.noam_factor, weight_decay=cfg.weight_decay)
