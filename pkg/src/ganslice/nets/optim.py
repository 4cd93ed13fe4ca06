"""First-order optimizers with global gradient-norm clipping."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .params import ParamSet


class DivergenceError(FloatingPointError):
    """A loss or gradient became non-finite."""


class OptimizerKind(str, Enum):
    SGD = "sgd"
    ADAM = "adam"
    RMSPROP = "rmsprop"


@dataclass(frozen=True)
class OptimizerConfig:
    lr: float = 1e-4
    kind: OptimizerKind = OptimizerKind.ADAM
    clip_norm: float | None = 10.0
    beta1: float = 0.9
    beta2: float = 0.999
    rho: float = 0.9  # RMSProp decay
    eps: float = 1e-8

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", OptimizerKind(self.kind))
        if self.lr < 0:
            raise ValueError("learning rate must be >= 0")
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ValueError("clip_norm must be positive")


def clip_by_global_norm(grads: dict[str, np.ndarray], clip_norm: float | None) -> tuple[dict, float]:
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if clip_norm is None or norm <= clip_norm:
        return grads, norm
    scale = clip_norm / norm
    return {k: g * scale for k, g in grads.items()}, norm


class Optimizer:
    """Stateful optimizer bound to one :class:`ParamSet`."""

    def __init__(self, params: ParamSet, config: OptimizerConfig = OptimizerConfig()):
        self.params = params
        self.config = config
        self.t = 0
        self._m = {k: np.zeros_like(v) for k, v in params.arrays().items()}
        self._v = {k: np.zeros_like(v) for k, v in params.arrays().items()}

    def step(self, grads: dict[str, np.ndarray] | None = None) -> float:
        """Apply one update; returns the pre-clipping global gradient norm."""
        if grads is None:
            grads = self.params.grads()
        for name, g in grads.items():
            if not np.all(np.isfinite(g)):
                bad = int(np.size(g) - np.count_nonzero(np.isfinite(g)))
                raise DivergenceError(f"non-finite gradient in {name!r} ({bad} entries) at update {self.t + 1}")
        c = self.config
        grads, norm = clip_by_global_norm(grads, c.clip_norm)
        self.t += 1
        for name, g in grads.items():
            p = self.params[name].data
            if c.kind is OptimizerKind.SGD:
                p -= c.lr * g
            elif c.kind is OptimizerKind.ADAM:
                m, v = self._m[name], self._v[name]
                m *= c.beta1
                m += (1 - c.beta1) * g
                v *= c.beta2
                v += (1 - c.beta2) * g * g
                mh = m / (1 - c.beta1 ** self.t)
                vh = v / (1 - c.beta2 ** self.t)
                p -= c.lr * mh / (np.sqrt(vh) + c.eps)
            else:
                v = self._v[name]
                v *= c.rho
                v += (1 - c.rho) * g * g
                p -= c.lr * g / (np.sqrt(v) + c.eps)
        self.params.version += 1
        return norm


def optimizer_step(params: ParamSet, grads: dict[str, np.ndarray], config: OptimizerConfig, state=None):
    """Functional form; pass the returned optimizer back as ``state`` to keep moments."""
    opt = state if state is not None else Optimizer(params, config)
    opt.step(grads)
    return opt
