"""Exploration, reward clipping and greedy action choice."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ClippingRule:
    c1: float
    c2: float
    eta: float = 1.0

    def __post_init__(self) -> None:
        if not self.c1 > self.c2:
            raise ValueError("clipping needs c1 > c2")
        if self.eta <= 0:
            raise ValueError("eta must be positive")


def clip_reward(j: float, rule: ClippingRule) -> float:
    if j >= rule.c1:
        return rule.eta
    if j <= rule.c2:
        return -rule.eta
    return 0.0


@dataclass(frozen=True)
class EpsilonSchedule:
    start: float = 1.0
    end: float = 0.05
    steps: int = 3000

    def __post_init__(self) -> None:
        if not (0 <= self.end <= 1 and 0 <= self.start <= 1):
            raise ValueError("epsilon values must lie in [0, 1]")
        if self.steps < 0:
            raise ValueError("epsilon decay steps must be >= 0")

    def __call__(self, iteration: int) -> float:
        if self.steps == 0 or iteration >= self.steps:
            return self.end
        return self.start + (self.end - self.start) * iteration / self.steps


def greedy(q: np.ndarray) -> int:
    """Argmax with ties to the lowest index."""
    return int(np.argmax(q))


def epsilon_greedy(q: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    # the uniform draw is consumed every call so exploration streams stay aligned
    u = rng.random()
    a = rng.integers(q.size)
    return int(a) if u < epsilon else greedy(q)
