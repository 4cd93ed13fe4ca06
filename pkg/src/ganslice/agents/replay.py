"""Fixed-capacity ring buffer of transitions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class TransitionTuple:
    state: np.ndarray
    action_index: int
    reward: float
    next_state: np.ndarray


@dataclass
class Batch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray

    def __len__(self) -> int:
        return self.actions.size


class ReplayBuffer:
    def __init__(self, capacity: int, state_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self.states = np.zeros((capacity, state_dim))
        self.next_states = np.zeros((capacity, state_dim))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.cursor = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    @property
    def full(self) -> bool:
        return self.size == self.capacity

    def add(self, t: TransitionTuple) -> None:
        i = self.cursor
        self.states[i] = t.state
        self.actions[i] = t.action_index
        self.rewards[i] = t.reward
        self.next_states[i] = t.next_state
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def gather(self, idx: np.ndarray) -> Batch:
        return Batch(self.states[idx], self.actions[idx], self.rewards[idx], self.next_states[idx])

    def sample(self, m: int, rng: np.random.Generator) -> Batch:
        """``m`` distinct transitions."""
        if m > self.size:
            raise ValueError(f"need {m} transitions, buffer holds {self.size}")
        return self.gather(rng.choice(self.size, size=m, replace=False))

    def epoch(self, m: int, rng: np.random.Generator):
        """Yield minibatches covering every stored transition exactly once."""
        order = rng.permutation(self.size)
        for start in range(0, self.size, m):
            yield self.gather(order[start : start + m])
