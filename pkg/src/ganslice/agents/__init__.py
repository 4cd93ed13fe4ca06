"""Bandwidth-allocation agents and their training rules."""

from .agents import (
    ALGOS,
    Agent,
    AgentConfig,
    ClipConfig,
    DQNAgent,
    DuelingGanDDQNAgent,
    GanDDQNAgent,
    HardSlicingAgent,
    make_agent,
    select_action,
    target_sync,
)
from .losses import bellman_target_particles
from .policy import ClippingRule, EpsilonSchedule, clip_reward, epsilon_greedy, greedy
from .replay import Batch, ReplayBuffer, TransitionTuple

__all__ = [
    "ALGOS", "Agent", "AgentConfig", "Batch", "ClipConfig", "ClippingRule", "DQNAgent",
    "DuelingGanDDQNAgent", "EpsilonSchedule", "GanDDQNAgent", "HardSlicingAgent", "ReplayBuffer",
    "TransitionTuple", "bellman_target_particles", "clip_reward", "epsilon_greedy", "greedy",
    "make_agent", "select_action", "target_sync",
]
