"""Per-user traffic models: inter-arrival times and packet sizes.

Bounded heavy-tail kinds (truncated Pareto / exponential) clamp samples above
``max`` to ``max`` and solve for the scale that makes the *post-clamp* mean
equal the configured mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import brentq


class TrafficKind(str, Enum):
    CONSTANT = "Constant"
    UNIFORM = "Uniform"
    TRUNCATED_EXPONENTIAL = "TruncatedExponential"
    TRUNCATED_PARETO = "TruncatedPareto"
    DISCRETE_UNIFORM_SET = "DiscreteUniformSet"


def _clamped_pareto_mean(scale: float, shape: float, upper: float) -> float:
    # E[min(X, M)] = x_m + x_m^a (M^(1-a) - x_m^(1-a)) / (1 - a)
    if scale >= upper:
        return upper
    if abs(shape - 1.0) < 1e-12:
        return scale + scale * math.log(upper / scale)
    return scale + scale**shape * (upper ** (1 - shape) - scale ** (1 - shape)) / (1 - shape)


def _clamped_exponential_mean(scale: float, upper: float) -> float:
    if math.isinf(upper):
        return scale
    return scale * -math.expm1(-upper / scale)


def solve_pareto_scale(shape: float, mean: float, upper: float) -> float:
    """Pareto scale x_m whose clamp-at-``upper`` mean equals ``mean``."""
    if not 0 < mean < upper:
        raise ValueError(f"need 0 < mean < max, got mean={mean}, max={upper}")
    return brentq(lambda s: _clamped_pareto_mean(s, shape, upper) - mean, 1e-12 * mean, mean, xtol=1e-14)


def solve_exponential_scale(mean: float, upper: float) -> float:
    if math.isinf(upper):
        return mean
    if not 0 < mean < upper:
        raise ValueError(f"need 0 < mean < max, got mean={mean}, max={upper}")
    # clamped mean is increasing in scale and tends to `upper`
    hi = mean
    while _clamped_exponential_mean(hi, upper) < mean:
        hi *= 2.0
    return brentq(lambda s: _clamped_exponential_mean(s, upper) - mean, 1e-12 * mean, hi, xtol=1e-14)


@dataclass(frozen=True)
class TrafficDistribution:
    """A bounded sampling model.

    ``params`` per kind:

    * Constant: ``[value]``
    * Uniform: ``[min, max]``
    * TruncatedExponential: ``[mean]`` or ``[mean, max]``
    * TruncatedPareto: ``[shape, mean, max]``
    * DiscreteUniformSet: the value set
    """

    kind: TrafficKind
    params: tuple[float, ...]
    _scale: float = field(default=0.0, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        kind = TrafficKind(self.kind)
        object.__setattr__(self, "kind", kind)
        p = tuple(float(x) for x in self.params)
        object.__setattr__(self, "params", p)
        n = len(p)
        if kind is TrafficKind.CONSTANT:
            if n != 1 or p[0] < 0:
                raise ValueError("Constant takes one non-negative value")
        elif kind is TrafficKind.UNIFORM:
            if n != 2 or not 0 <= p[0] <= p[1]:
                raise ValueError("Uniform takes [min, max] with 0 <= min <= max")
        elif kind is TrafficKind.TRUNCATED_EXPONENTIAL:
            if n not in (1, 2) or p[0] <= 0:
                raise ValueError("TruncatedExponential takes [mean] or [mean, max]")
            object.__setattr__(self, "_scale", solve_exponential_scale(p[0], self.upper))
        elif kind is TrafficKind.TRUNCATED_PARETO:
            if n != 3 or p[0] <= 0:
                raise ValueError("TruncatedPareto takes [shape, mean, max]")
            object.__setattr__(self, "_scale", solve_pareto_scale(p[0], p[1], p[2]))
        elif kind is TrafficKind.DISCRETE_UNIFORM_SET:
            if n == 0 or min(p) < 0:
                raise ValueError("DiscreteUniformSet needs a non-empty set of non-negative values")

    @classmethod
    def from_dict(cls, d: dict) -> "TrafficDistribution":
        return cls(TrafficKind(d["kind"]), tuple(d["params"]))

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "params": list(self.params)}

    @property
    def scale(self) -> float:
        """Solved Pareto scale / exponential scale (0 for other kinds)."""
        return self._scale

    @property
    def lower(self) -> float:
        k, p = self.kind, self.params
        if k is TrafficKind.CONSTANT:
            return p[0]
        if k is TrafficKind.UNIFORM:
            return p[0]
        if k is TrafficKind.TRUNCATED_EXPONENTIAL:
            return 0.0
        if k is TrafficKind.TRUNCATED_PARETO:
            return self._scale
        return min(p)

    @property
    def upper(self) -> float:
        k, p = self.kind, self.params
        if k is TrafficKind.CONSTANT:
            return p[0]
        if k is TrafficKind.UNIFORM:
            return p[1]
        if k is TrafficKind.TRUNCATED_EXPONENTIAL:
            return p[1] if len(p) == 2 else math.inf
        if k is TrafficKind.TRUNCATED_PARETO:
            return p[2]
        return max(p)

    @property
    def mean(self) -> float:
        k, p = self.kind, self.params
        if k is TrafficKind.CONSTANT:
            return p[0]
        if k is TrafficKind.UNIFORM:
            return 0.5 * (p[0] + p[1])
        if k is TrafficKind.TRUNCATED_EXPONENTIAL:
            return p[0]
        if k is TrafficKind.TRUNCATED_PARETO:
            return p[1]
        return float(np.mean(p))

    def sample(self, rng: np.random.Generator, size: int | tuple[int, ...] | None = None):
        """Draw ``size`` samples (a scalar when ``size`` is None)."""
        k, p = self.kind, self.params
        if k is TrafficKind.CONSTANT:
            out = np.full(1 if size is None else size, p[0])
        elif k is TrafficKind.UNIFORM:
            out = rng.uniform(p[0], p[1], size=1 if size is None else size)
        elif k is TrafficKind.TRUNCATED_EXPONENTIAL:
            out = np.minimum(rng.exponential(self._scale, size=1 if size is None else size), self.upper)
        elif k is TrafficKind.TRUNCATED_PARETO:
            # inverse CDF of Pareto(shape, scale); 1 - U keeps the base in (0, 1]
            u = 1.0 - rng.random(1 if size is None else size)
            out = np.minimum(self._scale * u ** (-1.0 / p[0]), p[2])
        else:
            out = np.asarray(p)[rng.integers(0, len(p), size=1 if size is None else size)]
        return float(out[0]) if size is None else out


def sample_traffic(model: TrafficDistribution, rng: np.random.Generator) -> float:
    return model.sample(rng)


def generate_arrivals(
    next_arrival: np.ndarray,
    t_end: float,
    interarrival: TrafficDistribution,
    packet_size: TrafficDistribution,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Advance independent renewal processes (one per user) up to ``t_end``.

    ``next_arrival`` (seconds) is updated in place. Inter-arrival models are in
    milliseconds and packet sizes in bytes; returned sizes are in bits.
    Returns ``(times, local_user_index, size_bits)`` in generation order.
    """
    if interarrival.upper <= 0:
        raise ValueError("inter-arrival model must allow positive gaps")
    times, users, sizes = [], [], []
    idx = np.flatnonzero(next_arrival < t_end)
    while idx.size:
        # draw a block of gaps per pending user; unused tail draws are discarded
        horizon = float(np.max(t_end - next_arrival[idx])) * 1e3
        block = int(min(max(np.ceil(1.25 * horizon / interarrival.mean) + 2, 2), 512))
        gaps = interarrival.sample(rng, (idx.size, block)) * 1e-3
        stamps = next_arrival[idx, None] + np.concatenate(
            [np.zeros((idx.size, 1)), np.cumsum(gaps, axis=1)], axis=1
        )
        live = stamps[:, :-1] < t_end
        # arrivals are a prefix of each row since stamps are non-decreasing
        n_live = live.sum(axis=1)
        rows, cols = np.nonzero(live)
        times.append(stamps[rows, cols])
        users.append(idx[rows])
        sizes.append(packet_size.sample(rng, rows.size) * 8.0)
        next_arrival[idx] = stamps[np.arange(idx.size), n_live]
        idx = idx[next_arrival[idx] < t_end]
    if not times:
        empty = np.empty(0)
        return empty, np.empty(0, dtype=np.int64), empty
    return np.concatenate(times), np.concatenate(users).astype(np.int64), np.concatenate(sizes)
