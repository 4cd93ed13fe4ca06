"""Discrete bandwidth-split action table."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np


@dataclass(frozen=True)
class Action:
    index: int
    units: tuple[int, ...]
    resolution: float

    @property
    def allocation(self) -> np.ndarray:
        """Bandwidth per slice in Hz."""
        return np.asarray(self.units, dtype=float) * self.resolution


def bandwidth_units(total_bandwidth: float, resolution: float) -> int:
    if resolution <= 0 or total_bandwidth <= 0:
        raise ValueError("bandwidth and resolution must be positive")
    units = round(total_bandwidth / resolution)
    if units < 1 or abs(units * resolution - total_bandwidth) > 1e-9 * total_bandwidth:
        raise ValueError(f"total bandwidth {total_bandwidth} is not a multiple of resolution {resolution}")
    return units


def compositions(units: int, parts: int) -> list[tuple[int, ...]]:
    """Positive compositions of ``units`` into ``parts`` in lexicographic order."""
    if parts < 1:
        raise ValueError("need at least one part")
    if units < parts:
        raise ValueError(f"{units} units cannot be split into {parts} positive parts")
    out = []
    # stars and bars: bar positions among the units - 1 gaps
    for bars in combinations(range(1, units), parts - 1):
        edges = (0, *bars, units)
        out.append(tuple(edges[i + 1] - edges[i] for i in range(parts)))
    return out


def enumerate_actions(total_bandwidth: float, resolution: float, n_slices: int) -> list[Action]:
    units = bandwidth_units(total_bandwidth, resolution)
    return [Action(i, c, resolution) for i, c in enumerate(compositions(units, n_slices))]


def nearest_equal_split(units: int, n_slices: int) -> tuple[int, ...]:
    """Near-equal split; leftover units go to the earliest slices."""
    if units < n_slices:
        raise ValueError("not enough units for a positive split")
    base, extra = divmod(units, n_slices)
    return tuple(base + 1 if i < extra else base for i in range(n_slices))


def hard_slice_action(n_slices: int, total_bandwidth: float, resolution: float) -> Action:
    units = bandwidth_units(total_bandwidth, resolution)
    split = nearest_equal_split(units, n_slices)
    for action in enumerate_actions(total_bandwidth, resolution, n_slices):
        if action.units == split:
            return action
    raise AssertionError("equal split missing from the action table")
