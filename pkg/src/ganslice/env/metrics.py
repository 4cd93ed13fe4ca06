"""Per-step quality metrics: spectrum efficiency, SLA satisfaction, utility."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def spectrum_efficiency(slot_rate_sums, total_bandwidth: float) -> float:
    """Time average over slots of (sum of active users' link rates) / W.

    ``slot_rate_sums`` holds one aggregate rate (bit/s) per slot.
    """
    sums = np.asarray(slot_rate_sums, dtype=float)
    if sums.size == 0:
        return 0.0
    return float(np.mean(sums / total_bandwidth))


def slice_ssr(delivered_ok: int, total_arrived: int) -> float:
    if delivered_ok < 0 or total_arrived < 0:
        raise ValueError("packet counts must be non-negative")
    if delivered_ok > total_arrived:
        raise ValueError(f"delivered_ok={delivered_ok} exceeds total_arrived={total_arrived}")
    if total_arrived == 0:
        return 1.0
    return delivered_ok / total_arrived


def system_utility(se: float, ssr, alpha: float, beta) -> float:
    ssr = np.asarray(ssr, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if ssr.shape != beta.shape:
        raise ValueError(f"ssr has {ssr.size} entries but beta has {beta.size}")
    return float(alpha * se + np.dot(beta, ssr))


@dataclass
class Observation:
    arrived_packets: np.ndarray
    normalized: np.ndarray


@dataclass
class SliceAccounting:
    """Fate of the packets that arrived in one step, per slice.

    ``arrived == delivered_ok + failed + dropped + queued`` holds per slice.
    ``failed`` are deliveries that missed the deadline or the rate SLA.
    """

    arrived: np.ndarray
    delivered_ok: np.ndarray
    failed: np.ndarray
    dropped: np.ndarray
    queued: np.ndarray


@dataclass
class StepMetrics:
    se: float
    ssr: np.ndarray
    utility: float
    delivered_bits: float
    dropped_packets: np.ndarray  # all drops during the step, any cohort
    accounting: SliceAccounting
    audit: dict = field(default_factory=dict)
