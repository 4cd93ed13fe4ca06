"""Slice specifications and the environment JSON document."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .traffic import TrafficDistribution, TrafficKind


class SliceId(str, Enum):
    VOLTE = "VoLTE"
    VIDEO = "Video"
    URLLC = "URLLC"


@dataclass(frozen=True)
class SliceSpec:
    slice_id: SliceId
    user_count: int
    interarrival_model: TrafficDistribution  # ms
    packet_size_model: TrafficDistribution  # bytes
    sla_rate: float  # bit/s
    sla_latency: float  # s
    beta: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "slice_id", SliceId(self.slice_id))
        if self.user_count < 1:
            raise ValueError(f"{self.slice_id.value}: user_count must be >= 1")
        if self.sla_rate <= 0 or self.sla_latency <= 0:
            raise ValueError(f"{self.slice_id.value}: SLA rate and latency must be positive")
        if self.beta < 0:
            raise ValueError(f"{self.slice_id.value}: beta must be non-negative")

    @classmethod
    def from_dict(cls, d: dict) -> "SliceSpec":
        return cls(
            slice_id=SliceId(d["id"]),
            user_count=int(d["users"]),
            interarrival_model=TrafficDistribution.from_dict(d["interarrival"]),
            packet_size_model=TrafficDistribution.from_dict(d["packet_size"]),
            sla_rate=float(d["sla_rate_bps"]),
            sla_latency=float(d["sla_latency_ms"]) * 1e-3,
            beta=float(d.get("beta", 1.0)),
        )

    def to_dict(self) -> dict:
        return {
            "id": self.slice_id.value,
            "users": self.user_count,
            "interarrival": self.interarrival_model.to_dict(),
            "packet_size": self.packet_size_model.to_dict(),
            "sla_rate_bps": self.sla_rate,
            "sla_latency_ms": self.sla_latency * 1e3,
            "beta": self.beta,
        }


URLLC_SMALL_BYTES = [6.4e3, 12.8e3, 19.2e3, 25.6e3, 32e3]
URLLC_LARGE_BYTES = [0.3e6, 0.4e6, 0.5e6, 0.6e6, 0.7e6]


def default_slices(urllc: str = "small", beta=(1.0, 1.0, 1.0)) -> list[SliceSpec]:
    """The three-slice traffic mix (46 VoLTE, 46 video, 8 URLLC users)."""
    if urllc not in ("small", "large"):
        raise ValueError("urllc regime must be 'small' or 'large'")
    sizes = URLLC_SMALL_BYTES if urllc == "small" else URLLC_LARGE_BYTES
    return [
        SliceSpec(
            SliceId.VOLTE, 46,
            TrafficDistribution(TrafficKind.UNIFORM, (0.0, 160.0)),
            TrafficDistribution(TrafficKind.CONSTANT, (40.0,)),
            sla_rate=51e3, sla_latency=10e-3, beta=beta[0],
        ),
        SliceSpec(
            SliceId.VIDEO, 46,
            TrafficDistribution(TrafficKind.TRUNCATED_PARETO, (1.2, 6.0, 12.5)),
            TrafficDistribution(TrafficKind.TRUNCATED_PARETO, (1.2, 100.0, 250.0)),
            sla_rate=100e6, sla_latency=10e-3, beta=beta[1],
        ),
        SliceSpec(
            SliceId.URLLC, 8,
            TrafficDistribution(TrafficKind.TRUNCATED_EXPONENTIAL, (180.0,)),
            TrafficDistribution(TrafficKind.DISCRETE_UNIFORM_SET, tuple(sizes)),
            sla_rate=10e6, sla_latency=1e-3, beta=beta[2],
        ),
    ]


def default_env_config(
    resolution_hz: float = 1e6,
    urllc: str = "small",
    seed: int = 0,
    slots_per_step: int = 2000,
    beta=(1.0, 1.0, 1.0),
) -> dict:
    from .channel import ChannelParams

    return {
        "total_bandwidth_hz": 10e6,
        "resolution_hz": resolution_hz,
        "alpha": 0.01,
        "slot_ms": 0.5,
        "slots_per_step": slots_per_step,
        "seed": seed,
        "channel": ChannelParams().to_dict(),
        "slices": [s.to_dict() for s in default_slices(urllc, beta)],
    }


def load_env_config(path: str | Path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def env_from_config(cfg: dict, **overrides):
    """Build an :class:`Environment` from the JSON document."""
    from .channel import ChannelParams
    from .simulator import build_env

    cfg = copy.deepcopy(cfg)
    return build_env(
        slices=[SliceSpec.from_dict(s) for s in cfg["slices"]],
        channel=ChannelParams.from_dict(cfg.get("channel", {})),
        total_bandwidth=float(cfg["total_bandwidth_hz"]),
        resolution=float(cfg["resolution_hz"]),
        alpha=float(cfg["alpha"]),
        slot_duration=float(cfg["slot_ms"]) * 1e-3,
        slots_per_step=int(cfg["slots_per_step"]),
        seed=int(cfg["seed"]),
        obs_scale=cfg.get("obs_scale"),
        **overrides,
    )
