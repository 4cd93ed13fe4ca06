"""Downlink channel: log-distance path loss, lognormal shadowing, Rayleigh fading."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np


def dbm_per_hz_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


@dataclass(frozen=True)
class ChannelParams:
    cell_radius: float = 40.0  # m
    pathloss_exponent: float = 3.0
    pathloss_ref_db: float = 30.0  # dB at 1 m
    shadowing_sigma_db: float = 8.0
    tx_power: float = 0.1  # W per scheduled user
    noise_psd: float = dbm_per_hz_to_watts(-174.0)  # W/Hz, single-sided
    rayleigh: bool = True
    min_distance: float = 1.0  # m; keeps the log-distance model finite

    def __post_init__(self) -> None:
        if self.noise_psd <= 0 or self.tx_power <= 0 or self.cell_radius <= 0:
            raise ValueError("noise_psd, tx_power and cell_radius must be positive")
        if self.shadowing_sigma_db < 0:
            raise ValueError("shadowing_sigma_db must be non-negative")

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelParams":
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def pathloss_db(distance: np.ndarray, params: ChannelParams) -> np.ndarray:
    d = np.maximum(distance, params.min_distance)
    return params.pathloss_ref_db + 10.0 * params.pathloss_exponent * np.log10(d)


def place_users(n_users: int, params: ChannelParams, rng: np.random.Generator) -> np.ndarray:
    """Distances of users dropped uniformly over the cell disk."""
    return params.cell_radius * np.sqrt(rng.random(n_users))


def large_scale_gain(distance: np.ndarray, params: ChannelParams, rng: np.random.Generator) -> np.ndarray:
    """Linear gain combining path loss and one shadowing draw per user."""
    shadow = rng.normal(0.0, params.shadowing_sigma_db, size=np.shape(distance))
    return 10.0 ** (-(pathloss_db(distance, params) + shadow) / 10.0)


def snr(gain: float, tx_power: float, noise_psd: float, bandwidth: float) -> float:
    """g * P / (N0 * w); ``gain`` already includes the per-slot fading factor."""
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    return gain * tx_power / (noise_psd * bandwidth)


def link_rate(bandwidth: float, snr_value: float) -> float:
    """Shannon rate in bit/s."""
    if bandwidth == 0:
        return 0.0
    return bandwidth * math.log2(1.0 + snr_value)
