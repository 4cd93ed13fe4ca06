"""Base-station slicing simulator."""

from .actions import Action, bandwidth_units, compositions, enumerate_actions, hard_slice_action
from .channel import ChannelParams, link_rate, snr
from .config import SliceId, SliceSpec, default_env_config, default_slices, env_from_config, load_env_config
from .metrics import Observation, SliceAccounting, StepMetrics, slice_ssr, spectrum_efficiency, system_utility
from .simulator import Environment, build_env
from .traffic import TrafficDistribution, TrafficKind, sample_traffic

__all__ = [
    "Action", "ChannelParams", "Environment", "Observation", "SliceAccounting", "SliceId", "SliceSpec",
    "StepMetrics", "TrafficDistribution", "TrafficKind", "bandwidth_units", "build_env", "compositions",
    "default_env_config", "default_slices", "enumerate_actions", "env_from_config", "hard_slice_action",
    "link_rate", "load_env_config", "sample_traffic", "slice_ssr", "snr", "spectrum_efficiency",
    "system_utility",
]
