"""Packet-level downlink simulator for one base station shared by several slices."""

from __future__ import annotations

import numpy as np

from ..rng import substream
from . import kernel as _kernel
from ._slots_py import DROP_CUR, FAIL_CUR, N_COUNTERS, OK_CUR, QUEUED_CUR
from .actions import Action, bandwidth_units, enumerate_actions, hard_slice_action
from .channel import ChannelParams, large_scale_gain, place_users
from .config import SliceSpec
from .metrics import Observation, SliceAccounting, StepMetrics, slice_ssr, system_utility
from .traffic import generate_arrivals

OBS_WARMUP_STEPS = 200
OBS_PERCENTILE = 99.0


class TrafficSource:
    """Per-slice renewal arrival processes with their own random streams."""

    def __init__(self, slices: list[SliceSpec], seed: int):
        self.slices = slices
        self.rngs = [substream(seed, f"traffic/{i}/{s.slice_id.value}") for i, s in enumerate(slices)]
        self.next_arrival = [np.zeros(s.user_count) for s in slices]
        for s, rng, nxt in zip(slices, self.rngs, self.next_arrival):
            nxt[:] = s.interarrival_model.sample(rng, s.user_count) * 1e-3

    def window(self, t_end: float):
        """Arrivals up to ``t_end`` as per-slice ``(times, local_users, bits)``."""
        return [
            generate_arrivals(nxt, t_end, s.interarrival_model, s.packet_size_model, rng)
            for s, rng, nxt in zip(self.slices, self.rngs, self.next_arrival)
        ]


class Environment:
    """One base station, ``len(slices)`` slices, round-robin within each slice.

    ``step(action)`` simulates ``slots_per_step`` scheduling slots under a fixed
    bandwidth split and returns the next observation (arrivals during the
    step) together with the step's SE / SSR / utility.
    """

    def __init__(
        self,
        slices: list[SliceSpec],
        channel: ChannelParams,
        total_bandwidth: float,
        resolution: float,
        alpha: float,
        slot_duration: float,
        slots_per_step: int,
        seed: int,
        obs_scale=None,
        backend: str | None = None,
        audit: bool = False,
        queue_capacity: int = 64,
    ):
        if not slices:
            raise ValueError("at least one slice is required")
        if slot_duration <= 0 or slots_per_step < 1:
            raise ValueError("slot_duration must be positive and slots_per_step >= 1")
        self.units = bandwidth_units(total_bandwidth, resolution)
        self.slices = list(slices)
        self.channel = channel
        self.total_bandwidth = float(total_bandwidth)
        self.resolution = float(resolution)
        self.alpha = float(alpha)
        self.slot_duration = float(slot_duration)
        self.slots_per_step = int(slots_per_step)
        self.seed = int(seed)
        self.audit = audit
        self._run_slots = _kernel.get_kernel(backend)

        self.actions: list[Action] = enumerate_actions(total_bandwidth, resolution, len(slices))
        self.n_slices = len(slices)
        self.beta = np.array([s.beta for s in slices])
        self.sla_rate = np.array([s.sla_rate for s in slices], dtype=float)
        self.sla_latency = np.array([s.sla_latency for s in slices], dtype=float)
        counts = [s.user_count for s in slices]
        self.slice_start = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self.n_users = int(self.slice_start[-1])

        self.distance = place_users(self.n_users, channel, substream(seed, "positions"))
        self.gain = large_scale_gain(self.distance, channel, substream(seed, "shadowing"))
        self._fading_rng = substream(seed, "fading")
        self._traffic = TrafficSource(self.slices, seed)

        cap = int(queue_capacity)
        u = self.n_users
        self._q_arr = np.zeros((u, cap))
        self._q_size = np.zeros((u, cap))
        self._q_rem = np.zeros((u, cap))
        self._q_dead = np.zeros((u, cap))
        self._q_rok = np.zeros((u, cap), dtype=np.int8)
        self._q_coh = np.zeros((u, cap), dtype=np.int64)
        self._q_head = np.zeros(u, dtype=np.int64)
        self._q_len = np.zeros(u, dtype=np.int64)
        self._rr_ptr = np.zeros(self.n_slices, dtype=np.int64)
        self._pending = (np.empty(0), np.empty(0, np.int64), np.empty(0), np.empty(0, np.int64))

        self.step_index = 0
        self._obs_scale = None if obs_scale is None else np.asarray(obs_scale, dtype=float)
        self.last_observation = Observation(np.zeros(self.n_slices, dtype=np.int64), np.zeros(self.n_slices))

    # -- observation scaling -------------------------------------------------

    @property
    def obs_scale(self) -> np.ndarray:
        """Per-slice divisor for arrival counts.

        99th percentile of per-step arrivals over a warm-up of the same seed.
        Arrivals do not depend on the bandwidth split, so the warm-up only
        needs the traffic generator (equivalent to running hard slicing).
        """
        if self._obs_scale is None:
            src = TrafficSource(self.slices, self.seed)
            step = self.slots_per_step * self.slot_duration
            rows = []
            for k in range(OBS_WARMUP_STEPS):
                rows.append([w[0].size for w in src.window((k + 1) * step)])
            self._obs_scale = np.maximum(np.percentile(np.asarray(rows, dtype=float), OBS_PERCENTILE, axis=0), 1.0)
        return self._obs_scale

    def normalize(self, counts) -> np.ndarray:
        return np.minimum(np.asarray(counts, dtype=float) / self.obs_scale, 1.0)

    # -- actions ---------------------------------------------------------------

    @property
    def hard_action(self) -> Action:
        return hard_slice_action(self.n_slices, self.total_bandwidth, self.resolution)

    def _resolve(self, action) -> Action:
        if isinstance(action, (int, np.integer)):
            if not 0 <= action < len(self.actions):
                raise ValueError(f"action index {action} outside table of {len(self.actions)}")
            return self.actions[int(action)]
        if not isinstance(action, Action) or action.index >= len(self.actions) or self.actions[action.index] != action:
            raise ValueError(f"{action!r} is not in this environment's action table")
        return action

    # -- queue storage -----------------------------------------------------------

    def _ensure_capacity(self, need: int) -> None:
        cap = self._q_arr.shape[1]
        if need <= cap:
            return
        new_cap = max(need, 2 * cap)
        order = (self._q_head[:, None] + np.arange(cap)[None, :]) % cap
        rows = np.arange(self.n_users)[:, None]
        for name in ("_q_arr", "_q_size", "_q_rem", "_q_dead", "_q_rok", "_q_coh"):
            old = getattr(self, name)
            new = np.zeros((self.n_users, new_cap), dtype=old.dtype)
            new[:, :cap] = old[rows, order]
            setattr(self, name, new)
        self._q_head[:] = 0

    # -- stepping ------------------------------------------------------------------

    def step(self, action) -> tuple[Observation, StepMetrics]:
        act = self._resolve(action)
        alloc = act.allocation
        assert abs(alloc.sum() - self.total_bandwidth) <= 1e-6 * self.total_bandwidth
        assert np.all(alloc >= self.resolution * (1 - 1e-12))

        S = self.slots_per_step
        t0 = self.step_index * S * self.slot_duration
        t_end = (self.step_index + 1) * S * self.slot_duration
        cohort = self.step_index

        per_slice = self._traffic.window(t_end)
        arrived = np.array([w[0].size for w in per_slice], dtype=np.int64)
        times = np.concatenate([self._pending[0]] + [w[0] for w in per_slice])
        users = np.concatenate(
            [self._pending[1]] + [w[1] + self.slice_start[n] for n, w in enumerate(per_slice)]
        ).astype(np.int64)
        sizes = np.concatenate([self._pending[2]] + [w[2] for w in per_slice])
        cohorts = np.concatenate([self._pending[3], np.full(int(arrived.sum()), cohort, dtype=np.int64)])
        order = np.lexsort((users, times))
        times, users, sizes, cohorts = (
            np.ascontiguousarray(times[order]),
            np.ascontiguousarray(users[order]),
            np.ascontiguousarray(sizes[order]),
            np.ascontiguousarray(cohorts[order]),
        )
        if users.size:
            self._ensure_capacity(int(np.max(self._q_len + np.bincount(users, minlength=self.n_users))))

        if self.channel.rayleigh:
            fading = self._fading_rng.standard_exponential((S, self.n_users))
        else:
            fading = np.ones((S, self.n_users))

        counters = np.zeros((self.n_slices, N_COUNTERS), dtype=np.int64)
        delivered = np.zeros(self.n_slices)
        dropped = np.zeros(self.n_slices, dtype=np.int64)
        n_audit_cap = int(self._q_len.sum() + users.size) if self.audit else 0
        audit_i = np.zeros((n_audit_cap, 2), dtype=np.int64)
        audit_f = np.zeros((n_audit_cap, 4))

        a_pos, se, n_audit = self._run_slots(
            self._q_arr, self._q_size, self._q_rem, self._q_dead, self._q_rok, self._q_coh,
            self._q_head, self._q_len, self._rr_ptr, self.slice_start, self.gain,
            self.sla_rate, self.sla_latency, np.ascontiguousarray(alloc),
            times, users, sizes, cohorts, 0,
            fading, float(t0), self.slot_duration, float(self.channel.tx_power),
            float(self.channel.noise_psd), self.total_bandwidth, int(cohort),
            counters, delivered, dropped, audit_i, audit_f,
        )

        self._pending = (times[a_pos:], users[a_pos:], sizes[a_pos:], cohorts[a_pos:])
        slice_of = np.searchsorted(self.slice_start, self._pending[1], side="right") - 1
        pending_cur = np.bincount(slice_of[self._pending[3] == cohort], minlength=self.n_slices)

        acct = SliceAccounting(
            arrived=arrived,
            delivered_ok=counters[:, OK_CUR].copy(),
            failed=counters[:, FAIL_CUR].copy(),
            dropped=counters[:, DROP_CUR].copy(),
            queued=counters[:, QUEUED_CUR] + pending_cur,
        )
        ssr = np.array([slice_ssr(int(o), int(a)) for o, a in zip(acct.delivered_ok, acct.arrived)])
        utility = system_utility(se, ssr, self.alpha, self.beta)
        audit = {}
        if self.audit:
            audit = {
                "user": audit_i[:n_audit, 0].copy(),
                "outcome": audit_i[:n_audit, 1].copy(),
                "arrival": audit_f[:n_audit, 0].copy(),
                "finish": audit_f[:n_audit, 1].copy(),
                "deadline": audit_f[:n_audit, 2].copy(),
                "rate_ok": audit_f[:n_audit, 3].copy(),
            }
        metrics = StepMetrics(
            se=float(se), ssr=ssr, utility=utility, delivered_bits=float(delivered.sum()),
            dropped_packets=dropped, accounting=acct, audit=audit,
        )
        obs = Observation(arrived, self.normalize(arrived))
        self.last_observation = obs
        self.step_index += 1
        return obs, metrics


def build_env(
    slices: list[SliceSpec],
    channel: ChannelParams,
    total_bandwidth: float,
    resolution: float,
    alpha: float,
    slot_duration: float,
    slots_per_step: int,
    seed: int,
    **kwargs,
) -> Environment:
    return Environment(
        slices, channel, total_bandwidth, resolution, alpha, slot_duration, slots_per_step, seed, **kwargs
    )
