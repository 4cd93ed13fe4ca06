"""Dirac-WGAN-GP toy dynamics.

Generator: a point mass at ``theta``. Critic: linear, D(x) = psi * x. Real
data: a point mass at ``xi`` that may jump during training. Gradient
descent on this two-parameter game shows how the penalty shapes the limit
behavior and how long the iterates take to settle after the target moves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .rng import substream

DWELL_STEPS = 100


class UpdateMode(str, Enum):
    ALTERNATING = "alternating"
    SIMULTANEOUS = "simultaneous"


def dirac_loss(theta: float, psi: float, xi: float) -> float:
    return psi * theta - xi * psi


def dirac_penalty(psi: float, lam: float) -> float:
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    return 0.5 * lam * (abs(psi) - 1.0) ** 2


def _sign(x: float) -> float:
    return 1.0 if x > 0 else (-1.0 if x < 0 else 0.0)


def vector_field(theta: float, psi: float, xi: float, lam: float) -> tuple[float, float]:
    """(v_theta, v_psi); sign(0) = 0 so (xi, 0) is an exact rest point."""
    return -psi, theta - xi + _sign(psi) * lam * (abs(psi) - 1.0)


@dataclass(frozen=True)
class DiracConfig:
    xi_schedule: tuple[tuple[int, float], ...]
    h: float = 0.01
    lam: float = 10.0
    steps: int = 1000
    theta0: float = 0.0
    psi0: float = 0.0
    update_mode: UpdateMode = UpdateMode.ALTERNATING
    disc_per_gen: int = 1  # critic updates per generator update (alternating mode)

    def __post_init__(self) -> None:
        sched = tuple((int(s), float(x)) for s, x in self.xi_schedule)
        object.__setattr__(self, "xi_schedule", sched)
        object.__setattr__(self, "update_mode", UpdateMode(self.update_mode))
        if not sched or sched[0][0] != 0:
            raise ValueError("xi_schedule must start with an entry at step 0")
        if any(b[0] <= a[0] for a, b in zip(sched, sched[1:])):
            raise ValueError("xi_schedule steps must be strictly increasing")
        if self.h <= 0:
            raise ValueError("h must be positive")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.steps < 1 or self.disc_per_gen < 1:
            raise ValueError("steps and disc_per_gen must be >= 1")


@dataclass
class DiracTrajectory:
    config: DiracConfig
    theta: np.ndarray  # [steps + 1]
    psi: np.ndarray
    xi: np.ndarray  # target in force when each point was produced
    events: list[tuple[int, float]] = field(default_factory=list)  # (step, xi change)

    @property
    def points(self) -> list[tuple[int, float, float]]:
        return [(k, float(t), float(p)) for k, (t, p) in enumerate(zip(self.theta, self.psi))]

    def __len__(self) -> int:
        return self.theta.size

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("step,theta,psi,xi\n")
            for k in range(self.theta.size):
                fh.write(f"{k},{float(self.theta[k])!r},{float(self.psi[k])!r},{float(self.xi[k])!r}\n")


def simulate(config: DiracConfig) -> DiracTrajectory:
    h, lam = config.h, config.lam
    n = config.steps
    theta = np.empty(n + 1)
    psi = np.empty(n + 1)
    xis = np.empty(n + 1)
    changes = dict(config.xi_schedule)
    xi = changes[0]
    t, p = float(config.theta0), float(config.psi0)
    theta[0], psi[0], xis[0] = t, p, xi
    events: list[tuple[int, float]] = []
    alternating = config.update_mode is UpdateMode.ALTERNATING
    for k in range(n):
        if k in changes and k > 0:
            events.append((k, changes[k] - xi))
            xi = changes[k]
        if alternating:
            for _ in range(config.disc_per_gen):
                p = p + h * vector_field(t, p, xi, lam)[1]
            t = t - h * p
        else:
            vt, vp = vector_field(t, p, xi, lam)
            t, p = t + h * vt, p + h * vp
        theta[k + 1], psi[k + 1], xis[k + 1] = t, p, xi
    return DiracTrajectory(config, theta, psi, xis, events)


def steps_to_reconverge(
    traj: DiracTrajectory, xi_new: float, band: float, dwell: int = DWELL_STEPS
) -> int | None:
    """Steps after the last target change until theta enters and then stays
    within ``xi_new ± band`` for ``dwell`` consecutive points.

    Returns ``None`` when that never happens within the trajectory.
    """
    cfg = traj.config
    if band <= cfg.h * cfg.lam / 2:
        raise ValueError("band must exceed h * lambda / 2")
    start = traj.events[-1][0] if traj.events else 0
    inside = np.abs(traj.theta[start:] - xi_new) <= band
    if inside.size < dwell:
        return None
    # run length of "inside" ending at each index, then first index whose run reaches dwell
    window = np.convolve(inside.astype(np.int64), np.ones(dwell, dtype=np.int64), mode="valid")
    hits = np.flatnonzero(window == dwell)
    return int(hits[0]) if hits.size else None


@dataclass(frozen=True)
class ReconvergenceSetup:
    """Protocol for the step-change experiment: settle at ``xi_old``, then jump by delta."""

    h: float = 0.0005
    lam: float = 0.1
    xi_old: float = 0.0
    settle_steps: int = 2000
    max_steps: int = 20000
    theta_jitter: float = 0.1
    psi_jitter: float = 0.05
    update_mode: UpdateMode = UpdateMode.ALTERNATING


def reconvergence_steps(delta: float, seed: int, band: float, setup: ReconvergenceSetup = ReconvergenceSetup()):
    """Steps to settle after a target jump of ``delta`` from a seeded start."""
    rng = substream(seed, "dirac/init")
    theta0 = setup.xi_old + rng.uniform(-setup.theta_jitter, setup.theta_jitter)
    psi0 = rng.uniform(-setup.psi_jitter, setup.psi_jitter)
    sched = ((0, setup.xi_old),) if delta == 0 else ((0, setup.xi_old), (setup.settle_steps, setup.xi_old + delta))
    cfg = DiracConfig(sched, setup.h, setup.lam, setup.settle_steps + setup.max_steps, theta0, psi0, setup.update_mode)
    traj = simulate(cfg)
    if delta == 0:
        # no change: measure from the point where the pre-change window ends
        cut = DiracTrajectory(cfg, traj.theta[setup.settle_steps:], traj.psi[setup.settle_steps:],
                              traj.xi[setup.settle_steps:])
        return steps_to_reconverge(cut, setup.xi_old, band)
    return steps_to_reconverge(traj, setup.xi_old + delta, band)


def oscillation_stats(traj: DiracTrajectory, tail: float = 0.5) -> dict:
    """Tail statistics of theta and psi increments (limit-cycle diagnostics)."""
    k0 = int(len(traj) * (1 - tail))
    th, ps = traj.theta[k0:], traj.psi[k0:]
    return {
        "mean_abs_dtheta": float(np.mean(np.abs(np.diff(th)))),
        "mean_abs_dpsi": float(np.mean(np.abs(np.diff(ps)))),
        "theta_min": float(th.min()),
        "theta_max": float(th.max()),
        "psi_min": float(ps.min()),
        "psi_max": float(ps.max()),
    }
