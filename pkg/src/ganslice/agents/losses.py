"""Loss graphs for the three learning agents.

Every function here is pure given its inputs (including the random quantile
samples and interpolation weights), so the same call can be replayed inside a
finite-difference check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nets import Discriminator, DuelingGenerator, Generator, ParamSet, QNetwork, Tensor, as_tensor, gradient_penalty, no_grad
from .replay import Batch


def bellman_target_particles(reward, gamma: float, target_particles: np.ndarray) -> np.ndarray:
    """y = r + gamma * G_hat^{(a*)} with a* the action of largest mean particle.

    ``target_particles`` is [A, N] for one transition or [B, A, N] for a batch.
    """
    z = np.asarray(target_particles, dtype=np.float64)
    r = np.asarray(reward, dtype=np.float64)
    if not np.all(np.isfinite(r)):
        raise ValueError("reward must be finite")
    best = np.argmax(z.mean(axis=-1), axis=-1)
    if z.ndim == 2:
        return r + gamma * z[best]
    chosen = z[np.arange(z.shape[0]), best]
    return r[:, None] + gamma * chosen


def _context(batch: Batch, n: int, n_actions: int, mode: str) -> np.ndarray | None:
    """Per-particle conditioning features for the critic (``mode`` != "none")."""
    if mode == "none":
        return None
    parts = []
    if mode == "state_action":
        parts.append(batch.states)
    parts.append(np.eye(n_actions)[batch.actions])
    c = np.concatenate(parts, axis=1)
    return np.repeat(c[:, None, :], n, axis=1)


@dataclass
class GanInputs:
    """Random draws consumed by one GAN minibatch update."""

    taus: np.ndarray  # [B, N]
    interp: np.ndarray  # [B, 1] interpolation weights in (0, 1)


def gan_ddqn_particles(gen: Generator, params: ParamSet, batch: Batch, taus: np.ndarray) -> Tensor:
    """Online particles of the taken actions, [B, N]."""
    return gen.forward(params, batch.states, taus).gather_rows(batch.actions)


def gan_ddqn_targets(
    gen: Generator, target: ParamSet, batch: Batch, taus: np.ndarray, gamma: float
) -> np.ndarray:
    with no_grad():
        z = gen.forward(target, batch.next_states, taus).data
    return bellman_target_particles(batch.rewards, gamma, z)


def critic_loss(
    disc: Discriminator, dparams: ParamSet, fake: np.ndarray, real: np.ndarray, interp: np.ndarray,
    lambda_gp: float, context=None,
) -> Tensor:
    """E[D(fake)] - E[D(real)] + lambda * E[(|D'(x_hat)| - 1)^2]."""
    x_hat = interp * real + (1.0 - interp) * fake
    loss = disc.forward(dparams, fake, context).mean() - disc.forward(dparams, real, context).mean()
    if lambda_gp > 0:
        loss = loss + gradient_penalty(disc, dparams, x_hat, lambda_gp, context)
    return loss


def generator_adversarial_loss(disc: Discriminator, dparams: ParamSet, fake: Tensor, context=None) -> Tensor:
    return -disc.forward(dparams, fake, context).mean()


def dueling_td_target(
    gen: DuelingGenerator, params: ParamSet, target: ParamSet, batch: Batch, next_taus: np.ndarray, gamma: float
) -> np.ndarray:
    """Q_hat = r + gamma * mean G_hat_v(s') + gamma * max_a G_ad(s') (online advantages)."""
    with no_grad():
        v_next, _ = gen.forward(target, batch.next_states, next_taus)
        _, adv_next = gen.forward(params, batch.next_states, next_taus)
    return batch.rewards + gamma * v_next.data.mean(axis=1) + gamma * adv_next.data.max(axis=1)


def dueling_td_loss(
    gen: DuelingGenerator, params: ParamSet, target: ParamSet, batch: Batch, taus: np.ndarray,
    next_taus: np.ndarray, gamma: float, v: Tensor | None = None, adv: Tensor | None = None,
    q_hat: np.ndarray | None = None,
) -> Tensor:
    """0.5 * mean (Q_hat - Q)^2 with Q = mean G_v(s) + G_ad^{(a)}(s).

    Q_hat is a constant of the graph (semi-gradient); pass it precomputed to
    hold it fixed while ``params`` are perturbed.
    """
    if v is None or adv is None:
        v, adv = gen.forward(params, batch.states, taus)
    q = v.mean(axis=1) + adv.gather_rows(batch.actions)
    if q_hat is None:
        q_hat = dueling_td_target(gen, params, target, batch, next_taus, gamma)
    return (as_tensor(q_hat, q) - q).square().mean() * 0.5


def dqn_loss(qnet: QNetwork, params: ParamSet, target: ParamSet, batch: Batch, gamma: float) -> Tensor:
    """Mean squared TD error against the target network's greedy value."""
    q = qnet.forward(params, batch.states).gather_rows(batch.actions)
    y = batch.rewards + gamma * qnet.q_values(target, batch.next_states).max(axis=1)
    return (as_tensor(y, q) - q).square().mean()
