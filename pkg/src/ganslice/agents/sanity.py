"""WGAN-GP fit of a single-state generator to a fixed target distribution.

A stationary target strips away bootstrapping and exploration, leaving
only the adversarial game between particle generator and critic. This is
the smallest setting in which a broken loss, penalty or optimizer shows up.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.stats import wasserstein_distance

from ..nets import (
    Discriminator,
    DiscriminatorConfig,
    Generator,
    GeneratorConfig,
    Optimizer,
    OptimizerConfig,
    clone_params,
    no_grad,
)
from ..rng import substream
from . import losses

Sampler = Callable[[np.random.Generator, tuple[int, ...]], np.ndarray]


@dataclass(frozen=True)
class StationaryFitConfig:
    updates: int = 5000
    batch: int = 16
    particles: int = 32
    n_critic: int = 1
    # a one-dimensional critic must pass through zero slope to reverse its
    # sign; a large penalty makes that crossing too costly and the generator
    # overshoots the target by many standard deviations
    lambda_gp: float = 0.1
    lr_g: float = 3e-4
    lr_d: float = 1e-3
    beta1: float = 0.0
    beta2: float = 0.9
    lr_decay: bool = True  # generator lr falls linearly to zero
    ema: float = 0.999  # Polyak averaging of generator weights; 0 evaluates the raw generator
    embed_width: int = 16
    hidden_widths: tuple[int, ...] = (32, 16)
    disc_widths: tuple[int, ...] = (32, 32)
    eval_every: int = 250
    eval_particles: int = 2000
    eval_targets: int = 20000

    def __post_init__(self) -> None:
        if min(self.updates, self.batch, self.particles, self.n_critic, self.eval_every) < 1:
            raise ValueError("counts must be >= 1")


@dataclass
class StationaryFit:
    particles: np.ndarray
    w1_history: list[tuple[int, float]] = field(default_factory=list)

    @property
    def final_w1(self) -> float:
        return self.w1_history[-1][1]

    def first_below(self, threshold: float) -> int | None:
        return next((k for k, w in self.w1_history if w < threshold), None)


def constant_sampler(value: float) -> Sampler:
    return lambda rng, shape: np.full(shape, float(value))


def normal_sampler(mean: float = 0.0, std: float = 1.0) -> Sampler:
    return lambda rng, shape: rng.normal(mean, std, size=shape)


def fit_stationary(target: Sampler, cfg: StationaryFitConfig = StationaryFitConfig(), seed: int = 0) -> StationaryFit:
    """Train generator and critic against ``target``; track empirical W1."""
    init_rng = substream(seed, "sanity/init")
    rng = substream(seed, "sanity/train")
    eval_rng = substream(seed, "sanity/eval")
    gen = Generator(GeneratorConfig(1, 1, cfg.embed_width, cfg.hidden_widths))
    disc = Discriminator(DiscriminatorConfig(cfg.disc_widths))
    gp, dp = gen.init_params(init_rng), disc.init_params(init_rng)
    g_cfg = OptimizerConfig(lr=cfg.lr_g, beta1=cfg.beta1, beta2=cfg.beta2)
    g_opt = Optimizer(gp, g_cfg)
    d_opt = Optimizer(dp, OptimizerConfig(lr=cfg.lr_d, beta1=cfg.beta1, beta2=cfg.beta2))
    avg = clone_params(gp)
    states = np.zeros((cfg.batch, 1))
    actions = np.zeros(cfg.batch, dtype=np.int64)
    shape = (cfg.batch, cfg.particles)
    reference = target(eval_rng, (cfg.eval_targets,))
    eval_taus = eval_rng.uniform(1e-6, 1 - 1e-6, cfg.eval_particles)

    def taus():
        return rng.uniform(1e-6, 1 - 1e-6, shape)

    result = StationaryFit(np.empty(0))
    for k in range(cfg.updates):
        if cfg.lr_decay:
            g_opt.config = replace(g_cfg, lr=cfg.lr_g * (1 - k / cfg.updates))
        for _ in range(cfg.n_critic):
            with no_grad():
                fake = gen.forward(gp, states, taus()).gather_rows(actions).data
            dp.zero_grad()
            losses.critic_loss(disc, dp, fake, target(rng, shape), rng.random((cfg.batch, 1)), cfg.lambda_gp).backward()
            d_opt.step()
        gp.zero_grad()
        fake = gen.forward(gp, states, taus()).gather_rows(actions)
        losses.generator_adversarial_loss(disc, dp, fake).backward()
        g_opt.step()
        if cfg.ema > 0:
            for name in gp.names():
                a = avg[name].data
                a *= cfg.ema
                a += (1 - cfg.ema) * gp[name].data
        if (k + 1) % cfg.eval_every == 0 or k + 1 == cfg.updates:
            with no_grad():
                result.particles = gen.forward(avg if cfg.ema > 0 else gp, np.zeros(1), eval_taus).data.ravel()
            result.w1_history.append((k + 1, float(wasserstein_distance(result.particles, reference))))
    return result
