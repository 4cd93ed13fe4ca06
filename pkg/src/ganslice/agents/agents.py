"""Allocation agents: GAN-DDQN, dueling GAN-DDQN, DQN and static hard slicing."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..nets import (
    Discriminator,
    DiscriminatorConfig,
    DuelingGenerator,
    Generator,
    GeneratorConfig,
    Optimizer,
    OptimizerConfig,
    ParamSet,
    QNetwork,
    QNetworkConfig,
    clone_params,
    copy_into,
    no_grad,
)
from ..rng import substream
from . import losses
from .policy import ClippingRule, EpsilonSchedule, clip_reward, epsilon_greedy
from .replay import ReplayBuffer, TransitionTuple

ALGOS = ("gan_ddqn", "dueling", "dqn", "hard")
CONTEXT_MODES = ("none", "action", "state_action")
PRECISIONS = {"float32": np.float32, "float64": np.float64}


@dataclass(frozen=True)
class ClipConfig:
    c1: float = 6.1
    c2: float = 4.5
    eta: float = 1.0
    enabled: bool = True

    @property
    def rule(self) -> ClippingRule:
        return ClippingRule(self.c1, self.c2, self.eta)


@dataclass(frozen=True)
class AgentConfig:
    algo: str = "gan_ddqn"
    gamma: float = 0.9
    batch_size: int = 32
    train_every: int = 50
    target_sync: int = 200
    n_critic: int = 5
    lambda_gp: float = 0.1
    particles: int = 32
    buffer: int = 2000
    lr_g: float = 1e-4
    lr_d: float = 1e-4
    clip_norm: float | None = 10.0
    epsilon: EpsilonSchedule = field(default_factory=EpsilonSchedule)
    clip: ClipConfig = field(default_factory=ClipConfig)
    embed_width: int = 64
    hidden_widths: tuple[int, ...] = (128, 64)
    disc_widths: tuple[int, ...] = (64, 64)
    slope: float = 0.01
    cosine_features: int = 0
    disc_context: str = "state_action"
    precision: str = "float32"  # training dtype; checkpoints always store float64

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden_widths", tuple(self.hidden_widths))
        object.__setattr__(self, "disc_widths", tuple(self.disc_widths))
        if self.algo not in ALGOS:
            raise ValueError(f"algo must be one of {ALGOS}")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.batch_size < 1 or self.batch_size > self.buffer:
            raise ValueError("need 1 <= batch_size <= buffer")
        if self.n_critic < 1 or self.train_every < 1 or self.target_sync < 1 or self.particles < 1:
            raise ValueError("n_critic, train_every, target_sync and particles must be >= 1")
        if self.lambda_gp < 0:
            raise ValueError("lambda_gp must be >= 0")
        if self.disc_context not in CONTEXT_MODES:
            raise ValueError(f"disc_context must be one of {CONTEXT_MODES}")
        if self.precision not in PRECISIONS:
            raise ValueError(f"precision must be one of {tuple(PRECISIONS)}")

    @property
    def dtype(self):
        return PRECISIONS[self.precision]

    @classmethod
    def from_dict(cls, d: dict) -> "AgentConfig":
        d = dict(d)
        eps = d.pop("epsilon", None)
        clip = d.pop("clip", None)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown agent config keys: {sorted(unknown)}")
        cfg = cls(**d)
        if eps is not None:
            cfg = replace(cfg, epsilon=EpsilonSchedule(**eps))
        if clip is not None:
            cfg = replace(cfg, clip=ClipConfig(**clip))
        return cfg

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden_widths"] = list(self.hidden_widths)
        d["disc_widths"] = list(self.disc_widths)
        return d


class Agent:
    """Common ε-greedy interaction, reward shaping and replay storage."""

    algo = "base"

    def __init__(self, cfg: AgentConfig, n_state: int, n_actions: int, seed: int):
        self.cfg = cfg
        self.n_state = n_state
        self.n_actions = n_actions
        self.explore_rng = substream(seed, "agent/explore")
        self.batch_rng = substream(seed, "agent/minibatch")
        self.tau_rng = substream(seed, "agent/taus")
        self.interp_rng = substream(seed, "agent/gp_interp")
        self.init_rng = substream(seed, "agent/init")
        self.buffer = ReplayBuffer(cfg.buffer, n_state)
        self.iteration = 0

    # -- interaction ---------------------------------------------------------

    def q_values(self, state: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def select_action(self, state: np.ndarray, epsilon: float, rng: np.random.Generator | None = None) -> int:
        return epsilon_greedy(self.q_values(state), epsilon, rng or self.explore_rng)

    def shape_reward(self, utility: float) -> float:
        return clip_reward(utility, self.cfg.clip.rule) if self.cfg.clip.enabled else float(utility)

    def observe(self, state, action: int, reward: float, next_state) -> None:
        self.buffer.add(TransitionTuple(np.asarray(state), int(action), float(reward), np.asarray(next_state)))

    def train_step(self, iteration: int) -> tuple[float | None, float | None]:
        """Run whatever training the algorithm schedules at ``iteration``."""
        return None, None

    def target_sync(self, iteration: int) -> None:
        pass

    def param_groups(self) -> dict[str, ParamSet]:
        return {}

    def load_param_groups(self, groups: dict[str, ParamSet]) -> None:
        mine = self.param_groups()
        if set(groups) != set(mine):
            raise ValueError(f"checkpoint groups {sorted(groups)} != expected {sorted(mine)}")
        for k, ps in groups.items():
            copy_into(mine[k], ps)

    def _taus(self, batch: int) -> np.ndarray:
        return self.tau_rng.uniform(1e-6, 1.0 - 1e-6, size=(batch, self.cfg.particles))


class HardSlicingAgent(Agent):
    """Always returns the near-equal split."""

    algo = "hard"

    def __init__(self, cfg: AgentConfig, n_state: int, n_actions: int, seed: int, hard_index: int):
        super().__init__(replace(cfg, buffer=max(cfg.batch_size, 1)), n_state, n_actions, seed)
        self.hard_index = int(hard_index)

    def q_values(self, state) -> np.ndarray:
        q = np.zeros(self.n_actions)
        q[self.hard_index] = 1.0
        return q

    def select_action(self, state, epsilon: float, rng=None) -> int:
        return self.hard_index

    def observe(self, *args) -> None:
        pass


class _GanAgent(Agent):
    def _make_disc(self) -> None:
        c = self.cfg
        ctx = {"none": 0, "action": self.n_actions, "state_action": self.n_actions + self.n_state}[c.disc_context]
        self.disc = Discriminator(DiscriminatorConfig(c.disc_widths, c.slope, context_dim=ctx))
        self.d_params = self.disc.init_params(self.init_rng, self.cfg.dtype)
        self.d_opt = Optimizer(self.d_params, OptimizerConfig(lr=c.lr_d, clip_norm=c.clip_norm))

    def _gen_config(self) -> GeneratorConfig:
        c = self.cfg
        return GeneratorConfig(
            self.n_state, self.n_actions, c.embed_width, c.hidden_widths, c.slope, c.cosine_features
        )

    def _context(self, batch) -> np.ndarray | None:
        return losses._context(batch, self.cfg.particles, self.n_actions, self.cfg.disc_context)

    def target_sync(self, iteration: int) -> None:
        if iteration % self.cfg.target_sync == 0:
            copy_into(self.target, self.g_params)

    def param_groups(self) -> dict[str, ParamSet]:
        return {"gen": self.g_params, "target": self.target, "disc": self.d_params}


class GanDDQNAgent(_GanAgent):
    """Distributional DQN whose return particles are fitted with WGAN-GP."""

    algo = "gan_ddqn"

    def __init__(self, cfg: AgentConfig, n_state: int, n_actions: int, seed: int):
        super().__init__(cfg, n_state, n_actions, seed)
        self.gen = Generator(self._gen_config())
        self.g_params = self.gen.init_params(self.init_rng, self.cfg.dtype)
        self.target = clone_params(self.g_params)
        self.g_opt = Optimizer(self.g_params, OptimizerConfig(lr=cfg.lr_g, clip_norm=cfg.clip_norm))
        self._make_disc()

    def q_values(self, state) -> np.ndarray:
        return self.gen.q_values(self.g_params, np.asarray(state, dtype=float), self._taus(1)[0])

    def update_minibatch(self, batch) -> tuple[float, float]:
        c = self.cfg
        taus = self._taus(len(batch))
        interp = self.interp_rng.random((len(batch), 1))
        ctx = self._context(batch)
        y = losses.gan_ddqn_targets(self.gen, self.target, batch, taus, c.gamma)
        fake = losses.gan_ddqn_particles(self.gen, self.g_params, batch, taus)

        self.d_params.zero_grad()
        loss_d = losses.critic_loss(self.disc, self.d_params, fake.data, y, interp, c.lambda_gp, ctx)
        loss_d.backward()
        self.d_opt.step()

        self.g_params.zero_grad()
        loss_g = losses.generator_adversarial_loss(self.disc, self.d_params, fake, ctx)
        loss_g.backward()
        self.g_opt.step()
        self.d_params.zero_grad()
        return loss_d.item(), loss_g.item()

    def train_epoch(self) -> tuple[float, float]:
        if not self.buffer.full:
            raise RuntimeError("GAN-DDQN trains only on a full replay buffer")
        ld, lg = [], []
        for batch in self.buffer.epoch(self.cfg.batch_size, self.batch_rng):
            d, g = self.update_minibatch(batch)
            ld.append(d)
            lg.append(g)
        return float(np.mean(ld)), float(np.mean(lg))

    def train_step(self, iteration: int):
        if self.buffer.full and iteration % self.cfg.train_every == 0:
            return self.train_epoch()
        return None, None


class DuelingGanDDQNAgent(_GanAgent):
    """State-value particles fitted by WGAN-GP plus a TD-trained advantage head."""

    algo = "dueling"

    def __init__(self, cfg: AgentConfig, n_state: int, n_actions: int, seed: int):
        super().__init__(cfg, n_state, n_actions, seed)
        self.gen = DuelingGenerator(self._gen_config())
        self.g_params = self.gen.init_params(self.init_rng, self.cfg.dtype)
        self.target = clone_params(self.g_params)
        self.g_opt = Optimizer(self.g_params, OptimizerConfig(lr=cfg.lr_g, clip_norm=cfg.clip_norm))
        self._make_disc()
        self.d_updates = 0

    def _context(self, batch):
        # the critic sees state-value particles, which carry no action
        if self.cfg.disc_context == "state_action":
            return np.repeat(batch.states[:, None, :], self.cfg.particles, axis=1)
        return None

    def _make_disc(self) -> None:
        c = self.cfg
        ctx = self.n_state if c.disc_context == "state_action" else 0
        self.disc = Discriminator(DiscriminatorConfig(c.disc_widths, c.slope, context_dim=ctx))
        self.d_params = self.disc.init_params(self.init_rng, self.cfg.dtype)
        self.d_opt = Optimizer(self.d_params, OptimizerConfig(lr=c.lr_d, clip_norm=c.clip_norm))

    def q_values(self, state) -> np.ndarray:
        return self.gen.q_values(self.g_params, np.asarray(state, dtype=float), self._taus(1)[0])

    def critic_step(self, batch) -> float:
        c = self.cfg
        taus = self._taus(len(batch))
        interp = self.interp_rng.random((len(batch), 1))
        with no_grad():
            v, _ = self.gen.forward(self.g_params, batch.states, taus)
            v_next, _ = self.gen.forward(self.target, batch.next_states, taus)
        y = batch.rewards[:, None] + c.gamma * v_next.data
        self.d_params.zero_grad()
        loss = losses.critic_loss(self.disc, self.d_params, v.data, y, interp, c.lambda_gp, self._context(batch))
        loss.backward()
        self.d_opt.step()
        self.d_updates += 1
        return loss.item()

    def generator_step(self, batch) -> float:
        c = self.cfg
        taus = self._taus(len(batch))
        next_taus = self._taus(len(batch))
        self.g_params.zero_grad()
        v, adv = self.gen.forward(self.g_params, batch.states, taus)
        adv_loss = losses.generator_adversarial_loss(self.disc, self.d_params, v, self._context(batch))
        td = losses.dueling_td_loss(self.gen, self.g_params, self.target, batch, taus, next_taus, c.gamma, v, adv)
        loss = adv_loss + td
        loss.backward()
        self.g_opt.step()
        self.d_params.zero_grad()
        return loss.item()

    def train_step(self, iteration: int):
        m = self.cfg.batch_size
        if len(self.buffer) < m:
            return None, None
        ld = [self.critic_step(self.buffer.sample(m, self.batch_rng)) for _ in range(self.cfg.n_critic)]
        lg = self.generator_step(self.buffer.sample(m, self.batch_rng))
        return float(np.mean(ld)), lg


class DQNAgent(Agent):
    algo = "dqn"

    def __init__(self, cfg: AgentConfig, n_state: int, n_actions: int, seed: int):
        super().__init__(cfg, n_state, n_actions, seed)
        self.qnet = QNetwork(QNetworkConfig(n_state, n_actions, cfg.hidden_widths, cfg.slope))
        self.q_params = self.qnet.init_params(self.init_rng, self.cfg.dtype)
        self.target = clone_params(self.q_params)
        self.opt = Optimizer(self.q_params, OptimizerConfig(lr=cfg.lr_g, clip_norm=cfg.clip_norm))

    def q_values(self, state) -> np.ndarray:
        return self.qnet.q_values(self.q_params, np.asarray(state, dtype=float))

    def train_step(self, iteration: int):
        if len(self.buffer) < self.cfg.batch_size:
            return None, None
        batch = self.buffer.sample(self.cfg.batch_size, self.batch_rng)
        self.q_params.zero_grad()
        loss = losses.dqn_loss(self.qnet, self.q_params, self.target, batch, self.cfg.gamma)
        loss.backward()
        self.opt.step()
        return None, loss.item()

    def target_sync(self, iteration: int) -> None:
        if iteration % self.cfg.target_sync == 0:
            copy_into(self.target, self.q_params)

    def param_groups(self) -> dict[str, ParamSet]:
        return {"q": self.q_params, "target": self.target}


def make_agent(cfg: AgentConfig, n_state: int, n_actions: int, seed: int, hard_index: int = 0) -> Agent:
    if cfg.algo == "gan_ddqn":
        return GanDDQNAgent(cfg, n_state, n_actions, seed)
    if cfg.algo == "dueling":
        return DuelingGanDDQNAgent(cfg, n_state, n_actions, seed)
    if cfg.algo == "dqn":
        return DQNAgent(cfg, n_state, n_actions, seed)
    return HardSlicingAgent(cfg, n_state, n_actions, seed, hard_index)


def select_action(agent: Agent, state, epsilon: float, rng: np.random.Generator) -> int:
    return agent.select_action(state, epsilon, rng)


def target_sync(agent: Agent, iteration: int) -> None:
    agent.target_sync(iteration)
