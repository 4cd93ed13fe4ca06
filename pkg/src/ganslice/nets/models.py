"""Generator, dueling generator, discriminator and Q-network architectures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, as_tensor, leaky_relu_slope, no_grad
from .params import Activation, Init, MlpSpec, ParamSet


@dataclass(frozen=True)
class GeneratorConfig:
    n_state: int
    n_actions: int
    embed_width: int = 64
    hidden_widths: tuple[int, ...] = (128, 64)
    slope: float = 0.01
    cosine_features: int = 0  # 0 feeds raw tau to the sample branch
    init: Init = Init.UNIFORM_FAN_IN

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden_widths", tuple(self.hidden_widths))
        if self.n_state < 1 or self.n_actions < 1 or self.embed_width < 1:
            raise ValueError("generator widths must be positive")
        if self.cosine_features < 0:
            raise ValueError("cosine_features must be >= 0")

    def branch(self, prefix: str, n_in: int) -> MlpSpec:
        w = self.embed_width
        return MlpSpec((n_in, w, w), Activation.LEAKY_RELU, self.slope, self.init, True, prefix)


def _as_batch(state, taus, dtype=np.float64) -> tuple[Tensor, np.ndarray, bool]:
    s = np.asarray(state.data if isinstance(state, Tensor) else state, dtype=dtype)
    t = np.asarray(taus, dtype=dtype)
    single = s.ndim == 1
    if single:
        s = s[None, :]
    if t.ndim == 1:
        t = np.broadcast_to(t, (s.shape[0], t.size))
    if t.shape[0] != s.shape[0]:
        raise ValueError(f"taus batch {t.shape[0]} != state batch {s.shape[0]}")
    if np.any(t <= 0.0) or np.any(t >= 1.0):
        raise ValueError("quantile samples must lie in (0, 1)")
    return Tensor(s), t, single


class _Embedding:
    """State branch and quantile-sample branch fused by a Hadamard product."""

    cfg: GeneratorConfig

    def _specs(self) -> tuple[MlpSpec, MlpSpec]:
        tau_in = self.cfg.cosine_features or 1
        return self.cfg.branch("state.", self.cfg.n_state), self.cfg.branch("tau.", tau_in)

    def tau_features(self, taus: np.ndarray) -> Tensor:
        k = self.cfg.cosine_features
        if k == 0:
            return Tensor(taus[..., None])
        i = np.arange(1, k + 1, dtype=taus.dtype)
        return Tensor(np.cos(np.pi * taus[..., None] * i))

    def embed(self, params: ParamSet, state, taus) -> tuple[Tensor, bool]:
        s, t, single = _as_batch(state, taus, params.dtype)
        state_spec, tau_spec = self._specs()
        phi_s = state_spec.forward(params, s)  # [B, E]
        phi_t = tau_spec.forward(params, self.tau_features(t))  # [B, N, E]
        return phi_s.reshape(s.shape[0], 1, -1) * phi_t, single


class Generator(_Embedding):
    """Maps (state, taus) to one particle per (action, tau): shape [B, A, N]."""

    def __init__(self, cfg: GeneratorConfig):
        self.cfg = cfg
        self.head = MlpSpec(
            (cfg.embed_width, *cfg.hidden_widths, cfg.n_actions),
            Activation.LEAKY_RELU, cfg.slope, cfg.init, False, "particle.",
        )

    def init_params(self, rng: np.random.Generator, dtype=np.float64) -> ParamSet:
        params = ParamSet(dtype=dtype)
        for spec in (*self._specs(), self.head):
            spec.init_into(params, rng)
        return params

    def forward(self, params: ParamSet, state, taus) -> Tensor:
        fused, single = self.embed(params, state, taus)
        out = self.head.forward(params, fused).transpose(0, 2, 1)  # [B, A, N]
        return out.reshape(*out.shape[1:]) if single else out

    def q_values(self, params: ParamSet, state, taus) -> np.ndarray:
        with no_grad():
            return self.forward(params, state, taus).data.mean(axis=-1)


class DuelingGenerator(_Embedding):
    """Returns state-value particles [B, N] and tau-independent advantages [B, A]."""

    def __init__(self, cfg: GeneratorConfig):
        self.cfg = cfg
        h = cfg.hidden_widths[-1]
        self.common = MlpSpec(
            (cfg.embed_width, *cfg.hidden_widths), Activation.LEAKY_RELU, cfg.slope, cfg.init, True, "common."
        )
        self.value_head = MlpSpec((h, 1), prefix="value.", init=cfg.init)
        self.adv_head = MlpSpec((h, cfg.n_actions), prefix="adv.", init=cfg.init)

    def init_params(self, rng: np.random.Generator, dtype=np.float64) -> ParamSet:
        params = ParamSet(dtype=dtype)
        for spec in (*self._specs(), self.common, self.value_head, self.adv_head):
            spec.init_into(params, rng)
        return params

    def forward(self, params: ParamSet, state, taus) -> tuple[Tensor, Tensor]:
        fused, single = self.embed(params, state, taus)
        h = self.common.forward(params, fused)  # [B, N, H]
        v = self.value_head.forward(params, h)
        v = v.reshape(*v.shape[:2])  # [B, N]
        adv = self.adv_head.forward(params, h.mean(axis=1))  # [B, A]
        if single:
            return v.reshape(v.shape[1]), adv.reshape(adv.shape[1])
        return v, adv

    def q_values(self, params: ParamSet, state, taus) -> np.ndarray:
        with no_grad():
            v, adv = self.forward(params, state, taus)
        return v.data.mean(axis=-1, keepdims=True) + adv.data


@dataclass(frozen=True)
class DiscriminatorConfig:
    hidden_widths: tuple[int, ...] = (64, 64)
    slope: float = 0.01
    activation: Activation = Activation.LEAKY_RELU
    context_dim: int = 0  # extra conditioning inputs next to the scalar particle
    init: Init = Init.UNIFORM_FAN_IN


class Discriminator:
    """Scalar critic D(x) (optionally D(x, c)) with a linear output neuron."""

    def __init__(self, cfg: DiscriminatorConfig = DiscriminatorConfig()):
        self.cfg = cfg
        self.mlp = MlpSpec(
            (1 + cfg.context_dim, *cfg.hidden_widths, 1), cfg.activation, cfg.slope, cfg.init, False, "disc."
        )

    def init_params(self, rng: np.random.Generator, dtype=np.float64) -> ParamSet:
        params = ParamSet(dtype=dtype)
        self.mlp.init_into(params, rng)
        return params

    def _inputs(self, x, context, dtype) -> tuple[Tensor, tuple[int, ...]]:
        if not isinstance(x, Tensor):
            x = Tensor(x, dtype=dtype)
        elif x.data.dtype != dtype:
            if x.requires_grad:
                raise TypeError(f"input dtype {x.data.dtype} differs from parameter dtype {dtype}")
            x = Tensor(x.data, dtype=dtype)
        if not np.all(np.isfinite(x.data)):
            raise ValueError("discriminator input is not finite")
        shape = x.shape
        col = x.reshape(-1, 1)
        if self.cfg.context_dim:
            if context is None:
                raise ValueError("this discriminator needs a context input")
            c = np.asarray(context, dtype=col.data.dtype).reshape(col.shape[0], self.cfg.context_dim)
            col = _hconcat(col, c)
        elif context is not None:
            raise ValueError("this discriminator takes no context")
        return col, shape

    def forward(self, params: ParamSet, x, context=None) -> Tensor:
        """D evaluated elementwise; output has the shape of ``x``."""
        col, shape = self._inputs(x, context, params.dtype)
        return self.mlp.forward(params, col).reshape(*shape)

    def input_gradient(self, params: ParamSet, x, context=None) -> Tensor:
        """dD/dx as a graph node that is differentiable w.r.t. the parameters.

        Built as the chain W_0[x-row] * s_1 -> (@ W_1) * s_2 -> ... -> @ W_L,
        where s_l are the activation derivatives at the pre-activations.
        LeakyReLU derivatives are piecewise constant (positive slope at 0);
        tanh derivatives stay in the graph as 1 - a^2.
        """
        col, shape = self._inputs(as_tensor(x).detach(), context, params.dtype)
        m = self.mlp
        h = col
        slopes: list[Tensor] = []
        for i in range(m.n_layers - 1):
            z = h @ params[m.weight(i)] + params[m.bias(i)]
            if m.activation is Activation.LEAKY_RELU:
                slopes.append(Tensor(leaky_relu_slope(z.data, m.slope)))
                h = z.leaky_relu(m.slope)
            elif m.activation is Activation.TANH:
                h = z.tanh()
                slopes.append(1.0 - h.square())
            else:
                slopes.append(Tensor(np.ones_like(z.data)))
                h = z
        g = params[m.weight(0)][0:1, :]  # [1, H1]
        for i in range(m.n_layers):
            if i > 0:
                g = g @ params[m.weight(i)]
            if i < m.n_layers - 1:
                g = g * slopes[i]
        if g.shape[0] != col.shape[0]:  # purely linear critic: constant gradient
            g = g * Tensor(np.ones((col.shape[0], 1), dtype=params.dtype))
        return g.reshape(*shape)


def _hconcat(a: Tensor, c: np.ndarray) -> Tensor:
    """[a | c] along the last axis; c is constant."""
    out = Tensor._make(
        np.concatenate([a.data, c], axis=1), (a,), lambda g: a._acc(g[:, : a.shape[1]])
    )
    return out


def gradient_penalty(
    disc: Discriminator, params: ParamSet, x_hat, coefficient: float, context=None
) -> Tensor:
    """coefficient * mean((|dD/dx| - 1)^2) over the interpolates."""
    if coefficient < 0:
        raise ValueError("penalty coefficient must be >= 0")
    g = disc.input_gradient(params, x_hat, context)
    return ((g.abs() - 1.0).square()).mean() * coefficient


@dataclass(frozen=True)
class QNetworkConfig:
    n_state: int
    n_actions: int
    hidden_widths: tuple[int, ...] = (128, 64)
    slope: float = 0.01
    init: Init = Init.UNIFORM_FAN_IN


class QNetwork:
    """Plain MLP Q-head for the DQN baseline."""

    def __init__(self, cfg: QNetworkConfig):
        self.cfg = cfg
        self.mlp = MlpSpec(
            (cfg.n_state, *cfg.hidden_widths, cfg.n_actions), Activation.LEAKY_RELU, cfg.slope, cfg.init, False, "q."
        )

    def init_params(self, rng: np.random.Generator, dtype=np.float64) -> ParamSet:
        params = ParamSet(dtype=dtype)
        self.mlp.init_into(params, rng)
        return params

    def forward(self, params: ParamSet, state) -> Tensor:
        s = np.asarray(state, dtype=params.dtype)
        if s.ndim == 1:
            return self.mlp.forward(params, Tensor(s[None, :])).reshape(self.cfg.n_actions)
        return self.mlp.forward(params, Tensor(s))

    def q_values(self, params: ParamSet, state) -> np.ndarray:
        with no_grad():
            return self.forward(params, state).data
