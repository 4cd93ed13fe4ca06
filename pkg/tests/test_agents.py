import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ganslice.agents import (
    AgentConfig,
    Batch,
    ClippingRule,
    DQNAgent,
    DuelingGanDDQNAgent,
    EpsilonSchedule,
    GanDDQNAgent,
    ReplayBuffer,
    TransitionTuple,
    bellman_target_particles,
    clip_reward,
    epsilon_greedy,
    greedy,
    make_agent,
)
from ganslice.agents import losses
from ganslice.agents.sanity import StationaryFitConfig, constant_sampler, fit_stationary, normal_sampler
from ganslice.env import enumerate_actions, hard_slice_action
from ganslice.nets import DuelingGenerator, GeneratorConfig, QNetwork, QNetworkConfig, clone_params, gradcheck

TINY = dict(embed_width=8, hidden_widths=(16, 8), disc_widths=(16, 16), particles=4, precision="float64")

RULE = ClippingRule(6.5, 4.5, 1.0)


# -- reward clipping -----------------------------------------------------------------------------


@pytest.mark.parametrize("j,expected", [(7.0, 1.0), (6.5, 1.0), (5.0, 0.0), (4.5, -1.0), (4.0, -1.0)])
def test_clip_reward_examples(j, expected):
    assert clip_reward(j, RULE) == expected


@given(st.floats(-50, 50), st.floats(-50, 50))
def test_clip_reward_is_monotone_step(a, b):
    lo, hi = sorted((a, b))
    assert clip_reward(lo, RULE) <= clip_reward(hi, RULE)
    assert clip_reward(a, RULE) in (-1.0, 0.0, 1.0)


def test_clipping_rule_validation():
    with pytest.raises(ValueError):
        ClippingRule(4.5, 4.5)
    with pytest.raises(ValueError):
        ClippingRule(6.5, 4.5, eta=0.0)


def test_clipped_rewards_are_stored_in_range():
    agent = make_agent(AgentConfig(algo="dqn", batch_size=2, buffer=8, hidden_widths=(8,)), 3, 4, 0)
    for j in (3.0, 5.0, 9.0):
        agent.observe(np.zeros(3), 0, agent.shape_reward(j), np.zeros(3))
    assert set(agent.buffer.rewards[:3]) == {-1.0, 0.0, 1.0}


# -- exploration and greedy choice -----------------------------------------------------------------


def test_greedy_picks_largest_mean_particle():
    particles = np.array([[0.5, 1.5], [2.0, 4.0], [1.0, 3.0]])
    assert epsilon_greedy(particles.mean(axis=1), 0.0, np.random.default_rng(0)) == 1


def test_greedy_ties_go_to_lowest_index():
    assert greedy(np.array([1.0, 3.0, 3.0])) == 1


def test_full_exploration_is_uniform():
    rng = np.random.default_rng(1)
    n, k = 100_000, 6
    q = np.arange(k, dtype=float)
    counts = np.bincount([epsilon_greedy(q, 1.0, rng) for _ in range(n)], minlength=k)
    p = 1.0 / k
    sigma = np.sqrt(n * p * (1 - p))
    assert np.all(np.abs(counts - n * p) <= 3 * sigma)


def test_epsilon_out_of_range():
    with pytest.raises(ValueError):
        epsilon_greedy(np.zeros(3), 1.5, np.random.default_rng(0))


def test_epsilon_schedule_is_linear_then_flat():
    s = EpsilonSchedule(1.0, 0.05, 3000)
    assert s(0) == 1.0
    assert s(1500) == pytest.approx(0.525)
    assert s(3000) == s(10_000) == 0.05


def test_dueling_q_is_value_plus_advantage():
    cfg = GeneratorConfig(2, 2, embed_width=4, hidden_widths=(4,))
    gen = DuelingGenerator(cfg)
    params = gen.init_params(np.random.default_rng(0))
    for name in params.names():
        params[name].data[...] = 0.0
    params["value.0.b"].data[...] = 2.0
    params["adv.0.b"].data[...] = [0.5, -0.5]
    q = gen.q_values(params, np.zeros(2), np.array([0.3, 0.6]))
    np.testing.assert_allclose(q, [2.5, 1.5])
    assert greedy(q) == 0


def test_select_action_is_deterministic_without_exploration():
    agent = make_agent(AgentConfig(**TINY), 3, 5, 0)
    s = np.array([0.2, 0.4, 0.1])
    # tau draws differ between calls, so compare against the argmax of each call's own estimate
    a = agent.select_action(s, 0.0)
    assert 0 <= a < 5
    q_agent = make_agent(AgentConfig(algo="dqn", hidden_widths=(8,)), 3, 5, 0)
    assert q_agent.select_action(s, 0.0) == q_agent.select_action(s, 0.0) == greedy(q_agent.q_values(s))


# -- Bellman targets -------------------------------------------------------------------------------


def test_bellman_target_example():
    z = np.array([[0.0, 2.0]])
    np.testing.assert_allclose(bellman_target_particles(1.0, 0.9, z), [1.0, 2.8])


def test_bellman_target_zero_discount():
    z = np.random.default_rng(0).normal(size=(3, 5))
    np.testing.assert_array_equal(bellman_target_particles(0.7, 0.0, z), np.full(5, 0.7))


def test_bellman_target_picks_best_mean_action():
    z = np.array([[1.0, 1.0], [1.5, 2.5]])
    np.testing.assert_allclose(bellman_target_particles(0.0, 0.5, z), [0.75, 1.25])


def test_bellman_target_batched_and_affine():
    rng = np.random.default_rng(2)
    z = rng.normal(size=(4, 3, 6))
    r = rng.normal(size=4)
    y1 = bellman_target_particles(r, 0.4, z)
    y2 = bellman_target_particles(r, 0.8, z / 2)
    np.testing.assert_allclose(y1 - r[:, None], y2 - r[:, None], atol=1e-12)


def test_bellman_target_rejects_nonfinite_reward():
    with pytest.raises(ValueError):
        bellman_target_particles(np.nan, 0.9, np.zeros((2, 2)))


# -- DQN TD error ----------------------------------------------------------------------------------


def _constant_q(value: float) -> tuple[QNetwork, object]:
    net = QNetwork(QNetworkConfig(1, 1, hidden_widths=(2,)))
    p = net.init_params(np.random.default_rng(0))
    for name in p.names():
        p[name].data[...] = 0.0
    p["q.1.b"].data[...] = value
    return net, p


@pytest.mark.parametrize("q,expected", [(2.0, 0.0), (0.0, 4.0)])
def test_dqn_squared_td_error(q, expected):
    net, online = _constant_q(q)
    _, target = _constant_q(2.0)
    batch = Batch(np.zeros((1, 1)), np.zeros(1, dtype=int), np.ones(1), np.zeros((1, 1)))
    assert losses.dqn_loss(net, online, target, batch, 0.5).item() == pytest.approx(expected)


# -- replay ---------------------------------------------------------------------------------------


def _filled(capacity: int, n: int) -> ReplayBuffer:
    buf = ReplayBuffer(capacity, 2)
    for i in range(n):
        buf.add(TransitionTuple(np.array([i, i]), i % 3, float(i), np.array([i + 1, i + 1])))
    return buf


def test_buffer_is_a_ring():
    buf = _filled(5, 7)
    assert len(buf) == 5 and buf.full
    assert sorted(buf.rewards) == [2.0, 3.0, 4.0, 5.0, 6.0]


def test_minibatch_has_no_repeats():
    buf = _filled(50, 50)
    b = buf.sample(50, np.random.default_rng(0))
    assert len(set(b.rewards)) == 50
    with pytest.raises(ValueError):
        buf.sample(51, np.random.default_rng(0))


def test_epoch_touches_every_transition_once():
    buf = _filled(70, 70)
    seen = np.concatenate([b.rewards for b in buf.epoch(32, np.random.default_rng(3))])
    assert sorted(seen) == list(range(70))


def test_gan_ddqn_requires_full_buffer():
    agent = GanDDQNAgent(AgentConfig(batch_size=2, buffer=4, **TINY), 2, 3, 0)
    with pytest.raises(RuntimeError):
        agent.train_epoch()
    assert agent.train_step(0) == (None, None)


# -- target sync ----------------------------------------------------------------------------------


def _random_transitions(agent, n: int, n_state: int, n_actions: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        agent.observe(rng.random(n_state), int(rng.integers(n_actions)), float(rng.normal()), rng.random(n_state))


@pytest.mark.parametrize("algo", ["gan_ddqn", "dueling", "dqn"])
def test_target_sync_semantics(algo):
    cfg = AgentConfig(algo=algo, batch_size=4, buffer=8, target_sync=3, train_every=1, lr_g=1e-2, lr_d=1e-2, **TINY)
    agent = make_agent(cfg, 2, 3, 0)
    _random_transitions(agent, 8, 2, 3)
    online = agent.param_groups()["q" if algo == "dqn" else "gen"]
    target = agent.param_groups()["target"]

    def same():
        return all(np.array_equal(online[k].data, target[k].data) for k in online.names())

    agent.train_step(1)
    agent.target_sync(1)
    assert not same()
    agent.target_sync(3)
    assert same()


def test_target_sync_every_iteration():
    cfg = AgentConfig(algo="dqn", batch_size=2, buffer=4, target_sync=1, hidden_widths=(4,), lr_g=1e-2)
    agent = make_agent(cfg, 2, 2, 0)
    _random_transitions(agent, 4, 2, 2)
    for it in range(1, 4):
        agent.train_step(it)
        agent.target_sync(it)
        s = np.array([0.3, 0.9])
        np.testing.assert_array_equal(agent.qnet.q_values(agent.target, s), agent.q_values(s))


# -- hard slicing ---------------------------------------------------------------------------------


@pytest.mark.parametrize(
    "total,res,units",
    [(9.0, 1.0, (3, 3, 3)), (10.0, 1.0, (4, 3, 3)), (10e6, 200e3, (17, 17, 16))],
)
def test_hard_slice_action(total, res, units):
    assert hard_slice_action(3, total, res).units == units


def test_hard_agent_never_explores():
    actions = enumerate_actions(10e6, 1e6, 3)
    hard = hard_slice_action(3, 10e6, 1e6)
    idx = next(a.index for a in actions if a.units == hard.units)
    agent = make_agent(AgentConfig(algo="hard"), 3, len(actions), 0, hard_index=idx)
    assert {agent.select_action(np.zeros(3), 1.0) for _ in range(50)} == {idx}


# -- trainer gradients (double precision, width <= 16) ---------------------------------------------


def _batch(rng, b, n_state, n_actions):
    return Batch(rng.random((b, n_state)), rng.integers(n_actions, size=b), rng.normal(size=b), rng.random((b, n_state)))


@pytest.mark.parametrize("context", ["none", "state_action"])
def test_gan_ddqn_loss_gradients(context):
    rng = np.random.default_rng(4)
    agent = GanDDQNAgent(AgentConfig(disc_context=context, **TINY), 3, 4, 0)
    batch = _batch(rng, 5, 3, 4)
    taus = rng.uniform(0.05, 0.95, (5, 4))
    interp = rng.random((5, 1))
    ctx = agent._context(batch)
    y = losses.gan_ddqn_targets(agent.gen, agent.target, batch, taus, 0.9)
    fake = losses.gan_ddqn_particles(agent.gen, agent.g_params, batch, taus).data

    def loss_d():
        return losses.critic_loss(agent.disc, agent.d_params, fake, y, interp, 10.0, ctx)

    def loss_g():
        particles = losses.gan_ddqn_particles(agent.gen, agent.g_params, batch, taus)
        return losses.generator_adversarial_loss(agent.disc, agent.d_params, particles, ctx)

    assert gradcheck(loss_d, agent.d_params).max_rel_error <= 1e-4
    assert gradcheck(loss_g, agent.g_params).max_rel_error <= 1e-4


def test_dueling_loss_gradients():
    rng = np.random.default_rng(5)
    agent = DuelingGanDDQNAgent(AgentConfig(algo="dueling", **TINY), 3, 4, 0)
    batch = _batch(rng, 5, 3, 4)
    taus, next_taus = rng.uniform(0.05, 0.95, (2, 5, 4))
    interp = rng.random((5, 1))
    v, _ = agent.gen.forward(agent.g_params, batch.states, taus)
    v_next, _ = agent.gen.forward(agent.target, batch.next_states, taus)
    y = batch.rewards[:, None] + 0.9 * v_next.data
    ctx = agent._context(batch)

    def loss_d():
        return losses.critic_loss(agent.disc, agent.d_params, v.data, y, interp, 10.0, ctx)

    # the bootstrap target is a graph constant, so it is held fixed under perturbation
    q_hat = losses.dueling_td_target(agent.gen, agent.g_params, agent.target, batch, next_taus, 0.9)

    def loss_g():
        v, adv = agent.gen.forward(agent.g_params, batch.states, taus)
        td = losses.dueling_td_loss(
            agent.gen, agent.g_params, agent.target, batch, taus, next_taus, 0.9, v, adv, q_hat=q_hat
        )
        return losses.generator_adversarial_loss(agent.disc, agent.d_params, v, ctx) + td

    assert gradcheck(loss_d, agent.d_params).max_rel_error <= 1e-4
    assert gradcheck(loss_g, agent.g_params).max_rel_error <= 1e-4


def test_dueling_td_degenerates_without_discount_and_advantage():
    rng = np.random.default_rng(6)
    gen = DuelingGenerator(GeneratorConfig(2, 3, embed_width=8, hidden_widths=(8,)))
    params = gen.init_params(rng)
    for name in params.names():
        if name.startswith("adv."):
            params[name].data[...] = 0.0
    batch = _batch(rng, 4, 2, 3)
    taus = rng.uniform(0.05, 0.95, (4, 5))

    def td():
        return losses.dueling_td_loss(gen, params, clone_params(params), batch, taus, taus, 0.0)

    v, _ = gen.forward(params, batch.states, taus)
    expected = 0.5 * np.mean((batch.rewards - v.data.mean(axis=1)) ** 2)
    assert td().item() == pytest.approx(expected, rel=1e-12)
    assert gradcheck(td, params).max_rel_error <= 1e-4


def test_dqn_loss_gradients():
    rng = np.random.default_rng(7)
    agent = DQNAgent(AgentConfig(algo="dqn", hidden_widths=(16, 8), precision="float64"), 3, 4, 0)
    batch = _batch(rng, 6, 3, 4)
    report = gradcheck(lambda: losses.dqn_loss(agent.qnet, agent.q_params, agent.target, batch, 0.9), agent.q_params)
    assert report.max_rel_error <= 1e-4


def test_dueling_runs_n_critic_updates_per_generator_update():
    agent = DuelingGanDDQNAgent(AgentConfig(algo="dueling", batch_size=4, buffer=16, n_critic=5, **TINY), 2, 3, 0)
    _random_transitions(agent, 4, 2, 3)
    agent.train_step(0)
    assert agent.d_updates == 5 and agent.g_opt.t == 1


# -- config ---------------------------------------------------------------------------------------


def test_agent_config_roundtrip():
    cfg = AgentConfig(algo="dueling", epsilon=EpsilonSchedule(0.9, 0.1, 100), hidden_widths=[32, 16])
    again = AgentConfig.from_dict(cfg.to_dict())
    assert again == cfg
    assert again.hidden_widths == (32, 16)


@pytest.mark.parametrize(
    "bad",
    [
        {"algo": "ppo"},
        {"gamma": 1.0},
        {"batch_size": 64, "buffer": 32},
        {"n_critic": 0},
        {"disc_context": "reward"},
        {"precision": "float16"},
        {"nonsense": 1},
    ],
)
def test_agent_config_rejects(bad):
    with pytest.raises(ValueError):
        AgentConfig.from_dict(bad)


def test_training_precision_is_respected():
    agent = make_agent(AgentConfig(**{**TINY, "precision": "float32"}), 3, 4, 0)
    assert all(agent.g_params[k].data.dtype == np.float32 for k in agent.g_params.names())


# -- stationary fit --------------------------------------------------------------------------------


def test_generator_fits_a_constant_target():
    fit = fit_stationary(constant_sampler(3.0), StationaryFitConfig(updates=2000, ema=0.0), seed=0)
    assert np.mean(np.abs(fit.particles - 3.0)) < 0.3
    assert fit.w1_history[-1][0] == 2000


def test_stationary_fit_bookkeeping():
    fit = fit_stationary(normal_sampler(), StationaryFitConfig(updates=30, eval_every=10, eval_particles=50), seed=1)
    assert [k for k, _ in fit.w1_history] == [10, 20, 30]
    assert fit.first_below(np.inf) == 10 and fit.first_below(0.0) is None
    assert fit.particles.shape == (50,)
    with pytest.raises(ValueError):
        StationaryFitConfig(updates=0)
