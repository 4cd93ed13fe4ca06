import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ganslice.nets import (
    CheckpointError,
    Discriminator,
    DiscriminatorConfig,
    DivergenceError,
    DuelingGenerator,
    Generator,
    GeneratorConfig,
    MlpSpec,
    Optimizer,
    OptimizerConfig,
    ParamSet,
    Tensor,
    clone_params,
    gradcheck,
    gradient_penalty,
    load_params,
    no_grad,
    optimizer_step,
    save_params,
)
from ganslice.nets.checkpoint import decode_tensors, encode_tensors
from ganslice.nets.optim import clip_by_global_norm

SMALL = dict(embed_width=8, hidden_widths=(16, 8))


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def linear_critic(psi: float, bias: float = 0.0):
    d = Discriminator(DiscriminatorConfig(hidden_widths=()))
    p = ParamSet({"disc.0.W": [[psi]], "disc.0.b": [bias]})
    return d, p


# -- autodiff primitives --------------------------------------------------------------


def test_elementwise_chain_against_hand_derivative():
    x = Tensor([0.5, -1.5, 2.0], requires_grad=True)
    y = ((x * x + 3.0 * x).tanh() - x.abs()).sum()
    y.backward()
    v = np.array([0.5, -1.5, 2.0])
    t = np.tanh(v * v + 3 * v)
    np.testing.assert_allclose(x.grad, (1 - t * t) * (2 * v + 3) - np.sign(v), rtol=1e-14)


def test_matmul_and_broadcast_gradients():
    rng = np.random.default_rng(3)
    a = Tensor(rng.normal(size=(4, 3)), requires_grad=True)
    w = Tensor(rng.normal(size=(3, 2)), requires_grad=True)
    b = Tensor(rng.normal(size=(2,)), requires_grad=True)
    ((a @ w + b) * 2.0).sum().backward()
    np.testing.assert_allclose(b.grad, np.full(2, 8.0))
    np.testing.assert_allclose(w.grad, 2 * a.data.sum(axis=0)[:, None].repeat(2, axis=1))
    np.testing.assert_allclose(a.grad, 2 * np.tile(w.data.sum(axis=1), (4, 1)))


def test_shared_node_accumulates():
    x = Tensor(3.0, requires_grad=True)
    h = x * 2.0
    (h * h + h).backward()
    assert x.grad == pytest.approx(2 * (2 * 6.0 + 1))


def test_leaky_relu_kink_takes_positive_slope():
    x = Tensor([0.0, -1.0, 1.0], requires_grad=True)
    x.leaky_relu(0.2).sum().backward()
    np.testing.assert_array_equal(x.grad, [1.0, 0.2, 1.0])


def test_no_grad_builds_no_graph():
    x = Tensor([1.0, 2.0], requires_grad=True)
    with no_grad():
        y = (x * 3.0).sum()
    assert not y.requires_grad and y._parents == ()


def test_gather_rows():
    x = Tensor(np.arange(12.0).reshape(2, 3, 2), requires_grad=True)
    y = x.gather_rows(np.array([2, 0]))
    np.testing.assert_array_equal(y.data, [[4.0, 5.0], [6.0, 7.0]])
    y.sum().backward()
    expected = np.zeros((2, 3, 2))
    expected[0, 2] = expected[1, 0] = 1
    np.testing.assert_array_equal(x.grad, expected)


def test_float32_params_keep_graph_in_float32(rng):
    g = Generator(GeneratorConfig(3, 4, **SMALL))
    p = g.init_params(rng, np.float32)
    out = g.forward(p, rng.random((2, 3)), rng.uniform(0.1, 0.9, (2, 5)))
    assert out.data.dtype == np.float32
    out.square().mean().backward()
    assert {t.grad.dtype for t in p.tensors()} == {np.dtype(np.float32)}


# -- generator ------------------------------------------------------------------------------


def test_generator_shapes_and_determinism(rng):
    g = Generator(GeneratorConfig(3, 5, **SMALL))
    p = g.init_params(rng)
    s = rng.random(3)
    assert g.forward(p, s, [0.3]).shape == (5, 1)
    taus = rng.uniform(0.01, 0.99, 7)
    a, b = g.forward(p, s, taus).data, g.forward(p, s, taus).data
    assert a.shape == (5, 7)
    assert np.array_equal(a, b)
    assert g.forward(p, rng.random((4, 3)), taus).shape == (4, 5, 7)


def test_zeroed_head_outputs_its_bias(rng):
    g = Generator(GeneratorConfig(3, 4, **SMALL))
    p = g.init_params(rng)
    last = g.head.n_layers - 1
    p[g.head.weight(last)].data[...] = 0.0
    p[g.head.bias(last)].data[...] = [1.0, -2.0, 0.5, 3.0]
    out = g.forward(p, rng.random(3), rng.uniform(0.1, 0.9, 6)).data
    np.testing.assert_array_equal(out, np.repeat([[1.0], [-2.0], [0.5], [3.0]], 6, axis=1))


def test_taus_must_be_open_unit_interval(rng):
    g = Generator(GeneratorConfig(3, 2, **SMALL))
    p = g.init_params(rng)
    for bad in ([0.0, 0.5], [0.5, 1.0]):
        with pytest.raises(ValueError):
            g.forward(p, rng.random(3), bad)


def test_hadamard_fusion_identity(rng):
    # an all-ones sample embedding leaves the state embedding unchanged
    g = Generator(GeneratorConfig(3, 2, **SMALL))
    p = g.init_params(rng)
    state_spec, tau_spec = g._specs()
    last = tau_spec.n_layers - 1
    p[tau_spec.weight(last)].data[...] = 0.0
    # LeakyReLU(1) = 1, so a bias of ones yields an all-ones embedding
    p[tau_spec.bias(last)].data[...] = 1.0
    s = rng.random((2, 3))
    fused, _ = g.embed(p, s, rng.uniform(0.1, 0.9, (2, 4)))
    phi_s = state_spec.forward(p, Tensor(s)).data
    np.testing.assert_array_equal(fused.data, np.repeat(phi_s[:, None, :], 4, axis=1))


def test_cosine_tau_features(rng):
    g = Generator(GeneratorConfig(3, 2, cosine_features=4, **SMALL))
    p = g.init_params(rng)
    feats = g.tau_features(np.array([[0.25]])).data
    np.testing.assert_allclose(feats[0, 0], np.cos(np.pi * 0.25 * np.arange(1, 5)))
    assert g.forward(p, rng.random(3), [0.2, 0.7]).shape == (2, 2)


def test_dueling_shapes_and_zero_advantage(rng):
    g = DuelingGenerator(GeneratorConfig(3, 6, **SMALL))
    p = g.init_params(rng)
    s, taus = rng.random(3), rng.uniform(0.01, 0.99, 9)
    v, adv = g.forward(p, s, taus)
    assert v.shape == (9,) and adv.shape == (6,)
    for name in p.names():
        if name.startswith("adv."):
            p[name].data[...] = 0.0
    v, adv = g.forward(p, s, taus)
    assert np.all(adv.data == 0.0)
    q = g.q_values(p, s, taus)
    np.testing.assert_array_equal(q, np.full(6, v.data.mean()))


# -- discriminator and penalty ---------------------------------------------------------------


def test_discriminator_zero_weights_outputs_bias(rng):
    d = Discriminator(DiscriminatorConfig((8, 8)))
    p = d.init_params(rng)
    for name in p.names():
        p[name].data[...] = 0.0
    p[d.mlp.bias(d.mlp.n_layers - 1)].data[...] = 0.7
    np.testing.assert_array_equal(d.forward(p, [-3.0, 0.0, 11.0]).data, [0.7, 0.7, 0.7])


def test_linear_discriminator_and_its_gradient():
    d, p = linear_critic(2.0)
    assert d.forward(p, 3.0).item() == 6.0
    np.testing.assert_array_equal(d.input_gradient(p, [1.0, -4.0, 9.0]).data, [2.0, 2.0, 2.0])


def test_discriminator_rejects_non_finite(rng):
    d = Discriminator(DiscriminatorConfig((4,)))
    p = d.init_params(rng)
    with pytest.raises(ValueError):
        d.forward(p, [1.0, np.nan])


@pytest.mark.parametrize("activation", ["leaky_relu", "tanh"])
def test_input_gradient_matches_central_difference(activation):
    rng = np.random.default_rng(11)
    d = Discriminator(DiscriminatorConfig((16, 16), activation=activation))
    p = d.init_params(rng)
    x = rng.normal(size=50)
    h = 1e-6
    fd = (d.forward(p, x + h).data - d.forward(p, x - h).data) / (2 * h)
    an = d.input_gradient(p, x).data
    assert np.max(np.abs(an - fd) / np.abs(fd)) <= 1e-6


def test_penalty_examples():
    d1, p1 = linear_critic(1.0)
    assert gradient_penalty(d1, p1, [0.3, 2.0], 5.0).item() == 0.0
    d2, p2 = linear_critic(-2.0)
    assert gradient_penalty(d2, p2, [0.1, 4.0, -1.0], 10.0 / 2).item() == 5.0
    d0, p0 = linear_critic(0.0)
    assert gradient_penalty(d0, p0, [1.5], 2.0 / 2).item() == 1.0
    with pytest.raises(ValueError):
        gradient_penalty(d0, p0, [1.0], -1.0)


@pytest.mark.parametrize("activation,context", [("leaky_relu", 0), ("tanh", 0), ("leaky_relu", 2)])
def test_penalty_parameter_gradient(activation, context):
    rng = np.random.default_rng(5)
    d = Discriminator(DiscriminatorConfig((16, 16), activation=activation, context_dim=context))
    p = d.init_params(rng)
    x = rng.normal(size=(4, 5))
    c = rng.random((4, 5, context)) if context else None
    report = gradcheck(lambda: gradient_penalty(d, p, x, 10.0, c) + d.forward(p, x, c).mean(), p)
    assert report.max_rel_error <= 1e-4


def test_generator_parameter_gradients():
    rng = np.random.default_rng(6)
    g = Generator(GeneratorConfig(3, 4, **SMALL))
    p = g.init_params(rng)
    s, t = rng.random((3, 3)), rng.uniform(0.01, 0.99, (3, 4))
    assert gradcheck(lambda: g.forward(p, s, t).square().mean(), p).max_rel_error <= 1e-4
    dg = DuelingGenerator(GeneratorConfig(3, 4, **SMALL))
    pd = dg.init_params(rng)

    def loss():
        v, a = dg.forward(pd, s, t)
        return v.square().mean() + (a * a).mean()

    assert gradcheck(loss, pd).max_rel_error <= 1e-4


# -- optimizers ------------------------------------------------------------------------------------


def test_sgd_example():
    p = ParamSet({"w": [1.0]})
    optimizer_step(p, {"w": np.array([2.0])}, OptimizerConfig(lr=0.1, kind="sgd", clip_norm=None))
    assert p["w"].data[0] == pytest.approx(0.8, abs=1e-15)
    assert p.version == 1


@pytest.mark.parametrize("kind", ["sgd", "adam", "rmsprop"])
def test_zero_learning_rate_leaves_params(kind):
    p = ParamSet({"w": [1.0, -2.0]})
    optimizer_step(p, {"w": np.array([3.0, 4.0])}, OptimizerConfig(lr=0.0, kind=kind))
    np.testing.assert_array_equal(p["w"].data, [1.0, -2.0])


def test_clipping_contract():
    p = ParamSet({"a": [0.0, 0.0], "b": [0.0]})
    grads = {"a": np.array([6.0, 0.0]), "b": np.array([8.0])}
    optimizer_step(p, grads, OptimizerConfig(lr=1.0, kind="sgd", clip_norm=1.0))
    applied = np.sqrt(np.sum(p["a"].data ** 2) + np.sum(p["b"].data ** 2))
    assert abs(applied - 1.0) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=8), st.floats(0.01, 100.0))
def test_clipped_norm_never_exceeds_limit(values, limit):
    clipped, norm = clip_by_global_norm({"g": np.array(values)}, limit)
    assert np.linalg.norm(clipped["g"]) <= limit * (1 + 1e-12)
    assert norm == pytest.approx(np.linalg.norm(values))


def test_non_finite_gradient_raises():
    p = ParamSet({"w": [1.0]})
    with pytest.raises(DivergenceError, match="'w'"):
        Optimizer(p, OptimizerConfig(kind="sgd")).step({"w": np.array([np.inf])})


def test_adam_descends_a_quadratic():
    p = ParamSet({"w": [5.0, -3.0]})
    opt = Optimizer(p, OptimizerConfig(lr=0.1, clip_norm=None))
    for _ in range(500):
        p.zero_grad()
        (p["w"].square().sum()).backward()
        opt.step()
    assert np.max(np.abs(p["w"].data)) < 0.05


# -- cloning and checkpoints ---------------------------------------------------------------------------


def test_clone_semantics(rng):
    g = Generator(GeneratorConfig(3, 3, **SMALL))
    p = g.init_params(rng)
    p.version = 7
    probe_s, probe_t = rng.random((5, 3)), rng.uniform(0.01, 0.99, (5, 4))
    c = clone_params(p)
    assert c.version == 7
    assert np.max(np.abs(g.forward(p, probe_s, probe_t).data - g.forward(c, probe_s, probe_t).data)) == 0.0
    g.forward(p, probe_s, probe_t).mean().backward()
    Optimizer(p, OptimizerConfig(lr=0.1, kind="sgd")).step()
    assert not np.array_equal(g.forward(p, probe_s, probe_t).data, g.forward(c, probe_s, probe_t).data)


def test_paramset_rejects_bad_values():
    with pytest.raises(ValueError):
        ParamSet({"w": [np.nan]})
    p = ParamSet({"w": [1.0]})
    with pytest.raises(KeyError):
        p.add("w", [2.0])


def test_mlp_needs_two_widths():
    with pytest.raises(ValueError):
        MlpSpec((3,))


def test_checkpoint_roundtrip_bit_exact(tmp_path, rng):
    g = Generator(GeneratorConfig(3, 4, **SMALL))
    p = g.init_params(rng)
    p.version = 42
    q = Generator(GeneratorConfig(3, 4, **SMALL)).init_params(rng, np.float32)
    save_params(tmp_path / "ck.gddq", {"gen": p, "f32": q})
    back = load_params(tmp_path / "ck.gddq")
    assert back["gen"].version == 42
    for name in p.names():
        assert np.max(np.abs(back["gen"][name].data - p[name].data)) == 0.0
        assert back["gen"][name].data.tobytes() == p[name].data.tobytes()
        assert np.array_equal(back["f32"][name].data.astype(np.float32), q[name].data)


def test_checkpoint_rejects_corruption(tmp_path):
    blob = encode_tensors({"a": np.arange(6.0).reshape(2, 3), "b": np.array(1.5)})
    assert set(decode_tensors(blob)) == {"a", "b"}
    with pytest.raises(CheckpointError, match="magic"):
        decode_tensors(b"XXXX" + blob[4:])
    with pytest.raises(CheckpointError, match="truncated"):
        decode_tensors(blob[:-5])
    with pytest.raises(CheckpointError, match="trailing"):
        decode_tensors(blob + b"\0")
    bad_version = blob[:4] + (99).to_bytes(4, "little") + blob[8:]
    with pytest.raises(CheckpointError, match="version"):
        decode_tensors(bad_version)
