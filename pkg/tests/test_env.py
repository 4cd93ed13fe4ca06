import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ganslice.env import (
    ChannelParams,
    SliceId,
    SliceSpec,
    TrafficDistribution,
    TrafficKind,
    build_env,
    default_env_config,
    default_slices,
    enumerate_actions,
    env_from_config,
    hard_slice_action,
    link_rate,
    sample_traffic,
    slice_ssr,
    snr,
    spectrum_efficiency,
    system_utility,
)
from ganslice.env.traffic import generate_arrivals

QUIET = ChannelParams(shadowing_sigma_db=0.0, rayleigh=False)


def brute_force_actions(units, parts):
    return [c for c in itertools.product(range(1, units + 1), repeat=parts) if sum(c) == units]


def one_slice(interarrival_ms, size_bytes=40.0, users=1, rate=51e3, latency=10e-3):
    return SliceSpec(
        SliceId.VOLTE, users,
        TrafficDistribution(TrafficKind.CONSTANT, (interarrival_ms,)),
        TrafficDistribution(TrafficKind.CONSTANT, (size_bytes,)),
        sla_rate=rate, sla_latency=latency,
    )


# -- action table -----------------------------------------------------------------


@pytest.mark.parametrize("resolution,expected", [(1e6, 36), (200e3, 1176)])
def test_action_counts_match_exhaustive_oracle(resolution, expected):
    actions = enumerate_actions(10e6, resolution, 3)
    units = round(10e6 / resolution)
    oracle = brute_force_actions(units, 3)
    assert len(actions) == len(oracle) == expected
    assert [a.units for a in actions] == sorted(oracle)
    assert [a.index for a in actions] == list(range(expected))


def test_forced_composition():
    actions = enumerate_actions(3, 1, 3)
    assert [a.units for a in actions] == [(1, 1, 1)]


def test_indivisible_bandwidth_rejected():
    with pytest.raises(ValueError):
        enumerate_actions(10e6, 3e6, 3)


def test_too_few_units_rejected():
    with pytest.raises(ValueError):
        enumerate_actions(2, 1, 3)


@settings(max_examples=40, deadline=None)
@given(units=st.integers(1, 25), parts=st.integers(1, 4), resolution=st.sampled_from([1.0, 0.5, 2e5, 1e6]))
def test_every_action_fills_the_band(units, parts, resolution):
    if units < parts:
        return
    total = units * resolution
    for a in enumerate_actions(total, resolution, parts):
        assert math.isclose(a.allocation.sum(), total, rel_tol=1e-12)
        assert np.all(a.allocation >= resolution)
        assert all(isinstance(u, int) and u >= 1 for u in a.units)


def test_hard_slicing_is_near_equal_split():
    a = hard_slice_action(3, 10e6, 1e6)
    assert a.units == (4, 3, 3)


# -- link model ---------------------------------------------------------------------


@pytest.mark.parametrize(
    "g,p,n0,w,expected",
    [(1.0, 1.0, 1.0, 1.0, 1.0), (0.0, 1.0, 1.0, 1.0, 0.0), (2.0, 0.5, 1e-3, 1e3, 1.0)],
)
def test_snr_examples(g, p, n0, w, expected):
    assert snr(g, p, n0, w) == pytest.approx(expected, rel=1e-15)


def test_snr_rejects_zero_bandwidth():
    with pytest.raises(ValueError):
        snr(1.0, 1.0, 1.0, 0.0)


@pytest.mark.parametrize("w,s,expected", [(1.0, 1.0, 1.0), (1e6, 15.0, 4e6), (0.0, 7.0, 0.0)])
def test_link_rate_examples(w, s, expected):
    assert link_rate(w, s) == pytest.approx(expected, rel=1e-15)


# -- metrics --------------------------------------------------------------------------


def test_spectrum_efficiency_examples():
    assert spectrum_efficiency([10e6] * 7, 10e6) == 1.0
    assert spectrum_efficiency([0.0] * 5, 10e6) == 0.0
    assert spectrum_efficiency([], 10e6) == 0.0
    assert spectrum_efficiency([20e6, 0.0] * 3, 10e6) == pytest.approx(1.0)


def test_slice_ssr_examples():
    assert slice_ssr(2, 3) == pytest.approx(0.6667, abs=1e-4)
    assert slice_ssr(0, 5) == 0.0
    assert slice_ssr(0, 0) == 1.0
    with pytest.raises(ValueError):
        slice_ssr(4, 3)


def test_system_utility_examples():
    assert system_utility(100.0, [1, 1, 1], 0.01, [1, 1, 1]) == pytest.approx(4.0)
    assert system_utility(0.0, [0, 0, 0], 0.37, [2, 5, 9]) == 0.0
    assert system_utility(100.0, [1, 1, 0.5], 0.01, [1, 4, 6]) == pytest.approx(9.0)
    with pytest.raises(ValueError):
        system_utility(1.0, [1, 1], 0.01, [1, 1, 1])


# -- traffic ---------------------------------------------------------------------------


def test_volte_interarrival_uniform_moments():
    volte = default_slices()[0]
    x = volte.interarrival_model.sample(np.random.default_rng(1), 100_000)
    assert x.min() >= 0.0 and x.max() <= 160.0
    assert abs(x.mean() - 80.0) <= 2.0


def test_volte_packets_are_40_bytes():
    volte = default_slices()[0]
    rng = np.random.default_rng(2)
    assert {sample_traffic(volte.packet_size_model, rng) for _ in range(200)} == {40.0}


def test_urllc_small_packet_set():
    urllc = default_slices("small")[2]
    x = urllc.packet_size_model.sample(np.random.default_rng(3), 10_000)
    assert set(np.unique(x)) == {6.4e3, 12.8e3, 19.2e3, 25.6e3, 32e3}


@pytest.mark.parametrize(
    "model",
    [
        TrafficDistribution(TrafficKind.TRUNCATED_PARETO, (1.2, 6.0, 12.5)),
        TrafficDistribution(TrafficKind.TRUNCATED_PARETO, (1.2, 100.0, 250.0)),
        TrafficDistribution(TrafficKind.TRUNCATED_EXPONENTIAL, (180.0,)),
        TrafficDistribution(TrafficKind.TRUNCATED_EXPONENTIAL, (5.0, 12.0)),
    ],
)
def test_truncated_models_hit_configured_mean_within_bounds(model):
    x = model.sample(np.random.default_rng(4), 1_000_000)
    assert x.min() >= model.lower and x.max() <= model.upper
    assert abs(x.mean() - model.mean) <= 0.03 * model.mean


@settings(max_examples=30, deadline=None)
@given(
    shape=st.floats(0.8, 3.0),
    frac=st.floats(0.1, 0.9),
    upper=st.floats(1.0, 1e3),
    seed=st.integers(0, 2**31),
)
def test_pareto_samples_respect_bounds(shape, frac, upper, seed):
    model = TrafficDistribution(TrafficKind.TRUNCATED_PARETO, (shape, frac * upper, upper))
    x = model.sample(np.random.default_rng(seed), 2000)
    assert np.all(x >= model.lower) and np.all(x <= upper)


def test_arrival_generation_matches_gap_by_gap_oracle():
    # Constant gaps make the renewal process exactly predictable
    nxt = np.array([0.001, 0.0035])
    model = TrafficDistribution(TrafficKind.CONSTANT, (2.0,))
    size = TrafficDistribution(TrafficKind.CONSTANT, (10.0,))
    times, users, bits = generate_arrivals(nxt, 0.010, model, size, np.random.default_rng(0))
    expected = sorted([(t, 0) for t in (0.001, 0.003, 0.005, 0.007, 0.009)]
                      + [(t, 1) for t in (0.0035, 0.0055, 0.0075, 0.0095)])
    got = sorted(zip(np.round(times, 12), users))
    assert [(round(t, 12), u) for t, u in expected] == got
    assert np.all(bits == 80.0)
    np.testing.assert_allclose(nxt, [0.011, 0.0115])


# -- environment -----------------------------------------------------------------------


def test_default_env_is_valid():
    env = env_from_config(default_env_config())
    assert len(env.actions) == 36
    assert env.n_users == 100
    assert np.all(env.distance <= 40.0)
    assert env.hard_action.units == (4, 3, 3)


def test_build_env_rejects_bad_input():
    with pytest.raises(ValueError):
        build_env([], QUIET, 10e6, 1e6, 0.01, 5e-4, 10, 0)
    with pytest.raises(ValueError):
        build_env(default_slices(), QUIET, 10e6, 3e6, 0.01, 5e-4, 10, 0)


def test_unknown_action_rejected():
    env = env_from_config(default_env_config(slots_per_step=10))
    with pytest.raises(ValueError):
        env.step(36)
    foreign = enumerate_actions(10e6, 2e6, 3)[0]
    with pytest.raises(ValueError):
        env.step(foreign)


def test_empty_window_counts_as_satisfied():
    env = build_env([one_slice(5000.0)], QUIET, 1e6, 1e6, 0.01, 5e-4, 100, 0, obs_scale=[1.0])
    obs, m = env.step(0)
    assert obs.arrived_packets.tolist() == [0]
    assert m.ssr.tolist() == [1.0]
    assert m.se == 0.0
    assert m.utility == 1.0


def test_single_packet_meeting_both_slas():
    env = build_env([one_slice(600.0)], QUIET, 1e6, 1e6, 0.01, 5e-4, 2000, 0, obs_scale=[1.0], audit=True)
    obs, m = env.step(0)
    assert obs.arrived_packets.tolist() == [1]
    assert m.ssr.tolist() == [1.0]
    assert m.delivered_bits == 320.0
    assert m.audit["outcome"].tolist() == [0]


def test_underrate_packet_fails():
    # SLA rate far above anything a 1 MHz channel at 40 m can carry
    env = build_env([one_slice(600.0, rate=1e12)], QUIET, 1e6, 1e6, 0.01, 5e-4, 2000, 0, obs_scale=[1.0])
    _, m = env.step(0)
    assert m.accounting.arrived.tolist() == [1]
    assert m.accounting.failed.tolist() == [1]
    assert m.ssr.tolist() == [0.0]


def _stream(seed, actions, backend=None, steps_slots=200):
    env = env_from_config(default_env_config(seed=seed, slots_per_step=steps_slots), backend=backend, audit=True)
    out = []
    for a in actions:
        obs, m = env.step(int(a))
        out.append((obs.arrived_packets.tolist(), m.se, m.ssr.tolist(), m.utility,
                    {k: v.tolist() for k, v in m.audit.items()}))
    return out


def test_same_seed_same_stream():
    actions = np.random.default_rng(0).integers(36, size=6)
    assert _stream(5, actions) == _stream(5, actions)


def test_different_seeds_differ():
    actions = [17] * 3
    assert _stream(1, actions) != _stream(2, actions)


def test_compiled_and_python_kernels_agree_bitwise():
    pytest.importorskip("ganslice.env._slots")
    actions = np.random.default_rng(1).integers(36, size=5)
    assert _stream(3, actions, "cython") == _stream(3, actions, "python")


@pytest.mark.parametrize("seed", [0, 1])
def test_step_invariants(seed):
    env = env_from_config(default_env_config(seed=seed, slots_per_step=500), audit=True)
    rng = np.random.default_rng(seed)
    for _ in range(8):
        obs, m = env.step(int(rng.integers(36)))
        a = m.accounting
        np.testing.assert_array_equal(a.arrived, a.delivered_ok + a.failed + a.dropped + a.queued)
        assert np.all((m.ssr >= 0) & (m.ssr <= 1))
        assert m.se >= 0
        assert m.utility == env.alpha * m.se + float(np.dot(env.beta, m.ssr))
        assert np.all((obs.normalized >= 0) & (obs.normalized <= 1))
        ok = m.audit["outcome"] == 0
        assert np.all(m.audit["rate_ok"][ok] == 1.0)
        assert np.all(m.audit["finish"][ok] <= m.audit["deadline"][ok])


def test_slice_spec_json_roundtrip():
    for s in default_slices("large", beta=(1, 4, 6)):
        assert SliceSpec.from_dict(s.to_dict()) == s


def test_obs_scale_is_recorded_and_reusable():
    cfg = default_env_config(seed=1, slots_per_step=50)
    env = env_from_config(cfg)
    scale = env.obs_scale.copy()
    assert np.all(scale >= 1.0)
    env2 = env_from_config({**cfg, "obs_scale": scale.tolist()})
    np.testing.assert_array_equal(env2.obs_scale, scale)
