"""Load-condition generation and the multiplicative measurement noise model."""

import numpy as np
import pytest

from conftest import random_resistances, random_topology
from dhfit.estimation import build_system
from dhfit.experiments import reference_scenario
from dhfit.hydraulics import (
    LoadCondition,
    ResistanceVector,
    min_required_dp,
    solve_supply_flows,
)
from dhfit.scenario import (
    DEFAULT_SUPPLY_PRESSURE,
    NoiseModel,
    ScenarioConfig,
    apply_noise,
    apply_noise_sequence,
    generate_load_conditions,
)


def test_scenario_config_validation():
    with pytest.raises(ValueError):
        ScenarioConfig(flow_range=(0.0, 1.0))
    with pytest.raises(ValueError):
        ScenarioConfig(flow_range=(2.0, 1.0))
    with pytest.raises(ValueError):
        ScenarioConfig(dp_headroom=(0.5, 2.0))
    with pytest.raises(ValueError):
        ScenarioConfig(dp_headroom=(1.5, 1.2))
    with pytest.raises(ValueError):
        ScenarioConfig(count=0)


def test_noise_model_validation():
    NoiseModel(0.0)
    with pytest.raises(ValueError):
        NoiseModel(-0.1)
    with pytest.raises(ValueError):
        NoiseModel(1.0)


def test_generate_produces_feasible_indexed_conditions():
    ref = reference_scenario()
    cfg = ScenarioConfig(count=4, seed=9)
    conds = generate_load_conditions(ref.network, ref.resistances, cfg)
    assert len(conds) == 4
    for t, lc in enumerate(conds, start=1):
        assert lc.index == t
        assert lc.p_alpha == DEFAULT_SUPPLY_PRESSURE
        assert np.all(lc.boundary_flows >= cfg.flow_range[0])
        assert np.all(lc.boundary_flows <= cfg.flow_range[1])
        assert np.all(lc.valve_settings > 0.0)
        assert np.all(lc.valve_settings <= 1.0)
        flows = solve_supply_flows(ref.network, lc.boundary_flows)
        floor = min_required_dp(ref.network, ref.resistances, flows)
        assert floor <= lc.dp <= 2.0 * floor + 1e-9 * floor


def test_generate_is_deterministic():
    ref = reference_scenario()
    cfg = ScenarioConfig(count=3, seed=1234)
    a = generate_load_conditions(ref.network, ref.resistances, cfg)
    b = generate_load_conditions(ref.network, ref.resistances, cfg)
    for x, y in zip(a, b):
        assert np.array_equal(x.boundary_flows, y.boundary_flows)
        assert np.array_equal(x.valve_settings, y.valve_settings)
        assert x.p_alpha == y.p_alpha and x.p_beta == y.p_beta


def test_generate_degenerate_ranges(single_edge_net):
    s = ResistanceVector(supply=[1.0], valves=[1.0])
    cfg = ScenarioConfig(
        flow_range=(2.0, 2.0), dp_headroom=(1.0, 1.0), count=1, seed=0
    )
    (lc,) = generate_load_conditions(single_edge_net, s, cfg)
    assert lc.boundary_flows[0] == 2.0
    # at zero headroom the single valve is the binding one
    assert lc.valve_settings[0] == pytest.approx(1.0, rel=1e-12)
    # 2 pipe drops of 4 plus a valve drop of 4
    assert lc.dp == pytest.approx(12.0, rel=1e-12)


def test_generated_conditions_satisfy_path_equations():
    # the symmetric-model system evaluated at the pair-average truths must
    # reproduce every differential exactly for noise-free conditions
    ref = reference_scenario()
    conds = generate_load_conditions(
        ref.network, ref.resistances, ScenarioConfig(count=6, seed=3)
    )
    system = build_system(ref.network, conds)
    residual = system.phi @ ref.symmetric_truth - system.y
    assert np.max(np.abs(residual)) <= 1e-9 * np.max(np.abs(system.y))


def test_generate_on_random_networks():
    rng = np.random.default_rng(77)
    for _ in range(10):
        net = random_topology(rng)
        s = random_resistances(rng, net, asymmetric=True)
        conds = generate_load_conditions(
            net, s, ScenarioConfig(count=3, seed=0), rng=rng
        )
        for lc in conds:
            assert np.all(lc.valve_settings <= 1.0)
            assert np.all(lc.boundary_flows > 0.0)
            assert lc.dp > 0.0


def test_apply_noise_zero_epsilon_is_identity():
    lc = LoadCondition(2, [1.0, 2.0], [0.5, 0.75], 10.0, 4.0)
    noisy = apply_noise(lc, NoiseModel(0.0), rng=np.random.default_rng(0))
    assert np.array_equal(noisy.boundary_flows, lc.boundary_flows)
    assert np.array_equal(noisy.valve_settings, lc.valve_settings)
    assert noisy.p_alpha == lc.p_alpha
    assert noisy.p_beta == lc.p_beta
    assert noisy.index == lc.index


def test_apply_noise_respects_bounds_and_clamp():
    rng = np.random.default_rng(4)
    noise = NoiseModel(0.05)
    lc = LoadCondition(1, [100.0, 150.0], [0.5, 1.0], 1000.0, 400.0)
    for _ in range(500):
        noisy = apply_noise(lc, noise, rng)
        assert np.all(np.abs(noisy.boundary_flows - lc.boundary_flows)
                      <= 0.05 * lc.boundary_flows + 1e-12)
        assert np.all(noisy.valve_settings <= 1.0)
        assert np.all(np.abs(noisy.valve_settings - lc.valve_settings)
                      <= 0.05 * lc.valve_settings + 1e-12)
        assert abs(noisy.p_alpha - 1000.0) <= 50.0
        assert abs(noisy.p_beta - 400.0) <= 20.0


def test_apply_noise_does_not_mutate_input():
    lc = LoadCondition(1, [100.0], [0.5], 10.0, 4.0)
    apply_noise(lc, NoiseModel(0.1), rng=np.random.default_rng(1))
    assert lc.boundary_flows[0] == 100.0
    assert lc.valve_settings[0] == 0.5


def test_apply_noise_draw_order_is_pinned():
    # flows in valve order, then valve settings, then p_alpha, then p_beta
    lc = LoadCondition(1, [1.0, 2.0, 3.0], [0.5, 0.6, 0.7], 10.0, 4.0)
    noisy = apply_noise(lc, NoiseModel(0.05), rng=np.random.default_rng(99))
    r = np.random.default_rng(99)
    qb = lc.boundary_flows * r.uniform(0.95, 1.05, 3)
    u = np.minimum(1.0, lc.valve_settings * r.uniform(0.95, 1.05, 3))
    pa = lc.p_alpha * r.uniform(0.95, 1.05)
    pb = lc.p_beta * r.uniform(0.95, 1.05)
    assert np.array_equal(noisy.boundary_flows, qb)
    assert np.array_equal(noisy.valve_settings, u)
    assert noisy.p_alpha == pa
    assert noisy.p_beta == pb


def test_apply_noise_is_unbiased_on_average():
    rng = np.random.default_rng(0)
    noise = NoiseModel(0.01)
    lc = LoadCondition(1, [100.0], [0.5], 10.0, 4.0)
    draws = np.array(
        [apply_noise(lc, noise, rng).boundary_flows[0] for _ in range(20000)]
    )
    assert abs(draws.mean() - 100.0) <= 0.1


def test_apply_noise_sequence_shares_one_stream():
    lcs = [
        LoadCondition(1, [1.0], [0.5], 10.0, 4.0),
        LoadCondition(2, [2.0], [0.6], 10.0, 5.0),
    ]
    noise = NoiseModel(0.05, seed=123)
    batch = apply_noise_sequence(lcs, noise)
    r = np.random.default_rng(123)
    first = apply_noise(lcs[0], noise, r)
    second = apply_noise(lcs[1], noise, r)
    assert np.array_equal(batch[0].boundary_flows, first.boundary_flows)
    assert np.array_equal(batch[1].boundary_flows, second.boundary_flows)
    assert batch[1].p_beta == second.p_beta
