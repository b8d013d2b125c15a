"""Reference scenario, Monte-Carlo harness and summary serialization."""

import numpy as np
import pytest

from dhfit.estimation import column_labels
from dhfit.experiments import (
    BoxplotStats,
    ExperimentConfig,
    monte_carlo,
    read_boxplot_csv,
    read_quantiles_csv,
    reference_scenario,
    render_boxplot_svg,
    render_ci_svg,
    run_trial,
    trial_seed,
    write_boxplot_csv,
    write_quantiles_csv,
)
from dhfit.topology import validate_topology

REF = reference_scenario()


def test_reference_scenario_shape_and_values():
    assert validate_topology(REF.network).ok
    assert REF.network.n_valves == 6
    assert REF.network.n_supply_edges == 11
    assert np.array_equal(
        REF.s_true_valves, np.array([0.1, 0.3, 0.2, 0.1, 0.4, 0.1])
    )
    assert REF.s_true_valves[1] == 0.3
    # the two trees differ only on the two designated pipe pairs
    diff = np.flatnonzero(REF.s_true_supply != REF.s_true_return)
    assert list(diff) == [2, 8]
    assert REF.s_true_supply[2] + REF.s_true_return[2] == pytest.approx(0.1357)
    assert REF.s_true_supply[8] + REF.s_true_return[8] == pytest.approx(3.657)


def test_reference_truth_vectors():
    assert np.array_equal(
        REF.truth, np.concatenate([REF.s_true_supply, REF.s_true_valves])
    )
    sym = REF.symmetric_truth
    assert sym[2] == pytest.approx((0.0767 + 0.059) / 2.0)
    assert sym[8] == pytest.approx((2.067 + 1.59) / 2.0)
    assert np.array_equal(sym[11:], REF.s_true_valves)
    assert REF.labels == column_labels(REF.network)
    assert not REF.resistances.symmetric


def test_experiment_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(condition_counts=())
    with pytest.raises(ValueError):
        ExperimentConfig(trials=0)
    with pytest.raises(ValueError):
        ExperimentConfig(epsilon=1.0)
    with pytest.raises(ValueError):
        ExperimentConfig(quantiles=(0.5, 0.25))


def test_trial_seed_is_stable_and_distinct():
    assert trial_seed(0, 10, 3) == trial_seed(0, 10, 3)
    seeds = {trial_seed(0, c, k) for c in (10, 25) for k in range(50)}
    assert len(seeds) == 100
    assert trial_seed(1, 10, 3) != trial_seed(0, 10, 3)


def test_run_trial_is_deterministic():
    a = run_trial(REF, 6, 0.01, seed=42)
    b = run_trial(REF, 6, 0.01, seed=42)
    assert np.array_equal(a.s_hat, b.s_hat)
    c = run_trial(REF, 6, 0.01, seed=43)
    assert not np.array_equal(a.s_hat, c.s_hat)


def test_run_trial_noise_free_recovers_truth():
    result = run_trial(REF, 4, 0.0, seed=trial_seed(0, 4, 0))
    sym = np.ones(17, dtype=bool)
    sym[[2, 8]] = False
    err = np.abs(result.s_hat - REF.truth)
    assert np.max(err[sym]) <= 1e-6
    # the mismatched pairs land on their pair averages instead
    assert result.s_hat[2] == pytest.approx((0.0767 + 0.059) / 2.0, abs=1e-9)
    assert result.s_hat[8] == pytest.approx((2.067 + 1.59) / 2.0, abs=1e-9)
    assert result.rank == 17


def test_run_trial_noisy_stays_close():
    result = run_trial(REF, 100, 0.01, seed=trial_seed(0, 100, 0))
    # valve 5 is the best-conditioned parameter in the study
    assert result.s_hat[15] == pytest.approx(0.4, abs=0.05)


def _tiny_summary():
    cfg = ExperimentConfig(
        condition_counts=(4, 6), trials=3, epsilon=0.01, seed=0
    )
    return monte_carlo(REF, cfg), cfg


def test_monte_carlo_summary_shape():
    summary, cfg = _tiny_summary()
    assert summary.condition_counts == (4, 6)
    assert summary.labels == REF.labels
    assert summary.quantile_table.shape == (2, 17, 5)
    # quantiles are monotone in probability
    assert np.all(np.diff(summary.quantile_table, axis=2) >= 0.0)
    assert summary.boxplot_count == 6
    assert len(summary.boxplots) == 17
    for b in summary.boxplots:
        assert b.q1 <= b.median <= b.q3
        assert b.lo_whisker <= b.q1 and b.q3 <= b.hi_whisker
        assert b.n_outliers >= 0


def test_monte_carlo_is_order_independent():
    summary, _ = _tiny_summary()
    flipped = monte_carlo(
        REF,
        ExperimentConfig(condition_counts=(6, 4), trials=3, epsilon=0.01, seed=0),
    )
    assert np.array_equal(summary.quantile_table[0], flipped.quantile_table[1])
    assert np.array_equal(summary.quantile_table[1], flipped.quantile_table[0])
    # largest condition count is the same, so boxplots agree too
    for a, b in zip(summary.boxplots, flipped.boxplots):
        assert a.median == b.median and a.q1 == b.q1 and a.q3 == b.q3


def test_monte_carlo_single_trial_collapses():
    cfg = ExperimentConfig(condition_counts=(4,), trials=1, epsilon=0.01, seed=1)
    summary = monte_carlo(REF, cfg)
    est = run_trial(REF, 4, 0.01, trial_seed(1, 4, 0)).s_hat
    for j in range(17):
        assert np.allclose(summary.quantile_table[0, j], est[j], atol=1e-12)
        assert summary.boxplots[j].median == pytest.approx(
            est[j] - REF.truth[j], abs=1e-12
        )


def test_interval_width_accessor():
    summary, _ = _tiny_summary()
    w = summary.interval_width("pipe_5", 4)
    j = summary.labels.index("pipe_5")
    assert w == pytest.approx(
        summary.quantile_table[0, j, -1] - summary.quantile_table[0, j, 0]
    )
    with pytest.raises(ValueError):
        summary.interval_width("pipe_5", 99)


def test_quantile_csv_round_trip(tmp_path):
    summary, cfg = _tiny_summary()
    path = tmp_path / "quantiles.csv"
    write_quantiles_csv(summary, path)
    rows = read_quantiles_csv(path)
    assert len(rows) == 17 * 2
    by_key = {(r[0], r[1]): r for r in rows}
    for j, label in enumerate(summary.labels):
        for i, count in enumerate(summary.condition_counts):
            label_, count_, probs, values = by_key[(label, count)]
            assert probs == cfg.quantiles
            assert np.array_equal(values, summary.quantile_table[i, j])


def test_boxplot_csv_round_trip(tmp_path):
    summary, _ = _tiny_summary()
    path = tmp_path / "boxplot.csv"
    write_boxplot_csv(summary, path)
    stats = read_boxplot_csv(path)
    assert len(stats) == 17
    for a, b in zip(stats, summary.boxplots):
        assert a.label == b.label
        assert a.median == b.median
        assert a.q1 == b.q1 and a.q3 == b.q3
        assert a.lo_whisker == b.lo_whisker and a.hi_whisker == b.hi_whisker
        assert a.n_outliers == b.n_outliers


def test_csv_readers_reject_foreign_files(tmp_path):
    path = tmp_path / "junk.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_quantiles_csv(path)
    with pytest.raises(ValueError):
        read_boxplot_csv(path)


def test_ci_svg_rendering_is_deterministic(tmp_path):
    summary, _ = _tiny_summary()
    csv_path = tmp_path / "quantiles.csv"
    write_quantiles_csv(summary, csv_path)
    rows = read_quantiles_csv(csv_path)
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    render_ci_svg(rows, "pipe_5", a, truth=0.57)
    render_ci_svg(rows, "pipe_5", b, truth=0.57)
    data = a.read_bytes()
    assert data.startswith(b"<?xml")
    assert data == b.read_bytes()
    with pytest.raises(ValueError):
        render_ci_svg(rows, "pipe_99", tmp_path / "c.svg")


def test_boxplot_svg_rendering(tmp_path):
    summary, _ = _tiny_summary()
    path = tmp_path / "box.svg"
    render_boxplot_svg(summary.boxplots, path)
    data = path.read_bytes()
    assert data.startswith(b"<?xml")
    assert b"</svg>" in data


def test_boxplot_stats_fields():
    b = BoxplotStats(
        label="x", median=0.0, q1=-1.0, q3=1.0,
        lo_whisker=-2.0, hi_whisker=2.0, n_outliers=3,
    )
    assert b.label == "x" and b.n_outliers == 3
