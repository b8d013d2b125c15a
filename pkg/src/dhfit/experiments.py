"""Reproducible estimation studies on the bundled reference network.

The reference network is a two-branch tree with six consumers:

    0 --p3--> 7 --p6--> 8 --p11-> 1
                        8 --p1--> 10 --p5--> 2
                                  10 --p8--> 3
              7 --p2--> 9 --p9--> 4
                        9 --p7--> 11 --p10-> 5
                                  11 --p4--> 6

Consumers 1..6 each carry one boundary valve; junctions 7..11 all have
degree three.  Pipe labels pipe_1..pipe_11 follow the edge-list order,
which also orders the resistance table below.  Two pipe pairs are
deliberately asymmetric between the supply and return trees (pipe_3, the
trunk, and pipe_9, consumer 4's feed); a symmetric-model fit of data from
this network recovers their pair averages, which is what the boxplot
study exhibits.

The placement of resistances on the tree is chosen so that the noisy
studies are well conditioned: the large asymmetric pair sits on a shallow
consumer feed, the bulky symmetric values hang off the low-slack branch,
and every consumer path needs a comparable share of the reference
differential pressure.  That keeps valve openings away from their noise-
amplifying extremes across randomized load conditions.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .estimation import EstimationResult, build_system, column_labels, estimate
from .hydraulics import ResistanceVector
from .scenario import (
    NoiseModel,
    ScenarioConfig,
    apply_noise_sequence,
    generate_load_conditions,
)
from .topology import NetworkTopology

REFERENCE_SUPPLY_EDGES = (
    (8, 10),
    (7, 9),
    (0, 7),
    (11, 6),
    (10, 2),
    (7, 8),
    (9, 11),
    (10, 3),
    (9, 4),
    (11, 5),
    (8, 1),
)
REFERENCE_VALVE_NODES = (1, 2, 3, 4, 5, 6)
REFERENCE_VALVE_RESISTANCES = (0.1, 0.3, 0.2, 0.1, 0.4, 0.1)
REFERENCE_SUPPLY_RESISTANCES = (
    0.0071,
    0.00028,
    0.0767,
    0.54,
    0.57,
    0.031,
    0.39,
    0.7,
    2.067,
    0.39,
    0.64,
)
REFERENCE_RETURN_RESISTANCES = (
    0.0071,
    0.00028,
    0.059,
    0.54,
    0.57,
    0.031,
    0.39,
    0.7,
    1.59,
    0.39,
    0.64,
)


@dataclass(eq=False)
class ReferenceScenario:
    """A network together with its ground-truth resistances."""

    network: NetworkTopology
    s_true_supply: np.ndarray
    s_true_return: np.ndarray
    s_true_valves: np.ndarray

    def __post_init__(self) -> None:
        self.s_true_supply = np.asarray(self.s_true_supply, dtype=float)
        self.s_true_return = np.asarray(self.s_true_return, dtype=float)
        self.s_true_valves = np.asarray(self.s_true_valves, dtype=float)

    @property
    def resistances(self) -> ResistanceVector:
        return ResistanceVector(
            supply=self.s_true_supply,
            valves=self.s_true_valves,
            return_pipes=self.s_true_return,
        )

    @property
    def truth(self) -> np.ndarray:
        """Supply-side truths in estimation order (pipes then valves)."""
        return np.concatenate([self.s_true_supply, self.s_true_valves])

    @property
    def symmetric_truth(self) -> np.ndarray:
        """What a symmetric-model fit converges to: pair averages then valves."""
        return np.concatenate(
            [(self.s_true_supply + self.s_true_return) / 2.0, self.s_true_valves]
        )

    @property
    def labels(self) -> tuple[str, ...]:
        return column_labels(self.network)


def reference_scenario() -> ReferenceScenario:
    """The bundled 6-consumer, 11-pipe study network with its truths."""
    net = NetworkTopology(
        supply_edges=REFERENCE_SUPPLY_EDGES,
        boundary_valves=REFERENCE_VALVE_NODES,
    )
    net.require_valid()
    return ReferenceScenario(
        network=net,
        s_true_supply=np.array(REFERENCE_SUPPLY_RESISTANCES),
        s_true_return=np.array(REFERENCE_RETURN_RESISTANCES),
        s_true_valves=np.array(REFERENCE_VALVE_RESISTANCES),
    )


@dataclass(frozen=True)
class ExperimentConfig:
    """Monte-Carlo plan: trial counts, noise level and quantile grid."""

    condition_counts: tuple[int, ...] = (10, 25, 50, 100)
    trials: int = 1000
    epsilon: float = 0.01
    seed: int = 0
    quantiles: tuple[float, ...] = (0.025, 0.25, 0.5, 0.75, 0.975)

    def __post_init__(self) -> None:
        if not self.condition_counts or any(t < 1 for t in self.condition_counts):
            raise ValueError("condition_counts must be positive integers")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must lie in [0, 1)")
        qs = tuple(float(q) for q in self.quantiles)
        if any(not 0.0 <= q <= 1.0 for q in qs) or list(qs) != sorted(qs):
            raise ValueError("quantiles must be sorted probabilities")
        object.__setattr__(self, "quantiles", qs)
        object.__setattr__(
            self, "condition_counts", tuple(int(t) for t in self.condition_counts)
        )


@dataclass(eq=False)
class BoxplotStats:
    """Five-number summary of one parameter's estimation deviations."""

    label: str
    median: float
    q1: float
    q3: float
    lo_whisker: float
    hi_whisker: float
    n_outliers: int


@dataclass(eq=False)
class ExperimentSummary:
    """Quantiles of the estimates per (parameter, condition count).

    ``quantile_table[i, j, k]`` is the k-th configured quantile of
    parameter j's estimates over all trials at condition_counts[i].
    ``boxplots`` summarizes (estimate - supply-side truth) at the largest
    condition count.
    """

    condition_counts: tuple[int, ...]
    quantile_probs: tuple[float, ...]
    labels: tuple[str, ...]
    quantile_table: np.ndarray
    boxplot_count: int
    boxplots: list[BoxplotStats]

    def interval_width(self, label: str, count: int) -> float:
        """Outer-quantile interval width for one parameter at one count."""
        i = self.condition_counts.index(count)
        j = self.labels.index(label)
        return float(self.quantile_table[i, j, -1] - self.quantile_table[i, j, 0])


def trial_seed(base_seed: int, count: int, trial: int) -> int:
    """Deterministic per-trial seed, independent of execution order."""
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=(count, trial))
    return int(ss.generate_state(1, np.uint64)[0])


def run_trial(
    scenario: ReferenceScenario,
    count: int,
    epsilon: float,
    seed: int,
    tol: float = 1e-10,
) -> EstimationResult:
    """Generate ``count`` conditions, corrupt them, fit the symmetric model.

    The seed is split into one stream for condition generation and one for
    measurement noise, so the same seed always reproduces the same trial.
    """
    gen_seq, noise_seq = np.random.SeedSequence(seed).spawn(2)
    cfg = ScenarioConfig(count=count, seed=seed)
    conditions = generate_load_conditions(
        scenario.network, scenario.resistances, cfg, rng=np.random.default_rng(gen_seq)
    )
    if epsilon > 0.0:
        conditions = apply_noise_sequence(
            conditions, NoiseModel(epsilon), rng=np.random.default_rng(noise_seq)
        )
    return estimate(build_system(scenario.network, conditions), tol=tol)


def monte_carlo(scenario: ReferenceScenario, cfg: ExperimentConfig) -> ExperimentSummary:
    """Repeated-trial study of estimator spread versus data volume.

    Trials are mutually independent with per-(count, trial) seeds, so the
    summary does not depend on the order in which they run.  Boxplot
    deviations are taken against the supply-side truths at the largest
    condition count; symmetric parameters center on zero while pipes with
    asymmetric return twins center on their pair average instead.
    """
    labels = scenario.labels
    n_s = len(labels)
    largest = max(cfg.condition_counts)
    table = np.empty((len(cfg.condition_counts), n_s, len(cfg.quantiles)))
    deviations = None
    for i, count in enumerate(cfg.condition_counts):
        estimates = np.empty((cfg.trials, n_s))
        for k in range(cfg.trials):
            result = run_trial(
                scenario, count, cfg.epsilon, trial_seed(cfg.seed, count, k)
            )
            estimates[k] = result.s_hat
        table[i] = np.quantile(estimates, cfg.quantiles, axis=0).T
        if count == largest:
            deviations = estimates - scenario.truth
    boxplots = [
        _boxplot_stats(labels[j], deviations[:, j]) for j in range(n_s)
    ]
    return ExperimentSummary(
        condition_counts=cfg.condition_counts,
        quantile_probs=cfg.quantiles,
        labels=labels,
        quantile_table=table,
        boxplot_count=largest,
        boxplots=boxplots,
    )


def _boxplot_stats(label: str, values: np.ndarray) -> BoxplotStats:
    q1, med, q3 = np.quantile(values, (0.25, 0.5, 0.75))
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = values[(values >= lo_fence) & (values <= hi_fence)]
    # whiskers sit on the most extreme points inside the Tukey fences
    lo_whisker = float(inside.min()) if inside.size else float(q1)
    hi_whisker = float(inside.max()) if inside.size else float(q3)
    n_out = int(np.sum((values < lo_fence) | (values > hi_fence)))
    return BoxplotStats(
        label=label,
        median=float(med),
        q1=float(q1),
        q3=float(q3),
        lo_whisker=lo_whisker,
        hi_whisker=hi_whisker,
        n_outliers=n_out,
    )


# -- CSV emission and re-reading -------------------------------------------


def _quantile_column(prob: float) -> str:
    return "q%03d" % round(prob * 1000)


def write_quantiles_csv(summary: ExperimentSummary, path) -> None:
    """One row per (parameter, condition count), quantiles as columns."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["edge", "T"] + [_quantile_column(p) for p in summary.quantile_probs]
        )
        for j, label in enumerate(summary.labels):
            for i, count in enumerate(summary.condition_counts):
                w.writerow(
                    [label, count]
                    + ["%.17g" % v for v in summary.quantile_table[i, j]]
                )


def write_boxplot_csv(summary: ExperimentSummary, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["edge", "median", "q1", "q3", "lo_whisker", "hi_whisker", "n_outliers"]
        )
        for b in summary.boxplots:
            w.writerow(
                [b.label]
                + ["%.17g" % v for v in (b.median, b.q1, b.q3, b.lo_whisker, b.hi_whisker)]
                + [b.n_outliers]
            )


def read_quantiles_csv(path):
    """Rows of the quantile CSV as (label, count, probs, values) tuples."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:2] != ["edge", "T"]:
        raise ValueError("not a quantile summary CSV: %s" % path)
    probs = tuple(int(c[1:]) / 1000.0 for c in rows[0][2:])
    out = []
    for row in rows[1:]:
        out.append((row[0], int(row[1]), probs, np.array([float(v) for v in row[2:]])))
    return out


def read_boxplot_csv(path) -> list[BoxplotStats]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "edge":
        raise ValueError("not a boxplot summary CSV: %s" % path)
    out = []
    for row in rows[1:]:
        out.append(
            BoxplotStats(
                label=row[0],
                median=float(row[1]),
                q1=float(row[2]),
                q3=float(row[3]),
                lo_whisker=float(row[4]),
                hi_whisker=float(row[5]),
                n_outliers=int(row[6]),
            )
        )
    return out


# -- static SVG figures ------------------------------------------------------


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # stable ids and no timestamps, so repeated renders agree
    matplotlib.rcParams["svg.hashsalt"] = "dhfit"
    return plt


_SAVE_KW = {"format": "svg", "metadata": {"Date": None}}


def render_ci_svg(rows, label: str, path, truth: float | None = None) -> None:
    """Quantile band versus condition count for one parameter.

    ``rows`` are :func:`read_quantiles_csv` entries for this label (or the
    matching slice of a fresh summary written through that format).
    """
    rows = sorted((r for r in rows if r[0] == label), key=lambda r: r[1])
    if not rows:
        raise ValueError("no quantile rows for %s" % label)
    counts = [r[1] for r in rows]
    lo = [r[3][0] for r in rows]
    hi = [r[3][-1] for r in rows]
    mid = [r[3][len(r[2]) // 2] for r in rows]
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.fill_between(counts, lo, hi, alpha=0.25, label="outer quantile band")
    ax.plot(counts, mid, marker="o", label="median estimate")
    if truth is not None:
        ax.axhline(truth, ls="--", lw=1.0, color="k", label="truth")
    ax.set_xlabel("load conditions")
    ax.set_ylabel(label)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def render_boxplot_svg(stats: list[BoxplotStats], path) -> None:
    """Deviation boxplots (estimate minus truth) for every parameter."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(max(6.0, 0.45 * len(stats)), 3.6))
    boxes = [
        {
            "label": b.label,
            "med": b.median,
            "q1": b.q1,
            "q3": b.q3,
            "whislo": b.lo_whisker,
            "whishi": b.hi_whisker,
            "fliers": [],
        }
        for b in stats
    ]
    ax.bxp(boxes, showfliers=False)
    ax.axhline(0.0, ls="--", lw=1.0, color="k")
    ax.set_ylabel("estimate - truth")
    ax.tick_params(axis="x", rotation=75, labelsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
