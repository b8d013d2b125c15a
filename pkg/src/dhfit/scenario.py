"""Randomized load-condition generation and the measurement noise model.

Conditions are drawn independently: consumer flows uniform over a range,
then the plant differential pressure as a headroom multiple of the smallest
feasible differential for those flows, then the valve openings that realize
it.  All randomness comes from one numpy Generator so a seed pins the whole
scenario.  Measurement noise is multiplicative uniform: every recorded
scalar x is replaced by a draw from [x(1-eps), x(1+eps)], independently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hydraulics import (
    LoadCondition,
    ResistanceVector,
    min_required_dp,
    required_valve_positions,
    solve_supply_flows,
)
from .topology import NetworkTopology

#: Fixed supply reference pressure used for generated conditions.  Pressures
#: here are gauge values against an arbitrary network datum: only the
#: differential p_alpha - p_beta carries information, so the anchor is a
#: recording convention.  It sits on the scale of the bundled reference
#: network's typical differential, which keeps the multiplicative pressure
#: noise of the studies proportionate to the signal; the return reference can
#: dip below the datum on heavy-load draws.
DEFAULT_SUPPLY_PRESSURE = 4.0e5


@dataclass(frozen=True)
class NoiseModel:
    """Multiplicative uniform measurement noise of half-width ``epsilon``."""

    epsilon: float
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must lie in [0, 1)")


@dataclass(frozen=True)
class ScenarioConfig:
    """Sampling plan for a batch of load conditions.

    Attributes
    ----------
    flow_range:
        (low, high) for the uniform per-valve consumer flow draw; low > 0.
    dp_headroom:
        (low, high) multiplier range applied to the minimum feasible
        differential pressure; low >= 1 keeps every draw feasible.
    count:
        Number of conditions to generate.
    seed:
        Seed for the generator (anything ``numpy.random.default_rng``
        accepts).
    p_alpha:
        Supply reference pressure recorded on every condition.
    """

    flow_range: tuple[float, float] = (100.0, 200.0)
    dp_headroom: tuple[float, float] = (1.0, 2.0)
    count: int = 4
    seed: int = 0
    p_alpha: float = DEFAULT_SUPPLY_PRESSURE

    def __post_init__(self) -> None:
        lo, hi = self.flow_range
        if not (0.0 < lo <= hi):
            raise ValueError("flow_range must satisfy 0 < low <= high")
        mlo, mhi = self.dp_headroom
        if not (1.0 <= mlo <= mhi):
            raise ValueError("dp_headroom must satisfy 1 <= low <= high")
        if self.count < 1:
            raise ValueError("count must be at least 1")


def generate_load_conditions(
    net: NetworkTopology,
    s: ResistanceVector,
    cfg: ScenarioConfig,
    rng: np.random.Generator | None = None,
) -> list[LoadCondition]:
    """Draw ``cfg.count`` independent, feasible, noise-free conditions.

    Per condition the draw order is fixed: one uniform flow per valve (in
    valve order), then one headroom multiplier.  Conditions are indexed
    1..count.  Deterministic for a given (network, resistances, config).
    """
    net.require_valid()
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    lo, hi = cfg.flow_range
    mlo, mhi = cfg.dp_headroom
    out = []
    for t in range(1, cfg.count + 1):
        qb = rng.uniform(lo, hi, net.n_valves)
        m = rng.uniform(mlo, mhi)
        flows = solve_supply_flows(net, qb)
        dp = m * min_required_dp(net, s, flows)
        u = required_valve_positions(net, s, flows, dp)
        out.append(
            LoadCondition(
                index=t,
                boundary_flows=qb,
                valve_settings=u.u,
                p_alpha=cfg.p_alpha,
                p_beta=cfg.p_alpha - dp,
            )
        )
    return out


def apply_noise(
    lc: LoadCondition,
    noise: NoiseModel,
    rng: np.random.Generator | None = None,
) -> LoadCondition:
    """Corrupt one condition's recorded scalars with multiplicative noise.

    Draw order is fixed (flows in valve order, then valve settings, then
    p_alpha, then p_beta) so a shared generator reproduces across runs.
    Noisy valve settings are clamped back to at most 1 to stay inside the
    model's domain.  The input condition is never mutated.
    """
    if rng is None:
        rng = np.random.default_rng(noise.seed)
    eps = noise.epsilon
    n = lc.boundary_flows.size
    qb = lc.boundary_flows * rng.uniform(1.0 - eps, 1.0 + eps, n)
    u = np.minimum(1.0, lc.valve_settings * rng.uniform(1.0 - eps, 1.0 + eps, n))
    p_alpha = lc.p_alpha * rng.uniform(1.0 - eps, 1.0 + eps)
    p_beta = lc.p_beta * rng.uniform(1.0 - eps, 1.0 + eps)
    return LoadCondition(
        index=lc.index,
        boundary_flows=qb,
        valve_settings=u,
        p_alpha=p_alpha,
        p_beta=p_beta,
    )


def apply_noise_sequence(
    conditions: list[LoadCondition],
    noise: NoiseModel,
    rng: np.random.Generator | None = None,
) -> list[LoadCondition]:
    """Apply :func:`apply_noise` to each condition with one shared generator."""
    if rng is None:
        rng = np.random.default_rng(noise.seed)
    return [apply_noise(lc, noise, rng) for lc in conditions]
