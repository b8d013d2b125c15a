"""Least-squares resistance estimation from boundary measurements.

Each valve path contributes one linear equation per load condition: the
reference differential pressure equals the path's pipe drops (counted once
per tree, with equal supply/return resistance assumed) plus the valve drop.
The drop kernels are computable from measured boundary data alone, so the
unknown resistances enter linearly and stack into Phi s = y.  The estimate
is the minimum-norm least-squares solution via an SVD pseudoinverse; the
same SVD yields the rank, condition number and nullspace that tell apart
identifiable and unidentifiable parameter combinations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hydraulics import FlowVector, LoadCondition, f_eval, solve_supply_flows
from .topology import BoundaryPath, NetworkTopology

#: Relative singular-value cutoff used for rank decisions.
DEFAULT_SV_CUTOFF = 1e-10
#: Nullspace coefficients below this magnitude are not reported.
COEFFICIENT_REPORT_THRESHOLD = 1e-6


@dataclass(eq=False)
class RegressionSystem:
    """Stacked linear system linking resistances to measured differentials.

    ``phi`` has one row per (condition, valve) in condition-major order,
    ``y`` repeats each condition's differential pressure across its block,
    ``column_map`` labels the columns: supply pipes first, then valves.
    """

    phi: np.ndarray
    y: np.ndarray
    column_map: tuple[str, ...]


@dataclass(eq=False)
class EstimationResult:
    """Minimum-norm least-squares estimate plus rank diagnostics."""

    s_hat: np.ndarray
    residual_norm: float
    rank: int
    condition_number: float
    nullspace_basis: np.ndarray
    column_map: tuple[str, ...]

    @property
    def nullspace_dim(self) -> int:
        return self.nullspace_basis.shape[1]


@dataclass(eq=False)
class IdentifiabilityReport:
    """Rank/nullspace diagnostic of a regression system.

    ``combinations`` holds, per nullspace direction, the labeled
    coefficients of the parameters that trade off against each other
    without changing any predicted measurement.
    """

    rank: int
    n_columns: int
    condition_number: float
    nullspace_basis: np.ndarray
    combinations: tuple[tuple[tuple[str, float], ...], ...]

    @property
    def full_rank(self) -> bool:
        return self.rank == self.n_columns

    @property
    def nullspace_dim(self) -> int:
        return self.n_columns - self.rank

    def describe(self) -> list[str]:
        lines = []
        for combo in self.combinations:
            terms = " ".join(
                "%s%.4f*%s" % ("+" if c >= 0 else "-", abs(c), label)
                for label, c in combo
            )
            lines.append(terms.lstrip("+"))
        return lines


def column_labels(net: NetworkTopology) -> tuple[str, ...]:
    """Parameter labels in estimation order: pipe_1..pipe_P, valve_1..valve_V."""
    pipes = tuple("pipe_%d" % (j + 1) for j in range(net.n_supply_edges))
    valves = tuple("valve_%d" % (v + 1) for v in range(net.n_valves))
    return pipes + valves


def regressor_row(path: BoundaryPath, flows: FlowVector, u_v: float) -> np.ndarray:
    """One regression row for one valve path under one condition.

    Supply-pipe columns on the path get twice the open-pipe kernel (the
    mirrored return pipe contributes the same drop with both sign flips
    cancelling), the valve column gets the kernel at its measured opening,
    every other column is zero.
    """
    n_pipes = flows.values.size
    row = np.zeros(n_pipes + flows.boundary.size)
    if path.supply_edges:
        idx = list(path.supply_edges)
        qe = flows.values[idx]
        row[idx] = 2.0 * qe * np.abs(qe)
    q_v = flows.boundary[path.valve]
    row[n_pipes + path.valve] = f_eval(q_v, u_v)
    return row


def build_system(
    net: NetworkTopology, conditions: list[LoadCondition]
) -> RegressionSystem:
    """Assemble the stacked regression from measured load conditions.

    Supply flows are recomputed from each condition's (possibly noisy)
    boundary flows; nothing but boundary measurements enters the system.
    """
    net.require_valid()
    if not conditions:
        raise ValueError("cannot build a regression system from zero conditions")
    n_b = net.n_valves
    for lc in conditions:
        if lc.boundary_flows.size != n_b:
            raise ValueError(
                "condition %d has %d boundary flows, network has %d valves"
                % (lc.index, lc.boundary_flows.size, n_b)
            )
    n_s = net.n_supply_edges + n_b
    phi = np.zeros((len(conditions) * n_b, n_s))
    y = np.zeros(len(conditions) * n_b)
    for i, lc in enumerate(conditions):
        flows = solve_supply_flows(net, lc.boundary_flows)
        block = slice(i * n_b, (i + 1) * n_b)
        y[block] = lc.dp
        for path in net.boundary_paths:
            phi[i * n_b + path.valve] = regressor_row(
                path, flows, lc.valve_settings[path.valve]
            )
    return RegressionSystem(phi=phi, y=y, column_map=column_labels(net))


def _svd_analysis(phi: np.ndarray, tol: float):
    m, n = phi.shape
    # the reduced V is complete whenever m >= n; otherwise the nullspace
    # needs the full right singular basis
    _, sigma, vt = np.linalg.svd(phi, full_matrices=(m < n))
    if sigma.size and sigma[0] > 0:
        rank = int(np.sum(sigma > tol * sigma[0]))
        cond = float(sigma[0] / sigma[-1]) if sigma[-1] > 0 else float("inf")
    else:
        rank, cond = 0, float("inf")
    return sigma, vt, rank, cond


def estimate(system: RegressionSystem, tol: float = DEFAULT_SV_CUTOFF) -> EstimationResult:
    """Minimum-norm least-squares resistance estimate.

    Singular directions below ``tol`` times the largest singular value are
    truncated, so the returned vector has no component in the (numerical)
    nullspace; rank-deficient systems yield the minimum-norm solution
    rather than an error.
    """
    phi, y = system.phi, system.y
    if phi.size == 0 or phi.shape[0] != y.size:
        raise ValueError("regression system is empty or inconsistent")
    u, sigma, vt = np.linalg.svd(phi, full_matrices=(phi.shape[0] < phi.shape[1]))
    if sigma.size and sigma[0] > 0:
        rank = int(np.sum(sigma > tol * sigma[0]))
        cond = float(sigma[0] / sigma[-1]) if sigma[-1] > 0 else float("inf")
    else:
        rank, cond = 0, float("inf")
    coeff = (u[:, :rank].T @ y) / sigma[:rank]
    s_hat = vt[:rank].T @ coeff
    residual = float(np.linalg.norm(phi @ s_hat - y))
    return EstimationResult(
        s_hat=s_hat,
        residual_norm=residual,
        rank=rank,
        condition_number=cond,
        nullspace_basis=vt[rank:].T.copy(),
        column_map=system.column_map,
    )


def identifiability(
    system: RegressionSystem, tol: float = DEFAULT_SV_CUTOFF
) -> IdentifiabilityReport:
    """Numerical-rank diagnostic: which parameter combinations are free.

    A full-rank system pins every parameter uniquely; otherwise each
    nullspace direction is reported as the labeled combination of columns
    (coefficients above ``COEFFICIENT_REPORT_THRESHOLD``) that the data
    cannot separate.
    """
    phi = system.phi
    if phi.size == 0:
        raise ValueError("regression system is empty")
    _, vt, rank, cond = _svd_analysis(phi, tol)
    basis = vt[rank:].T
    combos = []
    for k in range(basis.shape[1]):
        vec = basis[:, k]
        lead = np.argmax(np.abs(vec))
        if vec[lead] < 0:  # sign-normalize for stable reporting
            vec = -vec
            basis[:, k] = vec
        combo = tuple(
            (system.column_map[j], float(vec[j]))
            for j in range(vec.size)
            if abs(vec[j]) > COEFFICIENT_REPORT_THRESHOLD
        )
        combos.append(combo)
    return IdentifiabilityReport(
        rank=rank,
        n_columns=phi.shape[1],
        condition_number=cond,
        nullspace_basis=basis,
        combinations=tuple(combos),
    )
