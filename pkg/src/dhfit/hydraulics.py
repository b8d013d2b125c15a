"""Steady-state hydraulics on a dual-tree network.

Pressure drops follow the shared quadratic kernel

    f(q, u) = q * |q| / u**2

multiplied by an edge resistance.  Pipes are fixed-open edges (u = 1);
valves expose u in (0, 1] as their control.  The kernel is antisymmetric in
q, strictly increasing in q, strictly decreasing in u, and diverges as the
valve closes, which is what makes every feasible network state solvable in
closed form on a tree: supply flows come from one linear solve against the
incidence matrix, return flows are their negatives, and valve positions
follow from the pressure budget left over on each consumer path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .topology import ALPHA, NetworkTopology, incidence_matrix

#: Relative residual bound accepted from the flow solve.
FLOW_RESIDUAL_RTOL = 1e-10
#: Relative disagreement between per-valve return pressures that flags an
#: inconsistent network state.
PRESSURE_CONSISTENCY_RTOL = 1e-8


class InfeasiblePressureError(ValueError):
    """The requested differential pressure cannot be met with u <= 1."""


class InconsistentStateError(ValueError):
    """Flows, valve positions and resistances do not satisfy the edge law."""


def f_eval(q, u):
    """Pressure-drop kernel f(q, u) = q|q| / u^2.

    Parameters
    ----------
    q:
        Signed flow, scalar or array.
    u:
        Opening in (0, 1], scalar or array (broadcast against ``q``).

    Returns
    -------
    float or numpy.ndarray
        Same shape as the broadcast inputs; scalar inputs give a float.
    """
    q = np.asarray(q, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0) or np.any(u > 1.0):
        raise ValueError("valve opening u must lie in (0, 1]")
    out = q * np.abs(q) / (u * u)
    return float(out) if out.ndim == 0 else out


def _f1(q: np.ndarray) -> np.ndarray:
    # kernel at u = 1, no domain checks; internal hot path
    return q * np.abs(q)


def pipe_resistance_from_physical(
    friction_factor: float, density: float, length: float, diameter: float
) -> float:
    """Resistance of a circular pipe from Darcy-Weisbach quantities.

    s = 2 * f_d * rho * L / (pi^2 * D^5), so that the head loss equals
    f(q, 1) * s for a volumetric flow q.
    """
    if friction_factor <= 0 or density <= 0 or length <= 0 or diameter <= 0:
        raise ValueError("pipe parameters must all be positive")
    return 2.0 * friction_factor * density * length / (np.pi**2 * diameter**5)


def valve_resistance_from_k(k: float) -> float:
    """Resistance s = 1 / k^2 of a valve with linear characteristic slope k."""
    if k <= 0:
        raise ValueError("valve coefficient k must be positive")
    return 1.0 / (k * k)


@dataclass(eq=False)
class ResistanceVector:
    """Edge resistances of one network.

    Attributes
    ----------
    supply:
        One positive value per supply pipe, in edge order.
    valves:
        One positive value per boundary valve, in valve order.
    return_pipes:
        Optional distinct return-pipe values (mirror edge order).  When
        None the return tree reuses ``supply`` (the symmetric case, which
        is also the model the estimator fits).
    """

    supply: np.ndarray
    valves: np.ndarray
    return_pipes: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.supply = np.atleast_1d(np.asarray(self.supply, dtype=float))
        self.valves = np.atleast_1d(np.asarray(self.valves, dtype=float))
        if self.return_pipes is not None:
            self.return_pipes = np.atleast_1d(
                np.asarray(self.return_pipes, dtype=float)
            )
            if self.return_pipes.shape != self.supply.shape:
                raise ValueError("return_pipes must match supply in length")
        for name, arr in (("supply", self.supply), ("valves", self.valves)):
            if arr.ndim != 1:
                raise ValueError(f"{name} resistances must be one-dimensional")
            if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} resistances must be positive and finite")
        if self.return_pipes is not None and (
            np.any(self.return_pipes <= 0) or not np.all(np.isfinite(self.return_pipes))
        ):
            raise ValueError("return resistances must be positive and finite")

    @property
    def symmetric(self) -> bool:
        return self.return_pipes is None or np.array_equal(
            self.return_pipes, self.supply
        )

    @property
    def return_side(self) -> np.ndarray:
        return self.supply if self.return_pipes is None else self.return_pipes

    @property
    def n_parameters(self) -> int:
        """Length of the symmetric-model parameter vector (pipes + valves)."""
        return self.supply.size + self.valves.size


@dataclass(eq=False)
class FlowVector:
    """Supply-edge flows plus the boundary (valve) flows that induced them."""

    values: np.ndarray
    boundary: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.atleast_1d(np.asarray(self.values, dtype=float))
        self.boundary = np.atleast_1d(np.asarray(self.boundary, dtype=float))


@dataclass(eq=False)
class ControlVector:
    """Valve openings, one per boundary valve, each in (0, 1]."""

    u: np.ndarray

    def __post_init__(self) -> None:
        self.u = np.atleast_1d(np.asarray(self.u, dtype=float))
        if np.any(self.u <= 0.0) or np.any(self.u > 1.0):
            raise ValueError("valve openings must lie in (0, 1]")


@dataclass(eq=False)
class PressureState:
    """Nodal pressures of a consistent network state."""

    p_alpha: float
    p_beta: float
    supply_nodal: np.ndarray
    return_nodal: np.ndarray


@dataclass(eq=False)
class LoadCondition:
    """One steady-state operating point as seen by the measurement system.

    Only boundary quantities are recorded: consumer flows, valve openings
    and the two reference-node pressures.  Interior flows and pressures are
    recoverable from these via the network model.
    """

    index: int
    boundary_flows: np.ndarray
    valve_settings: np.ndarray
    p_alpha: float
    p_beta: float

    def __post_init__(self) -> None:
        self.index = int(self.index)
        self.boundary_flows = np.atleast_1d(
            np.asarray(self.boundary_flows, dtype=float)
        )
        self.valve_settings = np.atleast_1d(
            np.asarray(self.valve_settings, dtype=float)
        )
        if self.boundary_flows.shape != self.valve_settings.shape:
            raise ValueError("boundary_flows and valve_settings must match in length")
        if np.any(self.valve_settings <= 0.0) or np.any(self.valve_settings > 1.0):
            raise ValueError("valve settings must lie in (0, 1]")
        self.p_alpha = float(self.p_alpha)
        self.p_beta = float(self.p_beta)

    @property
    def dp(self) -> float:
        """Differential pressure across the plant, p_alpha - p_beta."""
        return self.p_alpha - self.p_beta


def solve_supply_flows(net: NetworkTopology, boundary) -> FlowVector:
    """Supply-edge flows induced by the given boundary (consumer) flows.

    Solves the incidence-matrix balance: flow into each boundary-connected
    node equals its consumer draw, internal nodes balance to zero.  Return
    flows are the negatives of the supply flows and are never stored.
    """
    b = np.atleast_1d(np.asarray(boundary, dtype=float))
    if b.shape != (net.n_valves,):
        raise ValueError(
            "expected %d boundary flows, got %d" % (net.n_valves, b.size)
        )
    mat = incidence_matrix(net)
    rhs = np.zeros(net.n_supply_edges)
    for v, node in enumerate(net.boundary_valves):
        rhs[net.row_of_node[node]] = b[v]
    q = np.linalg.solve(mat, rhs)
    residual = np.max(np.abs(mat @ q - rhs)) if q.size else 0.0
    scale = max(1.0, float(np.max(np.abs(b))) if b.size else 0.0)
    if residual > FLOW_RESIDUAL_RTOL * scale:
        raise InconsistentStateError(
            "flow balance residual %.3e exceeds %.1e" % (residual, FLOW_RESIDUAL_RTOL)
        )
    return FlowVector(values=q, boundary=b.copy())


def _path_return_drops(net: NetworkTopology, s: ResistanceVector, q: np.ndarray):
    """Per-valve sums of return-side pipe drops along each boundary path."""
    return net.path_matrix @ (_f1(q) * s.return_side)


def _path_supply_drops(net: NetworkTopology, s: ResistanceVector, q: np.ndarray):
    return net.path_matrix @ (_f1(q) * s.supply)


def nodal_pressures(
    net: NetworkTopology,
    s: ResistanceVector,
    flows: FlowVector,
    u,
    p_alpha: float,
    rtol: float = PRESSURE_CONSISTENCY_RTOL,
) -> PressureState:
    """Propagate pressures through both trees from the supply reference.

    Every valve implies a return-reference pressure through its own path;
    a state is consistent only if they all agree (within ``rtol`` of the
    pressure scale).  Disagreement raises :class:`InconsistentStateError`.
    """
    net.require_valid()
    _check_shapes(net, s)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (net.n_valves,):
        raise ValueError("expected %d valve openings" % net.n_valves)

    q = flows.values
    supply_drop = _f1(q) * s.supply
    return_drop = _f1(q) * s.return_side

    supply_nodal = np.empty(net.n_nodes)
    supply_nodal[ALPHA] = p_alpha
    for j, parent, child in net.traversal:
        supply_nodal[child] = supply_nodal[parent] - supply_drop[j]

    valve_drop = f_eval(flows.boundary, u) * s.valves
    mirror_p = supply_nodal[list(net.boundary_valves)] - valve_drop
    candidates = mirror_p - _path_return_drops(net, s, q)

    scale = max(1.0, abs(p_alpha), float(np.max(np.abs(candidates))))
    spread = float(np.max(candidates) - np.min(candidates))
    if spread > rtol * scale:
        raise InconsistentStateError(
            "return reference pressure disagrees across valve paths "
            "(spread %.3e over scale %.3e)" % (spread, scale)
        )
    p_beta = float(np.mean(candidates))

    # water flows toward the return reference, so pressure rises away from it
    return_nodal = np.empty(net.n_nodes)
    return_nodal[0] = p_beta
    for j, parent, child in net.traversal:
        return_nodal[child] = return_nodal[parent] + return_drop[j]

    return PressureState(
        p_alpha=float(p_alpha),
        p_beta=p_beta,
        supply_nodal=supply_nodal,
        return_nodal=return_nodal,
    )


def min_required_dp(net: NetworkTopology, s: ResistanceVector, flows: FlowVector) -> float:
    """Smallest reference differential pressure that can carry ``flows``.

    The binding consumer is the one whose path drop plus fully-open valve
    drop is largest; any smaller differential would need some u > 1.
    Tends to zero as the boundary flows do.
    """
    net.require_valid()
    _check_shapes(net, s)
    q = flows.values
    path_drops = _path_supply_drops(net, s, q) + _path_return_drops(net, s, q)
    open_valve_drop = _f1(flows.boundary) * s.valves
    return float(np.max(path_drops + open_valve_drop))


def required_valve_positions(
    net: NetworkTopology, s: ResistanceVector, flows: FlowVector, dp: float
) -> ControlVector:
    """Valve openings that realize ``dp`` across the plant for given flows.

    Each valve absorbs whatever pressure its path does not use:
    f(q_v, u_v) * s_v = dp - (path pipe drops), giving
    u_v = q_v * sqrt(s_v / available).  Requires strictly positive
    boundary flows and dp >= the minimum feasible differential.
    """
    net.require_valid()
    _check_shapes(net, s)
    qb = flows.boundary
    if np.any(qb <= 0.0):
        raise ValueError("valve positions are only defined for positive boundary flows")
    q = flows.values
    path_drops = _path_supply_drops(net, s, q) + _path_return_drops(net, s, q)
    available = dp - path_drops
    needed = _f1(qb) * s.valves  # valve drop at u = 1
    if np.any(available < needed * (1.0 - 1e-9)):
        worst = int(np.argmax(needed - available))
        raise InfeasiblePressureError(
            "differential pressure %.6g below the feasible minimum %.6g "
            "(binding valve %d)" % (dp, min_required_dp(net, s, flows), worst)
        )
    u = qb * np.sqrt(s.valves / available)
    return ControlVector(u=np.minimum(u, 1.0))


def simulate(
    net: NetworkTopology,
    s: ResistanceVector,
    boundary,
    dp: float,
    p_alpha: float,
    index: int = 0,
) -> LoadCondition:
    """Noise-free steady state for given consumer flows and plant pressures.

    Returns the boundary view of the state (a :class:`LoadCondition`);
    interior pressures can be recovered with :func:`nodal_pressures`, which
    reproduces ``p_beta = p_alpha - dp`` exactly up to round-off.
    """
    flows = solve_supply_flows(net, boundary)
    if np.any(flows.boundary <= 0.0):
        raise ValueError("simulate requires strictly positive boundary flows")
    controls = required_valve_positions(net, s, flows, dp)
    return LoadCondition(
        index=index,
        boundary_flows=flows.boundary,
        valve_settings=controls.u,
        p_alpha=p_alpha,
        p_beta=p_alpha - dp,
    )


def _check_shapes(net: NetworkTopology, s: ResistanceVector) -> None:
    if s.supply.shape != (net.n_supply_edges,):
        raise ValueError(
            "expected %d supply-pipe resistances, got %d"
            % (net.n_supply_edges, s.supply.size)
        )
    if s.valves.shape != (net.n_valves,):
        raise ValueError(
            "expected %d valve resistances, got %d" % (net.n_valves, s.valves.size)
        )
