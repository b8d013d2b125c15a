"""Shared fixtures and random-structure helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from dhfit.hydraulics import ResistanceVector
from dhfit.topology import NetworkTopology


def make_small_net() -> NetworkTopology:
    """Three consumers behind two junctions (same tree as networks/small_tree.json).

    Node 4 feeds consumer 1 and junction 5; junction 5 feeds consumers 2 and 3.
    """
    return NetworkTopology(
        supply_edges=((0, 4), (4, 1), (4, 5), (5, 2), (5, 3)),
        boundary_valves=(1, 2, 3),
    )


def make_single_edge_net() -> NetworkTopology:
    """The smallest legal network: one pipe feeding one valved consumer."""
    return NetworkTopology(supply_edges=((0, 1),), boundary_valves=(1,))


@pytest.fixture
def small_net() -> NetworkTopology:
    return make_small_net()


@pytest.fixture
def single_edge_net() -> NetworkTopology:
    return make_single_edge_net()


def random_topology(rng: np.random.Generator, max_edges: int = 30) -> NetworkTopology:
    """Random valid network: every leaf valved, internal nodes of degree >= 3.

    Grows the tree by repeatedly either closing a frontier node as a valved
    consumer or giving it two or three children, then relabels nodes with a
    random permutation and shuffles edge and valve order so nothing in the
    suite depends on construction order.
    """
    edges: list[tuple[int, int]] = []
    valves: list[int] = []
    next_id = 1

    def claim() -> int:
        nonlocal next_id
        n = next_id
        next_id += 1
        return n

    root = claim()
    edges.append((0, root))
    frontier = [root]
    while frontier:
        node = frontier.pop()
        budget = max_edges - len(edges)
        if budget >= 2 and rng.random() < 0.55:
            k = min(int(rng.integers(2, 4)), budget)
            for _ in range(k):
                child = claim()
                edges.append((node, child))
                frontier.append(child)
            if rng.random() < 0.15:
                valves.append(node)  # consumers may sit on junctions too
        else:
            valves.append(node)

    perm = {0: 0}
    for old, new in zip(range(1, next_id), rng.permutation(np.arange(1, next_id))):
        perm[old] = int(new)
    edges = [(perm[a], perm[b]) for a, b in edges]
    valves = [perm[n] for n in valves]
    rng.shuffle(edges)
    rng.shuffle(valves)
    return NetworkTopology(supply_edges=tuple(edges), boundary_valves=tuple(valves))


def random_resistances(
    rng: np.random.Generator,
    net: NetworkTopology,
    asymmetric: bool = False,
    spread: tuple[float, float] = (-3.0, 0.5),
) -> ResistanceVector:
    """Log-uniform positive resistances; optionally distinct return pipes."""
    lo, hi = spread
    supply = 10.0 ** rng.uniform(lo, hi, net.n_supply_edges)
    valves = 10.0 ** rng.uniform(-1.5, 0.0, net.n_valves)
    ret = 10.0 ** rng.uniform(lo, hi, net.n_supply_edges) if asymmetric else None
    return ResistanceVector(supply=supply, valves=valves, return_pipes=ret)
