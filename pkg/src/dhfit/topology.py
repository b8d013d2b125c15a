"""Tree topology of a dual supply/return district heating network.

The model is two structurally identical trees plus one customer valve per
consumer.  The supply tree is rooted at the supply-side reference node
(node 0), with every edge directed away from it.  The return tree is its
structural mirror, rooted at the return-side reference node, and is never
stored: supply node ``i`` maps to return node ``i`` under the mirror, so
the supply edge list doubles as the return edge list.  Each boundary valve
ties one supply node to its mirrored return node and carries the flow drawn
by that consumer.

Node and edge identifiers are dense integers.  Edge order is significant:
it fixes the indexing of flow and resistance vectors everywhere else in the
package.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

#: Index of the supply-side reference node. Node 0 of the mirrored return
#: tree is the return-side reference node.
ALPHA = 0


class TopologyError(ValueError):
    """An operation that requires a valid network was given an invalid one."""


@dataclass(frozen=True)
class BoundaryPath:
    """Supply-edge indices from the reference node to one valve's node.

    Attributes
    ----------
    valve:
        Index of the boundary valve (position in ``boundary_valves``).
    supply_edges:
        Edge indices in traversal order, reference node first.
    """

    valve: int
    supply_edges: tuple[int, ...]


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of :func:`validate_topology`.

    ``violations`` holds one human-readable entry per broken invariant;
    the network is valid iff the tuple is empty.
    """

    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        return "valid network" if self.ok else "\n".join(self.violations)


@dataclass(frozen=True)
class NetworkTopology:
    """Immutable description of one dual-tree network.

    Attributes
    ----------
    supply_edges:
        Ordered ``(from, to)`` pairs, each directed away from node 0.
    boundary_valves:
        Supply node carrying each valve, in valve order.
    node_order:
        Permutation of the non-reference supply nodes used as the row
        order of the incidence matrix: boundary-connected nodes first (in
        valve order), internal nodes last.  Derived when not given.
    return_edges:
        Structural mirror of ``supply_edges`` in return-node indices.
        Derived when not given.
    """

    supply_edges: tuple[tuple[int, int], ...]
    boundary_valves: tuple[int, ...]
    node_order: tuple[int, ...] = ()
    return_edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        edges = tuple((int(a), int(b)) for a, b in self.supply_edges)
        object.__setattr__(self, "supply_edges", edges)
        object.__setattr__(
            self, "boundary_valves", tuple(int(n) for n in self.boundary_valves)
        )
        if self.node_order:
            object.__setattr__(
                self, "node_order", tuple(int(n) for n in self.node_order)
            )
        else:
            object.__setattr__(self, "node_order", self._default_node_order())
        if self.return_edges:
            object.__setattr__(
                self,
                "return_edges",
                tuple((int(a), int(b)) for a, b in self.return_edges),
            )
        else:
            # the mirror map is the identity on indices
            object.__setattr__(self, "return_edges", edges)

    def _default_node_order(self) -> tuple[int, ...]:
        touched = {a for e in self.supply_edges for a in e}
        internal = sorted(
            n for n in touched if n != ALPHA and n not in set(self.boundary_valves)
        )
        return tuple(self.boundary_valves) + tuple(internal)

    # -- size helpers ------------------------------------------------------

    @property
    def n_supply_edges(self) -> int:
        return len(self.supply_edges)

    @property
    def n_valves(self) -> int:
        return len(self.boundary_valves)

    @property
    def n_nodes(self) -> int:
        """Number of supply nodes, reference included (valid tree: edges + 1)."""
        return self.n_supply_edges + 1

    @property
    def n_edges_total(self) -> int:
        """Supply pipes + return pipes + valves."""
        return len(self.supply_edges) + len(self.return_edges) + self.n_valves

    # -- derived structure (assumes a valid network) -----------------------

    @cached_property
    def parent_edge(self) -> dict[int, tuple[int, int]]:
        """node -> (edge index, parent node) for every non-reference node."""
        return {t: (j, f) for j, (f, t) in enumerate(self.supply_edges)}

    @cached_property
    def children(self) -> dict[int, tuple[tuple[int, int], ...]]:
        """node -> ((edge index, child node), ...) in edge order."""
        out: dict[int, list[tuple[int, int]]] = {}
        for j, (f, t) in enumerate(self.supply_edges):
            out.setdefault(f, []).append((j, t))
        return {n: tuple(v) for n, v in out.items()}

    @cached_property
    def traversal(self) -> tuple[tuple[int, int, int], ...]:
        """Edges as (edge index, parent, child), parents before children."""
        order: list[tuple[int, int, int]] = []
        stack = [ALPHA]
        while stack:
            n = stack.pop()
            for j, c in self.children.get(n, ()):
                order.append((j, n, c))
                stack.append(c)
        return tuple(order)

    @cached_property
    def valve_of_node(self) -> dict[int, int]:
        return {n: v for v, n in enumerate(self.boundary_valves)}

    @cached_property
    def row_of_node(self) -> dict[int, int]:
        return {n: i for i, n in enumerate(self.node_order)}

    @cached_property
    def boundary_paths(self) -> tuple[BoundaryPath, ...]:
        self.require_valid()
        paths = []
        for v, node in enumerate(self.boundary_valves):
            rev = []
            while node != ALPHA:
                j, node = self.parent_edge[node]
                rev.append(j)
            paths.append(BoundaryPath(valve=v, supply_edges=tuple(reversed(rev))))
        return tuple(paths)

    @cached_property
    def path_matrix(self) -> np.ndarray:
        """Boolean (n_valves, n_supply_edges): path membership per valve."""
        m = np.zeros((self.n_valves, self.n_supply_edges), dtype=bool)
        for p in self.boundary_paths:
            m[p.valve, list(p.supply_edges)] = True
        return m

    @cached_property
    def validation(self) -> ValidationReport:
        return _validate(self)

    def require_valid(self) -> None:
        if not self.validation.ok:
            raise TopologyError(str(self.validation))


def _validate(net: NetworkTopology) -> ValidationReport:
    v: list[str] = []
    edges = net.supply_edges
    n_edges = len(edges)
    if n_edges == 0:
        v.append("not a tree: network has no supply edges")

    touched = {ALPHA} | {a for e in edges for a in e} | set(net.boundary_valves)
    if touched != set(range(n_edges + 1)):
        v.append(
            "not a tree: node ids are not the dense range 0..%d (found %s)"
            % (n_edges, sorted(touched))
        )

    if any(f == t for f, t in edges):
        v.append("not a tree: self-loop edge present")
    incoming = Counter(t for _, t in edges)
    if incoming.get(ALPHA):
        v.append("not a tree: an edge leads into the reference node")
    shared = sorted(n for n, c in incoming.items() if c > 1)
    if shared:
        v.append("not a tree: nodes %s have more than one incoming edge" % shared)

    # reachability from the reference node, over raw edges only
    adj: dict[int, list[int]] = {}
    for f, t in edges:
        adj.setdefault(f, []).append(t)
    seen = {ALPHA}
    stack = [ALPHA]
    while stack:
        for t in adj.get(stack.pop(), ()):
            if t not in seen:
                seen.add(t)
                stack.append(t)
    orphaned = sorted(touched - seen)
    if orphaned:
        v.append("not a tree: nodes %s unreachable from the reference node" % orphaned)

    # valve placement
    dup = sorted(n for n, c in Counter(net.boundary_valves).items() if c > 1)
    if dup:
        v.append("nodes %s carry more than one boundary valve" % dup)
    if ALPHA in net.boundary_valves:
        v.append("a boundary valve is attached to the reference node")

    # degree rules: a non-reference node either carries a valve or is an
    # internal node of degree >= 3 (parent edge plus at least two children)
    valved = set(net.boundary_valves)
    degree = Counter()
    for f, t in edges:
        degree[f] += 1
        degree[t] += 1
    for n in sorted(touched - {ALPHA}):
        if n in valved:
            continue
        deg = degree.get(n, 0)
        if deg <= 1:
            v.append("leaf node %d carries no boundary valve" % n)
        elif deg < 3:
            v.append("internal node %d has degree %d, expected at least 3" % (n, deg))

    # node ordering: permutation of non-reference nodes, boundary block first
    expected_nodes = set(range(1, n_edges + 1))
    if set(net.node_order) != expected_nodes or len(net.node_order) != n_edges:
        v.append("node order is not a permutation of the non-reference nodes")
    else:
        flags = [n in valved for n in net.node_order]
        if True in flags and False in flags:
            if flags.index(False) < len(flags) - 1 - flags[::-1].index(True):
                v.append(
                    "node order lists an internal node before a boundary-connected one"
                )

    if net.return_edges != net.supply_edges:
        v.append("return edges are not the structural mirror of the supply edges")

    return ValidationReport(tuple(v))


def validate_topology(net: NetworkTopology) -> ValidationReport:
    """Check every network invariant and report all violations.

    Violations are report entries, not exceptions; an empty report means
    the network is valid.
    """
    return net.validation


def mirror_return(net: NetworkTopology) -> NetworkTopology:
    """Return the network with the return tree materialized as the mirror.

    Idempotent: applying it twice yields an equal network.
    """
    return NetworkTopology(
        supply_edges=net.supply_edges,
        boundary_valves=net.boundary_valves,
        node_order=net.node_order,
        return_edges=net.supply_edges,
    )


def incidence_matrix(net: NetworkTopology) -> np.ndarray:
    """Basic incidence matrix of the supply tree.

    Rows follow ``node_order`` (the reference node's row is omitted),
    columns follow ``supply_edges``.  Entry (i, j) is +1 when edge j leads
    to node i, -1 when it leads away, else 0.  For a valid network the
    matrix is square and invertible.
    """
    net.require_valid()
    n = net.n_supply_edges
    b = np.zeros((n, n))
    row = net.row_of_node
    for j, (f, t) in enumerate(net.supply_edges):
        b[row[t], j] = 1.0
        if f != ALPHA:
            b[row[f], j] = -1.0
    return b


def boundary_path(net: NetworkTopology, valve: int) -> BoundaryPath:
    """Supply-edge path from the reference node to the given valve's node."""
    if not 0 <= valve < net.n_valves:
        raise ValueError(
            "valve index %d out of range for %d valves" % (valve, net.n_valves)
        )
    return net.boundary_paths[valve]
