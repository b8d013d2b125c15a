"""File formats: network JSON, resistance JSON, condition CSV, result JSON.

Floats are written with 17 significant digits so CSV round trips preserve
float64 values exactly.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .estimation import EstimationResult
from .hydraulics import LoadCondition, ResistanceVector
from .topology import ALPHA, NetworkTopology

_FLOAT = "%.17g"


def load_network(path) -> NetworkTopology:
    """Read a network description.

    Expected object: ``supply_edges`` (array of [from, to] pairs),
    ``boundary_valves`` (array of node ids) and ``alpha`` (must be 0; node
    0 is always the supply reference).  Semantic validity is checked
    separately by the topology validator.
    """
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("network file must contain a JSON object")
    try:
        edges = data["supply_edges"]
        valves = data["boundary_valves"]
    except KeyError as exc:
        raise ValueError("network file is missing key %s" % exc) from exc
    if int(data.get("alpha", ALPHA)) != ALPHA:
        raise ValueError("the supply reference node must be node 0")
    if not all(isinstance(e, (list, tuple)) and len(e) == 2 for e in edges):
        raise ValueError("supply_edges must be [from, to] pairs")
    return NetworkTopology(
        supply_edges=tuple((int(a), int(b)) for a, b in edges),
        boundary_valves=tuple(int(n) for n in valves),
    )


def save_network(net: NetworkTopology, path) -> None:
    data = {
        "supply_edges": [list(e) for e in net.supply_edges],
        "boundary_valves": list(net.boundary_valves),
        "alpha": ALPHA,
    }
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")


def load_resistances(path) -> ResistanceVector:
    """Read resistances: ``supply``, ``valves`` and optionally ``return``.

    Omitting ``return`` declares the symmetric case.
    """
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict) or "supply" not in data or "valves" not in data:
        raise ValueError("resistance file needs 'supply' and 'valves' arrays")
    return ResistanceVector(
        supply=np.asarray(data["supply"], dtype=float),
        valves=np.asarray(data["valves"], dtype=float),
        return_pipes=(
            np.asarray(data["return"], dtype=float) if "return" in data else None
        ),
    )


def save_resistances(s: ResistanceVector, path) -> None:
    data = {"supply": list(s.supply), "valves": list(s.valves)}
    if not s.symmetric:
        data["return"] = list(s.return_pipes)
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")


def conditions_header(n_valves: int) -> list[str]:
    return (
        ["t", "p_alpha", "p_beta"]
        + ["u_%d" % (v + 1) for v in range(n_valves)]
        + ["qb_%d" % (v + 1) for v in range(n_valves)]
    )


def write_conditions_csv(conditions: list[LoadCondition], path) -> None:
    """One row per load condition; see :func:`conditions_header` for columns."""
    if not conditions:
        raise ValueError("no load conditions to write")
    n_b = conditions[0].boundary_flows.size
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(conditions_header(n_b))
        for lc in conditions:
            if lc.boundary_flows.size != n_b:
                raise ValueError("conditions disagree on the number of valves")
            w.writerow(
                [lc.index]
                + [_FLOAT % lc.p_alpha, _FLOAT % lc.p_beta]
                + [_FLOAT % u for u in lc.valve_settings]
                + [_FLOAT % q for q in lc.boundary_flows]
            )


def read_conditions_csv(path) -> list[LoadCondition]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError("empty conditions CSV: %s" % path)
    header = rows[0]
    n_b = sum(1 for c in header if c.startswith("u_"))
    if n_b == 0 or header != conditions_header(n_b):
        raise ValueError("unrecognized conditions CSV header in %s" % path)
    out = []
    for row in rows[1:]:
        if not row:
            continue
        if len(row) != 3 + 2 * n_b:
            raise ValueError("malformed conditions CSV row: %r" % (row,))
        vals = [float(x) for x in row[1:]]
        out.append(
            LoadCondition(
                index=int(row[0]),
                p_alpha=vals[0],
                p_beta=vals[1],
                valve_settings=np.array(vals[2 : 2 + n_b]),
                boundary_flows=np.array(vals[2 + n_b :]),
            )
        )
    if not out:
        raise ValueError("conditions CSV has no data rows: %s" % path)
    return out


def result_to_dict(result: EstimationResult) -> dict:
    return {
        "s_hat": [float(v) for v in result.s_hat],
        "column_map": list(result.column_map),
        "rank": int(result.rank),
        "condition_number": float(result.condition_number),
        "residual_norm": float(result.residual_norm),
        "nullspace_dim": int(result.nullspace_dim),
    }


def write_result_json(result: EstimationResult, path) -> None:
    with open(path, "w") as fh:
        json.dump(result_to_dict(result), fh, indent=2)
        fh.write("\n")
