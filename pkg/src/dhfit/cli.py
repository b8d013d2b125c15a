"""Command-line front end.

Exit codes: 0 on success, 1 for domain errors (invalid network, infeasible
pressures, dimension mismatches), 2 for unparseable input or bad usage.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .estimation import build_system, estimate, identifiability
from .experiments import (
    ExperimentConfig,
    ReferenceScenario,
    monte_carlo,
    read_boxplot_csv,
    read_quantiles_csv,
    reference_scenario,
    render_boxplot_svg,
    render_ci_svg,
    write_boxplot_csv,
    write_quantiles_csv,
)
from .hydraulics import (
    InconsistentStateError,
    InfeasiblePressureError,
    min_required_dp,
    required_valve_positions,
    simulate,
    solve_supply_flows,
)
from .scenario import (
    DEFAULT_SUPPLY_PRESSURE,
    NoiseModel,
    ScenarioConfig,
    apply_noise_sequence,
    generate_load_conditions,
)
from .topology import TopologyError, validate_topology


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _float_pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected LOW,HIGH")
    return float(parts[0]), float(parts[1])


def _float_list(text: str) -> list[float]:
    return [float(p) for p in text.split(",") if p != ""]


def cmd_validate(args) -> int:
    net = fileio.load_network(args.network)
    report = validate_topology(net)
    if report.ok:
        print(
            "OK: valid network (%d supply pipes, %d valves, %d edges in total)"
            % (net.n_supply_edges, net.n_valves, net.n_edges_total)
        )
        return 0
    for line in report.violations:
        print(line)
    return 1


def cmd_simulate(args) -> int:
    net = fileio.load_network(args.network)
    s = fileio.load_resistances(args.resistances)
    flows = solve_supply_flows(net, np.asarray(args.flows, dtype=float))
    floor = min_required_dp(net, s, flows)
    dp = args.dp if args.dp is not None else args.headroom * floor
    controls = required_valve_positions(net, s, flows, dp)
    lc = simulate(net, s, flows.boundary, dp, args.p_alpha, index=1)
    print("minimum feasible differential: %.10g" % floor)
    print("differential used:            %.10g" % dp)
    print("p_alpha = %.10g   p_beta = %.10g" % (lc.p_alpha, lc.p_beta))
    for v, u in enumerate(controls.u):
        print("valve_%d: u = %.10g" % (v + 1, u))
    for j, q in enumerate(flows.values):
        print("pipe_%d: q = %.10g" % (j + 1, q))
    if args.out:
        fileio.write_conditions_csv([lc], args.out)
        print("wrote 1 condition to %s" % args.out)
    return 0


def cmd_generate(args) -> int:
    net = fileio.load_network(args.network)
    net.require_valid()
    s = fileio.load_resistances(args.resistances)
    cfg = ScenarioConfig(
        flow_range=args.flow_range,
        dp_headroom=args.headroom,
        count=args.count,
        seed=args.seed,
        p_alpha=args.p_alpha,
    )
    rng = np.random.default_rng(args.seed)
    conditions = generate_load_conditions(net, s, cfg, rng=rng)
    if args.epsilon > 0.0:
        conditions = apply_noise_sequence(conditions, NoiseModel(args.epsilon), rng=rng)
    fileio.write_conditions_csv(conditions, args.out)
    print("wrote %d conditions to %s" % (len(conditions), args.out))
    return 0


def _print_estimate_table(result, truth) -> None:
    have_truth = truth is not None
    header = "%-10s" % "parameter"
    if have_truth:
        header += " %12s" % "truth"
    header += " %16s" % "estimate"
    print(header)
    for j, label in enumerate(result.column_map):
        line = "%-10s" % label
        if have_truth:
            line += " %12.6g" % truth[j]
        line += " %16.9g" % result.s_hat[j]
        print(line)
    print(
        "rank %d/%d   condition number %.6g   residual %.6g"
        % (
            result.rank,
            len(result.column_map),
            result.condition_number,
            result.residual_norm,
        )
    )


def cmd_estimate(args) -> int:
    net = fileio.load_network(args.network)
    net.require_valid()
    conditions = fileio.read_conditions_csv(args.measurements)
    if conditions[0].boundary_flows.size != net.n_valves:
        raise ValueError(
            "dimension mismatch: CSV has %d valves, network has %d"
            % (conditions[0].boundary_flows.size, net.n_valves)
        )
    system = build_system(net, conditions)
    result = estimate(system, tol=args.tol)
    truth = None
    if args.truth:
        s = fileio.load_resistances(args.truth)
        truth = np.concatenate([s.supply, s.valves])
    _print_estimate_table(result, truth)
    if result.nullspace_dim > 0:
        report = identifiability(system, tol=args.tol)
        print(
            "warning: %d unidentifiable parameter combination(s):"
            % report.nullspace_dim
        )
        for line in report.describe():
            print("  " + line)
    if args.out:
        fileio.write_result_json(result, args.out)
        print("wrote %s" % args.out)
    return 0


def cmd_identifiability(args) -> int:
    net = fileio.load_network(args.network)
    net.require_valid()
    conditions = fileio.read_conditions_csv(args.measurements)
    if conditions[0].boundary_flows.size != net.n_valves:
        raise ValueError(
            "dimension mismatch: CSV has %d valves, network has %d"
            % (conditions[0].boundary_flows.size, net.n_valves)
        )
    report = identifiability(build_system(net, conditions), tol=args.tol)
    print(
        "rank %d of %d columns   condition number %.6g   nullspace dimension %d"
        % (report.rank, report.n_columns, report.condition_number, report.nullspace_dim)
    )
    if report.full_rank:
        print("all parameters identifiable")
    else:
        print("unidentifiable parameter combinations:")
        for line in report.describe():
            print("  " + line)
    return 0


def _scenario_from_config(data: dict, base: Path) -> ReferenceScenario:
    if "network" in data or "resistances" in data:
        if "network" not in data or "resistances" not in data:
            raise ValueError("config must give both 'network' and 'resistances'")
        net = fileio.load_network(base / data["network"])
        net.require_valid()
        s = fileio.load_resistances(base / data["resistances"])
        return ReferenceScenario(
            network=net,
            s_true_supply=s.supply,
            s_true_return=s.return_side,
            s_true_valves=s.valves,
        )
    return reference_scenario()


def cmd_montecarlo(args) -> int:
    with open(args.config) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config must be a JSON object")
    base = Path(args.config).parent
    scenario = _scenario_from_config(data, base)
    cfg = ExperimentConfig(
        condition_counts=tuple(data.get("condition_counts", (10, 25, 50, 100))),
        trials=int(data.get("trials", 1000)),
        epsilon=float(data.get("epsilon", 0.01)),
        seed=int(data.get("seed", 0)),
        quantiles=tuple(data.get("quantiles", (0.025, 0.25, 0.5, 0.75, 0.975))),
    )
    ci_edges = list(data.get("ci_edges", []))
    unknown = [e for e in ci_edges if e not in scenario.labels]
    if unknown:
        raise ValueError("unknown ci_edges %s" % unknown)

    summary = monte_carlo(scenario, cfg)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_quantiles_csv(summary, out / "quantiles.csv")
    write_boxplot_csv(summary, out / "boxplot.csv")
    written = ["quantiles.csv", "boxplot.csv"]
    rows = read_quantiles_csv(out / "quantiles.csv")
    target = scenario.symmetric_truth
    for label in ci_edges:
        truth = float(target[scenario.labels.index(label)])
        name = "ci_%s.svg" % label
        render_ci_svg(rows, label, out / name, truth=truth)
        written.append(name)
    render_boxplot_svg(summary.boxplots, out / "boxplot.svg")
    written.append("boxplot.svg")
    for name in written:
        print("wrote %s" % (out / name))
    return 0


def cmd_report(args) -> int:
    src = Path(args.summary)
    out = Path(args.out) if args.out else src
    out.mkdir(parents=True, exist_ok=True)
    rows = read_quantiles_csv(src / "quantiles.csv")
    labels = args.edges if args.edges else sorted({r[0] for r in rows})
    known = {r[0] for r in rows}
    unknown = [label for label in labels if label not in known]
    if unknown:
        raise ValueError("no quantile rows for %s" % unknown)
    for label in labels:
        name = "ci_%s.svg" % label
        render_ci_svg(rows, label, out / name)
        print("wrote %s" % (out / name))
    box_csv = src / "boxplot.csv"
    if box_csv.exists():
        render_boxplot_svg(read_boxplot_csv(box_csv), out / "boxplot.svg")
        print("wrote %s" % (out / "boxplot.svg"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dhfit",
        description=(
            "Simulate tree-shaped district heating hydraulics and estimate "
            "edge resistances from reference-node pressure measurements."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a network file's invariants")
    p.add_argument("network")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="one noise-free steady state")
    p.add_argument("network")
    p.add_argument("resistances")
    p.add_argument(
        "--flows", type=_float_list, required=True, help="per-valve flows, comma-separated"
    )
    p.add_argument("--dp", type=float, default=None, help="plant differential pressure")
    p.add_argument(
        "--headroom",
        type=float,
        default=1.0,
        help="differential as a multiple of the feasible minimum (default 1.0)",
    )
    p.add_argument("--p-alpha", type=float, default=DEFAULT_SUPPLY_PRESSURE)
    p.add_argument("--out", default=None, help="optional conditions CSV to write")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("generate", help="draw a batch of measured conditions")
    p.add_argument("network")
    p.add_argument("resistances")
    p.add_argument("--count", type=_positive_int, required=True)
    p.add_argument("--epsilon", type=float, default=0.0, help="measurement noise level")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="conditions CSV to write")
    p.add_argument("--flow-range", type=_float_pair, default=(100.0, 200.0))
    p.add_argument("--headroom", type=_float_pair, default=(1.0, 2.0))
    p.add_argument("--p-alpha", type=float, default=DEFAULT_SUPPLY_PRESSURE)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("estimate", help="fit resistances to a conditions CSV")
    p.add_argument("network")
    p.add_argument("measurements")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--truth", default=None, help="resistance JSON for the truth column")
    p.add_argument("--out", default=None, help="result JSON to write")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("identifiability", help="rank/nullspace diagnostic")
    p.add_argument("network")
    p.add_argument("measurements")
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_identifiability)

    p = sub.add_parser("montecarlo", help="repeated-trial estimation study")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("report", help="re-render SVG figures from study CSVs")
    p.add_argument("--summary", required=True, help="directory with quantiles.csv")
    p.add_argument("--out", default=None, help="directory for SVGs (default: summary)")
    p.add_argument(
        "--edges", type=lambda t: t.split(","), default=None, help="labels to plot"
    )
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the message
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except json.JSONDecodeError as exc:
        print("error: invalid JSON: %s" % exc, file=sys.stderr)
        return 2
    except (
        TopologyError,
        InfeasiblePressureError,
        InconsistentStateError,
        ValueError,
        OSError,
    ) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
