"""Command-line front end.

Subcommands: ``solve`` (run a Riemann solver on node data), ``entropy`` (entropy-
condition report for a trace vector or a solver output), ``classify`` (2x2 table
classification), ``simulate`` (Godunov evolution of the node), ``reproduce`` (re-derive
every pinned numeric result and compare).

Exit codes: 0 success, 1 malformed input, 2 mathematical precondition failure.

Documents are JSON; any number may be written as {"expr": "(8+sqrt(34))/16"} and is
evaluated exactly at load time (only +, -, *, /, sqrt and parentheses are allowed).
The environment variable JUNCTION_RIEMANN_SEED seeds the sampling-based blocks (the
optional "face" section of ``entropy``).
"""

from __future__ import annotations

import argparse
import ast
import io
import json
import math
import sys

from .entropy import check_E1, check_E2, classify_2x2, entropy_flux, \
    face_objective_equivalence
from .errors import InputError, PreconditionError
from .flux import FluxModel
from .junction import RiemannState
from .netsim import SimConfig, make_grids, run, summary_json, write_mass_csv, \
    write_snapshots_csv
from .sampling import default_rng
from .solvers import rs1_solve, rs2_solve, rs3_solve, rs_e1_2x2_solve, \
    solver_from_config, CrossingCapacity, DistributionMatrix, ThetaWeights


def format_float(x: float) -> str:
    return f"{x:.17g}"


# -- expression evaluation --------------------------------------------------------------

_BINOPS = {ast.Add: lambda a, b: a + b, ast.Sub: lambda a, b: a - b,
           ast.Mult: lambda a, b: a * b, ast.Div: lambda a, b: a / b}


def eval_expr(text: str) -> float:
    """Safely evaluate an arithmetic expression with sqrt (no names, no calls)."""
    if not isinstance(text, str):
        raise InputError(f"expression must be a string, got {text!r}")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise InputError(f"bad expression {text!r}: {exc}") from exc
    return _eval_node(tree.body, text)


def _eval_node(node: ast.AST, text: str) -> float:
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left, text),
                                      _eval_node(node.right, text))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
        value = _eval_node(node.operand, text)
        return value if isinstance(node.op, ast.UAdd) else -value
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
            and node.func.id == "sqrt" and len(node.args) == 1 and not node.keywords:
        arg = _eval_node(node.args[0], text)
        if arg < 0:
            raise InputError(f"sqrt of a negative number in {text!r}")
        return math.sqrt(arg)
    raise InputError(f"unsupported element {ast.dump(node)} in expression {text!r}")


def resolve_numbers(obj):
    """Recursively replace {"expr": "..."} objects by their evaluated values."""
    if isinstance(obj, dict):
        if set(obj.keys()) == {"expr"}:
            return eval_expr(obj["expr"])
        return {k: resolve_numbers(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [resolve_numbers(v) for v in obj]
    return obj


# -- document plumbing -------------------------------------------------------------------

def load_document(path: str | None) -> dict:
    if not path:
        raise InputError("this command needs --input FILE")
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read input file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc
    doc = resolve_numbers(doc)
    if not isinstance(doc, dict):
        raise InputError("input document must be a JSON object")
    return doc


def parse_state(doc: dict) -> RiemannState:
    obj = doc.get("state", doc)
    if not isinstance(obj, dict) or "rho" not in obj:
        raise InputError("document needs a 'state' object with n, m, rho")
    return RiemannState.from_json(obj)


def build_solver(doc: dict, args, model: FluxModel, topology):
    config = None
    if getattr(args, "solver", None):
        try:
            with open(args.solver) as fh:
                config = resolve_numbers(json.load(fh))
        except OSError as exc:
            raise InputError(f"cannot read solver file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.solver} is not valid JSON: {exc}") from exc
    elif "solver" in doc:
        config = doc["solver"]
    if config is None:
        raise InputError("no solver configured (add a 'solver' key or use --solver)")
    return solver_from_config(model, config, topology)


def emit(args, payload: dict, csv_header: list[str] | None = None,
         csv_rows: list[list] | None = None) -> None:
    if args.format == "csv" and csv_header is not None:
        buf = io.StringIO()
        buf.write(",".join(csv_header) + "\n")
        for row in csv_rows or []:
            buf.write(",".join(format_float(v) if isinstance(v, float) else str(v)
                               for v in row) + "\n")
        text = buf.getvalue()
    else:
        text = json.dumps(payload, indent=2) + "\n"
    if args.output:
        try:
            with open(args.output, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise InputError(f"cannot write output file: {exc}") from exc
    else:
        sys.stdout.write(text)


# -- subcommands -------------------------------------------------------------------------

def cmd_solve(args) -> int:
    doc = load_document(args.input)
    model = FluxModel.from_json(doc.get("flux"))
    state = parse_state(doc)
    solver = build_solver(doc, args, model, state.topology)
    solution = solver(state)
    rows = [[l, "in" if l < state.topology.n else "out",
             solution.state.rho[l], solution.gamma[l]]
            for l in range(state.topology.total)]
    payload = solution.to_json()
    payload["flux"] = model.to_json()
    emit(args, payload, ["arc", "orientation", "rho", "gamma"], rows)
    return 0


def cmd_entropy(args) -> int:
    doc = load_document(args.input)
    model = FluxModel.from_json(doc.get("flux"))
    state = parse_state(doc)
    tol = args.tolerance if args.tolerance is not None else 1e-10
    if getattr(args, "solver", None) or "solver" in doc:
        solver = build_solver(doc, args, model, state.topology)
        traces = solver(state).state
    else:
        traces = state
    report = check_E1(model, traces, tol=tol)
    payload = report.to_json()
    payload["rho"] = list(traces.rho)
    if "face" in doc:
        face = doc["face"]
        if not isinstance(face, dict) or "A" not in face or "H" not in face:
            raise InputError("the 'face' block needs 'A' and 'H'")
        sample = face_objective_equivalence(
            model, state, DistributionMatrix.from_rows(face["A"]),
            [int(l) for l in face["H"]],
            samples=int(face.get("samples", 100)), rng=default_rng())
        payload["face"] = {
            "active": sorted(sample.active),
            "face_nonempty": sample.face_nonempty,
            "samples": len(sample.values),
            "spread": sample.spread,
            "constant": sample.constant,
        }
    emit(args, payload, ["k", "F"], [[k, v] for k, v in report.candidates])
    return 0


def cmd_classify(args) -> int:
    doc = load_document(args.input)
    model = FluxModel.from_json(doc.get("flux"))
    state = parse_state(doc)
    verdict = classify_2x2(model, state)
    if args.tolerance is not None:
        verdict = classify_2x2(model, state, eq_tol=args.tolerance)
    row = [[verdict.bad_count, verdict.row, verdict.admissible,
            " ".join(str(p) for p in verdict.permutation)]]
    emit(args, verdict.to_json(), ["bad_count", "row", "admissible", "permutation"],
         row)
    return 0


def cmd_simulate(args) -> int:
    doc = load_document(args.input)
    model = FluxModel.from_json(doc.get("flux"))
    state = parse_state(doc)
    solver = build_solver(doc, args, model, state.topology)
    config = SimConfig(flux=model, solver=solver,
                       cfl=float(doc.get("cfl", 0.5)),
                       t_end=float(doc.get("t_end", 1.0)))
    initial = doc.get("initial", list(state.rho))
    grids = make_grids(state.topology, initial,
                       cells=int(doc.get("cells", 200)),
                       length=float(doc.get("length", 1.0)))
    result = run(config, grids, snapshot_times=doc.get("snapshots", ()))
    summary = summary_json(result)
    if args.output:
        write_snapshots_csv(result, args.output + "_snapshots.csv")
        write_mass_csv(result, args.output + "_mass.csv")
        with open(args.output + "_summary.json", "w") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")
    sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    return 0


def _reproduce_rows(model: FluxModel):
    """Recompute the six pinned results.

    Yields (name, comparisons) where each comparison is a tuple
    (label, expected, computed, tolerance); expected/computed are floats or
    equal-length tuples.
    """
    from .junction import NodeTopology

    topo22 = NodeTopology(2, 2)
    sq = math.sqrt

    # flux-maximization counterexample: traces and the entropy value at sigma
    matrix = DistributionMatrix.from_rows([[1 / 3, 1 / 2], [2 / 3, 1 / 2]])
    data1 = RiemannState(topo22, (3 / 4, 1 / 8, (8 + sq(34)) / 16, 1 / 10))
    sol1 = rs1_solve(model, matrix, data1)
    yield ("flux-maximization counterexample", [
        ("fluxes", (1.0, 13 / 48, 15 / 32, 77 / 96), sol1.gamma, 1e-10),
        ("E2 value", -19 / 48, check_E2(model, sol1.state).value_at_sigma, 1e-10),
    ])

    # through-flow solver counterexample: fixed point and F at k = 1/4
    theta2 = ThetaWeights((1 / 2, 1 / 2), (5 / 12, 7 / 12))
    data2 = RiemannState(topo22, (1 / 4, 1 / 4, 1 / 2 - sq(3) / (4 * sq(2)),
                                  1 / 2 - 1 / (4 * sq(2))))
    sol2 = rs2_solve(model, theta2, data2)
    yield ("through-flow counterexample", [
        ("fixed point", data2.rho, sol2.state.rho, 1e-10),
        ("F(k=1/4)", -1 / 4, entropy_flux(model, sol2.state, 1 / 4), 1e-12),
    ])

    # per-line solver: both equilibria and their E2 values
    theta3 = ThetaWeights((3 / 4, 1 / 4), (3 / 4, 1 / 4))
    data3 = RiemannState(topo22, (1 / 5, 1 / 2 + sq(59 / 3) / 10, 4 / 5,
                                  1 / 2 - sq(59 / 3) / 10))
    sol3 = rs3_solve(model, theta3, CrossingCapacity(64 / 75), data3)
    yield ("per-line solver example 1", [
        ("fixed point", data3.rho, sol3.state.rho, 1e-10),
        ("E2 value", -64 / 75, check_E2(model, sol3.state).value_at_sigma, 1e-10),
    ])

    theta4 = ThetaWeights((1 / 2, 1 / 2), (1 / 2, 1 / 2))
    data4 = RiemannState(topo22, (1 / 2 + sq(1 / 2) / 2, 1 / 2 + sq(1 / 3) / 2,
                                  1 / 2 + sq(1 / 2) / 2, 1 / 2 - sq(1 / 3) / 2))
    sol4 = rs3_solve(model, theta4, CrossingCapacity(7 / 6), data4)
    yield ("per-line solver example 2", [
        ("fixed point", data4.rho, sol4.state.rho, 1e-10),
        ("E2 value", -2 / 3, check_E2(model, sol4.state).value_at_sigma, 1e-10),
    ])

    # constructed 2x2 entropy solver: the two worked samples, exact
    out_a = rs_e1_2x2_solve(model, RiemannState(topo22, (1 / 4, 3 / 4, 1 / 4, 1 / 4)))
    yield ("2x2 entropy solver sample a", [
        ("traces", (1 / 4, 1 / 2, 1 / 4, 1 / 2), out_a.state.rho, 0.0),
    ])
    out_b = rs_e1_2x2_solve(model, RiemannState(topo22, (3 / 4, 1 / 4, 1 / 4, 1 / 4)))
    yield ("2x2 entropy solver sample b", [
        ("traces", (1 / 2, 1 / 4, 1 / 2, 1 / 4), out_b.state.rho, 0.0),
    ])


def _comparison_text(expected, computed, tol):
    if isinstance(expected, tuple):
        diff = max(abs(e - c) for e, c in zip(expected, computed))
        exp_text = "(" + ", ".join(format_float(e) for e in expected) + ")"
        got_text = "(" + ", ".join(format_float(c) for c in computed) + ")"
    else:
        diff = abs(expected - computed)
        exp_text = format_float(expected)
        got_text = format_float(computed)
    return diff <= tol, exp_text, got_text, diff


def cmd_reproduce(args) -> int:
    model = FluxModel.quadratic()
    failures = 0
    for name, comparisons in _reproduce_rows(model):
        lines = []
        row_ok = True
        for label, expected, computed, tol in comparisons:
            ok, exp_text, got_text, diff = _comparison_text(expected, computed, tol)
            row_ok = row_ok and ok
            lines.append(f"      {label}: expected {exp_text}\n"
                         f"      {' ' * len(label)}  computed {got_text}"
                         f"  |diff| = {format_float(diff)}")
        failures += 0 if row_ok else 1
        print(f"{'PASS' if row_ok else 'FAIL'}  {name}")
        print("\n".join(lines))
    print(f"{'all rows pass' if failures == 0 else f'{failures} row(s) FAILED'}")
    return 0 if failures == 0 else 1


# -- parser ------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="input JSON document")
    common.add_argument("--output", help="output file (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json",
                        help="output format (default json)")
    common.add_argument("--solver", help="solver configuration JSON file "
                                         "(overrides the document's 'solver' key)")
    common.add_argument("--tolerance", type=float, default=None,
                        help="tolerance for entropy/classification checks")

    parser = argparse.ArgumentParser(
        prog="junction-riemann",
        description="Riemann solvers, entropy checks, and Godunov simulation "
                    "at a single road-network node.",
        epilog="Set JUNCTION_RIEMANN_SEED to seed sampling-based blocks.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common],
                   help="apply a Riemann solver to node data").set_defaults(
        func=cmd_solve)
    sub.add_parser("entropy", parents=[common],
                   help="entropy-condition report for traces or a solver output"
                   ).set_defaults(func=cmd_entropy)
    sub.add_parser("classify", parents=[common],
                   help="classify a balanced 2x2 trace vector").set_defaults(
        func=cmd_classify)
    sub.add_parser("simulate", parents=[common],
                   help="Godunov evolution of the node").set_defaults(
        func=cmd_simulate)
    sub.add_parser("reproduce", parents=[common],
                   help="recompute every pinned numeric result").set_defaults(
        func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except PreconditionError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
