# charflow/cli.py
# Command Line Interface for the optimal-control transport solvers

import argparse
import logging
import sys
from typing import List, Optional

import yaml

from charflow.config.problem_spec import load_problem_spec
from charflow.config.settings import get_solver_config
from charflow.errors import CharflowUserError
from charflow.io import format_float, format_vector, parse_vector, read_measure_csv
from charflow.logs import setup_logger
from charflow.workflow import (
    cmd_characteristics,
    cmd_cost,
    cmd_hamiltonian,
    cmd_hjb,
    cmd_transport,
    cmd_validate,
)

EXIT_OK = 0
EXIT_USER = 1
EXIT_INTERNAL = 2

COMMANDS = ("hamiltonian", "characteristics", "hjb", "transport", "validate", "cost")


def _print_result(result: dict, keys: List[str]) -> None:
    for key in keys:
        if key not in result:
            continue
        value = result[key]
        if isinstance(value, bool) or value is None:
            text = str(value).lower() if value is not None else "n/a"
        elif isinstance(value, float):
            text = format_float(value)
        elif isinstance(value, (list, tuple)) or hasattr(value, "shape"):
            text = format_vector(value)
        elif isinstance(value, dict):
            text = ", ".join(f"{k}={format_float(v) if isinstance(v, float) else v}" for k, v in value.items())
        else:
            text = str(value)
        print(f"{key}: {text}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="charflow",
        description="Optimal transport with control-generated costs: Hamiltonians, characteristics, "
        "Hamilton-Jacobi grids, cost matrices and Monge maps.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", required=True, metavar="FILE", help="Problem spec (YAML or JSON)")
    common.add_argument("--out", default="charflow_out", metavar="DIR", help="Output directory (default: charflow_out)")
    common.add_argument("--threads", type=int, default=None, help="Worker threads (default: config runtime.threads)")
    common.add_argument("--seed", type=int, default=None, help="Random seed (default: spec seed)")
    common.add_argument("-v", "--verbose", action="store_true", help="Debug logging on the console")

    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    ham = sub.add_parser("hamiltonian", parents=[common], help="Evaluate H(x, p, t) with maximiser and derivatives")
    ham.add_argument("--x", required=True, help="State, comma-separated")
    ham.add_argument("--p", required=True, help="Costate, comma-separated")
    ham.add_argument("--t", type=float, default=0.0, help="Time (default: 0)")

    ch = sub.add_parser("characteristics", parents=[common], help="Flow the characteristic system from the initial data")
    ch.add_argument("--seeds", type=int, nargs="*", default=None, metavar="N", help="Seeds per dimension")
    ch.add_argument("--T", type=float, default=None, help="Horizon (default: spec)")
    ch.add_argument("--dt", type=float, default=None, help="Time step (default: spec)")

    sub.add_parser("hjb", parents=[common], help="Semi-Lagrangian value grid and residual report")

    tr = sub.add_parser("transport", parents=[common], help="Cost matrix, MK plan, potentials and Monge map")
    tr.add_argument("--mu0", default=None, metavar="CSV", help="Source measure (overrides spec)")
    tr.add_argument("--mu1", default=None, metavar="CSV", help="Target measure (overrides spec)")

    val = sub.add_parser("validate", parents=[common], help="Sampled check of the growth and Lipschitz assumptions")
    val.add_argument("--samples", type=int, default=1000, help="Sample count (default: 1000)")

    sub.add_parser("cost", parents=[common], help="Cost matrix between the spec measures")
    return parser


def run(args: argparse.Namespace, logger: logging.Logger) -> int:
    spec = load_problem_spec(args.spec)
    threads = args.threads if args.threads is not None else int(get_solver_config().runtime.get("threads", 1))
    seed = args.seed if args.seed is not None else spec.seed
    if threads < 1:
        raise CharflowUserError(f"--threads must be at least 1, got {threads}")

    if args.command == "hamiltonian":
        x = parse_vector(args.x, spec.n, "x")
        p = parse_vector(args.p, spec.n, "p")
        result = cmd_hamiltonian(spec, x, p, args.t, logger=logger)
        _print_result(result, ["value", "argmax_u", "Hx", "Hp", "branch"])
    elif args.command == "characteristics":
        result = cmd_characteristics(spec, args.out, args.seeds, args.T, args.dt, threads, logger)
        _print_result(result, ["caustic_time", "caustic", "seeds", "stamps", "trajectories"])
    elif args.command == "hjb":
        result = cmd_hjb(spec, args.out, threads, logger)
        _print_result(result, ["nodes", "steps", "residual", "oracle_sup_error", "value_grid"])
    elif args.command == "transport":
        mu0 = read_measure_csv(args.mu0, spec.n) if args.mu0 else None
        mu1 = read_measure_csv(args.mu1, spec.n) if args.mu1 else None
        if (mu0 is None) != (mu1 is None):
            mu0_spec, mu1_spec = spec.measures()
            mu0, mu1 = mu0 or mu0_spec, mu1 or mu1_spec
        result = cmd_transport(spec, args.out, mu0, mu1, threads, logger)
        _print_result(
            result,
            ["primal", "dual", "gap", "support_violation", "pushforward_W1", "action", "skipped_mass", "skipped_action", "deterministic_plan"],
        )
    elif args.command == "validate":
        result = cmd_validate(spec, args.samples, seed, args.out, logger)
        _print_result(result, ["K0", "K1", "K2", "alpha_R", "lipschitz_u", "passed"])
        for flag in result["flags"]:
            print(f"flag: {flag}")
        for key, note in result["notes"].items():
            print(f"{key}: {note}")
    elif args.command == "cost":
        result = cmd_cost(spec, args.out, threads, logger)
        _print_result(result, ["rows", "columns", "policy", "forbidden_arcs", "cost_matrix"])
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USER
    logger = setup_logger(verbose=args.verbose)
    try:
        return run(args, logger)
    except (CharflowUserError, OSError, yaml.YAMLError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USER
    except Exception as e:
        logger.debug("Internal failure", exc_info=True)
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INTERNAL
