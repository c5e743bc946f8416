"""
Command-line orchestration.

run_command(argv) parses, loads configuration, runs one subcommand and
returns an exit code:

  0   success
  1   validation, file, model, solver, decomposition or policy failure
  2   an exact computation would exceed the state cap
  64  usage error

Every command is a thin wrapper over a library call; with --json the
serialized result is printed instead of the rich rendering.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any

from banditgap.analysis import grind_sweep, project_policy, projection_gap
from banditgap.cli import display
from banditgap.config import Config, load_config
from banditgap.events import to_json_dict
from banditgap.flow import DecompositionError, decomposition_residuals, flow_decompose
from banditgap.generators import GENERATOR_KINDS, GeneratorSpec, generate
from banditgap.instance_io import InstanceFileError, dump_instance, load_instance, save_instance, with_mode
from banditgap.lp import solve_relaxation
from banditgap.lp.base import SolverError
from banditgap.model import MODES, Instance, ModelError, validate
from banditgap.policies import (
    POLICY_NAMES,
    HalfScalingPolicy,
    PolicyError,
    StateSpaceTooLarge,
    create_policy,
    dp_exact,
    dump_table,
)
from banditgap.reductions import reduce_instance
from banditgap.simulator import SimulationOptions, simulate

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CAPACITY = 2
EXIT_USAGE = 64

LOG_FORMAT = "%(asctime)s  %(levelname)-8s  %(name)s  %(message)s"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:   # type: ignore[override]
        raise UsageError(f"{self.format_usage().strip()}\n{self.prog}: error: {message}")


def _configure_logging(level: str) -> None:
    """Package logs go to stderr so --json output stays clean."""
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    package_logger = logging.getLogger("banditgap")
    package_logger.setLevel(getattr(logging, level, logging.WARNING))
    package_logger.handlers = [handler]
    package_logger.propagate = False


# --------------------------------------------------------------------------- #
# Parser                                                                      #
# --------------------------------------------------------------------------- #

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--json", action="store_true", help="print the result as JSON")
    common.add_argument("--config", type=Path, default=None, help="YAML configuration file")

    parser = _Parser(prog="banditgap", description="LP relaxations, policies and exact optima for stochastic bandits.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check an instance file")
    p.add_argument("instance")

    p = sub.add_parser("reduce", parents=[common], help="expand bridges and layer an instance")
    p.add_argument("instance")
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("lp", parents=[common], help="solve a relaxation")
    p.add_argument("instance")
    p.add_argument("--variant", choices=("poly", "poly-nopre", "knapsack"), default=None)
    p.add_argument("--dump-vars", type=Path, default=None, help="write nonzero variables as JSON")

    p = sub.add_parser("decompose", parents=[common], help="flow-decompose the node-level relaxation")
    p.add_argument("instance")
    p.add_argument("--dump", type=Path, default=None, help="write the q groups as JSON")

    p = sub.add_parser("policy", parents=[common], help="simulate a policy")
    p.add_argument("instance")
    p.add_argument("--policy", choices=POLICY_NAMES, required=True)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--virtual-continue", action="store_true")
    p.add_argument("--trace", type=Path, default=None, help="JSONL file, one line per play")
    p.add_argument("--mode", choices=MODES, default=None)

    p = sub.add_parser("dp", parents=[common], help="exact optimum by dynamic programming")
    p.add_argument("instance")
    p.add_argument("--mode", choices=MODES, default=None)
    p.add_argument("--dump-table", type=Path, default=None)

    p = sub.add_parser("gap", parents=[common], help="relaxation optimum over the exact optimum")
    p.add_argument("instance")
    p.add_argument("--mode", choices=MODES, default=None)
    p.add_argument("--variant", choices=("poly", "poly-nopre", "knapsack"), default=None)

    p = sub.add_parser("check", help="projection certificate or tail-bound sweep")
    checks = p.add_subparsers(dest="check", required=True)
    c = checks.add_parser("projection", parents=[common])
    c.add_argument("instance")
    c.add_argument("--policy", choices=POLICY_NAMES, required=True)
    c.add_argument("--mode", choices=MODES, default=None)
    c = checks.add_parser("grind", parents=[common])
    c.add_argument("--resolution", type=int, default=None)

    p = sub.add_parser("generate", parents=[common], help="write a built-in or random instance")
    p.add_argument("kind", choices=GENERATOR_KINDS)
    p.add_argument("--n", type=int, default=10, help="gap2 parameter N")
    p.add_argument("--arms", type=int, default=2)
    p.add_argument("--nodes-per-arm", type=int, default=3)
    p.add_argument("--actions", type=int, default=1)
    p.add_argument("--budget", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-time", type=int, default=1)
    p.add_argument("--mode", choices=MODES, default=None)
    p.add_argument("--out", type=Path, default=None)
    return parser


# --------------------------------------------------------------------------- #
# Entry                                                                       #
# --------------------------------------------------------------------------- #

def run_command(argv: list[str]) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:   # --help
        return int(exc.code or 0)

    try:
        config = load_config(args.config)
    except (FileNotFoundError, ValueError) as exc:
        display.error(f"config: {exc}")
        return EXIT_FAILURE
    _configure_logging(config.log_level)

    handler = _COMMANDS[args.command]
    try:
        return handler(args, config)
    except StateSpaceTooLarge as exc:
        display.error(str(exc))
        return EXIT_CAPACITY
    except (InstanceFileError, ModelError, SolverError, DecompositionError, PolicyError, ValueError) as exc:
        display.error(str(exc))
        return EXIT_FAILURE


def _emit(payload: Any) -> None:
    text = json.dumps(to_json_dict(payload), indent=2)
    display.console.print(text, markup=False, highlight=False, soft_wrap=True)


def _write_json(path: Path, payload: Any) -> None:
    path.write_text(json.dumps(to_json_dict(payload), indent=2) + "\n", encoding="utf-8")


def _load(args: argparse.Namespace) -> Instance:
    instance = load_instance(args.instance)
    mode = getattr(args, "mode", None)
    if mode is not None:
        instance = with_mode(instance, mode)
    violations = validate(instance)
    if violations:
        raise ModelError(f"{len(violations)} violation(s); first: {violations[0]}")
    return instance


# --------------------------------------------------------------------------- #
# Commands                                                                    #
# --------------------------------------------------------------------------- #

def _validate(args: argparse.Namespace, config: Config) -> int:
    violations = validate(load_instance(args.instance))
    if args.json:
        _emit({"valid": not violations, "violations": [str(v) for v in violations]})
    else:
        display.show_violations(args.instance, violations)
    return EXIT_OK if not violations else EXIT_FAILURE


def _reduce(args: argparse.Namespace, config: Config) -> int:
    reduced = reduce_instance(_load(args))
    if args.out is not None:
        save_instance(reduced, args.out)
    if args.json:
        _emit(dump_instance(reduced))
    else:
        display.show_instance_summary(reduced, "reduced instance")
        if args.out is not None:
            display.console.print(f"[dim]written to {args.out}[/]")
    return EXIT_OK


def _lp(args: argparse.Namespace, config: Config) -> int:
    solution = solve_relaxation(
        _load(args), args.variant,
        tolerance=config.solver.tolerance, max_iterations=config.solver.max_iterations,
    )
    dump = solution.dump_vars()
    if args.dump_vars is not None:
        _write_json(args.dump_vars, dump)
    if args.json:
        _emit({
            "status": solution.status,
            "kind": solution.kind,
            "dual_objective": solution.dual_objective,
            "pivots": solution.pivots,
            **dump,
        })
    else:
        display.show_solution(solution)
    return EXIT_OK


def _decompose(args: argparse.Namespace, config: Config) -> int:
    instance = _load(args)
    reduced = reduce_instance(instance)
    variant = "poly" if instance.preemptive else "poly-nopre"
    solution = solve_relaxation(
        reduced, variant, tolerance=config.solver.tolerance, max_iterations=config.solver.max_iterations
    )
    decomposition = flow_decompose(solution, reduced)
    residuals = decomposition_residuals(decomposition, solution, reduced)
    groups = decomposition.dump_groups()
    if args.dump is not None:
        _write_json(args.dump, groups)
    if args.json:
        _emit({"groups": groups, "residuals": residuals})
    else:
        display.show_decomposition(decomposition, residuals)
    return EXIT_OK if residuals.passes(config.checks.projection_tolerance) else EXIT_FAILURE


def _policy(args: argparse.Namespace, config: Config) -> int:
    instance = _load(args)
    seed = args.seed if args.seed is not None else config.default_seed()
    policy = create_policy(args.policy, instance, config, epsilon=args.epsilon, delta=args.delta, seed=seed)
    options = SimulationOptions(
        virtual_continue=args.virtual_continue or config.simulation.virtual_continue,
        trace_path=args.trace,
    )
    report = simulate(policy, args.trials or config.simulation.trials, seed, options)
    if args.json:
        _emit(report)
        return EXIT_OK
    lp_value = getattr(getattr(policy, "solution", None), "objective", None)
    display.show_report(report, lp_value)
    if isinstance(policy, HalfScalingPolicy) and policy.tables is not None:
        display.show_tables(policy.tables)
    return EXIT_OK


def _dp(args: argparse.Namespace, config: Config) -> int:
    result = dp_exact(_load(args), state_cap=config.oracle.state_cap)
    if args.dump_table is not None:
        _write_json(args.dump_table, dump_table(result))
    if args.json:
        _emit({"value": result.value, "states": result.states})
    else:
        display.show_dp(result)
    return EXIT_OK


def _gap(args: argparse.Namespace, config: Config) -> int:
    report = projection_gap(_load(args), args.variant, solver=config.solver, state_cap=config.oracle.state_cap)
    if args.json:
        _emit(report)
    else:
        display.show_gap(report)
    return EXIT_OK


def _check(args: argparse.Namespace, config: Config) -> int:
    if args.check == "grind":
        sweep = grind_sweep(args.resolution or config.checks.grind_resolution)
        if args.json:
            _emit({**to_json_dict(sweep), "passed": sweep.passed})
        else:
            display.show_sweep(sweep)
        return EXIT_OK if sweep.passed else EXIT_FAILURE

    instance = _load(args)
    policy = create_policy(args.policy, instance, config)
    cert = project_policy(
        policy, state_cap=config.oracle.state_cap, tolerance=config.checks.projection_tolerance
    )
    if args.json:
        _emit({**to_json_dict(cert), "passed": cert.passed})
    else:
        display.show_certificate(cert)
    return EXIT_OK if cert.passed else EXIT_FAILURE


def _generate(args: argparse.Namespace, config: Config) -> int:
    spec = GeneratorSpec(
        kind=args.kind,
        n=args.n,
        arms=args.arms,
        nodes_per_arm=args.nodes_per_arm,
        actions=args.actions,
        budget=args.budget,
        seed=args.seed,
        mode=args.mode,
        max_time=args.max_time,
    )
    instance = generate(spec)
    as_jobs = instance.jobs is not None
    if args.out is not None:
        save_instance(instance, args.out, as_jobs=as_jobs)
    if args.json or args.out is None:
        _emit(dump_instance(instance, as_jobs=as_jobs))
    else:
        display.show_instance_summary(instance, f"{args.kind} instance")
        display.console.print(f"[dim]written to {args.out}[/]")
    return EXIT_OK


_COMMANDS = {
    "validate": _validate,
    "reduce": _reduce,
    "lp": _lp,
    "decompose": _decompose,
    "policy": _policy,
    "dp": _dp,
    "gap": _gap,
    "check": _check,
    "generate": _generate,
}
