#!/usr/bin/env python3
"""
Command-line interface for edgeflow.

Usage examples::

    python -m edgeflow fit model.yaml --out weights.csv
    python -m edgeflow prioritize model.yaml --sensitive "R=African American" --decision J=1
    python -m edgeflow debias model.yaml --utility-weight 10 --out joint.csv
    python -m edgeflow experiment mse --seed 0 --outdir results/
    python -m edgeflow sample model.yaml --n 1000 --out samples.csv
    python -m edgeflow estimate model.yaml --samples samples.csv --out estimated.yaml

Exit codes: 0 success, 1 unexpected error, 2 invalid input, 3 violated
precondition (positivity, identifiability), 4 non-convergence with
``--strict``, 130 interrupted.
"""

import argparse
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import structlog
from pydantic import ValidationError

from edgeflow import __version__
from edgeflow.config import DebiasConfig, FitConfig, PriorityConfig, StudyConfig, get_settings
from edgeflow.core.debias import remove_discrimination
from edgeflow.core.distribution import Cbn, SampleSet, mle_estimate, sample
from edgeflow.core.fit import FittedNetwork, fit_network
from edgeflow.core.graph import CausalDag
from edgeflow.core.unfairness import cumulative_unfairness_approx, prioritize
from edgeflow.errors import ConvergenceError, InputError, PreconditionError
from edgeflow.experiments import report
from edgeflow.experiments.studies import (
    input_correlation_probe,
    run_finite_data_study,
    run_mse_study,
    summarize_mse_study,
    theta_tracking,
)
from edgeflow.storage.model_file import load_model, save_model
from edgeflow.utils.io import atomic_write_csv
from edgeflow.utils.logging import configure_logging

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_INPUT = 2
EXIT_PRECONDITION = 3
EXIT_CONVERGENCE = 4
EXIT_INTERRUPTED = 130

NO_CHANGE_TOLERANCE = 1e-6


# === ARGUMENT HELPERS

def parse_assignment(dag: CausalDag, text: str) -> Dict[str, int]:
    """
    Parse ``"R=African American,G=Male"`` into value indices.

    Values may be given by label or by index.

    Raises:
        InputError: On malformed pairs, repeated or unknown nodes, unknown values
    """
    assignment: Dict[str, int] = {}
    for part in (piece.strip() for piece in text.split(",")):
        if not part:
            continue
        name, sep, value = part.partition("=")
        name, value = name.strip(), value.strip()
        if not sep or not name or not value:
            raise InputError(f"Expected NODE=VALUE, got '{part}'")
        if name in assignment:
            raise InputError(f"Node '{name}' is assigned twice")

        spec = dag.node(name)
        if value in spec.value_labels:
            assignment[name] = spec.index_of(value)
            continue
        try:
            assignment[name] = int(value)
        except ValueError:
            raise InputError(f"Node '{name}' has no value '{value}'") from None

    if not assignment:
        raise InputError("Assignment cannot be empty")
    return dag.validate_assignment(assignment)


def _default_decision(dag: CausalDag) -> Dict[str, int]:
    return {dag.names[-1]: 1}


def _check_convergence(fitted: FittedNetwork, strict: bool) -> None:
    stalled = sorted(name for name, model in fitted.models.items() if not model.converged)
    if stalled and strict:
        raise ConvergenceError(f"Fit did not converge for nodes: {stalled}")


def _load_positive(path: str) -> Cbn:
    model = load_model(path)
    model.require_positive()
    return model


# === COMMANDS

def cmd_fit(args: argparse.Namespace) -> int:
    model = _load_positive(args.model)
    config = FitConfig(use_scaling=not args.no_scaling, seed=args.seed)
    fitted = fit_network(model, config)

    rows = []
    for name in model.dag.names:
        fitted_model = fitted.models.get(name)
        if fitted_model is None:
            continue
        weights = ", ".join(f"{label}={w:.6f}"
                            for label, w in zip(fitted_model.column_labels(), fitted_model.weights()))
        flag = "" if fitted_model.converged else "  (not converged)"
        print(f"{name}: {weights}  mse={fitted_model.mse:.6e}{flag}")
        for label, w in zip(fitted_model.column_labels(), fitted_model.weights()):
            rows.append({"node": name, "column": label, "weight": float(w), "mse": fitted_model.mse,
                         "converged": fitted_model.converged, "scaled": fitted_model.used_scaling})

    if args.out:
        frame = pd.DataFrame(rows, columns=["node", "column", "weight", "mse", "converged", "scaled"])
        atomic_write_csv(frame, args.out)
        logger.info("weights_written", path=args.out)

    _check_convergence(fitted, args.strict)
    return EXIT_OK


def cmd_prioritize(args: argparse.Namespace) -> int:
    model = _load_positive(args.model)
    dag = model.dag
    s = parse_assignment(dag, args.sensitive)
    y = parse_assignment(dag, args.decision) if args.decision else _default_decision(dag)
    outside = sorted(set(s) - dag.sensitive)
    if outside:
        raise InputError(f"Nodes {outside} are not sensitive")

    ranking = prioritize(model, s, y,
                         config=PriorityConfig(unfairness_weight=args.wu, potential_weight=args.wp),
                         fit_config=FitConfig(seed=args.seed))

    frame = pd.DataFrame(
        [{"edge": e.name, "U_e": e.unfairness, "potential": e.potential, "priority": e.priority, "rank": e.rank}
         for e in ranking],
        columns=["edge", "U_e", "potential", "priority", "rank"],
    )
    print(frame.to_string(index=False, float_format=lambda v: f"{v:.6f}"))

    if args.out:
        atomic_write_csv(frame, args.out)
        logger.info("priorities_written", path=args.out)
    return EXIT_OK


def _max_cumulative_change(before: FittedNetwork, after: FittedNetwork, y: Dict[str, int]) -> Optional[float]:
    """Largest ``|C_approx|`` change over every joint value of the sensitive nodes."""
    dag = before.dag
    sensitive = dag.canonical(dag.sensitive)
    if not sensitive or dag.domain_size(sensitive) < 2 or set(y) & set(sensitive):
        return None
    changes = [
        abs(cumulative_unfairness_approx(after, s, y).value - cumulative_unfairness_approx(before, s, y).value)
        for s in dag.iter_assignments(sensitive)
    ]
    return max(changes)


def cmd_debias(args: argparse.Namespace) -> int:
    model = _load_positive(args.model)
    dag = model.dag
    y = parse_assignment(dag, args.decision) if args.decision else _default_decision(dag)

    fit_config = FitConfig(seed=args.seed)
    config = DebiasConfig(utility_weight=args.utility_weight, seed=args.seed, fit=fit_config)
    fitted = fit_network(model, fit_config)
    result = remove_discrimination(model, config, fitted=fitted)

    delta_c = _max_cumulative_change(fitted, fitted.with_models(result.models), y)
    for line in result.summary():
        print(line)
    if delta_c is not None:
        print(f"max |change of approximate cumulative unfairness|: {delta_c:.6g}")
    if abs(result.unfairness_after - result.unfairness_before) <= NO_CHANGE_TOLERANCE:
        print("no change")

    if args.out:
        rows = []
        for assignment, probability in result.joint.items():
            row = {name: dag.node(name).value_labels[value] for name, value in assignment.items()}
            row["probability"] = probability
            rows.append(row)
        atomic_write_csv(pd.DataFrame(rows, columns=list(dag.names) + ["probability"]), args.out)
        logger.info("joint_written", path=args.out, total=result.joint.total())

    if args.strict and not result.converged:
        raise ConvergenceError(f"Discrimination removal did not converge in {result.iterations} iterations")
    return EXIT_OK


def cmd_experiment(args: argparse.Namespace) -> int:
    threads = args.threads or get_settings().threads
    config = StudyConfig(seed=args.seed)
    outdir = Path(args.outdir)

    if args.name == "mse":
        records = run_mse_study(config, threads=threads)
        written = report.write_mse_study(records, theta_tracking(records), outdir)
        summary = summarize_mse_study(records)
        print(f"combinations: {summary.combos}")
        print(f"median e_J: {summary.median_e_j:.6g} (unscaled {summary.median_e_j_unscaled:.6g})")
        print(f"median delta_J: {summary.median_delta_j:.4f}, negative: {summary.negative_delta_fraction:.2%}")
        print(f"median |w(R->J) - theta(R->J)|: {summary.median_theta_gap:.4f}")
    elif args.name == "finite":
        curves = run_finite_data_study(config, threads=threads)
        written = report.write_finite_data(curves, outdir)
        for m in config.sample_sizes:
            distances = [d for curve in curves for size, d in curve.points if size == m]
            print(f"m={m}: median E={np.median(distances):.6g}, max E={np.max(distances):.6g}")
    else:
        result = input_correlation_probe(seed=args.seed, config=config)
        written = report.write_probe(result, outdir)
        print(f"slope do: {result.slope_do:.6g}, slope flow: {result.slope_flow:.6g}, "
              f"ratio: {result.slope_ratio:.4g}")

    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_sample(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    samples = sample(model, args.n, args.seed)
    atomic_write_csv(samples.to_frame(model.dag), args.out)
    print(f"wrote {len(samples)} samples to {args.out}")
    return EXIT_OK


def cmd_estimate(args: argparse.Namespace) -> int:
    structure = load_model(args.model)
    try:
        frame = pd.read_csv(args.samples, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputError(f"Cannot read samples from {args.samples}: {e}") from e

    samples = SampleSet.from_frame(structure.dag, frame)
    estimate = mle_estimate(structure.dag, samples, smoothing=args.smoothing)
    save_model(estimate, args.out)
    fallback = sum(len(cpt.fallback_rows) for cpt in estimate.cpts.values())
    print(f"estimated {len(estimate.cpts)} CPTs from {len(samples)} samples "
          f"({fallback} unseen parent configurations); wrote {args.out}")
    return EXIT_OK


# === PARSER

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edgeflow",
        description="Edge flows, edge unfairness and discrimination removal for discrete causal networks",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--verbose", action="store_true", help="Enable debug logging")
    parser.add_argument("--log-json", action="store_true", help="Emit log lines as JSON")

    commands = parser.add_subparsers(dest="command", required=True)

    fit = commands.add_parser("fit", help="Fit linear CPT models to every node with parents",
                              formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    fit.add_argument("model", help="Path to a YAML model file")
    fit.add_argument("--no-scaling", action="store_true", help="Fit on unscaled interventional flows")
    fit.add_argument("--seed", type=int, default=0, help="Seed for solver restarts")
    fit.add_argument("--out", help="Write weights to this CSV file")
    fit.add_argument("--strict", action="store_true", help="Exit with code 4 if a fit does not converge")
    fit.set_defaults(handler=cmd_fit)

    prio = commands.add_parser("prioritize", help="Rank unfair edges for intervention",
                               formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    prio.add_argument("model", help="Path to a YAML model file")
    prio.add_argument("--sensitive", required=True, help="Sensitive assignment, e.g. 'R=White,G=Male'")
    prio.add_argument("--decision", help="Decision assignment, e.g. 'J=1' (default: last node = 1)")
    prio.add_argument("--wu", type=float, default=0.5, help="Weight of edge unfairness")
    prio.add_argument("--wp", type=float, default=0.5, help="Weight of potential")
    prio.add_argument("--seed", type=int, default=0, help="Seed for solver restarts")
    prio.add_argument("--out", help="Write the ranking to this CSV file")
    prio.set_defaults(handler=cmd_prioritize)

    debias = commands.add_parser("debias", help="Re-weight models to remove discrimination",
                                 formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    debias.add_argument("model", help="Path to a YAML model file")
    debias.add_argument("--utility-weight", type=float, default=1.0, help="Weight of the data-utility term")
    debias.add_argument("--decision", help="Decision assignment for the summary (default: last node = 1)")
    debias.add_argument("--seed", type=int, default=0, help="Seed for solver restarts")
    debias.add_argument("--out", help="Write the new joint distribution to this CSV file")
    debias.add_argument("--strict", action="store_true", help="Exit with code 4 if the optimizer does not converge")
    debias.set_defaults(handler=cmd_debias)

    experiment = commands.add_parser("experiment", help="Run a synthetic bail experiment",
                                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    experiment.add_argument("name", choices=["mse", "finite", "probe"], help="Experiment to run")
    experiment.add_argument("--seed", type=int, default=0, help="Master seed")
    experiment.add_argument("--outdir", default=".", help="Directory for the CSV output")
    experiment.add_argument("--threads", type=int, help="Worker threads (default: CEA_THREADS)")
    experiment.set_defaults(handler=cmd_experiment)

    smp = commands.add_parser("sample", help="Draw ancestral samples from a model",
                              formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    smp.add_argument("model", help="Path to a YAML model file")
    smp.add_argument("--n", type=int, required=True, help="Number of samples")
    smp.add_argument("--seed", type=int, default=0, help="Sampling seed")
    smp.add_argument("--out", required=True, help="CSV file for the samples (value labels)")
    smp.set_defaults(handler=cmd_sample)

    est = commands.add_parser("estimate", help="Estimate CPTs from samples by maximum likelihood",
                              formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    est.add_argument("model", help="Model file supplying the graph and value labels")
    est.add_argument("--samples", required=True, help="CSV file with one column per node")
    est.add_argument("--smoothing", type=float, default=0.0, help="Additive smoothing count")
    est.add_argument("--out", required=True, help="Path of the estimated model file")
    est.set_defaults(handler=cmd_estimate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run the command line.

    Returns:
        Exit code
    """
    args = build_parser().parse_args(argv)
    settings = get_settings()
    configure_logging("DEBUG" if args.verbose else settings.log_level,
                      json_output=args.log_json or settings.log_json)

    try:
        return args.handler(args)

    except (InputError, ValidationError) as e:
        logger.error("invalid_input", command=args.command, error=str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT

    except PreconditionError as e:
        logger.error("precondition_failed", command=args.command, error=str(e), error_type=type(e).__name__)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PRECONDITION

    except ConvergenceError as e:
        logger.error("not_converged", command=args.command, error=str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONVERGENCE

    except KeyboardInterrupt:
        logger.info("interrupted", command=args.command)
        return EXIT_INTERRUPTED

    except Exception as e:
        logger.exception("unexpected_error", command=args.command, error=str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
