import argparse
import json
import logging
import sys

from config import DEFAULT_GRID_SIZE, DEFAULT_SEEDS, DEFAULT_SUITE_MAX_DIM, LOG_FORMAT, LOG_LEVEL
from models import CommandResult, ModelSpec
from service_funcs import error_result, parse_seeds
from service_rules import TOLERANCES

from commands.commands_gen import cmd_gen
from commands.commands_measures import cmd_brown, cmd_joint, cmd_subspace
from commands.commands_cover import cmd_cover
from commands.commands_verify import MODEL_KINDS, SUITES, cmd_verify
from commands.commands_grid import cmd_grid_brown

logger = logging.getLogger(__name__)


# Routes

def route_gen(args: argparse.Namespace) -> CommandResult:
    """
    Generate a seeded test model, or copy explicit matrix files after validating them.

    Args:
        args (Namespace): kind, d, n, d2, degree, seed, conditioning, paths and out.

    Returns:
        CommandResult: The written files and the oracle path, if the model has one.

    Example:
        ```
        python main.py gen conjugated_diagonal --d 4 --n 2 --seed 7 --out models/cd7

        {
            "message": "Model generated successfully",
            "files": ["models/cd7/matrix_0.json", "models/cd7/matrix_1.json"],
            "oracle": "models/cd7/oracle.json"
        }
        ```
    """
    spec = ModelSpec(kind=args.kind, d=args.d, n=args.n, d2=args.d2, degree=args.degree, seed=args.seed,
                     conditioning=args.conditioning, paths=args.paths)
    return cmd_gen(spec, args.out)


def route_brown(args: argparse.Namespace) -> CommandResult:
    """
    Brown measure of a single matrix: its eigenvalue atoms with weight multiplicity / d.

    Args:
        args (Namespace): input, out and an optional csv path.

    Returns:
        CommandResult: Atom count, decomposition condition number and commutator bound.
    """
    return cmd_brown(args.input, args.out, args.csv)


def route_joint(args: argparse.Namespace) -> CommandResult:
    """
    Joint Brown measure of commuting matrices, optionally compared against an oracle measure.

    Args:
        args (Namespace): inputs, out, an optional csv path and an optional oracle JSON.

    Returns:
        CommandResult: Exit code 0, or 1 when the oracle distance exceeds the measure tolerance,
        2 for non-commuting inputs and 3 when the decomposition fails.

    Example:
        ```
        python main.py joint models/cd7/matrix_0.json models/cd7/matrix_1.json --out mu.json --oracle models/cd7/oracle.json

        {
            "message": "Measure computed successfully",
            "atoms": 4,
            "condition": 9.7,
            "commutator_bound": 3.1e-15,
            "oracle_distance": 2.2e-15
        }
        ```
    """
    return cmd_joint(args.inputs, args.out, args.csv, args.oracle)


def route_subspace(args: argparse.Namespace) -> CommandResult:
    """
    Spectral subspace, trace and Riesz idempotent of a region given as Region JSON.

    Args:
        args (Namespace): inputs, region and out.

    Returns:
        CommandResult: Rank of the spectral subspace and its trace as a fraction.
    """
    return cmd_subspace(args.inputs, args.region, args.out)


def route_cover(args: argparse.Namespace) -> CommandResult:
    """
    Dyadic box cover of the preimage of a region under addition or multiplication.

    Args:
        args (Namespace): region, mapping, depth, norm_bound, window and out.

    Returns:
        CommandResult: Box count and the disjointness and safety counters of the cover.
    """
    return cmd_cover(args.region, args.mapping, args.depth, args.out, args.norm_bound, args.window)


def route_verify(args: argparse.Namespace) -> CommandResult:
    """
    Run property suites over seeded models (or explicit inputs) and write a JSON report.

    Args:
        args (Namespace): suites, models, seeds, max_dim, inputs and out.

    Returns:
        CommandResult: Exit code 0 iff every check passed; 2 when explicit inputs do not commute.

    Example:
        ```
        python main.py verify --suites box-formula,lattice --seeds 1-3 --out report.json

        {
            "message": "All checks passed",
            "checks": 33,
            "failed": 0,
            "report": "report.json"
        }
        ```
    """
    suites = _split(args.suites) if args.suites is not None else list(SUITES)
    models = _split(args.models) if args.models is not None else list(MODEL_KINDS)
    return cmd_verify(suites, models, parse_seeds(args.seeds), args.max_dim, args.out, args.inputs)


def route_grid(args: argparse.Namespace) -> CommandResult:
    """
    Regularized grid Brown density of one matrix, written as CSV and a P6 heatmap.

    Args:
        args (Namespace): input, csv, ppm, bounds, size and eps.

    Returns:
        CommandResult: Total and negative mass of the grid; exit code 4 when the grid misses the spectrum.
    """
    return cmd_grid_brown(args.input, args.csv, args.ppm, tuple(args.bounds) if args.bounds else None,
                          args.size, args.eps)


def _split(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Joint spectral measures of commuting matrices.")
    parser.add_argument("--verbose", action="store_true", help="Log at DEBUG level")
    for name, field in tolerance_fields():
        parser.add_argument(f"--tol-{name.replace('_', '-')}", dest=f"tol_{name}", type=float, default=None,
                            help=f"Override the {name} tolerance (default {field.default:g})")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="Generate a seeded test model")
    gen.add_argument("kind", choices=["ginibre", "conjugated_diagonal", "poly_of_jordan", "kronecker_pair", "explicit"])
    gen.add_argument("--d", type=int, default=4)
    gen.add_argument("--n", type=int, default=1)
    gen.add_argument("--d2", type=int, default=2, help="Second factor dimension of a Kronecker pair")
    gen.add_argument("--degree", type=int, default=2, help="Polynomial degree for poly_of_jordan")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--conditioning", type=float, default=10.0)
    gen.add_argument("--paths", nargs="*", default=[], help="Matrix files of an explicit model")
    gen.add_argument("--out", required=True)
    gen.set_defaults(route=route_gen)

    brown = sub.add_parser("brown", help="Brown measure of one matrix")
    brown.add_argument("input")
    brown.add_argument("--out", required=True)
    brown.add_argument("--csv")
    brown.set_defaults(route=route_brown)

    joint = sub.add_parser("joint", help="Joint Brown measure of commuting matrices")
    joint.add_argument("inputs", nargs="+")
    joint.add_argument("--out", required=True)
    joint.add_argument("--csv")
    joint.add_argument("--oracle")
    joint.set_defaults(route=route_joint)

    subspace = sub.add_parser("subspace", help="Spectral subspace and idempotent of a region")
    subspace.add_argument("inputs", nargs="+")
    subspace.add_argument("--region", required=True)
    subspace.add_argument("--out", required=True)
    subspace.set_defaults(route=route_subspace)

    cover = sub.add_parser("cover", help="Dyadic box cover of a preimage under + or x")
    cover.add_argument("region")
    cover.add_argument("--mapping", choices=["add", "multiply"], default="add")
    cover.add_argument("--depth", type=int, default=6)
    cover.add_argument("--norm-bound", type=float)
    cover.add_argument("--window", type=float)
    cover.add_argument("--out", required=True)
    cover.set_defaults(route=route_cover)

    verify = sub.add_parser("verify", help="Run property suites")
    verify.add_argument("--suites", help=f"Comma-separated, default all of: {', '.join(SUITES)}")
    verify.add_argument("--models", help=f"Comma-separated, default all of: {', '.join(MODEL_KINDS)}")
    verify.add_argument("--seeds", default=DEFAULT_SEEDS)
    verify.add_argument("--max-dim", type=int, default=DEFAULT_SUITE_MAX_DIM)
    verify.add_argument("--inputs", nargs="*", help="Explicit matrix files instead of seeded models")
    verify.add_argument("--out", required=True)
    verify.set_defaults(route=route_verify)

    grid = sub.add_parser("grid", help="Grid Brown density of one matrix")
    grid.add_argument("input")
    grid.add_argument("--csv", required=True)
    grid.add_argument("--ppm", required=True)
    grid.add_argument("--bounds", nargs=4, type=float, metavar=("X_MIN", "X_MAX", "Y_MIN", "Y_MAX"))
    grid.add_argument("--size", type=int, default=DEFAULT_GRID_SIZE)
    grid.add_argument("--eps", type=float)
    grid.set_defaults(route=route_grid)
    return parser


def tolerance_fields():
    return type(TOLERANCES).model_fields.items()


def apply_tolerances(args: argparse.Namespace) -> None:
    for name, _ in tolerance_fields():
        value = getattr(args, f"tol_{name}", None)
        if value is not None:
            setattr(TOLERANCES, name, value)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else LOG_LEVEL, format=LOG_FORMAT)
    try:
        apply_tolerances(args)
        result = args.route(args)
    except ValueError as e:
        result = error_result(e)
    logger.info("%s finished with exit code %d", args.command, result.exit_code)
    print(json.dumps(result.content, indent=2, sort_keys=True))
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
