import logging
import pathlib

from pydantic import ValidationError

from config import EXIT_OK, EXIT_VERIFY_FAILED
from exceptions import SpectralError
from models import CommandResult
from service_funcs import (decomposition_to_json, error_result, idempotent_to_json, load_matrix, measure_csv,
                           measure_from_json, measure_to_json, read_json, region_from_json, subspace_to_json,
                           write_json, write_text)
from service_rules import TOLERANCES
from engine.engine_measures import brown, measure_distance
from engine.engine_spectral import decompose, riesz_idempotent, spectral_projection, spectral_trace

logger = logging.getLogger(__name__)


def cmd_brown(input: str, out: str, csv: str | None = None) -> CommandResult:
    return cmd_joint([input], out, csv)


def cmd_joint(inputs: list[str], out: str, csv: str | None = None, oracle: str | None = None) -> CommandResult:
    logger.info("joint measure of %d operators -> %s", len(inputs), out)
    try:
        mats = [load_matrix(p) for p in inputs]
        expected = measure_from_json(read_json(oracle)) if oracle else None
        dec = decompose(mats)
        mu = brown(dec)
        write_json(out, measure_to_json(mu))
        if csv:
            write_text(csv, measure_csv(mu))
    except (SpectralError, OSError, ValueError, ValidationError) as e:
        logger.info("joint measure failed: %s", e)
        return error_result(e)

    content = {
        "message": "Measure computed successfully",
        "atoms": mu.size,
        "condition": dec.condition,
        "commutator_bound": dec.operators.commutator_bound,
    }
    if expected is None:
        return CommandResult(exit_code=EXIT_OK, content=content)

    distance = measure_distance(mu, expected)
    content["oracle_distance"] = distance
    if distance > TOLERANCES.measure:
        content["message"] = "Measure does not match the oracle"
        logger.info("oracle distance %.3e above %.1e", distance, TOLERANCES.measure)
        return CommandResult(exit_code=EXIT_VERIFY_FAILED, content=content)
    return CommandResult(exit_code=EXIT_OK, content=content)


def cmd_subspace(inputs: list[str], region: str, out: str) -> CommandResult:
    """Spectral subspace, its trace and the Riesz idempotent of a region, written as one JSON file."""
    logger.info("spectral subspace of %d operators for %s -> %s", len(inputs), region, out)
    try:
        mats = [load_matrix(p) for p in inputs]
        target = region_from_json(read_json(region))
        dec = decompose(mats)
        k = spectral_projection(dec, target)
        trace = spectral_trace(dec, target)
        idem = riesz_idempotent(dec, target)
        write_json(pathlib.Path(out), {
            "subspace": subspace_to_json(k),
            "trace": {"rank": trace.rank, "d": trace.ambient_dim, "value": float(trace)},
            "idempotent": idempotent_to_json(idem),
            "decomposition": decomposition_to_json(dec),
        })
    except (SpectralError, OSError, ValueError, ValidationError) as e:
        logger.info("spectral subspace failed: %s", e)
        return error_result(e)

    return CommandResult(exit_code=EXIT_OK, content={
        "message": "Spectral subspace computed successfully",
        "rank": k.dim,
        "trace": f"{trace.rank}/{trace.ambient_dim}",
    })
