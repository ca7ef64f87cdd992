import logging

from pydantic import ValidationError

from config import EXIT_OK, EXIT_VERIFY_FAILED
from exceptions import SpectralError
from models import CommandResult
from service_funcs import cover_csv, error_result, read_json, region_from_json, write_text
from engine.engine_regions import dyadic_cover, verify_cover

logger = logging.getLogger(__name__)


def cmd_cover(region: str, mapping: str, depth: int, out: str, norm_bound: float | None = None,
              window: float | None = None) -> CommandResult:
    logger.info("dyadic %s cover of %s to depth %d -> %s", mapping, region, depth, out)
    try:
        target = region_from_json(read_json(region))
        cover = dyadic_cover(target, mapping, depth, norm_bound=norm_bound, window=window)
        write_text(out, cover_csv(cover))
    except (SpectralError, OSError, ValueError, ValidationError) as e:
        logger.info("cover failed: %s", e)
        return error_result(e)

    checks = verify_cover(cover)
    content = {"message": "Cover computed successfully", "truncated": cover.truncated, **checks}
    if checks["overlaps"] or checks["unsafe"] or checks["corners_outside"]:
        content["message"] = "Cover failed its disjointness or safety checks"
        return CommandResult(exit_code=EXIT_VERIFY_FAILED, content=content)
    return CommandResult(exit_code=EXIT_OK, content=content)
