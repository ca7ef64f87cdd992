import logging

from pydantic import ValidationError

from config import DEFAULT_GRID_SIZE, EXIT_OK
from exceptions import SpectralError
from models import CommandResult, GridSpec
from service_funcs import error_result, grid_csv, heatmap_ppm, load_matrix, write_bytes, write_text
from engine.engine_potential import grid_brown

logger = logging.getLogger(__name__)


def cmd_grid_brown(input: str, out_csv: str, out_ppm: str, bounds: tuple[float, float, float, float] | None = None,
                   size: int = DEFAULT_GRID_SIZE, eps: float | None = None) -> CommandResult:
    """Grid density of one matrix; `bounds` is (x_min, x_max, y_min, y_max), defaulting to a norm-sized square."""
    logger.info("grid density of %s (%d cells per side) -> %s, %s", input, size, out_csv, out_ppm)
    try:
        t = load_matrix(input)
        grid = None
        if bounds is not None:
            x_min, x_max, y_min, y_max = bounds
            grid = GridSpec(x_min=x_min, x_max=x_max, y_min=y_min, y_max=y_max, nx=size, ny=size)
        density = grid_brown(t, grid, eps, size)
        write_text(out_csv, grid_csv(density))
        write_bytes(out_ppm, heatmap_ppm(density))
    except (SpectralError, OSError, ValueError, ValidationError) as e:
        logger.info("grid density failed: %s", e)
        return error_result(e)

    return CommandResult(exit_code=EXIT_OK, content={
        "message": "Grid density computed successfully",
        "total_mass": density.total_mass,
        "leak": density.leak,
        "epsilon": density.epsilon,
    })
