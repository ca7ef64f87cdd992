import logging
import pathlib
import shutil

from pydantic import ValidationError

from config import EXIT_IO, EXIT_OK
from exceptions import SpectralError
from models import CommandResult, ModelSpec
from service_funcs import error_result, load_matrix, matrix_to_json, measure_to_json, write_json
from engine.engine_ensembles import generate

logger = logging.getLogger(__name__)


def cmd_gen(spec: ModelSpec, out: str) -> CommandResult:
    logger.info("gen %s (d=%d, n=%d, seed=%d) -> %s", spec.kind, spec.d, spec.n, spec.seed, out)
    out_dir = pathlib.Path(out)
    try:
        if spec.kind == 'explicit':
            if not spec.paths:
                return CommandResult(exit_code=EXIT_IO, content={"message": "explicit models need matrix files"})
            model = generate(spec, [load_matrix(p) for p in spec.paths])
            out_dir.mkdir(parents=True, exist_ok=True)
            files = []
            for i, path in enumerate(spec.paths):
                target = out_dir / f"matrix_{i}.json"
                shutil.copyfile(path, target)
                files.append(str(target))
        else:
            model = generate(spec)
            files = []
            for i, mat in enumerate(model.mats):
                target = out_dir / f"matrix_{i}.json"
                write_json(target, matrix_to_json(mat))
                files.append(str(target))
        if model.oracle is not None:
            write_json(out_dir / "oracle.json", measure_to_json(model.oracle))
    except (SpectralError, OSError, ValueError, ValidationError) as e:
        logger.info("gen failed: %s", e)
        return error_result(e)

    logger.info("gen wrote %d matrices", len(files))
    return CommandResult(exit_code=EXIT_OK, content={
        "message": "Model generated successfully",
        "files": files,
        "oracle": None if model.oracle is None else str(out_dir / "oracle.json"),
    })
