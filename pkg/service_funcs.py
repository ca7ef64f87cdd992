import json
import pathlib

import numpy as np

from config import EXIT_IO
from exceptions import SpectralError
from models import (AtomicMeasure, BoxCover, CommandResult, GridDensity, Idempotent, JointDecomposition, Region,
                    Report, Subspace)
from service_rules import TOLERANCES

# heatmap anchors from zero density to the maximum: black, blue, red, yellow, white
HEATMAP_ANCHORS = np.array([
    [0, 0, 0],
    [0, 0, 255],
    [255, 0, 0],
    [255, 255, 0],
    [255, 255, 255],
], dtype=float)


def matrix_to_json(a: np.ndarray) -> dict:
    a = np.asarray(a, dtype=complex)
    return {"d": a.shape[0], "re": a.real.tolist(), "im": a.imag.tolist()}


def matrix_from_json(data: dict) -> np.ndarray:
    re = np.array(data["re"], dtype=float)
    im = np.array(data["im"], dtype=float)
    if re.shape != im.shape or re.ndim != 2 or re.shape[0] != data["d"]:
        raise ValueError("matrix JSON needs d rows of matching real and imaginary parts")
    return re + 1j * im


def complex_pairs(values) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(values, dtype=complex).ravel()]


def read_json(path: str | pathlib.Path) -> dict:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def write_json(path: str | pathlib.Path, data) -> None:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")


def load_matrix(path: str | pathlib.Path) -> np.ndarray:
    return matrix_from_json(read_json(path))


def measure_to_json(mu: AtomicMeasure) -> dict:
    return {"dim": mu.dim, "atoms": [{"z": complex_pairs(p), "w": float(w)} for p, w in zip(mu.points, mu.weights)]}


def measure_from_json(data: dict) -> AtomicMeasure:
    points = [[complex(re, im) for re, im in atom["z"]] for atom in data["atoms"]]
    return AtomicMeasure(dim=data["dim"], points=points, weights=[atom["w"] for atom in data["atoms"]])


def measure_csv(mu: AtomicMeasure) -> str:
    header = ",".join(f"re{i},im{i}" for i in range(1, mu.dim + 1)) + ",weight"
    rows = [",".join(f"{x!r}" for pair in complex_pairs(p) for x in pair) + f",{float(w)!r}"
            for p, w in zip(mu.points, mu.weights)]
    return "\n".join([header] + rows) + "\n"


def subspace_to_json(k: Subspace) -> dict:
    return {"d": k.ambient_dim, "re": k.frame.real.tolist(), "im": k.frame.imag.tolist()}


def idempotent_to_json(e: Idempotent) -> dict:
    return {"d": e.ambient_dim, "range": subspace_to_json(e.range_frame), "kernel": subspace_to_json(e.kernel_frame)}


def decomposition_to_json(dec: JointDecomposition) -> dict:
    return {
        "n": dec.operators.n,
        "d": dec.operators.d,
        "condition": dec.condition,
        "commutator_bound": dec.operators.commutator_bound,
        "clusters": [
            {"point": complex_pairs(c.point), "multiplicity": c.multiplicity, "frame": subspace_to_json(c.space)}
            for c in dec.clusters
        ],
    }


def region_from_json(data: dict) -> Region:
    return Region.model_validate(data)


def cover_csv(cover: BoxCover) -> str:
    rows = [",".join(f"{x!r}" for x in row[:5]) + f",{int(row[5])}" for row in cover.boxes.tolist()]
    return "\n".join(["z_re,z_im,w_re,w_im,delta,level"] + rows) + "\n"


def grid_csv(density: GridDensity) -> str:
    xs, ys = density.grid.x_centers, density.grid.y_centers
    rows = [f"{xs[i]!r},{ys[j]!r},{density.cell_mass[j, i]!r}"
            for j in range(len(ys)) for i in range(len(xs))]
    return "\n".join(["x,y,mass"] + rows) + "\n"


def heatmap_ppm(density: GridDensity) -> bytes:
    """Binary P6 image, top row = largest y; colors interpolate HEATMAP_ANCHORS over mass / max mass."""
    mass = np.clip(density.cell_mass, 0, None)
    top = mass.max()
    level = mass / top if top > 0 else mass
    position = level * (len(HEATMAP_ANCHORS) - 1)
    low = np.minimum(np.floor(position).astype(int), len(HEATMAP_ANCHORS) - 2)
    frac = (position - low)[..., None]
    rgb = HEATMAP_ANCHORS[low] * (1 - frac) + HEATMAP_ANCHORS[low + 1] * frac
    pixels = np.round(rgb[::-1]).astype(np.uint8)
    ny, nx = mass.shape
    return f"P6\n{nx} {ny}\n255\n".encode("ascii") + pixels.tobytes()


def write_text(path: str | pathlib.Path, text: str) -> None:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def write_bytes(path: str | pathlib.Path, data: bytes) -> None:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)


def parse_seeds(text: str) -> list[int]:
    """'1-10,15' -> [1, ..., 10, 15]."""
    seeds = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "-" in part[1:]:
            split = part.index("-", 1)
            first, last = int(part[:split]), int(part[split + 1:])
            if last < first:
                raise ValueError(f"empty seed range {part!r}")
            seeds.extend(range(first, last + 1))
        else:
            seeds.append(int(part))
    return seeds


def report_to_json(reports: list[Report]) -> dict:
    return {
        "passed": all(r.passed for r in reports),
        "tolerances": TOLERANCES.model_dump(),
        "checks": [r.model_dump() for r in reports],
    }


def error_result(error: Exception) -> CommandResult:
    """Map an exception raised while serving a command to its exit code and message."""
    if isinstance(error, SpectralError):
        return CommandResult(exit_code=error.exit_code, content={"message": error.message})
    return CommandResult(exit_code=EXIT_IO, content={"message": str(error)})
