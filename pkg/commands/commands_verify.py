"""Property suites run over seeded commuting tuples (or explicit input files).

Every suite takes a joint decomposition and a generator seeded by (model seed, suite
position), so a suite's samples do not depend on which other suites are selected.
"""
import logging
import math

import numpy as np
from pydantic import ValidationError

from config import (EXIT_IO, EXIT_OK, EXIT_VERIFY_FAILED, SUITE_ALPHAS, SUITE_BOREL_BALLS, SUITE_BOUNDARY_MARGIN,
                    SUITE_COVER_DEPTH, SUITE_GRID_DEPTH, SUITE_MAX_TENSOR_DIM, SUITE_REGIONS, SUITE_TRIALS)
from exceptions import SpectralError
from models import CommandResult, GeneratedModel, JointDecomposition, MapDescriptor, ModelSpec, Region, Report
from service_funcs import error_result, load_matrix, report_to_json, write_json
from service_rules import TOLERANCES
from engine.engine_ensembles import conjugated_diagonal, generate, lattice_values, random_unitary, similarity
from engine.engine_maps import add_last, duplicate, mul_last, permutation, polynomial_map, scale_pair
from engine.engine_measures import (brown, measure_distance, verify_distribution_extension, verify_map_pushforward,
                                    verify_similarity_invariance, verify_tensor, verify_worked_polynomial)
from engine.engine_potential import (admissible_alphas, verify_characterization, verify_pushforward_corollaries,
                                     verify_radius_inequalities)
from engine.engine_preimages import verify_general_borel, verify_preimage_projection
from engine.engine_regions import boundary_distance, box, complement, full, open_ball, product, shrinking_balls
from engine.engine_spectral import (coordinate_decomposition, cyclic_subspace, decompose, verify_box_formula,
                                    verify_hyperinvariance, verify_idempotent_commutation,
                                    verify_lattice_identities, verify_maximality, verify_normal_degeneration,
                                    verify_restriction_identity, verify_sigma_additivity, verify_split_product)

logger = logging.getLogger(__name__)

MODEL_KINDS = ('conjugated_diagonal', 'poly_of_jordan', 'kronecker_pair')


def _safe(region: Region, values) -> bool:
    values = np.asarray(values, dtype=complex).reshape(-1, region.dim)
    return bool(np.min(boundary_distance(region, values)) >= SUITE_BOUNDARY_MARGIN)


def _safe_box(values, rng: np.random.Generator) -> Region:
    """Random box in C whose boundary keeps away from every value."""
    values = np.asarray(values, dtype=complex).ravel()
    scale = max(float(np.max(np.abs(values))), 1.0)
    for _ in range(100):
        candidate = box(complex(*rng.uniform(-scale, scale, 2)), float(rng.uniform(0.1, 1.0) * scale))
        if _safe(candidate, values):
            return candidate
    return box(0, 2 * scale + 1)


def _safe_boxes(dec: JointDecomposition, rng: np.random.Generator) -> list[Region]:
    return [_safe_box(dec.points[:, i], rng) for i in range(dec.operators.n)]


def _quadrants(values, rng: np.random.Generator) -> list[Region]:
    """Four quadrant boxes of a random square plus the square's complement: a partition of C."""
    values = np.asarray(values, dtype=complex).ravel()
    scale = max(float(np.max(np.abs(values))), 1.0)
    for _ in range(100):
        center = complex(*rng.uniform(-scale / 2, scale / 2, 2))
        half = float(rng.uniform(0.5, 1.5) * scale)
        pieces = [box(center + half / 2 * complex(sx, sy), half / 2) for sx in (-1, 1) for sy in (-1, 1)]
        pieces.append(complement(box(center, half)))
        if all(_safe(p, values) for p in pieces):
            return pieces
    return [full(1)]


def _pair(dec: JointDecomposition) -> tuple[np.ndarray, np.ndarray]:
    mats = dec.operators.mats
    if len(mats) >= 2:
        return mats[0], mats[1]
    return mats[0], mats[0] @ mats[0]


def _pair_decomposition(dec: JointDecomposition) -> JointDecomposition:
    return dec if dec.operators.n == 2 else decompose(list(_pair(dec)))


def _seed(rng: np.random.Generator) -> int:
    return int(rng.integers(2 ** 31))


def _random_polynomial(arity: int, rng: np.random.Generator, degree: int = 3) -> MapDescriptor:
    terms = {}
    for _ in range(int(rng.integers(1, 5))):
        powers = [0] * arity
        for _ in range(int(rng.integers(0, degree + 1))):
            powers[int(rng.integers(arity))] += 1
        terms[tuple(powers)] = complex(*rng.standard_normal(2))
    return polynomial_map(arity, terms)


def _preimage_target(dec: JointDecomposition, rng: np.random.Generator) -> Region:
    """Open ball around a sum atom, its edge midway across the widest gap between image atoms."""
    sums = dec.points[:, 0] + dec.points[:, 1]
    images = np.concatenate([sums, dec.points[:, 0] * dec.points[:, 1]])
    center = sums[rng.integers(len(sums))]
    others = np.abs(sums - center)
    others = others[others > SUITE_BOUNDARY_MARGIN]
    upper = float(others.min()) if len(others) else 2.0
    distances = np.abs(images - center)
    between = distances[(distances > SUITE_BOUNDARY_MARGIN) & (distances < upper)]
    levels = np.unique(np.concatenate([[0.0, upper], between]))
    gaps = np.diff(levels)
    widest = int(np.argmax(gaps))
    return open_ball(center, float(levels[widest] + gaps[widest] / 2))


def suite_box_formula(dec: JointDecomposition, rng: np.random.Generator) -> list[Report]:
    return [verify_box_formula(dec, _safe_boxes(dec, rng)) for _ in range(SUITE_REGIONS)]


def suite_sigma_additivity(dec: JointDecomposition, rng: np.random.Generator) -> list[Report]:
    n = dec.operators.n
    pieces = _quadrants(dec.points[:, 0], rng)
    if n > 1:
        pieces = [product(p, full(n - 1)) for p in pieces]
    return [verify_sigma_additivity(dec, pieces)]


def suite_lattice(dec: JointDecomposition, rng: np.random.Generator) -> list[Report]:
    single = coordinate_decomposition(dec, 0)
    values = single.points[:, 0]
    return [verify_lattice_identities(single, _safe_box(values, rng), _safe_box(values, rng))
            for _ in range(SUITE_REGIONS)]


def suite_restriction(dec: JointDecomposition, rng: np.random.Generator) -> list[Report]:
    single = coordinate_decomposition(dec, 0)
    t = single.operators.mats[0]
    reports = []
    for _ in range(SUITE_REGIONS):
        chosen = [c.frame for c in single.clusters if rng.random() < 0.5] or [single.clusters[0].frame]
        carrier = np.hstack(chosen)
        vector = carrier @ (rng.standard_normal((carrier.shape[1], 1)) + 1j * rng.standard_normal((carrier.shape[1], 1)))
        p = cyclic_subspace([t], vector)
        reports.append(verify_restriction_identity(t, p, _safe_box(single.points[:, 0], rng)))
    return reports


def suite_maximality(dec: JointDecomposition, rng: np.random.Generator) -> list[Report]:
    return [verify_maximality(dec, product(*_safe_boxes(dec, rng)), SUITE_TRIALS, _seed(rng))]


def suite_characterization(dec: JointDecomposition, rng: np.random.Generator) -> list[Report]:
    reports = []
    for lam in (1.0, complex(*rng.uniform(-1, 1, 2))):
        alphas = admissible_alphas(dec, SUITE_ALPHAS, _seed(rng), lam)
        reports.append(verify_characterization(dec, alphas, (lam,)))
    return reports


def suite_radius(dec: JointDecomposition, rng: np.random.Generator) -> list[Report]:
    d = dec.operators.d
    superdiagonal = np.zeros(d - 1)
    superdiagonal[::2] = 1.0
    w = random_unitary(d, rng)
    # 2 x 2 nilpotent Jordan blocks: r' = 0 with operator norm 1
    nilpotent = w @ np.diag(superdiagonal, 1) @ w.conj().T
    return [verify_radius_inequalities(*_pair(dec)), verify_radius_inequalities(nilpotent, 2 * nilpotent)]


def suite_pushforward(dec: JointDecomposition, rng: np.random.Generator) -> list[Report]:
    n = dec.operators.n
    mats = list(dec.operators.mats)
    maps = [
        _random_polynomial(n, rng),
        permutation([int(i) for i in rng.permutation(n)]),
        duplicate(n, int(rng.integers(n))),
    ]
    if n >= 2:
        maps += [add_last(n), mul_last(n, complex(*rng.standard_normal(2)))]
    if n == 2:
        maps.append(scale_pair(complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2))))
    reports = [verify_map_pushforward(dec, m) for m in maps]

    triple = (mats + [mats[0] @ mats[0], mats[0] + mats[-1]])[:3]
    reports.append(verify_worked_polynomial(dec if n == 3 else decompose(triple)))
    s, t = _pair(dec)
    reports.append(verify_pushforward_corollaries(s, t, complex(*rng.standard_normal(2)),
                                                  complex(*rng.standard_normal(2))))
    return reports


def suite_tensor(dec: JointDecomposition, rng: np.random.Generator) -> list[Report]:
    s = dec.operators.mats[0]
    size = int(rng.integers(2, 5))
    if s.shape[0] * size > SUITE_MAX_TENSOR_DIM:
        return []
    (t,), _ = conjugated_diagonal(size, 1, _seed(rng))
    return [verify_tensor(s, t)]


def suite_preimage_projection(dec: JointDecomposition, rng: np.random.Generator) -> list[Report]:
    pair = _pair_decomposition(dec)
    return [verify_preimage_projection(pair, _preimage_target(pair, rng), SUITE_COVER_DEPTH)]


def suite_general_borel(dec: JointDecomposition, rng: np.random.Generator) -> list[Report]:
    atom = dec.points[rng.integers(len(dec.points))]
    return [verify_general_borel(dec, open_ball(atom, 1e-6), shrinking_balls(atom, SUITE_BOREL_BALLS))]


def suite_distribution_extension(dec: JointDecomposition, rng: np.random.Generator) -> list[Report]:
    return [verify_distribution_extension(_pair_decomposition(dec), SUITE_GRID_DEPTH)]


def suite_similarity(dec: JointDecomposition, rng: np.random.Generator) -> list[Report]:
    return [verify_similarity_invariance(dec, similarity(dec.operators.d, 10.0, rng))]


def suite_split_product(dec: JointDecomposition, rng: np.random.Generator) -> list[Report]:
    n = dec.operators.n
    if n < 2:
        return []
    i = int(rng.integers(1, n))
    boxes = _safe_boxes(dec, rng)
    return [verify_split_product(dec, i, product(*boxes[:i]), product(*boxes[i:]))]


def suite_idempotent_commutation(dec: JointDecomposition, rng: np.random.Generator) -> list[Report]:
    values = dec.points.ravel()
    return [verify_idempotent_commutation(dec, [_safe_box(values, rng) for _ in range(2)])]


def suite_hyperinvariance(dec: JointDecomposition, rng: np.random.Generator) -> list[Report]:
    return [verify_hyperinvariance(dec, product(*_safe_boxes(dec, rng)), SUITE_TRIALS, _seed(rng))]


def suite_normal(dec: JointDecomposition, rng: np.random.Generator) -> list[Report]:
    d, n = dec.operators.d, dec.operators.n
    w = random_unitary(d, rng)
    normal = decompose([w @ np.diag(lattice_values(d, rng)) @ w.conj().T for _ in range(n)])
    return [verify_normal_degeneration(normal, product(*_safe_boxes(normal, rng)))]


SUITES = {
    'box-formula': suite_box_formula,
    'sigma-additivity': suite_sigma_additivity,
    'lattice': suite_lattice,
    'restriction': suite_restriction,
    'maximality': suite_maximality,
    'characterization': suite_characterization,
    'radius': suite_radius,
    'pushforward': suite_pushforward,
    'tensor': suite_tensor,
    'preimage-projection': suite_preimage_projection,
    'general-borel': suite_general_borel,
    'distribution-extension': suite_distribution_extension,
    'similarity': suite_similarity,
    'split-product': suite_split_product,
    'idempotent-commutation': suite_idempotent_commutation,
    'hyperinvariance': suite_hyperinvariance,
    'normal': suite_normal,
}


def suite_model(kind: str, seed: int, max_dim: int) -> ModelSpec:
    """Seeded model of dimension 2..max_dim with 1..3 operators."""
    if kind == 'kronecker_pair':
        side = max(math.isqrt(max_dim), 2)
        d1 = 2 + seed % (side - 1)
        d2 = 2 + (seed // side) % max(max_dim // d1 - 1, 1)
        return ModelSpec(kind=kind, d=d1, d2=d2, n=2, seed=seed)
    d = 2 + seed % max(max_dim - 1, 1)
    return ModelSpec(kind=kind, d=d, n=1 + seed % 3, seed=seed)


def _failed(check: str, error: SpectralError) -> Report:
    report = Report(check=check, details={'error': type(error).__name__, 'message': error.message})
    report.expect(f'raised {type(error).__name__}', 1.0, 0.0)
    return report


def _label(report: Report, model: GeneratedModel, seed: int) -> Report:
    report.details = {**report.details, 'model': model.spec.kind, 'seed': seed,
                      'd': model.mats[0].shape[0], 'n': len(model.mats)}
    return report


def run_suites(model: GeneratedModel, seed: int, suites: list[str]) -> list[Report]:
    try:
        dec = decompose(model.mats)
    except SpectralError as e:
        logger.warning("%s seed %d: decomposition failed: %s", model.spec.kind, seed, e.message)
        return [_label(_failed('decomposition', e), model, seed)]

    reports = []
    if model.oracle is not None:
        report = Report(check='oracle')
        report.expect('brown vs oracle', measure_distance(brown(dec), model.oracle), TOLERANCES.measure)
        reports.append(report)
    for index, (name, suite) in enumerate(SUITES.items()):
        if name not in suites:
            continue
        rng = np.random.default_rng([seed, index])
        try:
            found = suite(dec, rng)
        except SpectralError as e:
            logger.warning("%s seed %d: suite %s raised %s", model.spec.kind, seed, name, e.message)
            found = [_failed(name, e)]
        reports.extend(found)
    return [_label(r, model, seed) for r in reports]


def cmd_verify(suites: list[str], models: list[str], seeds: list[int], max_dim: int, out: str,
               inputs: list[str] | None = None) -> CommandResult:
    logger.info("verify %d suites on %s, seeds %s -> %s", len(suites), inputs or list(models), seeds, out)
    unknown = sorted(set(suites) - set(SUITES)) + sorted(set(models) - set(MODEL_KINDS))
    if unknown:
        return CommandResult(exit_code=EXIT_IO, content={"message": f"Unknown suites or models: {', '.join(unknown)}"})

    try:
        if inputs:
            explicit = ModelSpec(kind='explicit', paths=list(inputs))
            runs = [(generate(explicit, [load_matrix(p) for p in inputs]), 0)]
        elif suites:
            runs = [(generate(suite_model(kind, seed, max_dim)), seed) for kind in models for seed in seeds]
        else:
            runs = []
    except (SpectralError, OSError, ValueError, ValidationError) as e:
        logger.info("verify refused its input: %s", e)
        return error_result(e)

    reports = []
    if suites:
        for model, seed in runs:
            reports.extend(run_suites(model, seed, suites))

    try:
        write_json(out, report_to_json(reports))
    except OSError as e:
        return error_result(e)

    failed = sum(not r.passed for r in reports)
    logger.info("verify finished: %d checks, %d failed", len(reports), failed)
    content = {"message": "All checks passed", "checks": len(reports), "failed": failed, "report": str(out)}
    if failed:
        content["message"] = "Some checks failed"
        return CommandResult(exit_code=EXIT_VERIFY_FAILED, content=content)
    return CommandResult(exit_code=EXIT_OK, content=content)
