import logging

import numpy as np

from config import (DEFAULT_EPSILON_REL, DEFAULT_GRID_SIZE, GRID_CHUNK_ENTRIES, GRID_LEAK_TOL, GRID_MARGIN_REL,
                    GRID_MASS_TOL)
from exceptions import DimensionMismatchError, GridError, IllPosedAlphaError
from models import AtomicMeasure, CommutingTuple, GridDensity, GridSpec, JointDecomposition, Report
from service_rules import TOLERANCES
from engine.engine_linalg import as_matrix, schur
from engine.engine_maps import linear_map, multiply_map
from engine.engine_measures import brown, brown_of, measure_distance, pushforward
from engine.engine_spectral import decompose

logger = logging.getLogger(__name__)


def fk_log_det(a) -> float:
    """tau(log|A|) = (1/d) sum log sigma_i; -inf once the smallest singular value is negligible."""
    a = as_matrix(a)
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0 or s[-1] <= TOLERANCES.log_det_floor * s[0]:
        return float('-inf')
    return float(np.mean(np.log(s)))


def characterization_gap(operators: CommutingTuple, dec: JointDecomposition, alpha, lam: complex = 1.0) -> float:
    """|tau(log|sum a_i T_i - lam|) - integral of log|sum a_i z_i - lam| d mu|."""
    alpha = np.asarray(alpha, dtype=complex).reshape(-1)
    if len(alpha) != operators.n:
        raise DimensionMismatchError(f"alpha has {len(alpha)} entries for {operators.n} operators")
    values = dec.points @ alpha - lam
    nearest = float(np.min(np.abs(values)))
    if nearest < TOLERANCES.alpha_floor:
        raise IllPosedAlphaError(nearest)

    combined = sum(a * t for a, t in zip(alpha, operators.mats)) - lam * np.eye(operators.d)
    lhs = fk_log_det(combined)
    rhs = float(np.sum(dec.multiplicities / operators.d * np.log(np.abs(values))))
    return abs(lhs - rhs)


def admissible_alphas(dec: JointDecomposition, count: int, seed: int = 0, lam: complex = 1.0) -> np.ndarray:
    """Random complex alphas whose hyperplane stays away from every atom."""
    rng = np.random.default_rng(seed)
    n = dec.operators.n
    alphas = []
    while len(alphas) < count:
        alpha = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2 * n)
        if np.min(np.abs(dec.points @ alpha - lam)) >= 1e3 * TOLERANCES.alpha_floor:
            alphas.append(alpha)
    return np.array(alphas).reshape(count, n)


def verify_characterization(dec: JointDecomposition, alphas: np.ndarray, lams: tuple[complex, ...] = (1.0,)) -> Report:
    report = Report(check='characterization')
    gaps = [characterization_gap(dec.operators, dec, alpha, lam) for alpha in alphas for lam in lams]
    report.expect('max characterization gap', max(gaps, default=0.0), TOLERANCES.measure)
    report.details = {'evaluations': len(gaps)}
    return report


def modified_spectral_radius(mu: AtomicMeasure) -> float:
    if mu.dim != 1:
        raise DimensionMismatchError("the spectral radius takes a measure on C")
    return float(np.max(np.abs(mu.points[:, 0])))


def verify_radius_inequalities(s, t) -> Report:
    """r'(ST) <= r'(S) r'(T) and r'(S+T) <= r'(S) + r'(T)."""
    s, t = as_matrix(s), as_matrix(t)
    CommutingTuple(mats=[s, t])
    report = Report(check='radius')
    rs, rt = modified_spectral_radius(brown_of([s])), modified_spectral_radius(brown_of([t]))
    r_prod = modified_spectral_radius(brown_of([s @ t]))
    r_sum = modified_spectral_radius(brown_of([s + t]))
    report.expect('product radius', r_prod - rs * rt, TOLERANCES.radius_slack * max(1.0, rs * rt))
    report.expect('sum radius', r_sum - (rs + rt), TOLERANCES.radius_slack * max(1.0, rs + rt))
    report.details = {'r_s': rs, 'r_t': rt, 'r_product': r_prod, 'r_sum': r_sum}
    return report


def verify_pushforward_corollaries(s, t, alpha: complex, beta: complex) -> Report:
    """brown(aS + bT) and brown(ST) as push-forwards of brown(S, T)."""
    report = Report(check='pushforward-corollaries')
    mu = brown(decompose([s, t]))
    report.expect('linear combination', measure_distance(brown_of([alpha * s + beta * t]),
                                                         pushforward(mu, linear_map([alpha, beta]))),
                  TOLERANCES.measure)
    report.expect('product', measure_distance(brown_of([s @ t]), pushforward(mu, multiply_map())),
                  TOLERANCES.measure)
    return report


def log_potential(t, lam: complex, eps: float) -> float:
    """(1/2d) log det((T - lam)^H (T - lam) + eps^2)."""
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    t = as_matrix(t)
    s = np.linalg.svd(t - lam * np.eye(t.shape[0]), compute_uv=False)
    return float(np.mean(np.log(s ** 2 + eps ** 2)) / 2)


def default_grid(t: np.ndarray, eps: float, size: int = DEFAULT_GRID_SIZE) -> GridSpec:
    norm = np.linalg.norm(t, 2)
    radius = norm + 3 * eps + GRID_MARGIN_REL * max(norm, 1.0)
    return GridSpec(x_min=-radius, x_max=radius, y_min=-radius, y_max=radius, nx=size, ny=size)


def _potentials(u: np.ndarray, nodes: np.ndarray, eps: float) -> np.ndarray:
    """(1/2d) log det G(lam) for G = U^H U - conj(lam) U - lam U^H + (|lam|^2 + eps^2), batched."""
    d = u.shape[0]
    gram = u.conj().T @ u
    eye = np.eye(d)
    chunk = max(1, GRID_CHUNK_ENTRIES // (d * d))
    values = np.empty(len(nodes))
    for start in range(0, len(nodes), chunk):
        lam = nodes[start:start + chunk]
        g = (gram[None, :, :] - lam.conj()[:, None, None] * u[None, :, :] - lam[:, None, None] * u.conj().T[None, :, :]
             + (np.abs(lam) ** 2 + eps ** 2)[:, None, None] * eye[None, :, :])
        try:
            chol = np.linalg.cholesky(g)
            logdet = 2 * np.sum(np.log(np.abs(np.diagonal(chol, axis1=1, axis2=2))), axis=1)
        except np.linalg.LinAlgError:
            logdet = np.linalg.slogdet(g)[1]
        values[start:start + chunk] = logdet / (2 * d)
    return values


def grid_brown(t, grid: GridSpec | None = None, eps: float | None = None,
               size: int = DEFAULT_GRID_SIZE) -> GridDensity:
    """Cell masses of (1/2pi) Laplacian of the regularized log potential.

    Potentials are taken at cell centers plus a one-cell halo; the five-point stencil
    at each center times the cell area gives the cell mass.
    """
    t = as_matrix(t)
    norm = np.linalg.norm(t, 2)
    if eps is None:
        eps = DEFAULT_EPSILON_REL * max(norm, 1.0)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    if grid is None:
        grid = default_grid(t, eps, size)

    _, u = schur(t)
    eigs = np.diag(u)
    margin = 3 * eps
    if (np.any(eigs.real < grid.x_min + margin) or np.any(eigs.real > grid.x_max - margin)
            or np.any(eigs.imag < grid.y_min + margin) or np.any(eigs.imag > grid.y_max - margin)):
        raise GridError()

    xs = grid.x_min + (np.arange(-1, grid.nx + 1) + 0.5) * grid.hx
    ys = grid.y_min + (np.arange(-1, grid.ny + 1) + 0.5) * grid.hy
    nodes = (xs[None, :] + 1j * ys[:, None]).ravel()
    phi = _potentials(u, nodes, eps).reshape(len(ys), len(xs))

    laplacian = ((phi[1:-1, 2:] + phi[1:-1, :-2] - 2 * phi[1:-1, 1:-1]) / grid.hx ** 2
                 + (phi[2:, 1:-1] + phi[:-2, 1:-1] - 2 * phi[1:-1, 1:-1]) / grid.hy ** 2)
    cell_mass = laplacian / (2 * np.pi) * grid.hx * grid.hy

    total = float(cell_mass.sum())
    ring = np.ones_like(cell_mass, dtype=bool)
    ring[1:-1, 1:-1] = False
    ring_mass = float(np.abs(cell_mass[ring]).sum())
    if ring_mass > GRID_LEAK_TOL or abs(total - 1) > GRID_MASS_TOL:
        raise GridError(f"grid does not contain spectrum (boundary mass {ring_mass:.3e}, total {total:.4f})")

    leak = float(-cell_mass[cell_mass < 0].sum() / total)
    if leak > GRID_LEAK_TOL:
        logger.warning("negative cell mass %.3e of total exceeds %.2f", leak, GRID_LEAK_TOL)
    logger.debug("grid density %dx%d, eps %.2e, total mass %.6f", grid.nx, grid.ny, eps, total)
    return GridDensity(grid=grid, cell_mass=cell_mass, epsilon=eps, total_mass=total, leak=leak)
