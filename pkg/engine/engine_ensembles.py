"""Seeded test ensembles; every model except Ginibre and explicit input carries its joint spectrum."""
import logging
import math

import numpy as np

from models import AtomicMeasure, CommutingTuple, GeneratedModel, ModelSpec
from engine.engine_linalg import as_matrix, kronecker
from engine.engine_measures import product_measure

logger = logging.getLogger(__name__)

JITTER = 0.1  # fraction of the lattice spacing


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def lattice_values(d: int, rng: np.random.Generator) -> np.ndarray:
    """d distinct points of a square lattice over [-2, 2]^2, jittered by a tenth of the spacing."""
    side = max(5, math.ceil(math.sqrt(d)))
    spacing = 4.0 / (side - 1)
    ticks = -2.0 + spacing * np.arange(side)
    pool = (ticks[:, None] + 1j * ticks[None, :]).ravel()
    chosen = rng.choice(pool, size=d, replace=False)
    angle = rng.uniform(0, 2 * np.pi, d)
    radius = JITTER * spacing * np.sqrt(rng.uniform(0, 1, d))
    return chosen + radius * np.exp(1j * angle)


def similarity(d: int, conditioning: float, rng: np.random.Generator) -> np.ndarray:
    """Q_1 diag(geomspace(1, conditioning)) Q_2^H: condition number exactly `conditioning`."""
    return random_unitary(d, rng) @ np.diag(np.geomspace(1.0, conditioning, d)) @ random_unitary(d, rng).conj().T


def ginibre(d: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2 * d)


def conjugated_diagonal(d: int, n: int, seed: int, conditioning: float = 10.0) -> tuple[list[np.ndarray], AtomicMeasure]:
    """T_i = S D_i S^-1 with a common similarity S; the oracle is the diagonal tuples."""
    rng = np.random.default_rng(seed)
    diagonals = np.column_stack([lattice_values(d, rng) for _ in range(n)])
    s = similarity(d, conditioning, rng)
    s_inv = np.linalg.inv(s)
    mats = [s @ np.diag(diagonals[:, i]) @ s_inv for i in range(n)]
    return mats, AtomicMeasure(dim=n, points=diagonals, weights=np.full(d, 1.0 / d))


def poly_of_jordan(d: int, n: int, seed: int, degree: int = 2) -> tuple[list[np.ndarray], AtomicMeasure]:
    """T_1 unitarily similar to a Jordan matrix (blocks of size <= 2), T_i = p_i(T_1) for i > 1."""
    rng = np.random.default_rng(seed)
    sizes = []
    while sum(sizes) < d:
        sizes.append(min(int(rng.integers(1, 3)), d - sum(sizes)))
    eigenvalues = lattice_values(len(sizes), rng)

    jordan = np.zeros((d, d), dtype=complex)
    start = 0
    for size, value in zip(sizes, eigenvalues):
        jordan[start:start + size, start:start + size] = value * np.eye(size) + np.eye(size, k=1)
        start += size
    w = random_unitary(d, rng)
    base = w @ jordan @ w.conj().T

    mats, columns = [base], [eigenvalues]
    for _ in range(n - 1):
        coefficients = (rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1)) / (degree + 1)
        poly = np.zeros((d, d), dtype=complex)
        for c in coefficients[::-1]:
            poly = poly @ base + c * np.eye(d)
        mats.append(poly)
        columns.append(np.polyval(coefficients[::-1], eigenvalues))
    oracle = AtomicMeasure(dim=n, points=np.column_stack(columns), weights=np.array(sizes) / d)
    return mats, oracle


def kronecker_pair(d1: int, d2: int, seed: int, conditioning: float = 10.0) -> tuple[list[np.ndarray], AtomicMeasure]:
    """(S x 1, 1 x T) for conjugated-diagonal S and T; the oracle is the product measure."""
    s, mu_s = conjugated_diagonal(d1, 1, seed, conditioning)
    t, mu_t = conjugated_diagonal(d2, 1, seed + 1, conditioning)
    mats = [kronecker(s[0], np.eye(d2)), kronecker(np.eye(d1), t[0])]
    return mats, product_measure(mu_s, mu_t)


def generate(spec: ModelSpec, mats: list[np.ndarray] | None = None) -> GeneratedModel:
    """Build the tuple a ModelSpec describes; explicit models take already loaded matrices."""
    oracle = None
    if spec.kind == 'ginibre':
        tuple_ = [ginibre(spec.d, spec.seed)]
    elif spec.kind == 'conjugated_diagonal':
        tuple_, oracle = conjugated_diagonal(spec.d, spec.n, spec.seed, spec.conditioning)
    elif spec.kind == 'poly_of_jordan':
        tuple_, oracle = poly_of_jordan(spec.d, spec.n, spec.seed, spec.degree)
    elif spec.kind == 'kronecker_pair':
        tuple_, oracle = kronecker_pair(spec.d, spec.d2, spec.seed, spec.conditioning)
    else:
        if not mats:
            raise ValueError("explicit models need their matrices")
        tuple_ = [as_matrix(m) for m in mats]

    # generated tuples must pass commutation
    CommutingTuple(mats=tuple_)
    logger.debug("generated %s model: %d operators of dimension %d", spec.kind, len(tuple_), tuple_[0].shape[0])
    return GeneratedModel(spec=spec, mats=tuple_, oracle=oracle)
