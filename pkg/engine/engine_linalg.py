import logging
from typing import Callable

import numpy as np
import scipy.linalg
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from config import MAX_DIM
from exceptions import (DimensionMismatchError, EigenIterationError, IllSeparatedClusterError,
                        MatrixSizeError, SylvesterIllConditionedError)
from models import Subspace, TraceValue
from service_rules import TOLERANCES

logger = logging.getLogger(__name__)

TINY = np.finfo(float).tiny


def as_matrix(a, square: bool = True) -> np.ndarray:
    a = np.array(a, dtype=complex)
    if a.ndim != 2:
        raise DimensionMismatchError(f"expected a matrix, got an array of shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    if square and a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got {a.shape}")
    if max(a.shape) > MAX_DIM:
        raise MatrixSizeError(f"dimension {max(a.shape)} exceeds the configured maximum {MAX_DIM}")
    return a


def schur(a) -> tuple[np.ndarray, np.ndarray]:
    """Complex Schur form A = Q U Q^H, returned as (Q, U)."""
    a = as_matrix(a)
    d = a.shape[0]
    try:
        u, q = scipy.linalg.schur(a, output='complex')
    except (np.linalg.LinAlgError, ValueError):
        raise EigenIterationError(float('inf'))
    u = np.triu(u)

    residual = np.linalg.norm(q @ u @ q.conj().T - a)
    if residual > TOLERANCES.recon * d * max(np.linalg.norm(a), TINY):
        raise EigenIterationError(residual)
    unitarity = np.linalg.norm(q.conj().T @ q - np.eye(d), 2)
    if unitarity > TOLERANCES.unitary * d:
        logger.warning("Schur vectors deviate from unitary by %.3e", unitarity)
    return q, u


def reorder_schur(q: np.ndarray, u: np.ndarray, select: Callable[[complex], bool] | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Move the selected eigenvalues of a Schur pair into the leading block.

    `select` is either a predicate on eigenvalues or a boolean mask over diag(U).
    """
    eigs = np.diag(u)
    if callable(select):
        mask = np.array([bool(select(x)) for x in eigs], dtype=bool)
    else:
        mask = np.asarray(select, dtype=bool)
    k = int(mask.sum())
    if k == 0 or k == len(eigs):
        return q, u

    chosen, rest = eigs[mask], eigs[~mask]
    distances = np.abs(chosen[:, None] - rest[None, :])
    i, j = np.unravel_index(np.argmin(distances), distances.shape)
    gap = distances[i, j]
    floor = TOLERANCES.cluster * np.linalg.norm(u, 2)
    if gap <= floor:
        raise IllSeparatedClusterError((chosen[i], rest[j]))

    # every unselected eigenvalue is at least `gap` away from the selection
    def keep(x):
        return np.min(np.abs(chosen - x)) < gap / 2

    try:
        t, z, sdim = scipy.linalg.schur(u, output='complex', sort=keep)
    except (np.linalg.LinAlgError, ValueError):
        raise IllSeparatedClusterError((chosen[i], rest[j]))
    if sdim != k:
        raise IllSeparatedClusterError((chosen[i], rest[j]))
    return q @ z, np.triu(t)


def sylvester_solve(a, b, c) -> np.ndarray:
    """X with A X - X B = C."""
    a, b = as_matrix(a), as_matrix(b)
    c = as_matrix(c, square=False)
    if c.shape != (a.shape[0], b.shape[0]):
        raise DimensionMismatchError(f"right-hand side has shape {c.shape}, expected {(a.shape[0], b.shape[0])}")

    gap = np.min(np.abs(np.linalg.eigvals(a)[:, None] - np.linalg.eigvals(b)[None, :]))
    if gap <= TOLERANCES.cluster * max(np.linalg.norm(a, 2), np.linalg.norm(b, 2)):
        raise SylvesterIllConditionedError(gap)

    x = scipy.linalg.solve_sylvester(a, -b, c)
    residual = np.linalg.norm(a @ x - x @ b - c)
    bound = 1e-10 * (np.linalg.norm(a) + np.linalg.norm(b)) * np.linalg.norm(x) + 1e-12
    if residual > bound:
        logger.warning("Sylvester residual %.3e above %.3e (gap %.3e)", residual, bound, gap)
    return x


def zero_subspace(d: int) -> Subspace:
    return Subspace(ambient_dim=d, frame=np.zeros((d, 0), dtype=complex))


def full_subspace(d: int) -> Subspace:
    return Subspace(ambient_dim=d, frame=np.eye(d, dtype=complex))


def span(vectors: np.ndarray, d: int | None = None) -> Subspace:
    """Orthonormal frame of the column span, rank by relative singular value threshold."""
    vectors = np.asarray(vectors, dtype=complex)
    if d is None:
        d = vectors.shape[0]
    vectors = vectors.reshape(d, -1)
    if vectors.shape[1] == 0:
        return zero_subspace(d)
    u, s, _ = np.linalg.svd(vectors, full_matrices=False)
    if s[0] <= TINY:
        return zero_subspace(d)
    rank = int(np.sum(s > TOLERANCES.rank * s[0]))
    return Subspace(ambient_dim=d, frame=u[:, :rank])


def _check_same_ambient(*subspaces: Subspace) -> int:
    dims = {s.ambient_dim for s in subspaces}
    if len(dims) != 1:
        raise DimensionMismatchError(f"subspaces live in different ambient dimensions {sorted(dims)}")
    return dims.pop()


def subspace_meet(u: Subspace, v: Subspace) -> Subspace:
    """Intersection, detected through principal angles."""
    d = _check_same_ambient(u, v)
    if u.dim == 0 or v.dim == 0:
        return zero_subspace(d)
    y, s, _ = np.linalg.svd(u.frame.conj().T @ v.frame)
    rank = int(np.sum(s >= 1 - TOLERANCES.angle))
    if rank == 0:
        return zero_subspace(d)
    frame, _ = np.linalg.qr(u.frame @ y[:, :rank])
    return Subspace(ambient_dim=d, frame=frame)


def subspace_join(*subspaces: Subspace) -> Subspace:
    d = _check_same_ambient(*subspaces)
    return span(np.hstack([s.frame for s in subspaces]), d)


def meet_all(subspaces: list[Subspace], d: int) -> Subspace:
    result = full_subspace(d)
    for s in subspaces:
        result = subspace_meet(result, s)
    return result


def subspace_complement(u: Subspace) -> Subspace:
    d = u.ambient_dim
    if u.dim == 0:
        return full_subspace(d)
    if u.dim == d:
        return zero_subspace(d)
    q, _ = np.linalg.qr(u.frame, mode='complete')
    return Subspace(ambient_dim=d, frame=q[:, u.dim:])


def subspace_distance(u: Subspace, v: Subspace) -> float:
    """Spectral norm of the difference of the orthogonal projections."""
    _check_same_ambient(u, v)
    return float(np.linalg.norm(u.projector - v.projector, 2))


def subspace_containment(u: Subspace, v: Subspace) -> float:
    """How far span(v) sticks out of span(u); 0 when v <= u."""
    _check_same_ambient(u, v)
    if v.dim == 0:
        return 0.0
    return float(np.linalg.norm(v.frame - u.frame @ (u.frame.conj().T @ v.frame), 2))


def trace_of(u: Subspace) -> TraceValue:
    return TraceValue(rank=u.dim, ambient_dim=u.ambient_dim)


def invariance_residual(t: np.ndarray, u: Subspace) -> float:
    """||(1 - P_U) T P_U||."""
    if u.dim == 0:
        return 0.0
    image = t @ u.frame
    return float(np.linalg.norm(image - u.frame @ (u.frame.conj().T @ image), 2))


def kronecker(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[0] * b.shape[0] > MAX_DIM:
        raise MatrixSizeError(f"Kronecker product of dimension {a.shape[0] * b.shape[0]} exceeds {MAX_DIM}")
    return np.kron(a, b)


def frame_condition(frames: list[np.ndarray]) -> float:
    stacked = np.hstack(frames)
    if stacked.shape[1] == 0:
        return 1.0
    return float(np.linalg.cond(stacked))


def cluster_eigenvalues(eigs: np.ndarray, delta: float) -> list[np.ndarray]:
    """Group eigenvalues by chaining: transitive closure of |a - b| <= delta.

    Clusters come back ordered by (re, im) of their mean.
    """
    eigs = np.asarray(eigs, dtype=complex)
    k = len(eigs)
    if k == 0:
        return []
    coords = np.column_stack([eigs.real, eigs.imag])
    pairs = cKDTree(coords).query_pairs(r=delta, output_type='ndarray')
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(k, k))
    count, labels = connected_components(graph, directed=False)

    groups = [np.flatnonzero(labels == c) for c in range(count)]
    means = [eigs[g].mean() for g in groups]
    order = sorted(range(count), key=lambda c: (means[c].real, means[c].imag))
    return [groups[c] for c in order]
