import logging

import numpy as np
import scipy.linalg
from pydantic import ValidationError

from exceptions import (CriterionMismatchError, DimensionMismatchError, NearlyDegenerateIdempotentError,
                        NotComplementaryPairError, NotMutuallyAnnihilatingError)
from models import Idempotent, Subspace, TraceValue
from service_rules import TOLERANCES
from engine.engine_linalg import (full_subspace, meet_all, span, subspace_join, subspace_meet,
                                  zero_subspace)

logger = logging.getLogger(__name__)


def idempotent_from_pair(p: Subspace, q: Subspace) -> Idempotent:
    """The idempotent with range P and kernel Q."""
    if p.ambient_dim != q.ambient_dim or p.dim + q.dim != p.ambient_dim:
        raise NotComplementaryPairError(
            f"not a complementary pair: dimensions {p.dim} + {q.dim} in C^{p.ambient_dim}")
    if subspace_meet(p, q).dim:
        raise NotComplementaryPairError("not a complementary pair: range and kernel intersect")
    try:
        return Idempotent(ambient_dim=p.ambient_dim, range_frame=p, kernel_frame=q)
    except ValidationError as e:
        raise NotComplementaryPairError(f"not a complementary pair: {e.errors()[0]['msg']}")


def identity_idempotent(d: int) -> Idempotent:
    return Idempotent(ambient_dim=d, range_frame=full_subspace(d), kernel_frame=zero_subspace(d))


def zero_idempotent(d: int) -> Idempotent:
    return Idempotent(ambient_dim=d, range_frame=zero_subspace(d), kernel_frame=full_subspace(d))


def materialize(e: Idempotent) -> tuple[np.ndarray, float]:
    """E = [R|K] diag(1, 0) [R|K]^{-1}, together with the condition number of [R|K]."""
    basis = np.hstack([e.range_frame.frame, e.kernel_frame.frame])
    cond = float(np.linalg.cond(basis))
    if cond > TOLERANCES.idempotent_cond_max:
        raise NearlyDegenerateIdempotentError(cond)
    inverse = np.linalg.inv(basis)
    matrix = e.range_frame.frame @ inverse[:e.rank]
    return matrix, cond


def from_matrix(matrix: np.ndarray) -> Idempotent:
    """Recover (range, kernel) from an idempotent matrix."""
    matrix = np.asarray(matrix, dtype=complex)
    d = matrix.shape[0]
    kernel = scipy.linalg.null_space(matrix, rcond=TOLERANCES.rank)
    return idempotent_from_pair(span(matrix, d), span(kernel, d))


def idempotency_defect(e: Idempotent) -> tuple[float, float]:
    """(||E^2 - E||_F, cond)."""
    matrix, cond = materialize(e)
    return float(np.linalg.norm(matrix @ matrix - matrix)), cond


def trace_idem(e: Idempotent) -> TraceValue:
    return TraceValue(rank=e.rank, ambient_dim=e.ambient_dim)


def support_projection(e: Idempotent) -> Subspace:
    # range projection; it has the trace of the support, not the same subspace
    return e.range_frame


def complement(e: Idempotent) -> Idempotent:
    """1 - e: range and kernel swap."""
    return Idempotent(ambient_dim=e.ambient_dim, range_frame=e.kernel_frame, kernel_frame=e.range_frame)


def annihilation_norm(e: Idempotent, f: Idempotent) -> float:
    em, _ = materialize(e)
    fm, _ = materialize(f)
    return float(max(np.linalg.norm(em @ fm, 2), np.linalg.norm(fm @ em, 2)))


def sum_annihilating(es: list[Idempotent]) -> Idempotent:
    """e_1 + ... + e_n for mutually annihilating idempotents."""
    if not es:
        raise ValueError("sum of an empty family")
    d = es[0].ambient_dim
    if any(e.ambient_dim != d for e in es):
        raise DimensionMismatchError("idempotents live in different ambient dimensions")
    if len(es) == 1:
        return es[0]

    matrices = [materialize(e)[0] for e in es]
    for i in range(len(es)):
        for j in range(i + 1, len(es)):
            norm = max(np.linalg.norm(matrices[i] @ matrices[j], 2), np.linalg.norm(matrices[j] @ matrices[i], 2))
            scale = max(1.0, np.linalg.norm(matrices[i], 2) * np.linalg.norm(matrices[j], 2))
            if norm > TOLERANCES.annihilation * scale:
                raise NotMutuallyAnnihilatingError((i, j), norm)

    range_ = subspace_join(*[e.range_frame for e in es])
    kernel = meet_all([e.kernel_frame for e in es], d)
    return idempotent_from_pair(range_, kernel)


def idempotents_commute(e: Idempotent, f: Idempotent) -> tuple[bool, dict]:
    """Lattice criterion (P^R) v (P^S) v (Q^R) v (Q^S) = 1, cross-checked by the commutator."""
    if e.ambient_dim != f.ambient_dim:
        raise DimensionMismatchError("idempotents live in different ambient dimensions")
    d = e.ambient_dim
    p, q = e.range_frame, e.kernel_frame
    r, s = f.range_frame, f.kernel_frame
    joined = subspace_join(subspace_meet(p, r), subspace_meet(p, s), subspace_meet(q, r), subspace_meet(q, s))
    by_lattice = joined.dim == d

    em, _ = materialize(e)
    fm, _ = materialize(f)
    commutator = float(np.linalg.norm(em @ fm - fm @ em, 2))
    by_commutator = commutator <= TOLERANCES.commutation * np.linalg.norm(em, 2) * np.linalg.norm(fm, 2)

    witness = {'lattice_dim': joined.dim, 'ambient_dim': d, 'commutator': commutator}
    if by_lattice != by_commutator:
        raise CriterionMismatchError(f"criterion mismatch: lattice join has dimension {joined.dim} of {d}, "
                                     f"commutator norm {commutator:.3e}")
    return by_lattice, witness
