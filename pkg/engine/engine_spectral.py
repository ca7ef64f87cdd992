import itertools
import logging

import numpy as np

from config import MAX_ENUMERATED_CLUSTERS
from exceptions import (BoundaryAmbiguousError, DecompositionFailedError, DimensionMismatchError,
                        NotInvariantSubspaceError)
from models import Cluster, CommutingTuple, Idempotent, JointDecomposition, Region, Report, Subspace, TraceValue
from service_rules import TOLERANCES
from engine.engine_idempotents import (annihilation_norm, idempotency_defect, idempotent_from_pair,
                                       idempotents_commute, materialize, sum_annihilating)
from engine.engine_linalg import (TINY, cluster_eigenvalues, frame_condition, invariance_residual,
                                  meet_all, reorder_schur, schur, span, subspace_complement, subspace_containment,
                                  subspace_distance, subspace_join, subspace_meet, sylvester_solve, zero_subspace)
from engine.engine_regions import boundary_distance, complement, conjugate, contains, intersection, product, union

logger = logging.getLogger(__name__)


def _split_piece(t: np.ndarray, frame: np.ndarray, delta: float) -> list[np.ndarray]:
    """Split an invariant subspace (orthonormal frame) along the eigenvalue clusters of T on it."""
    compression = frame.conj().T @ t @ frame
    q, u = schur(compression)
    groups = cluster_eigenvalues(np.diag(u), delta)
    if len(groups) == 1:
        return [frame]

    pieces = []
    while True:
        eigs = np.diag(u)
        groups = cluster_eigenvalues(eigs, delta)
        if len(groups) == 1:
            pieces.append(frame @ q)
            break
        mask = np.zeros(len(eigs), dtype=bool)
        mask[groups[0]] = True
        k = int(mask.sum())
        q, u = reorder_schur(q, u, mask)
        pieces.append(frame @ q[:, :k])

        # decouple the leading block: U11 Y - Y U22 = -U12
        y = sylvester_solve(u[:k, :k], u[k:, k:], -u[:k, k:])
        rest, _ = np.linalg.qr(frame @ q @ np.vstack([y, np.eye(u.shape[0] - k)]))
        frame = rest
        q, u = schur(frame.conj().T @ t @ frame)
    return pieces


def joint_decompose(operators: CommutingTuple) -> JointDecomposition:
    """Split C^d into joint invariant subspaces, one per cluster of joint eigenvalues.

    Each operator in turn refines every piece found so far; inside a piece the Schur form
    of the compression is reordered cluster by cluster and decoupled by a Sylvester solve.
    """
    d = operators.d
    pieces = [np.eye(d, dtype=complex)]
    for t in operators.mats:
        delta = TOLERANCES.cluster * max(np.linalg.norm(t, 2), TINY)
        pieces = [part for frame in pieces for part in _split_piece(t, frame, delta)]
    logger.debug("decomposed %d operators of dimension %d into %d clusters", operators.n, d, len(pieces))

    clusters = []
    for frame in pieces:
        k = frame.shape[1]
        space = Subspace(ambient_dim=d, frame=frame)
        for t in operators.mats:
            residual = invariance_residual(t, space)
            if residual > TOLERANCES.invariance * max(np.linalg.norm(t, 2), TINY):
                raise DecompositionFailedError(residual)
        point = np.array([np.trace(frame.conj().T @ t @ frame) / k for t in operators.mats])
        clusters.append(Cluster(point=point, multiplicity=k, frame=frame, space=space))

    clusters.sort(key=lambda c: tuple(x for z in c.point for x in (z.real, z.imag)))
    return JointDecomposition(operators=operators, clusters=clusters,
                              condition=frame_condition([c.frame for c in clusters]))


def decompose(mats: list[np.ndarray]) -> JointDecomposition:
    return joint_decompose(CommutingTuple(mats=list(mats)))


def coordinate_decomposition(dec: JointDecomposition, i: int) -> JointDecomposition:
    """Decomposition of the single operator T_i."""
    return decompose([dec.operators.mats[i]])


def membership(dec: JointDecomposition, region: Region, strict: bool = True) -> np.ndarray:
    """Which cluster points lie in the region; near-boundary points are an error when strict."""
    if region.dim != dec.operators.n:
        raise DimensionMismatchError(f"region lives in C^{region.dim}, the tuple has {dec.operators.n} operators")
    points = dec.points
    if strict and len(points):
        distances = boundary_distance(region, points)
        j = int(np.argmin(distances))
        if distances[j] < TOLERANCES.boundary:
            raise BoundaryAmbiguousError(points[j].tolist(), float(distances[j]))
    return contains(region, points)


def _join_clusters(dec: JointDecomposition, selected: np.ndarray) -> Subspace:
    frames = [c.frame for c, keep in zip(dec.clusters, selected) if keep]
    if not frames:
        return zero_subspace(dec.operators.d)
    return span(np.hstack(frames), dec.operators.d)


def riesz_idempotent(dec: JointDecomposition, region: Region, strict: bool = True) -> Idempotent:
    """e(B): identity on the clusters inside B, zero on the others."""
    inside = membership(dec, region, strict)
    return idempotent_from_pair(_join_clusters(dec, inside), _join_clusters(dec, ~inside))


def spectral_projection(dec: JointDecomposition, region: Region, strict: bool = True) -> Subspace:
    """K(B), the range of P(B)."""
    return _join_clusters(dec, membership(dec, region, strict))


def spectral_trace(dec: JointDecomposition, region: Region, strict: bool = True) -> TraceValue:
    inside = membership(dec, region, strict)
    return TraceValue(rank=int(dec.multiplicities[inside].sum()), ambient_dim=dec.operators.d)


def restrict(t: np.ndarray, k: Subspace) -> np.ndarray:
    """Compression frame^H T frame to an invariant subspace."""
    residual = invariance_residual(t, k)
    if residual > TOLERANCES.invariance * max(np.linalg.norm(t, 2), TINY):
        raise NotInvariantSubspaceError(residual)
    return k.frame.conj().T @ t @ k.frame


def cyclic_subspace(mats: list[np.ndarray], vectors: np.ndarray) -> Subspace:
    """Smallest subspace containing the vectors and invariant under every operator."""
    d = mats[0].shape[0]
    current = span(vectors, d)
    while True:
        grown = span(np.hstack([current.frame] + [t @ current.frame for t in mats]), d)
        if grown.dim == current.dim:
            return current
        current = grown


def verify_box_formula(dec: JointDecomposition, boxes: list[Region]) -> Report:
    """P(B_1 x ... x B_n) against the meet of the single-operator projections P_{T_i}(B_i)."""
    report = Report(check='box-formula')
    d = dec.operators.d
    singles = [spectral_projection(coordinate_decomposition(dec, i), b) for i, b in enumerate(boxes)]
    meet = meet_all(singles, d)
    joint_region = product(*boxes)
    joint = spectral_projection(dec, joint_region)

    report.expect('meet vs joint projection', subspace_distance(meet, joint), TOLERANCES.subspace)
    report.expect_equal('rank of meet vs joint rank', meet.dim, joint.dim)
    report.expect_equal('trace vs multiplicities in box', joint.dim, spectral_trace(dec, joint_region).rank)
    report.details = {'rank': joint.dim, 'ambient_dim': d}
    return report


def verify_sigma_additivity(dec: JointDecomposition, partition: list[Region]) -> Report:
    """Pieces of a partition give mutually annihilating idempotents summing to e(union)."""
    report = Report(check='sigma-additivity')
    counts = np.zeros(len(dec.clusters), dtype=int)
    for region in partition:
        counts += membership(dec, region).astype(int)
    report.expect('clusters in more than one piece', int(np.sum(counts > 1)), 0)
    report.expect('clusters in no piece', int(np.sum(counts == 0)), 0)

    pieces = [riesz_idempotent(dec, region) for region in partition]
    worst = 0.0
    for i, j in itertools.combinations(range(len(pieces)), 2):
        worst = max(worst, annihilation_norm(pieces[i], pieces[j]))
    report.expect('pairwise annihilation', worst, TOLERANCES.annihilation)

    for i, piece in enumerate(pieces):
        defect, cond = idempotency_defect(piece)
        report.expect(f'piece {i} idempotency', defect, TOLERANCES.invariance * cond)

    whole = riesz_idempotent(dec, union(*partition))
    report.expect_equal('trace additivity', sum(p.rank for p in pieces), whole.rank)
    if worst <= TOLERANCES.annihilation:
        total = sum_annihilating(pieces)
        report.expect('sum range vs union range', subspace_distance(total.range_frame, whole.range_frame),
                      TOLERANCES.subspace)
        report.expect('sum kernel vs union kernel', subspace_distance(total.kernel_frame, whole.kernel_frame),
                      TOLERANCES.subspace)
    report.details = {'pieces': len(pieces), 'ranks': [p.rank for p in pieces]}
    return report


def verify_lattice_identities(dec: JointDecomposition, a: Region, b: Region) -> Report:
    """K(A) ^ K(B) = K(A n B), K(A u B) = K(A) v K(B), K_T(B) = K_{T*}((B^c)*)^perp."""
    if dec.operators.n != 1:
        raise DimensionMismatchError("lattice identities are stated for a single operator")
    report = Report(check='lattice')
    ka, kb = spectral_projection(dec, a), spectral_projection(dec, b)
    report.expect('meet vs intersection', subspace_distance(subspace_meet(ka, kb),
                                                            spectral_projection(dec, intersection(a, b))),
                  TOLERANCES.subspace)
    report.expect('join vs union', subspace_distance(subspace_join(ka, kb), spectral_projection(dec, union(a, b))),
                  TOLERANCES.subspace)

    adjoint = decompose([dec.operators.mats[0].conj().T])
    for label, region, k in (('A', a, ka), ('B', b, kb)):
        dual = subspace_complement(spectral_projection(adjoint, conjugate(complement(region))))
        report.expect(f'adjoint complement formula for {label}', subspace_distance(k, dual), TOLERANCES.subspace)
    return report


def verify_restriction_identity(t: np.ndarray, p: Subspace, region: Region) -> Report:
    """K of the restriction to P, mapped back, equals K_T(B) ^ P."""
    report = Report(check='restriction')
    direct = subspace_meet(spectral_projection(decompose([t]), region), p)
    if p.dim == 0:
        report.expect('restricted projection', direct.dim, 0)
        return report
    inner = spectral_projection(decompose([restrict(t, p)]), region)
    mapped = Subspace(ambient_dim=p.ambient_dim, frame=p.frame @ inner.frame) if inner.dim else zero_subspace(p.ambient_dim)
    report.expect('restricted projection', subspace_distance(mapped, direct), TOLERANCES.subspace)
    report.details = {'rank': mapped.dim}
    return report


def verify_maximality(dec: JointDecomposition, region: Region, trials: int, seed: int = 0) -> Report:
    """Invariant subspaces carried by clusters in B all sit inside P(B)."""
    report = Report(check='maximality')
    target = spectral_projection(dec, region)
    inside = np.flatnonzero(membership(dec, region))
    rng = np.random.default_rng(seed)

    if len(inside) <= MAX_ENUMERATED_CLUSTERS:
        subsets = [s for r in range(1, len(inside) + 1) for s in itertools.combinations(inside, r)]
    else:
        subsets = [tuple(rng.choice(inside, size=rng.integers(1, len(inside) + 1), replace=False))
                   for _ in range(2 ** MAX_ENUMERATED_CLUSTERS)]
    worst = 0.0
    for subset in subsets:
        joined = _join_clusters(dec, np.isin(np.arange(len(dec.clusters)), subset))
        worst = max(worst, subspace_containment(target, joined))
    report.expect('cluster joins inside P(B)', worst, TOLERANCES.subspace)

    worst = 0.0
    for _ in range(trials if len(inside) else 0):
        chosen = rng.choice(inside, size=rng.integers(1, len(inside) + 1), replace=False)
        carrier = _join_clusters(dec, np.isin(np.arange(len(dec.clusters)), chosen))
        count = int(rng.integers(1, carrier.dim + 1))
        seeds = carrier.frame @ (rng.standard_normal((carrier.dim, count)) + 1j * rng.standard_normal((carrier.dim, count)))
        q = cyclic_subspace(list(dec.operators.mats), seeds)
        worst = max(worst, subspace_containment(target, q))
    report.expect('random invariant subspaces inside P(B)', worst, TOLERANCES.subspace)
    report.details = {'subsets': len(subsets), 'trials': trials}
    return report


def verify_hyperinvariance(dec: JointDecomposition, region: Region, trials: int, seed: int = 0) -> Report:
    """P(B) is invariant under random polynomials of degree <= 2 in the tuple (commutant sample)."""
    report = Report(check='hyperinvariance')
    target = spectral_projection(dec, region)
    mats = dec.operators.mats
    d = dec.operators.d
    rng = np.random.default_rng(seed)

    worst = 0.0
    for _ in range(trials):
        c = rng.standard_normal(1 + len(mats) + len(mats) ** 2) + 1j * rng.standard_normal(1 + len(mats) + len(mats) ** 2)
        poly = c[0] * np.eye(d, dtype=complex)
        poly = poly + sum(c[1 + i] * t for i, t in enumerate(mats))
        poly = poly + sum(c[1 + len(mats) + i * len(mats) + j] * (s @ t)
                          for i, s in enumerate(mats) for j, t in enumerate(mats))
        scale = max(np.linalg.norm(poly, 2), TINY)
        worst = max(worst, invariance_residual(poly, target) / scale)
    report.expect('invariance under polynomials', worst, TOLERANCES.invariance)
    return report


def verify_split_product(dec: JointDecomposition, i: int, a: Region, b: Region) -> Report:
    """P_{T_1..T_n}(A x B) = P_{T_1..T_i}(A) ^ P_{T_i+1..T_n}(B)."""
    if not 0 < i < dec.operators.n or a.dim != i or b.dim != dec.operators.n - i:
        raise DimensionMismatchError("split index and region dimensions do not match the tuple")
    report = Report(check='split-product')
    mats = dec.operators.mats
    left = spectral_projection(decompose(mats[:i]), a)
    right = spectral_projection(decompose(mats[i:]), b)
    joint = spectral_projection(dec, product(a, b))
    report.expect('product vs meet of factors', subspace_distance(subspace_meet(left, right), joint),
                  TOLERANCES.subspace)
    return report


def verify_idempotent_commutation(dec: JointDecomposition, regions: list[Region]) -> Report:
    """Single-operator idempotents of commuting operators commute, and e(B) commutes with the tuple."""
    report = Report(check='idempotent-commutation')
    singles = [coordinate_decomposition(dec, i) for i in range(dec.operators.n)]
    failures = 0
    for i, j in itertools.combinations(range(len(singles)), 2):
        for ra, rb in itertools.product(regions, regions):
            commute, _ = idempotents_commute(riesz_idempotent(singles[i], ra), riesz_idempotent(singles[j], rb))
            failures += int(not commute)
    report.expect('non-commuting idempotent pairs', failures, 0)

    worst = 0.0
    for region in regions:
        matrix, _ = materialize(riesz_idempotent(dec, product(*[region] * dec.operators.n)))
        for t in dec.operators.mats:
            scale = max(np.linalg.norm(matrix, 2) * np.linalg.norm(t, 2), TINY)
            worst = max(worst, np.linalg.norm(matrix @ t - t @ matrix, 2) / scale)
    report.expect('e(B) commutes with the tuple', worst, TOLERANCES.commutation)
    return report


def verify_normal_degeneration(dec: JointDecomposition, region: Region) -> Report:
    """For normal operators e(B) is the orthogonal projection P(B)."""
    report = Report(check='normal')
    e = riesz_idempotent(dec, region)
    matrix, _ = materialize(e)
    report.expect('self-adjointness', np.linalg.norm(matrix - matrix.conj().T, 2), TOLERANCES.invariance)
    report.expect('equals spectral projection',
                  np.linalg.norm(matrix - spectral_projection(dec, region).projector, 2), TOLERANCES.invariance)
    return report
