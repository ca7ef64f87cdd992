import logging

import numpy as np

from exceptions import DimensionMismatchError
from models import JointDecomposition, Region, Report
from service_rules import TOLERANCES
from engine.engine_linalg import subspace_containment, subspace_distance, subspace_join, subspace_meet, zero_subspace
from engine.engine_maps import add_last, mul_last
from engine.engine_measures import brown
from engine.engine_regions import box, dyadic_cover, preimage
from engine.engine_spectral import coordinate_decomposition, decompose, membership, spectral_projection

logger = logging.getLogger(__name__)


def cover_projection(dec: JointDecomposition, cover) -> tuple:
    """Join over cover boxes of P_S(I(z, delta)) ^ P_T(I(w, delta)); boxes use half-open membership."""
    d = dec.operators.d
    singles = [coordinate_decomposition(dec, i) for i in range(2)]
    s_points, t_points = singles[0].points[:, 0], singles[1].points[:, 0]
    pieces, used = [], 0
    for zr, zi, wr, wi, delta, _ in cover.boxes:
        # skip boxes without eigenvalues of S or of T before building any projection
        if not np.any((zr - delta < s_points.real) & (s_points.real <= zr + delta)
                      & (zi - delta < s_points.imag) & (s_points.imag <= zi + delta)):
            continue
        if not np.any((wr - delta < t_points.real) & (t_points.real <= wr + delta)
                      & (wi - delta < t_points.imag) & (t_points.imag <= wi + delta)):
            continue
        left = spectral_projection(singles[0], box(complex(zr, zi), delta), strict=False)
        right = spectral_projection(singles[1], box(complex(wr, wi), delta), strict=False)
        meet = subspace_meet(left, right)
        used += 1
        if meet.dim:
            pieces.append(meet)
    return (subspace_join(*pieces) if pieces else zero_subspace(d)), used


def verify_preimage_projection(dec: JointDecomposition, target: Region, depth: int) -> Report:
    """P_{S+T}(U) >= cover join, equal to P_{S,T}(a^-1 U); likewise for ST with m^-1."""
    if dec.operators.n != 2 or target.dim != 1:
        raise DimensionMismatchError("preimage projections take a pair and a region in C")
    report = Report(check='preimage-projection')
    s, t = dec.operators.mats
    mu = brown(dec)

    for label, mapping, combined, pull, norm_bound in (
            ('add', 'add', s + t, add_last(2), None),
            ('multiply', 'multiply', s @ t, mul_last(2), float(np.linalg.norm(t, 2)))):
        cover = dyadic_cover(target, mapping, depth, norm_bound=norm_bound, measure=mu)
        joined, used = cover_projection(dec, cover)
        image = spectral_projection(decompose([combined]), target)
        direct = spectral_projection(dec, preimage(target, pull))

        coverage = cover.coverage[-1] if cover.coverage else 0.0
        report.expect(f'{label}: cover join inside P(U)', subspace_containment(image, joined), TOLERANCES.subspace)
        report.expect(f'{label}: preimage projection vs P(U)', subspace_distance(direct, image), TOLERANCES.subspace)
        report.expect(f'{label}: preimage mass left uncovered', 1.0 - coverage, 0.0)
        report.expect(f'{label}: cover join vs preimage projection', subspace_distance(joined, direct),
                      TOLERANCES.subspace)
        report.details[label] = {'boxes': cover.size, 'boxes_used': used, 'coverage': cover.coverage,
                                 'rank': direct.dim}
    return report


def verify_general_borel(dec: JointDecomposition, region: Region, opens: list[Region]) -> Report:
    """P(B) as the meet of P(U) over a decreasing family of open U containing B."""
    report = Report(check='general-borel')
    inside = membership(dec, region)
    target = spectral_projection(dec, region)

    running = None
    distances, escaped = [], 0
    for u in opens:
        escaped += int(np.sum(inside & ~membership(dec, u)))
        projection = spectral_projection(dec, u)
        running = projection if running is None else subspace_meet(running, projection)
        distances.append(subspace_distance(running, target))
    report.expect('clusters of B outside some U', escaped, 0)
    if distances:
        report.expect('meet over opens vs P(B)', distances[-1], TOLERANCES.subspace)
    report.details = {'distances': distances}
    return report
