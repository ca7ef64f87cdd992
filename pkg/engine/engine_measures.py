import logging
import math

import numpy as np
from scipy.optimize import linear_sum_assignment

from exceptions import DimensionMismatchError
from models import AtomicMeasure, JointDecomposition, MapDescriptor, Region, Report
from service_rules import TOLERANCES
from engine.engine_linalg import kronecker, subspace_meet
from engine.engine_maps import (add_last, apply_map_points, apply_map_to_tuple, mul_last,
                                worked_polynomial_pipeline)
from engine.engine_regions import box, contains
from engine.engine_spectral import coordinate_decomposition, decompose, spectral_projection

logger = logging.getLogger(__name__)


def brown(dec: JointDecomposition) -> AtomicMeasure:
    """Joint Brown measure: cluster points weighted by multiplicity / d."""
    return AtomicMeasure(dim=dec.operators.n, points=dec.points, weights=dec.multiplicities / dec.operators.d)


def brown_of(mats: list[np.ndarray]) -> AtomicMeasure:
    return brown(decompose(mats))


def pushforward(mu: AtomicMeasure, m: MapDescriptor) -> AtomicMeasure:
    if m.arity != mu.dim:
        raise DimensionMismatchError(f"map takes {m.arity} coordinates, the measure lives in C^{mu.dim}")
    return AtomicMeasure(dim=m.output_dim, points=apply_map_points(m, mu.points), weights=mu.weights)


def push_chain(mu: AtomicMeasure, maps: list[MapDescriptor]) -> AtomicMeasure:
    for m in maps:
        mu = pushforward(mu, m)
    return mu


def product_measure(mu: AtomicMeasure, nu: AtomicMeasure) -> AtomicMeasure:
    k, l = mu.size, nu.size
    points = np.hstack([np.repeat(mu.points, l, axis=0), np.tile(nu.points, (k, 1))])
    weights = np.outer(mu.weights, nu.weights).ravel()
    return AtomicMeasure(dim=mu.dim + nu.dim, points=points, weights=weights)


def _check_scalar(*measures: AtomicMeasure):
    if any(m.dim != 1 for m in measures):
        raise DimensionMismatchError("convolutions are defined for measures on C")


def convolve_additive(mu: AtomicMeasure, nu: AtomicMeasure) -> AtomicMeasure:
    _check_scalar(mu, nu)
    return pushforward(product_measure(mu, nu), add_last(2))


def convolve_multiplicative(mu: AtomicMeasure, nu: AtomicMeasure) -> AtomicMeasure:
    _check_scalar(mu, nu)
    return pushforward(product_measure(mu, nu), mul_last(2))


def measure_distance(mu: AtomicMeasure, nu: AtomicMeasure) -> float:
    """Cheapest matching of atoms; a matched pair costs |w - v| + |p - q|, an unmatched atom its weight."""
    if mu.dim != nu.dim:
        raise DimensionMismatchError(f"measures live in C^{mu.dim} and C^{nu.dim}")
    k, l = mu.size, nu.size
    pair_cost = (np.abs(mu.weights[:, None] - nu.weights[None, :])
                 + np.linalg.norm(mu.points[:, None, :] - nu.points[None, :, :], axis=2))
    big = 10.0 * (1.0 + (pair_cost.max() if pair_cost.size else 0.0))

    cost = np.zeros((k + l, k + l))
    cost[:k, :l] = pair_cost
    cost[:k, l:] = big
    cost[:k, l:][np.arange(k), np.arange(k)] = mu.weights
    cost[k:, :l] = big
    cost[k:, :l][np.arange(l), np.arange(l)] = nu.weights
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum())


def measure_mass(mu: AtomicMeasure, region: Region) -> float:
    if region.dim != mu.dim:
        raise DimensionMismatchError(f"region lives in C^{region.dim}, the measure in C^{mu.dim}")
    return float(mu.weights[contains(region, mu.points)].sum())


def verify_map_pushforward(dec: JointDecomposition, m: MapDescriptor) -> Report:
    """brown(m(T_1, ..., T_n)) against the push-forward of brown(T_1, ..., T_n)."""
    report = Report(check=f'pushforward-{m.variant}')
    mapped = brown_of(apply_map_to_tuple(m, list(dec.operators.mats)))
    report.expect('brown of mapped tuple vs push-forward', measure_distance(mapped, pushforward(brown(dec), m)),
                  TOLERANCES.measure)
    return report


def verify_worked_polynomial(dec: JointDecomposition) -> Report:
    """q = 1 + 2 z_2^2 + z_1 z_2 z_3 three ways: direct push-forward, the elementary chain, brown(q(T))."""
    if dec.operators.n != 3:
        raise DimensionMismatchError("the worked polynomial takes three operators")
    report = Report(check='worked-polynomial')
    q, chain = worked_polynomial_pipeline()
    mu = brown(dec)
    direct = pushforward(mu, q)
    factored = push_chain(mu, chain)
    evaluated = brown_of(apply_map_to_tuple(q, list(dec.operators.mats)))
    report.expect('chain vs direct push-forward', measure_distance(factored, direct), TOLERANCES.measure)
    report.expect('brown(q(T)) vs push-forward', measure_distance(evaluated, direct), TOLERANCES.measure)

    mats = list(dec.operators.mats)
    for m in chain:
        mats = apply_map_to_tuple(m, mats)
    report.expect('brown of chained tuple vs chain', measure_distance(brown_of(mats), factored), TOLERANCES.measure)
    return report


def verify_tensor(s: np.ndarray, t: np.ndarray) -> Report:
    """Joint measure of (S x 1, 1 x T), and the measures of S x 1 + 1 x T and S x T."""
    report = Report(check='tensor')
    mu_s, mu_t = brown_of([s]), brown_of([t])
    eye_s, eye_t = np.eye(s.shape[0]), np.eye(t.shape[0])
    left, right = kronecker(s, eye_t), kronecker(eye_s, t)

    report.expect('product measure', measure_distance(brown_of([left, right]), product_measure(mu_s, mu_t)),
                  TOLERANCES.measure)
    report.expect('additive convolution', measure_distance(brown_of([left + right]), convolve_additive(mu_s, mu_t)),
                  TOLERANCES.measure)
    report.expect('multiplicative convolution',
                  measure_distance(brown_of([kronecker(s, t)]), convolve_multiplicative(mu_s, mu_t)),
                  TOLERANCES.measure)
    return report


def verify_similarity_invariance(dec: JointDecomposition, s: np.ndarray) -> Report:
    """brown(S^-1 T_1 S, ..., S^-1 T_n S) = brown(T_1, ..., T_n)."""
    report = Report(check='similarity')
    conjugated = [np.linalg.solve(s, t @ s) for t in dec.operators.mats]
    report.expect('conjugated tuple', measure_distance(brown_of(conjugated), brown(dec)), TOLERANCES.measure)
    report.details = {'condition': float(np.linalg.cond(s))}
    return report


def _aligned_square(values: np.ndarray) -> tuple[complex, float]:
    """Dyadic square holding the values, nudged off-center so its grid lines avoid lattice points."""
    lo = complex(values.real.min(), values.imag.min())
    hi = complex(values.real.max(), values.imag.max())
    extent = max((hi - lo).real, (hi - lo).imag) / 2
    half = 2.0 ** math.ceil(math.log2(max(1.25 * extent, 2.0 ** -8)))
    shift = half / math.pi * 0.1
    return (lo + hi) / 2 + shift * (1 + 1j), half


class _BoxGrid:
    """Dyadic boxes of one coordinate with memoized spectral projections."""

    def __init__(self, dec: JointDecomposition, center: complex, half: float):
        self.dec = dec
        self.center = center
        self.half = half
        self.cache = {}

    def region(self, level: int, jx: int, jy: int) -> Region:
        h = self.half / 2 ** level
        corner = self.center - self.half * (1 + 1j)
        return box(corner + complex((2 * jx + 1) * h, (2 * jy + 1) * h), h)

    def projection(self, level: int, jx: int, jy: int):
        key = (level, jx, jy)
        if key not in self.cache:
            self.cache[key] = spectral_projection(self.dec, self.region(level, jx, jy))
        return self.cache[key]

    def occupied(self, level: int) -> list[tuple[int, int, int]]:
        h = self.half / 2 ** level
        corner = self.center - self.half * (1 + 1j)
        points = self.dec.points[:, 0]
        jx = np.ceil((points.real - corner.real) / (2 * h)).astype(int) - 1
        jy = np.ceil((points.imag - corner.imag) / (2 * h)).astype(int) - 1
        return sorted({(level, int(a), int(b)) for a, b in zip(jx, jy)})

    @staticmethod
    def children(key: tuple[int, int, int]) -> list[tuple[int, int, int]]:
        level, jx, jy = key
        return [(level + 1, 2 * jx + a, 2 * jy + b) for a in (0, 1) for b in (0, 1)]


def verify_distribution_extension(dec: JointDecomposition, grid_depth: int) -> Report:
    """Box function nu(A, B) = tau(P_S(A) ^ P_T(B)) on a dyadic grid.

    Checks additivity in each argument separately and that the finest boxes reproduce
    brown(S, T).
    """
    if dec.operators.n != 2:
        raise DimensionMismatchError("the distribution extension check takes a pair")
    report = Report(check='distribution-extension')
    d = dec.operators.d
    grids = []
    for i in range(2):
        single = coordinate_decomposition(dec, i)
        center, half = _aligned_square(single.points[:, 0])
        grids.append(_BoxGrid(single, center, half))
    s_grid, t_grid = grids

    ranks = {}

    def nu(a, b) -> int:
        if (a, b) not in ranks:
            pa, pb = s_grid.projection(*a), t_grid.projection(*b)
            ranks[(a, b)] = subspace_meet(pa, pb).dim if pa.dim and pb.dim else 0
        return ranks[(a, b)]

    def nonzero_children(grid: _BoxGrid, key):
        return [c for c in grid.children(key) if grid.projection(*c).dim]

    occupied_s = [k for level in range(grid_depth + 1) for k in s_grid.occupied(level)]
    occupied_t = [k for level in range(grid_depth + 1) for k in t_grid.occupied(level)]

    report.expect_equal('total mass', nu((0, 0, 0), (0, 0, 0)), d)
    first = second = 0
    for a in occupied_s:
        for b in occupied_t:
            if a[0] < grid_depth:
                first = max(first, abs(nu(a, b) - sum(nu(c, b) for c in nonzero_children(s_grid, a))))
            if b[0] < grid_depth:
                second = max(second, abs(nu(a, b) - sum(nu(a, c) for c in nonzero_children(t_grid, b))))
    report.expect('additivity in the first argument', first, 0)
    report.expect('additivity in the second argument', second, 0)

    points, weights = [], []
    s, t = dec.operators.mats
    for a in s_grid.occupied(grid_depth):
        for b in t_grid.occupied(grid_depth):
            if not nu(a, b):
                continue
            frame = subspace_meet(s_grid.projection(*a), t_grid.projection(*b)).frame
            k = frame.shape[1]
            points.append([np.trace(frame.conj().T @ s @ frame) / k, np.trace(frame.conj().T @ t @ frame) / k])
            weights.append(k / d)

    total = sum(round(w * d) for w in weights)
    report.expect_equal('finest boxes carry all mass', total, d)
    if total == d:
        rebuilt = AtomicMeasure(dim=2, points=points, weights=weights)
        report.expect('reconstruction vs brown', measure_distance(rebuilt, brown(dec)), 1e-10)
    report.details = {'boxes_s': len(occupied_s), 'boxes_t': len(occupied_t), 'meets': len(ranks)}
    return report
