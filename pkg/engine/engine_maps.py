import logging

import numpy as np

from exceptions import DimensionMismatchError, NonCommutingError
from models import MapDescriptor, PolynomialTerm
from service_rules import TOLERANCES

logger = logging.getLogger(__name__)


def _coefficient(value: complex) -> tuple[float, float]:
    value = complex(value)
    return (value.real, value.imag)


def polynomial_map(arity: int, terms: dict[tuple[int, ...], complex]) -> MapDescriptor:
    """Polynomial C^arity -> C from a {multi-degree: coefficient} mapping."""
    return MapDescriptor(
        variant='polynomial',
        arity=arity,
        terms=[PolynomialTerm(powers=list(powers), coefficient=_coefficient(c)) for powers, c in sorted(terms.items())],
    )


def add_last(arity: int) -> MapDescriptor:
    return MapDescriptor(variant='add_last', arity=arity)


def mul_last(arity: int, alpha: complex = 1.0) -> MapDescriptor:
    return MapDescriptor(variant='mul_last', arity=arity, alpha=_coefficient(alpha))


def scale_pair(alpha: complex, beta: complex) -> MapDescriptor:
    return MapDescriptor(variant='scale_pair', arity=2, alpha=_coefficient(alpha), beta=_coefficient(beta))


def permutation(sigma: list[int]) -> MapDescriptor:
    return MapDescriptor(variant='permutation', arity=len(sigma), sigma=list(sigma))


def duplicate(arity: int, index: int) -> MapDescriptor:
    return MapDescriptor(variant='duplicate', arity=arity, index=index)


def add_map() -> MapDescriptor:
    return polynomial_map(2, {(1, 0): 1.0, (0, 1): 1.0})


def multiply_map() -> MapDescriptor:
    return polynomial_map(2, {(1, 1): 1.0})


def linear_map(coefficients: list[complex]) -> MapDescriptor:
    """(z_1, ..., z_n) -> sum_i c_i z_i."""
    n = len(coefficients)
    return polynomial_map(n, {tuple(int(j == i) for j in range(n)): c for i, c in enumerate(coefficients)})


def shift_map(c: complex) -> MapDescriptor:
    return polynomial_map(1, {(0,): c, (1,): 1.0})


def _int_power(z: np.ndarray, p: int) -> np.ndarray:
    result = np.ones_like(z)
    for _ in range(p):
        result = result * z
    return result


def apply_map_points(m: MapDescriptor, points: np.ndarray) -> np.ndarray:
    """Evaluate the map on a k x arity array of points; returns k x output_dim."""
    points = np.asarray(points, dtype=complex)
    if points.ndim == 1:
        points = points.reshape(1, -1)
    if points.shape[1] != m.arity:
        raise DimensionMismatchError(f"map takes {m.arity} coordinates, points have {points.shape[1]}")

    alpha, beta = complex(*m.alpha), complex(*m.beta)
    if m.variant == 'polynomial':
        values = np.zeros(len(points), dtype=complex)
        for term in m.terms:
            monomial = np.ones(len(points), dtype=complex)
            for i, p in enumerate(term.powers):
                monomial = monomial * _int_power(points[:, i], p)
            values = values + term.value * monomial
        return values.reshape(-1, 1)
    if m.variant == 'add_last':
        return np.column_stack([points[:, :-2], points[:, -2] + points[:, -1]])
    if m.variant == 'mul_last':
        return np.column_stack([points[:, :-2], alpha * points[:, -2] * points[:, -1]])
    if m.variant == 'scale_pair':
        return np.column_stack([alpha * points[:, 0], beta * points[:, 1]])
    if m.variant == 'permutation':
        return points[:, m.sigma]
    return np.column_stack([points, points[:, m.index]])


def _horner(terms: list[tuple[tuple[int, ...], complex]], mats: list[np.ndarray], start: int) -> np.ndarray:
    # p = sum_k T_start^k p_k(T_{start+1}, ...), evaluated innermost-first
    d = mats[0].shape[0]
    if start == len(mats):
        return sum((c for _, c in terms), 0j) * np.eye(d, dtype=complex)
    if not terms:
        return np.zeros((d, d), dtype=complex)
    acc = np.zeros((d, d), dtype=complex)
    for k in range(max(p[start] for p, _ in terms), -1, -1):
        inner = _horner([(p, c) for p, c in terms if p[start] == k], mats, start + 1)
        acc = mats[start] @ acc + inner
    return acc


def evaluate_polynomial(m: MapDescriptor, mats: list[np.ndarray]) -> np.ndarray:
    """q(T_1, ..., T_n) by multivariate Horner; the reversed variable order must agree."""
    terms = [(tuple(t.powers), t.value) for t in m.terms]
    forward = _horner(terms, mats, 0)
    backward = _horner([(p[::-1], c) for p, c in terms], mats[::-1], 0)

    norms = [np.linalg.norm(t, 2) for t in mats]
    scale = sum(abs(c) * np.prod([norms[i] ** p for i, p in enumerate(powers)]) for powers, c in terms)
    gap = np.linalg.norm(forward - backward, 2)
    if gap > TOLERANCES.horner * scale:
        raise NonCommutingError(gap)
    return forward


def apply_map_to_tuple(m: MapDescriptor, mats: list[np.ndarray]) -> list[np.ndarray]:
    """The operator-side action of a map: the tuple whose joint measure is the push-forward."""
    if len(mats) != m.arity:
        raise DimensionMismatchError(f"map takes {m.arity} operators, got {len(mats)}")
    mats = [np.asarray(t, dtype=complex) for t in mats]
    alpha, beta = complex(*m.alpha), complex(*m.beta)

    if m.variant == 'polynomial':
        return [evaluate_polynomial(m, mats)]
    if m.variant == 'add_last':
        return mats[:-2] + [mats[-2] + mats[-1]]
    if m.variant == 'mul_last':
        return mats[:-2] + [alpha * (mats[-2] @ mats[-1])]
    if m.variant == 'scale_pair':
        return [alpha * mats[0], beta * mats[1]]
    if m.variant == 'permutation':
        return [mats[s] for s in m.sigma]
    return mats + [mats[m.index]]


def worked_polynomial_pipeline() -> tuple[MapDescriptor, list[MapDescriptor]]:
    """q = 1 + 2 z_2^2 + z_1 z_2 z_3 and its factorization through the elementary maps.

    Duplicate z_2 twice, bring the factors of each monomial next to each other, multiply
    them out, add the two monomials and shift by the constant term.
    """
    q = polynomial_map(3, {(0, 0, 0): 1.0, (0, 2, 0): 2.0, (1, 1, 1): 1.0})
    chain = [
        duplicate(3, 1),                 # (z1, z2, z3, z2)
        duplicate(4, 1),                 # (z1, z2, z3, z2, z2)
        permutation([1, 3, 0, 4, 2]),    # (z2, z2, z1, z2, z3)
        mul_last(5, 1.0),                # (z2, z2, z1, z2 z3)
        mul_last(4, 1.0),                # (z2, z2, z1 z2 z3)
        permutation([2, 0, 1]),          # (z1 z2 z3, z2, z2)
        mul_last(3, 2.0),                # (z1 z2 z3, 2 z2^2)
        permutation([1, 0]),
        add_last(2),
        shift_map(1.0),
    ]
    return q, chain
