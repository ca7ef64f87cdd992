import numpy as np
import pytest
from pydantic import ValidationError

from exceptions import DimensionMismatchError, NonCommutingError
from models import AtomicMeasure
from engine.engine_maps import (add_last, apply_map_points, apply_map_to_tuple, duplicate, evaluate_polynomial,
                                mul_last, permutation, polynomial_map, scale_pair, worked_polynomial_pipeline)
from engine.engine_measures import (brown, brown_of, convolve_additive, convolve_multiplicative, measure_distance,
                                    measure_mass, product_measure, push_chain, pushforward,
                                    verify_distribution_extension, verify_map_pushforward,
                                    verify_similarity_invariance, verify_tensor, verify_worked_polynomial)
from engine.engine_regions import box
from engine.engine_spectral import decompose

# Test data
S = np.array([
    [1.0, 0.2, 0.0, 0.1],
    [0.0, 1.0, 0.3, 0.0],
    [0.1, 0.0, 1.0, 0.2],
    [0.0, 0.0, 0.0, 1.0],
], dtype=complex)
S_INV = np.linalg.inv(S)
DIAGONALS = [
    np.array([0.3, 1.1, -0.7 + 0.4j, 1.1]),
    np.array([0.5j, -0.2, 0.9, 1.3]),
    np.array([1.0, 0.4j, -0.5, 0.2]),
]
MATS = [S @ np.diag(d) @ S_INV for d in DIAGONALS]
SMALL_S = np.array([[0.3, 1.0], [0.0, -0.6]], dtype=complex)
SMALL_T = np.array([[1.1, 0.0], [0.5, 0.2j]], dtype=complex)


@pytest.fixture(scope="function")
def pair():
    return decompose(MATS[:2])


@pytest.fixture(scope="function")
def triple():
    return decompose(MATS)


def test_brown_of_diagonal():
    """Test diag(1, 2, 2, 3) gives weights 1/4, 1/2, 1/4"""
    mu = brown_of([np.diag([1.0, 2.0, 2.0, 3.0])])
    assert np.allclose(mu.weights, [0.25, 0.5, 0.25])
    assert np.allclose(mu.points[:, 0], [1, 2, 3])


def test_joint_brown_matches_diagonals(pair):
    """Test the joint measure of a conjugated diagonal pair"""
    expected = AtomicMeasure(dim=2, points=np.column_stack(DIAGONALS[:2]), weights=np.full(4, 0.25))
    assert measure_distance(brown(pair), expected) < 1e-8


def test_atoms_merge():
    """Test atoms closer than the merge tolerance collapse"""
    mu = AtomicMeasure(dim=1, points=[0.0, 1e-12, 1.0], weights=[0.25, 0.25, 0.5])
    assert mu.size == 2
    assert np.allclose(mu.weights, [0.5, 0.5])


def test_weights_must_sum_to_one():
    """Test probability normalization is enforced"""
    with pytest.raises(ValidationError):
        AtomicMeasure(dim=1, points=[0.0, 1.0], weights=[0.5, 0.6])


def test_measure_distance():
    """Test matching costs"""
    mu = AtomicMeasure(dim=1, points=[0.0], weights=[1.0])
    nu = AtomicMeasure(dim=1, points=[1.0], weights=[1.0])
    assert measure_distance(mu, mu) == 0
    assert measure_distance(mu, nu) == pytest.approx(1.0)
    split = AtomicMeasure(dim=1, points=[0.0, 5.0], weights=[0.5, 0.5])
    assert measure_distance(mu, split) == pytest.approx(1.0)


def test_measure_distance_dimension_check():
    """Test measures on different spaces are refused"""
    with pytest.raises(DimensionMismatchError):
        measure_distance(AtomicMeasure(dim=1, points=[0.0], weights=[1.0]),
                         AtomicMeasure(dim=2, points=[[0.0, 0.0]], weights=[1.0]))


def test_measure_mass():
    """Test mass of a box"""
    mu = AtomicMeasure(dim=1, points=[0.3, 1.1, 4.0], weights=[0.25, 0.25, 0.5])
    assert measure_mass(mu, box(0.5, 1)) == pytest.approx(0.5)


def test_product_and_convolutions():
    """Test product measure and the two convolutions on two-point measures"""
    mu = AtomicMeasure(dim=1, points=[0.0, 1.0], weights=[0.5, 0.5])
    nu = AtomicMeasure(dim=1, points=[1.0, 2.0j], weights=[0.5, 0.5])
    assert product_measure(mu, nu).size == 4
    added = convolve_additive(mu, nu)
    assert measure_distance(added, AtomicMeasure(dim=1, points=[1.0, 2.0j, 2.0, 1.0 + 2.0j],
                                                 weights=[0.25] * 4)) < 1e-12
    multiplied = convolve_multiplicative(mu, nu)
    assert measure_distance(multiplied, AtomicMeasure(dim=1, points=[0.0, 1.0, 2.0j],
                                                      weights=[0.5, 0.25, 0.25])) < 1e-12


def test_apply_map_points():
    """Test every map variant on one point"""
    point = np.array([[1.0, 2.0, 3.0]])
    assert apply_map_points(add_last(3), point).tolist() == [[1.0, 5.0]]
    assert apply_map_points(mul_last(3, 2.0), point).tolist() == [[1.0, 12.0]]
    assert apply_map_points(permutation([2, 0, 1]), point).tolist() == [[3.0, 1.0, 2.0]]
    assert apply_map_points(duplicate(3, 0), point).tolist() == [[1.0, 2.0, 3.0, 1.0]]
    assert apply_map_points(scale_pair(2.0, 1j), point[:, :2]).tolist() == [[2.0, 2.0j]]
    assert apply_map_points(scale_pair(0.0, 1j), point[:, :2]).tolist() == [[0.0, 2.0j]]


def test_worked_polynomial_chain_matches_direct():
    """Test the elementary chain reproduces q = 1 + 2 z2^2 + z1 z2 z3"""
    q, chain = worked_polynomial_pipeline()
    points = np.array([[0.3, 0.5j, 1.0], [1.1, -0.2, 0.4j], [2.0, 1.0, 3.0]])
    direct = apply_map_points(q, points)
    chained = points
    for m in chain:
        chained = apply_map_points(m, chained)
    assert np.allclose(direct, chained)
    assert direct[2, 0] == pytest.approx(1 + 2 + 6)


def test_pushforward_arity_check():
    """Test the map must take the measure's dimension"""
    with pytest.raises(DimensionMismatchError):
        pushforward(AtomicMeasure(dim=1, points=[0.0], weights=[1.0]), add_last(2))


def test_push_chain_identity():
    """Test an empty chain leaves the measure alone"""
    mu = AtomicMeasure(dim=1, points=[0.0, 1.0], weights=[0.5, 0.5])
    assert push_chain(mu, []) is mu


def test_evaluate_polynomial_detects_non_commuting():
    """Test the reversed Horner order disagrees for non-commuting input"""
    xy = polynomial_map(2, {(1, 1): 1.0})
    a = np.array([[0.0, 1.0], [0.0, 0.0]])
    b = np.array([[0.0, 0.0], [1.0, 0.0]])
    with pytest.raises(NonCommutingError):
        evaluate_polynomial(xy, [a, b])


def test_apply_map_to_tuple_operator_side():
    """Test operator-side actions"""
    mats = apply_map_to_tuple(mul_last(2, 2.0), MATS[:2])
    assert len(mats) == 1
    assert np.allclose(mats[0], 2 * MATS[0] @ MATS[1])
    assert len(apply_map_to_tuple(duplicate(2, 1), MATS[:2])) == 3


@pytest.mark.parametrize("m", [
    polynomial_map(2, {(2, 0): 1.0, (1, 1): 0.5, (0, 0): -1.0}),
    add_last(2),
    mul_last(2, 1.0 - 0.5j),
    scale_pair(2.0, 1j),
    scale_pair(0.0, 2.0),
    scale_pair(0.0, 0.0),
    permutation([1, 0]),
    duplicate(2, 0),
])
def test_map_pushforward(pair, m):
    """Test brown(m(T)) against the push-forward of brown(T)"""
    assert verify_map_pushforward(pair, m).passed


def test_worked_polynomial(triple):
    """Test the worked polynomial three ways"""
    assert verify_worked_polynomial(triple).passed


def test_worked_polynomial_needs_three(pair):
    """Test the arity check"""
    with pytest.raises(DimensionMismatchError):
        verify_worked_polynomial(pair)


def test_tensor():
    """Test product measure and convolutions through Kronecker products"""
    assert verify_tensor(SMALL_S, SMALL_T).passed


def test_similarity_invariance(pair):
    """Test conjugating the tuple leaves its joint measure alone"""
    rng = np.random.default_rng(5)
    similarity = np.eye(4) + 0.3 * (rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
    assert verify_similarity_invariance(pair, similarity).passed


def test_distribution_extension(pair):
    """Test the box function is additive and rebuilds the joint measure"""
    report = verify_distribution_extension(pair, grid_depth=3)
    assert report.passed
    assert report.details['boxes_s'] > 0


def test_zero_scale_collapses_atoms(pair):
    """Test a zero factor sends every atom onto the axis"""
    mu = pushforward(brown(pair), scale_pair(0.0, 1.0))
    assert np.all(mu.points[:, 0] == 0)
    assert mu.size == 4
    collapsed = pushforward(brown(pair), scale_pair(0.0, 0.0))
    assert collapsed.size == 1 and collapsed.weights[0] == pytest.approx(1.0)
