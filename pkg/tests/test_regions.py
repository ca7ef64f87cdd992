import numpy as np
import pytest
from hypothesis import given, seed, settings, strategies as st

from exceptions import DimensionMismatchError
from engine.engine_maps import add_map
from engine.engine_regions import (ball_disjoint, ball_inside, boundary_distance, bounding_box, box, closed_ball,
                                   complement, conjugate, contains, dyadic_cover, empty, full, intersection,
                                   open_ball, preimage, product, shrinking_balls, union, verify_cover)

# Test data
UNIT_BOX = box(0, 1)
UNIT_DISK = open_ball(0, 1)


def test_box_is_half_open():
    """Test strict lower and weak upper edges"""
    assert contains(UNIT_BOX, 1 + 1j)
    assert not contains(UNIT_BOX, -1)
    assert not contains(UNIT_BOX, 0.5 - 1j)
    assert contains(UNIT_BOX, 0.5 - 0.999j)


def test_adjacent_boxes_partition():
    """Test two neighbouring boxes never share a point"""
    left, right = box(-1, 1), box(1, 1)
    points = np.array([[0.0], [0.0 + 0.5j], [-2.0], [2.0], [1.0 - 1j]], dtype=complex)
    both = contains(left, points) & contains(right, points)
    assert not both.any()


def test_balls():
    """Test open and closed balls differ on the sphere"""
    assert not contains(UNIT_DISK, 1)
    assert contains(closed_ball(0, 1), 1)
    assert contains(open_ball([0, 1], 1), [0.5, 1])


def test_set_algebra():
    """Test union, intersection, complement, conjugate"""
    upper = box(1j, 1)
    assert contains(union(UNIT_BOX, upper), 1.5j)
    assert not contains(intersection(UNIT_BOX, upper), -0.5j)
    assert contains(complement(UNIT_BOX), 3)
    assert contains(conjugate(upper), -1.5j)
    assert contains(full(), 100) and not contains(empty(), 0)


def test_product_membership():
    """Test membership in a product splits by coordinates"""
    region = product(UNIT_BOX, UNIT_DISK)
    points = np.array([[0.5, 0.5], [0.5, 2.0], [3.0, 0.0]], dtype=complex)
    assert contains(region, points).tolist() == [True, False, False]


def test_preimage_under_addition():
    """Test a^-1(B(0,1))"""
    region = preimage(UNIT_DISK, add_map())
    assert contains(region, [0.3, -0.2])
    assert not contains(region, [0.8, 0.8])


def test_dimension_mismatch():
    """Test points must match the region dimension"""
    with pytest.raises(DimensionMismatchError):
        contains(product(UNIT_BOX, UNIT_BOX), np.zeros((2, 3)))


def test_boundary_distance():
    """Test distances to box and ball boundaries"""
    assert boundary_distance(UNIT_BOX, 0.5) == pytest.approx(0.5)
    assert boundary_distance(UNIT_BOX, 4 + 0j) == pytest.approx(3)
    assert boundary_distance(UNIT_DISK, 0.25j) == pytest.approx(0.75)
    assert boundary_distance(full(), 3) == np.inf


def test_bounding_box():
    """Test bounding boxes of composite regions"""
    assert bounding_box(union(box(0, 1), box(3, 1))).tolist() == [[-1, 4, -1, 1]]
    assert bounding_box(intersection(box(0, 1), box(5, 1))) is None
    assert bounding_box(empty()) is None
    assert np.isinf(bounding_box(complement(UNIT_BOX))).all()


def test_ball_tests_are_conservative():
    """Test inside and disjoint verdicts"""
    centers = np.array([0.0, 0.9, 3.0], dtype=complex)
    radii = np.array([0.5, 0.5, 0.5])
    assert ball_inside(UNIT_DISK, centers, radii).tolist() == [True, False, False]
    assert ball_disjoint(UNIT_DISK, centers, radii).tolist() == [False, False, True]


def test_shrinking_balls():
    """Test radii halve"""
    balls = shrinking_balls(0, 3, start=1)
    assert [b.radius for b in balls] == [0.5, 0.25, 0.125]


def test_additive_cover_contains_origin_box():
    """Test B(0, 4) under + picks the level-0 box at the origin"""
    cover = dyadic_cover(open_ball(0, 4), 'add', depth=1)
    assert any(np.allclose(row, [0, 0, 0, 0, 1, 0]) for row in cover.boxes)
    checks = verify_cover(cover)
    assert checks['overlaps'] == checks['unsafe'] == checks['corners_outside'] == 0


def test_small_target_first_emits_at_level_five():
    """Test B(0, 0.1) needs boxes of half-width 2^-5"""
    cover = dyadic_cover(open_ball(0, 0.1), 'add', depth=5, window=1)
    assert cover.size > 0
    assert cover.boxes[:, 5].min() == 5


def test_multiplicative_cover_needs_norm_bound():
    """Test the multiplicative cover requires ||T||"""
    with pytest.raises(ValueError):
        dyadic_cover(UNIT_DISK, 'multiply', depth=1)


def test_multiplicative_cover_is_safe():
    """Test safety inclusion for the product map"""
    cover = dyadic_cover(open_ball(0, 2), 'multiply', depth=3, norm_bound=1.0)
    checks = verify_cover(cover)
    assert checks['boxes'] > 0
    assert checks['overlaps'] == checks['unsafe'] == checks['corners_outside'] == 0


def test_cover_depth_cap():
    """Test depths beyond the configured cap are refused"""
    with pytest.raises(ValueError):
        dyadic_cover(UNIT_DISK, 'add', depth=99)


@seed(7)
@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.05, 2))
def test_box_boundary_distance_matches_membership(x, y, delta):
    """Test points well inside a box by boundary distance are members"""
    region = box(complex(x, y), delta)
    point = complex(x + 0.5 * delta, y - 0.5 * delta)
    assert contains(region, point)
    assert boundary_distance(region, point) == pytest.approx(0.5 * delta)
