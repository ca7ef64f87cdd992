import math

import numpy as np
import pytest

from exceptions import DimensionMismatchError, GridError, IllPosedAlphaError, NonCommutingError
from models import GridSpec
from engine.engine_potential import (admissible_alphas, characterization_gap, fk_log_det, grid_brown, log_potential,
                                     modified_spectral_radius, verify_characterization, verify_pushforward_corollaries,
                                     verify_radius_inequalities)
from engine.engine_ensembles import ginibre
from engine.engine_measures import brown_of
from engine.engine_spectral import decompose

# Test data
S = np.array([
    [1.0, 0.2, 0.0, 0.1],
    [0.0, 1.0, 0.3, 0.0],
    [0.1, 0.0, 1.0, 0.2],
    [0.0, 0.0, 0.0, 1.0],
], dtype=complex)
S_INV = np.linalg.inv(S)
T1 = S @ np.diag([0.3, 1.1, -0.7 + 0.4j, 1.1]) @ S_INV
T2 = S @ np.diag([0.5j, -0.2, 0.9, 1.3]) @ S_INV
NILPOTENT = np.array([[0.0, 1.0], [0.0, 0.0]])
SYMMETRIC_GRID = GridSpec(x_min=-6, x_max=6, y_min=-6, y_max=6, nx=100, ny=100)


@pytest.fixture(scope="function")
def pair():
    return decompose([T1, T2])


def test_fk_log_det():
    """Test tau(log|A|) on diagonal and singular matrices"""
    assert fk_log_det(np.diag([2.0, 0.5])) == pytest.approx(0.0, abs=1e-15)
    assert fk_log_det(np.diag([math.e, math.e])) == pytest.approx(1.0)
    assert fk_log_det(NILPOTENT) == float('-inf')
    assert fk_log_det(np.zeros((3, 3))) == float('-inf')


def test_characterization_gap_is_small(pair):
    """Test the log-determinant identity for a random direction"""
    alpha = admissible_alphas(pair, 1, seed=2)[0]
    assert characterization_gap(pair.operators, pair, alpha) < 1e-8
    assert characterization_gap(pair.operators, pair, alpha, lam=0.3 - 0.2j) < 1e-8


def test_characterization_refuses_alpha_through_an_atom():
    """Test lam on the hyperplane through an atom"""
    dec = decompose([np.diag([1.0, 2.0])])
    with pytest.raises(IllPosedAlphaError):
        characterization_gap(dec.operators, dec, [1.0])


def test_characterization_alpha_length(pair):
    """Test alpha needs one entry per operator"""
    with pytest.raises(DimensionMismatchError):
        characterization_gap(pair.operators, pair, [1.0])


def test_admissible_alphas(pair):
    """Test shape and distance from the atoms"""
    alphas = admissible_alphas(pair, 7, seed=1, lam=0.5)
    assert alphas.shape == (7, 2)
    assert np.min(np.abs(pair.points @ alphas.T - 0.5)) >= 1e-3


def test_verify_characterization(pair):
    """Test the report over several alphas and lams"""
    report = verify_characterization(pair, admissible_alphas(pair, 5, seed=4), lams=(1.0,))
    assert report.passed
    assert report.details['evaluations'] == 5


def test_modified_spectral_radius():
    """Test the largest atom modulus"""
    assert modified_spectral_radius(brown_of([np.diag([0.5, -2.0, 1j])])) == pytest.approx(2.0)
    assert modified_spectral_radius(brown_of([NILPOTENT])) == 0


def test_radius_inequalities():
    """Test product and sum radii for a pair and for nilpotents"""
    assert verify_radius_inequalities(T1, T2).passed
    report = verify_radius_inequalities(NILPOTENT, 2 * NILPOTENT)
    assert report.passed
    assert report.details['r_product'] == 0


def test_radius_refuses_non_commuting():
    """Test the pair must commute"""
    with pytest.raises(NonCommutingError):
        verify_radius_inequalities(NILPOTENT, NILPOTENT.T)


def test_pushforward_corollaries():
    """Test aS + bT and ST"""
    assert verify_pushforward_corollaries(T1, T2, 2.0, 1j).passed


def test_log_potential():
    """Test the regularized potential at known points"""
    assert log_potential(np.zeros((2, 2)), 0, 0.5) == pytest.approx(math.log(0.5))
    assert log_potential(np.diag([1.0, -1.0]), 0, 1.0) == pytest.approx(math.log(2) / 2)
    with pytest.raises(ValueError):
        log_potential(np.zeros((2, 2)), 0, 0)


def test_grid_brown_of_zero():
    """Test T = 0 with a wide regularization: a Cauchy-like bump of mass 1"""
    density = grid_brown(np.zeros((2, 2)), SYMMETRIC_GRID, eps=0.5)
    # mass inside radius r is r^2 / (r^2 + eps^2); the square holds a little more than the disk of radius 6
    assert density.total_mass == pytest.approx(1.0, abs=0.02)
    assert density.mass_within(0, 1.0) == pytest.approx(0.8, abs=0.05)


@pytest.mark.slow
def test_grid_brown_lumps():
    """Test diag(-1, 1) puts half of the mass near each eigenvalue"""
    density = grid_brown(np.diag([-1.0, 1.0]))
    assert density.total_mass == pytest.approx(1.0, abs=0.05)
    assert density.mass_within(-1, 0.2) == pytest.approx(0.5, abs=0.05)
    assert density.mass_within(1, 0.2) == pytest.approx(0.5, abs=0.05)


def test_grid_must_contain_spectrum():
    """Test a grid missing an eigenvalue is refused"""
    with pytest.raises(GridError):
        grid_brown(np.diag([-1.0, 1.0]), GridSpec(x_min=2, x_max=3, y_min=-1, y_max=1, nx=20, ny=20), eps=0.01)


def test_grid_rejects_nonpositive_epsilon():
    """Test the regularization must be positive"""
    with pytest.raises(ValueError):
        grid_brown(np.eye(2), SYMMETRIC_GRID, eps=-1.0)


def test_grid_brown_point_mass():
    """Test T = 0 with a small regularization concentrates at the origin"""
    grid = GridSpec(x_min=-2, x_max=2, y_min=-2, y_max=2, nx=200, ny=200)
    density = grid_brown(np.zeros((1, 1)), grid, eps=1e-3)
    assert density.mass_within(0, 0.1) >= 0.95


@pytest.mark.slow
def test_grid_brown_ginibre():
    """Test a 256 x 256 Ginibre matrix on a 200 x 200 grid against its own eigenvalues"""
    t = ginibre(256, seed=1)
    density = grid_brown(t, size=200)
    assert abs(density.total_mass - 1) <= 0.05
    assert density.mass_within(0, 1.0) >= 0.9

    moduli = np.abs(np.linalg.eigvals(t))
    h = max(density.grid.hx, density.grid.hy)
    assert np.mean(moduli <= 1.0 - 3 * h) - 0.02 <= density.mass_within(0, 1.0)
    assert density.mass_within(0, 1.0) <= np.mean(moduli <= 1.0 + 3 * h) + 0.02
