import numpy as np
import pytest
from pydantic import ValidationError

from exceptions import NonCommutingError
from models import ModelSpec
from service_rules import TOLERANCES
from engine.engine_ensembles import (conjugated_diagonal, generate, kronecker_pair, lattice_values, poly_of_jordan,
                                     random_unitary, similarity)
from engine.engine_measures import brown_of, measure_distance


def test_random_unitary():
    """Test Q^H Q = I"""
    q = random_unitary(5, np.random.default_rng(0))
    assert np.allclose(q.conj().T @ q, np.eye(5), atol=1e-12)


def test_similarity_condition():
    """Test the similarity has the requested condition number"""
    s = similarity(6, 50.0, np.random.default_rng(1))
    assert np.linalg.cond(s) == pytest.approx(50.0, rel=1e-8)


def test_lattice_values_are_separated():
    """Test jittered lattice points keep most of the spacing"""
    values = lattice_values(12, np.random.default_rng(2))
    gaps = np.abs(values[:, None] - values[None, :])[~np.eye(12, dtype=bool)]
    assert gaps.min() >= 0.8 * 1.0 - 1e-12  # 5 x 5 lattice over [-2, 2]^2


@pytest.mark.parametrize("d,n,seed", [(3, 1, 0), (5, 2, 1), (6, 3, 4)])
def test_conjugated_diagonal_oracle(d, n, seed):
    """Test the joint measure against the diagonal entries"""
    mats, oracle = conjugated_diagonal(d, n, seed)
    assert len(mats) == n and oracle.size == d
    assert measure_distance(brown_of(mats), oracle) <= TOLERANCES.measure


@pytest.mark.parametrize("d,n,seed", [(4, 2, 0), (5, 2, 3), (3, 3, 7)])
def test_poly_of_jordan_oracle(d, n, seed):
    """Test Jordan blocks count with their size"""
    mats, oracle = poly_of_jordan(d, n, seed)
    assert oracle.weights.sum() == pytest.approx(1.0)
    assert measure_distance(brown_of(mats), oracle) <= TOLERANCES.measure


def test_kronecker_pair_oracle():
    """Test (S x 1, 1 x T) carries the product measure"""
    mats, oracle = kronecker_pair(2, 3, seed=5)
    assert mats[0].shape == (6, 6)
    assert oracle.size == 6
    assert measure_distance(brown_of(mats), oracle) <= TOLERANCES.measure


def test_generate_is_seeded():
    """Test equal specs give equal matrices"""
    spec = ModelSpec(kind='conjugated_diagonal', d=4, n=2, seed=9)
    first, second = generate(spec), generate(spec)
    assert all(np.array_equal(a, b) for a, b in zip(first.mats, second.mats))
    assert first.oracle is not None


def test_generate_ginibre_has_no_oracle():
    """Test the Ginibre matrix comes without a joint spectrum"""
    model = generate(ModelSpec(kind='ginibre', d=8, seed=3))
    assert model.oracle is None
    assert model.mats[0].shape == (8, 8)


def test_generate_explicit():
    """Test explicit models validate their matrices"""
    with pytest.raises(ValueError):
        generate(ModelSpec(kind='explicit'))
    with pytest.raises(NonCommutingError):
        generate(ModelSpec(kind='explicit'), [np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[0.0, 0.0], [1.0, 0.0]])])
    model = generate(ModelSpec(kind='explicit'), [np.diag([1.0, 2.0])])
    assert model.oracle is None


def test_model_spec_bounds():
    """Test the conditioning range"""
    with pytest.raises(ValidationError):
        ModelSpec(kind='conjugated_diagonal', conditioning=1e4)
