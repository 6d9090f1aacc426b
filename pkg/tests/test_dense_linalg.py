import numpy as np
import pytest

from shear_beam_analyzer.components.dense_linalg.tools import (
    jacobi_eigen,
    lu_solve,
    solve_small,
    sym_lowest_eigenvalue,
)
from shear_beam_analyzer.exceptions import BeamInputError, SingularMatrixError


def test_solve_small_matches_numpy(rng):
    for _ in range(10):
        a = rng.normal(size=(3, 3)) + 3.0 * np.eye(3)
        b = rng.normal(size=3)
        np.testing.assert_allclose(solve_small(a, b), np.linalg.solve(a, b), rtol=1e-12, atol=1e-12)


def test_solve_small_badly_scaled_rows():
    a = np.array([[1e-8, 2e-8, 0.0], [3.0, 1.0, 2.0], [1e6, 0.0, 5e6]])
    b = np.array([1e-8, 2.0, 3e6])
    np.testing.assert_allclose(a @ solve_small(a, b), b, rtol=1e-10)


def test_solve_small_singular():
    a = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 1.0, 1.0]])
    with pytest.raises(SingularMatrixError):
        solve_small(a, np.ones(3))


def test_solve_small_zero_row():
    with pytest.raises(SingularMatrixError):
        solve_small(np.zeros((3, 3)), np.ones(3))


def test_solve_small_shape_mismatch():
    with pytest.raises(BeamInputError):
        solve_small(np.eye(3), np.ones(2))


def test_lu_solve_multiple_right_hand_sides(rng):
    a = rng.normal(size=(7, 7)) + 5.0 * np.eye(7)
    b = rng.normal(size=(7, 2))
    np.testing.assert_allclose(a @ lu_solve(a, b), b, atol=1e-12)


def test_lu_solve_singular():
    a = np.diag([1.0, 2.0, 0.0])
    with pytest.raises(SingularMatrixError):
        lu_solve(a, np.ones(3))


def test_non_finite_input():
    with pytest.raises(BeamInputError):
        lu_solve(np.array([[np.nan, 0.0], [0.0, 1.0]]), np.ones(2))


def test_jacobi_matches_eigvalsh(rng):
    for n in (2, 5, 9):
        m = rng.normal(size=(n, n))
        a = m + m.T
        values, vectors = jacobi_eigen(a)
        np.testing.assert_allclose(values, np.linalg.eigvalsh(a), atol=1e-10 * np.abs(a).max())
        np.testing.assert_allclose(a @ vectors, vectors * values, atol=1e-9 * np.abs(a).max())
        np.testing.assert_allclose(vectors.T @ vectors, np.eye(n), atol=1e-12)


def test_jacobi_symmetrizes():
    a = np.array([[2.0, 1.0], [0.0, 2.0]])
    values, _ = jacobi_eigen(a)
    np.testing.assert_allclose(values, [1.5, 2.5])


def test_jacobi_diagonal_and_single():
    values, vectors = jacobi_eigen(np.diag([3.0, -1.0, 2.0]))
    np.testing.assert_allclose(values, [-1.0, 2.0, 3.0])
    np.testing.assert_allclose(np.abs(vectors[:, 0]), [0.0, 1.0, 0.0])
    values, _ = jacobi_eigen([[4.0]])
    assert values[0] == 4.0


def test_lowest_eigenvalue_of_indefinite_matrix():
    a = np.array([[2.0, 0.0, 0.0], [0.0, -0.5, 0.1], [0.0, 0.1, 1.0]])
    value, vector = sym_lowest_eigenvalue(a)
    assert value == pytest.approx(np.linalg.eigvalsh(a)[0], abs=1e-13)
    assert np.linalg.norm(vector) == pytest.approx(1.0)
    np.testing.assert_allclose(a @ vector, value * vector, atol=1e-12)
