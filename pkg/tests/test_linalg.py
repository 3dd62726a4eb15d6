import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sp

from optcert import fem
from optcert.linalg import (
    LinearSolverError,
    SingularMatrixError,
    as_csr,
    is_symmetric,
    solve_general,
    solve_spd,
)


def test_identity(rng):
    b = rng.normal(size=7)
    assert np.array_equal(solve_spd(sp.identity(7, format="csr"), b), b)


def test_tridiagonal_by_hand():
    A = sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(3, 3))
    assert np.allclose(solve_spd(A, np.ones(3)), [1.5, 2.0, 1.5], atol=1e-14)


def test_stiffness_solve_matches_dense_lu(mesh4):
    A = fem.restrict(mesh4, fem.assemble_stiffness(mesh4))
    b = (fem.assemble_mass(mesh4) @ np.ones(mesh4.num_nodes))[mesh4.interior]
    x = solve_spd(A, b)
    lu = scipy.linalg.lu_factor(A.toarray())
    assert np.allclose(x, scipy.linalg.lu_solve(lu, b), rtol=1e-10, atol=1e-14)
    assert np.linalg.norm(A @ x - b) <= 1e-12 * np.linalg.norm(b)


def test_permutation():
    A = sp.csr_matrix([[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose(solve_general(A, np.array([1.0, 2.0])), [2.0, 1.0])


def test_random_general_matches_dense(rng):
    A = rng.normal(size=(10, 10)) + 10 * np.eye(10)
    b = rng.normal(size=10)
    x = solve_general(sp.csr_matrix(A), b)
    assert np.allclose(x, np.linalg.solve(A, b), rtol=1e-10, atol=1e-12)


def test_zero_row_is_singular():
    A = sp.csr_matrix(np.array([[1.0, 2.0], [0.0, 0.0]]))
    with pytest.raises(SingularMatrixError):
        solve_general(A, np.ones(2))


def test_rank_deficient_is_singular():
    A = sp.csr_matrix(np.array([[1.0, 2.0], [2.0, 4.0]]))
    with pytest.raises(LinearSolverError):
        solve_general(A, np.array([1.0, 0.0]))


def test_spd_and_general_agree(mesh8, rng):
    A = fem.restrict(mesh8, fem.assemble_stiffness(mesh8) + fem.assemble_mass(mesh8))
    b = rng.normal(size=A.shape[0])
    x1, x2 = solve_spd(A, b), solve_general(A, b)
    assert np.linalg.norm(x1 - x2) <= 1e-9 * np.linalg.norm(x1)


def test_zero_rhs_gives_zero(mesh4):
    A = fem.restrict(mesh4, fem.assemble_stiffness(mesh4))
    assert not np.any(solve_spd(A, np.zeros(A.shape[0])))


def test_constants_are_discretely_harmonic(mesh8):
    A = fem.assemble_stiffness(mesh8)
    r = A @ np.ones(mesh8.num_nodes)
    assert np.abs(r).max() <= 1e-12
    # interior rows applied to the interior-only constant see only the boundary coupling
    AI = fem.restrict(mesh8, A)
    coupling = -(A[mesh8.interior][:, mesh8.boundary_mask] @ np.ones(mesh8.boundary_mask.sum()))
    assert np.allclose(AI @ np.ones(AI.shape[0]), coupling, atol=1e-12)


def test_canonical_csr_and_symmetry(mesh4):
    A = as_csr(fem.assemble_stiffness(mesh4))
    assert A.has_sorted_indices and A.has_canonical_format
    assert is_symmetric(A)
    assert not is_symmetric(sp.csr_matrix([[1.0, 2.0], [0.0, 1.0]]))
