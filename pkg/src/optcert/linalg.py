"""Sparse direct solves on top of SciPy's SuperLU."""
import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu


class LinearSolverError(RuntimeError):
    def __init__(self, msg, residual=np.nan):
        super().__init__(f"{msg} (relative residual {residual:.3e})")
        self.residual = residual


class SingularMatrixError(LinearSolverError):
    pass


SPD_RTOL = 1e-12
GENERAL_RTOL = 1e-10
PIVOT_RTOL = 1e-14


def as_csr(A):
    """Canonical CSR copy: duplicates summed, column indices sorted."""
    A = sp.csr_matrix(A, dtype=float)
    A.sum_duplicates()
    A.sort_indices()
    return A


def is_symmetric(A, rtol=1e-12):
    A = sp.csr_matrix(A)
    amax = abs(A).max() if A.nnz else 0.0
    d = A - A.T
    return (abs(d).max() if d.nnz else 0.0) <= rtol * amax


def _rel_residual(A, x, b):
    nb = np.linalg.norm(b)
    r = np.linalg.norm(A @ x - b)
    return r / nb if nb > 0 else r


def _factor(A):
    A = sp.csc_matrix(A, dtype=float)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got {A.shape}")
    row_max = abs(A).max(axis=1).toarray().ravel()
    if np.any(row_max == 0.0):
        raise SingularMatrixError("matrix has a zero row", np.inf)
    try:
        lu = splu(A, permc_spec="COLAMD")
    except RuntimeError as exc:
        raise SingularMatrixError(str(exc), np.inf) from exc
    # U row k was row perm_r^{-1}[k] of A
    udiag = np.abs(lu.U.diagonal())
    if np.any(udiag < PIVOT_RTOL * row_max[np.argsort(lu.perm_r)]):
        raise SingularMatrixError("pivot below threshold", np.inf)
    return A, lu


def _solve(A, b, rtol):
    A, lu = _factor(A)
    b = np.asarray(b, dtype=float)
    if not np.any(b):
        return np.zeros_like(b)
    x = lu.solve(b)
    res = _rel_residual(A, x, b)
    if res > rtol:
        # one step of iterative refinement before giving up
        x = x + lu.solve(b - A @ x)
        res = _rel_residual(A, x, b)
    if not np.all(np.isfinite(x)) or res > rtol:
        raise LinearSolverError("direct solve missed its residual target", res)
    return x


def solve_spd(A, b):
    """Solve a symmetric positive definite system to relative residual 1e-12."""
    return _solve(A, b, SPD_RTOL)


def solve_general(A, b):
    """Solve a nonsingular (possibly nonsymmetric) system to relative residual 1e-10."""
    return _solve(A, b, GENERAL_RTOL)
