import logging
import math
from typing import Tuple

import numpy as np
from scipy.linalg import lu_factor, lu_solve as scipy_lu_solve

from ...config import JACOBI_MAX_SWEEPS, JACOBI_TOL, PIVOT_THRESHOLD
from ...exceptions import BeamInputError, SingularMatrixError

logger = logging.getLogger(__name__)


def as_dense(a, name: str = "matrix") -> np.ndarray:
    matrix = np.array(a, dtype=float)
    if matrix.ndim != 2:
        raise BeamInputError(f"{name} must be two-dimensional, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise BeamInputError(f"{name} has non-finite entries")
    return matrix


def solve_small(a, b) -> np.ndarray:
    """Gaussian elimination with scaled partial pivoting for the 3x3 shooting Jacobian.

    A pivot below PIVOT_THRESHOLD times its row scale raises SingularMatrixError.
    """
    m = as_dense(a)
    x = np.array(b, dtype=float).reshape(-1)
    n = m.shape[0]
    if m.shape != (n, n) or x.shape != (n,):
        raise BeamInputError(f"incompatible shapes {m.shape} and {x.shape}")
    scale = np.abs(m).max(axis=1)
    if np.any(scale == 0.0):
        raise SingularMatrixError("matrix has a zero row", pivot=0.0)

    for k in range(n):
        p = k + int(np.argmax(np.abs(m[k:, k]) / scale[k:]))
        if abs(m[p, k]) < PIVOT_THRESHOLD * scale[p]:
            raise SingularMatrixError(f"pivot {m[p, k]} below threshold in column {k}", pivot=float(m[p, k]))
        if p != k:
            m[[k, p]] = m[[p, k]]
            x[[k, p]] = x[[p, k]]
            scale[[k, p]] = scale[[p, k]]
        factors = m[k + 1:, k] / m[k, k]
        m[k + 1:, k:] -= np.outer(factors, m[k, k:])
        x[k + 1:] -= factors * x[k]

    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - m[k, k + 1:] @ x[k + 1:]) / m[k, k]
    return x


def lu_solve(a, b) -> np.ndarray:
    """General dense solve through LAPACK LU with partial pivoting."""
    m = as_dense(a)
    rhs = np.asarray(b, dtype=float)
    if m.shape[0] != m.shape[1] or rhs.shape[0] != m.shape[0]:
        raise BeamInputError(f"incompatible shapes {m.shape} and {rhs.shape}")
    lu, piv = lu_factor(m, check_finite=False)
    pivots = np.abs(np.diag(lu))
    threshold = PIVOT_THRESHOLD * max(np.abs(m).max(), np.finfo(float).tiny)
    if pivots.min() < threshold:
        k = int(np.argmin(pivots))
        raise SingularMatrixError(f"pivot {lu[k, k]} below threshold {threshold}", pivot=float(lu[k, k]))
    return scipy_lu_solve((lu, piv), rhs, check_finite=False)


def jacobi_eigen(a) -> Tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi rotations on (A + Aᵀ)/2.

    Returns eigenvalues in ascending order and the matching eigenvectors as columns.
    """
    m = as_dense(a)
    if m.shape[0] != m.shape[1]:
        raise BeamInputError(f"matrix must be square, got {m.shape}")
    m = 0.5 * (m + m.T)
    n = m.shape[0]
    v = np.eye(n)
    frobenius = np.linalg.norm(m)
    if n == 1 or frobenius == 0.0:
        return np.diag(m).copy(), v

    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.linalg.norm(m - np.diag(np.diag(m)))
        if off <= JACOBI_TOL * frobenius:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = m[p, q]
                if apq == 0.0:
                    continue
                app, aqq = m[p, p], m[q, q]
                tau = (aqq - app) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                col_p = m[:, p].copy()
                col_q = m[:, q].copy()
                m[:, p] = col_p * c - col_q * s
                m[:, q] = col_q * c + col_p * s
                m[p, :] = m[:, p]
                m[q, :] = m[:, q]
                m[p, p] = app - t * apq
                m[q, q] = aqq + t * apq
                m[p, q] = 0.0
                m[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = vp * c - vq * s
                v[:, q] = vq * c + vp * s
    else:
        logger.warning(f"Jacobi stopped after {JACOBI_MAX_SWEEPS} sweeps on a {n}x{n} matrix")

    values = np.diag(m).copy()
    order = np.argsort(values)
    return values[order], v[:, order]


def sym_lowest_eigenvalue(a) -> Tuple[float, np.ndarray]:
    """Smallest eigenvalue of a symmetric matrix and a unit eigenvector."""
    values, vectors = jacobi_eigen(a)
    vector = vectors[:, 0]
    return float(values[0]), vector / np.linalg.norm(vector)
