"""Dense symmetric eigenvalues and Hessians of generalized symmetric functions.

Everything here is deliberately small-scale: matrices are n x n with
n <= 10, so a deterministic cyclic Jacobi sweep is both simple and
bit-reproducible. The Weyl inequality check doubles as a property-test
oracle for the eigenvalue solver.
"""

from __future__ import annotations

import numpy as np

from .symfun import LambdaVec

__all__ = [
    "check_symmetric",
    "eigen_ascending",
    "hessian_generalized",
    "weyl_check",
]


def check_symmetric(M) -> np.ndarray:
    """Validate and return a symmetric float matrix."""
    arr = np.asarray(M, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix entries must be finite")
    if not np.array_equal(arr, arr.T):
        if np.abs(arr - arr.T).max() > 1e-13 * max(1.0, np.abs(arr).max()):
            raise ValueError("matrix is not symmetric")
        arr = 0.5 * (arr + arr.T)
    return arr


def eigen_ascending(M) -> LambdaVec:
    """Eigenvalues of a symmetric matrix, ascending, via cyclic Jacobi.

    Sweeps the strict upper triangle in a fixed row-major order until the
    off-diagonal norm drops below 1e-12 times the Frobenius norm.
    """
    a = check_symmetric(M).copy()
    n = a.shape[0]
    fro = np.sqrt((a * a).sum())
    if fro == 0.0:
        return LambdaVec(np.zeros(n))
    tol = 1e-12 * fro
    for _ in range(100):
        off = np.sqrt(2.0 * (np.triu(a, 1) ** 2).sum())
        if off <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= tol / (n * n):
                    continue
                # classic Jacobi rotation annihilating a[p, q]
                theta = 0.5 * (a[q, q] - a[p, p]) / apq
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                a = 0.5 * (a + a.T)
    return LambdaVec(np.diag(a))


def hessian_generalized(a_diag, x, u1: float, u2: float) -> np.ndarray:
    """Hessian of u(0.5 x^T A x) for diagonal A with entries ``a_diag``.

    Entries are a_i d_ij u' + a_i a_j x_i x_j u'' with u' = ``u1`` and
    u'' = ``u2``; symmetric by construction.
    """
    a = np.asarray(a_diag, dtype=float)
    x = np.asarray(x, dtype=float)
    ax = a * x
    return np.diag(a * u1) + u2 * np.outer(ax, ax)


def weyl_check(A1, A2, slack: float = 1e-10) -> bool:
    """Both Weyl inequality families for the pair (A1, A2).

    With 1-based indices: lam_i(A1+A2) <= lam_{i+j}(A1) + lam_{n-j}(A2)
    for 0 <= j <= n-i, and lam_i(A1+A2) >= lam_{i-j+1}(A1) + lam_j(A2)
    for 1 <= j <= i.
    """
    A1 = check_symmetric(A1)
    A2 = check_symmetric(A2)
    if A1.shape != A2.shape:
        raise ValueError("dimension mismatch")
    n = A1.shape[0]
    l1 = eigen_ascending(A1).values
    l2 = eigen_ascending(A2).values
    ls = eigen_ascending(A1 + A2).values
    scale = max(1.0, np.abs(l1).max(), np.abs(l2).max())
    tol = slack * scale
    for i in range(n):
        for j in range(0, n - i):
            if ls[i] > l1[i + j] + l2[n - 1 - j] + tol:
                return False
        for j in range(0, i + 1):
            if ls[i] < l1[i - j] + l2[j] - tol:
                return False
    return True
