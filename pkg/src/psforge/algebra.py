"""2x2 complex matrix helpers and the identification of R^3 with su(2).

A vector (x, y, z) corresponds to the trace-free anti-Hermitian matrix

    X = (i/2) (x s1 - y s2 + z s3) = [[i z/2, (i x - y)/2], [(i x + y)/2, -i z/2]]

and the Euclidean inner product is recovered as -2 Re tr(X Y).
"""
from __future__ import annotations

import numpy as np

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

SU2_TOL = 1e-9


def max_abs(m) -> float:
    """Entrywise max-norm, the matrix norm used by every predicate here."""
    return float(np.max(np.abs(m)))


def to_su2(v) -> np.ndarray:
    x, y, z = (float(c) for c in v)
    if not all(np.isfinite((x, y, z))):
        raise ValueError(f"non-finite vector {v!r}")
    return np.array(
        [[0.5j * z, 0.5 * (1j * x - y)], [0.5 * (1j * x + y), -0.5j * z]],
        dtype=complex,
    )


def su2_defect(X) -> float:
    """max(|tr X|, ||X + X^H||_inf); zero exactly on su(2)."""
    X = np.asarray(X, dtype=complex)
    return max(abs(X[0, 0] + X[1, 1]), max_abs(X + X.conj().T))


def is_su2(X, tol: float = SU2_TOL) -> bool:
    return su2_defect(X) <= tol


def from_su2(X, tol: float = SU2_TOL) -> np.ndarray:
    """Inverse of :func:`to_su2`. Inputs off su(2) by more than ``tol`` are rejected."""
    X = np.asarray(X, dtype=complex)
    if X.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {X.shape}")
    defect = su2_defect(X)
    if not defect <= tol:
        raise ValueError(f"matrix is not in su(2): defect {defect:.3e} > {tol:.1e}")
    m11, m12 = X[0, 0], X[0, 1]
    return np.array([2.0 * m12.imag, -2.0 * m12.real, 2.0 * m11.imag])


def inner_product(X, Y) -> float:
    return float(-2.0 * np.trace(np.asarray(X) @ np.asarray(Y)).real)


def sl2_inverse(M) -> np.ndarray:
    """Adjugate; the exact inverse for determinant-one matrices."""
    M = np.asarray(M)
    return np.array([[M[1, 1], -M[0, 1]], [-M[1, 0], M[0, 0]]], dtype=complex)


def unitarity_defect(M) -> float:
    """max(|det M - 1|, ||M M^H - Id||_inf)."""
    M = np.asarray(M, dtype=complex)
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    return max(abs(det - 1.0), max_abs(M @ M.conj().T - IDENTITY))


def is_special_unitary(M, tol: float) -> bool:
    if not tol > 0:
        raise ValueError("tol must be positive")
    return unitarity_defect(M) <= tol
