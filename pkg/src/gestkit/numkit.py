"""Dense float64 matrix kernels: symmetric eigendecomposition and pseudoinverse.

Matrices are plain 2-D ``numpy.ndarray`` values in row-major float64. The two
nontrivial kernels are ``sym_eig`` (cyclic Jacobi rotations, unconditionally
convergent for symmetric input) and ``pinv`` (built on ``sym_eig`` of the
smaller Gram matrix). Everything is a pure function of immutable inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError

__all__ = [
    "EigResult",
    "sym_eig",
    "pinv",
    "matmul",
    "transpose",
    "frobenius_norm",
    "as_matrix",
]

_EPS = np.finfo(np.float64).eps


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float64 array, raising on bad input."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class EigResult:
    """Eigendecomposition of a symmetric matrix.

    ``vectors`` holds unit eigenvectors as columns, ordered by descending
    eigenvalue; ``values`` is the matching 1-D array of eigenvalues.
    """

    vectors: np.ndarray
    values: np.ndarray


def sym_eig(a) -> EigResult:
    """Eigendecomposition of a symmetric matrix via cyclic Jacobi rotations.

    The input is symmetrized as (A + A^T)/2 before iteration, but an asymmetry
    beyond 1e-9 relative is rejected. Eigenpairs satisfy
    ``A q_i = values[i] q_i`` to 1e-8 * (||A||_F + 1) and are returned in
    descending eigenvalue order with a fixed sign convention (the
    largest-magnitude component of each eigenvector is positive).
    """
    arr = as_matrix(a, "sym_eig input")
    n, m = arr.shape
    if n != m:
        raise DimensionError(f"sym_eig needs a square matrix, got {n}x{m}")
    scale = np.max(np.abs(arr)) if n else 0.0
    if scale > 0.0:
        asym = np.max(np.abs(arr - arr.T))
        if asym > 1e-9 * scale:
            raise DomainError(
                f"matrix is not symmetric (relative asymmetry {asym / scale:.3e})"
            )

    A = 0.5 * (arr + arr.T)
    Q = np.eye(n)
    fro = math.sqrt(float(np.sum(A * A)))
    # Off-diagonal mass below this leaves eigenpair residuals far inside the
    # 1e-8*(||A||_F + 1) contract.
    off_tol = 1e-12 * (fro + 1.0)
    rot_tol = off_tol / max(2 * n, 1)

    for _ in range(60):
        hollow = A.copy()
        np.fill_diagonal(hollow, 0.0)
        off = math.sqrt(float(np.sum(hollow * hollow)))
        if off <= off_tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= rot_tol:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 1.0 / (2.0 * theta)
                else:
                    t = math.copysign(1.0, theta) / (
                        abs(theta) + math.sqrt(theta * theta + 1.0)
                    )
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c

                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = 0.0
                A[q, p] = 0.0

                vec_p = Q[:, p].copy()
                vec_q = Q[:, q].copy()
                Q[:, p] = c * vec_p - s * vec_q
                Q[:, q] = s * vec_p + c * vec_q

    values = np.diag(A).copy()
    order = np.argsort(values)[::-1]
    values = values[order]
    vectors = Q[:, order].copy()
    # Sign convention: make the largest-magnitude component of each
    # eigenvector positive, for run-to-run determinism.
    for j in range(n):
        k = int(np.argmax(np.abs(vectors[:, j])))
        if vectors[k, j] < 0.0:
            vectors[:, j] = -vectors[:, j]
    return EigResult(vectors=vectors, values=values)


def pinv(a, tol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse via ``sym_eig`` of the smaller Gram matrix.

    Singular values at or below the cutoff are zeroed. The default cutoff is
    ``1e-12 * max(m, n) * s_max``, floored at the Gram-formation noise level
    ``10 * sqrt(max(m, n) * eps) * s_max`` so that exactly rank-deficient
    inputs do not resurrect roundoff directions.
    """
    A = as_matrix(a, "pinv input")
    m, n = A.shape
    if tol is not None and tol < 0.0:
        raise DomainError(f"tol must be >= 0, got {tol}")
    if m == 0 or n == 0:
        return np.zeros((n, m))

    if m >= n:
        gram = A.T @ A
    else:
        gram = A @ A.T
    eig = sym_eig(gram)
    svals = np.sqrt(np.clip(eig.values, 0.0, None))
    s_max = float(svals[0]) if svals.size else 0.0
    if s_max == 0.0:
        return np.zeros((n, m))

    noise_floor = 10.0 * math.sqrt(max(m, n) * _EPS) * s_max
    cutoff = max(tol if tol is not None else 1e-12 * max(m, n) * s_max, noise_floor)
    keep = svals > cutoff
    if not np.any(keep):
        return np.zeros((n, m))
    s_kept = svals[keep]

    if m >= n:
        v_kept = eig.vectors[:, keep]
        u_kept = (A @ v_kept) / s_kept
        return v_kept @ (u_kept / s_kept).T
    u_kept = eig.vectors[:, keep]
    v_kept = (A.T @ u_kept) / s_kept
    return v_kept @ (u_kept / s_kept).T


def matmul(a, b) -> np.ndarray:
    """Matrix product with exact-shape checking."""
    A = as_matrix(a, "matmul left")
    B = as_matrix(b, "matmul right")
    if A.shape[1] != B.shape[0]:
        raise DimensionError(
            f"matmul shape mismatch: {A.shape[0]}x{A.shape[1]} @ "
            f"{B.shape[0]}x{B.shape[1]}"
        )
    return A @ B


def transpose(a) -> np.ndarray:
    """Transposed copy."""
    return as_matrix(a, "transpose input").T.copy()


def frobenius_norm(a) -> float:
    """Frobenius norm."""
    A = as_matrix(a, "frobenius_norm input")
    return math.sqrt(float(np.sum(A * A)))
