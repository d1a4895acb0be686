"""Dense linear-algebra services with explicit numerical contracts.

Matrices are plain float64 numpy arrays; every entry must be finite.
All functions here are pure and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, InvalidShape, NonFinite, NotSymmetric, RankDeficient

# Numerical-rank convention: sigma_min <= RANK_TOL * max(n, r) * sigma_max
# means the matrix is treated as rank deficient.
RANK_TOL = 1e-10


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and return a as a finite 2-D float64 array."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise InvalidShape(f"{name} must be 2-D, got shape {m.shape}")
    if m.size and not np.isfinite(m).all():
        raise NonFinite(f"{name} contains NaN or Inf entries")
    return m


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD M = U diag(singular_values) V^T with orthonormal U, V columns."""

    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.singular_values) @ self.V.T


def svd(M) -> SvdFactors:
    """Thin SVD; reconstruction error is <= 1e-9 * ||M||_F."""
    M = as_matrix(M, "M")
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return SvdFactors(U=U, singular_values=s, V=Vt.T)


def _check_full_column_rank(M: np.ndarray, name: str) -> None:
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0 or s[-1] <= RANK_TOL * max(M.shape) * s[0]:
        raise RankDeficient(f"{name} is numerically rank deficient (shape {M.shape})")


def least_squares(Z, Y) -> np.ndarray:
    """argmin_W ||Z W - Y||_F for full-column-rank Z, via QR (not normal equations)."""
    Z = as_matrix(Z, "Z")
    Y = as_matrix(Y, "Y")
    if Z.shape[0] != Y.shape[0]:
        raise InvalidShape(f"Z has {Z.shape[0]} rows, Y has {Y.shape[0]}")
    if Z.shape[0] < Z.shape[1]:
        raise RankDeficient(f"Z is wide ({Z.shape}), cannot have full column rank")
    _check_full_column_rank(Z, "Z")
    Q, R = np.linalg.qr(Z)
    return np.linalg.solve(R, Q.T @ Y)


def column_projector(A) -> np.ndarray:
    """Orthogonal projector onto the column span of A (rank-revealing)."""
    A = as_matrix(A, "A")
    n = A.shape[0]
    if A.size == 0 or not A.any():
        return np.zeros((n, n))
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    k = int(np.sum(s > RANK_TOL * max(A.shape) * s[0]))
    Uk = U[:, :k]
    return Uk @ Uk.T


def sym_eig_min(S) -> float:
    """Smallest eigenvalue of a symmetric matrix (symmetrized before solving)."""
    S = as_matrix(S, "S")
    if S.shape[0] != S.shape[1]:
        raise NotSymmetric(f"S is not square: {S.shape}")
    nrm = np.linalg.norm(S)
    if np.linalg.norm(S - S.T) > 1e-8 * max(nrm, 1e-300):
        raise NotSymmetric("||S - S^T||_F exceeds 1e-8 * ||S||_F")
    S = 0.5 * (S + S.T)
    return float(np.linalg.eigvalsh(S)[0])


def orthonormalize(M) -> np.ndarray:
    """Q with Q^T Q = I and the same column span as full-column-rank M."""
    M = as_matrix(M, "M")
    _check_full_column_rank(M, "M")
    Q, _ = np.linalg.qr(M)
    return Q
