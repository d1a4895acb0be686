"""Alignment diagnostics: residual R, alignment matrix A, alignment loss,
per-row Rayleigh quotients, residual splits, and the FA trace potential.

All derivative-flavored quantities here are discrete differences; tests
treat them as O(eta) approximations of the continuous-time identities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotPositiveDefinite
from .numerics import as_matrix, sym_eig_min
from .state import FactorState

# Eigenvalues of the Gram matrix below this fraction of the largest one
# make G^{-1/2} meaningless; the caller gets an error instead of noise.
_EIG_FLOOR = 1e-14


def _gram_inverse_pair(G: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(G^{-1}, G^{-1/2}) from an eigendecomposition with a relative floor."""
    G = 0.5 * (G + G.T)
    lam, V = np.linalg.eigh(G)
    if lam[-1] <= 0 or lam[0] <= _EIG_FLOOR * lam[-1]:
        raise NotPositiveDefinite(
            f"Gram matrix eigenvalues in [{lam[0]:.3e}, {lam[-1]:.3e}]")
    inv = (V / lam) @ V.T
    inv_half = (V / np.sqrt(lam)) @ V.T
    return inv, inv_half


@dataclass(frozen=True)
class AlignmentSnapshot:
    """Residual/alignment state at one instant.

    rayleigh_rows[i] = R_i^T A R_i / ||R_i||^2, NaN for zero rows.
    """

    R: np.ndarray
    A: np.ndarray
    ell: float
    min_eig_A: float
    rayleigh_rows: np.ndarray


def snapshot(state: FactorState, Y, C, ZtZ0) -> AlignmentSnapshot:
    """Compute R, the Gram-weighted alignment matrix, loss, and Rayleigh rows.

    ZtZ0 is the conserved initial Gram matrix Z(0)^T Z(0); passing the
    identity recovers the plain A = C W^T + W C^T and ell = ||R||_F^2.
    """
    Y = as_matrix(Y, "Y")
    C = as_matrix(C, "C")
    G = as_matrix(ZtZ0, "ZtZ0")
    g_inv, g_inv_half = _gram_inverse_pair(G)
    E = Y - state.Yhat
    R = E @ C.T
    M = g_inv @ (C @ state.W.T)
    A = M + M.T
    ell = float(np.linalg.norm(R @ g_inv_half) ** 2)
    min_eig = sym_eig_min(A)
    RA = R @ A
    quad = np.einsum("ij,ij->i", RA, R)
    norms2 = np.einsum("ij,ij->i", R, R)
    with np.errstate(invalid="ignore", divide="ignore"):
        rayleigh = np.where(norms2 > 0, quad / norms2, np.nan)
    return AlignmentSnapshot(R=R, A=A, ell=ell, min_eig_A=min_eig, rayleigh_rows=rayleigh)


def discrete_loss_derivative(snap: AlignmentSnapshot, snap_next: AlignmentSnapshot,
                             eta: float) -> float:
    """(ell' - ell) / eta, the Euler surrogate for d ell / dt = -Tr(R A R^T)."""
    return (snap_next.ell - snap.ell) / eta


def alignment_growth(snap: AlignmentSnapshot, snap_next: AlignmentSnapshot, x) -> float:
    """x^T (A' - A) x per unit step; ~ 2 ||R G^{-1} x||^2 for small eta (taking
    the caller's eta = 1 normalization into account is their job)."""
    x = np.asarray(x, dtype=np.float64).ravel()
    d = snap_next.A - snap.A
    return float(x @ d @ x)


def residual_split(snap: AlignmentSnapshot, k: float) -> tuple[float, float]:
    """(||R_{<=k}||_F^2, ||R_{>k}||_F^2): rows bucketed by Rayleigh quotient.

    Zero rows land in the <= bucket. The two values sum to ||R||_F^2 exactly.
    """
    norms2 = np.einsum("ij,ij->i", snap.R, snap.R)
    le = np.isnan(snap.rayleigh_rows) | (snap.rayleigh_rows <= k)
    norm_le = float(norms2[le].sum())
    norm_gt = float(norms2[~le].sum())
    return norm_le, norm_gt


def trace_potential(state: FactorState, Y, C) -> float:
    """Tr(V) with V = (C W^T W C^T - C Y^T Z - Z^T Y C^T) / 2.

    Along an FA flow, d Tr(V)/dt = -||(Y - Yhat) C^T||_F^2, so the recorded
    value is nonincreasing.
    """
    Y = as_matrix(Y, "Y")
    C = as_matrix(C, "C")
    WCt = state.W @ C.T
    return float(0.5 * np.linalg.norm(WCt) ** 2 - np.vdot(state.Z, Y @ C.T))


def fa_alignment_second_derivative(state: FactorState, Y, C) -> np.ndarray:
    """d^2 A / dt^2 of A = C W^T + W C^T along the FA flow.

    Equals 2 R^T R minus two C-sandwich terms and two Z-Gram terms; the
    Z-terms vanish when W is optimal, leaving ~ 2 R^T R when the residual
    image (Y - Yhat) C^T is also small.
    """
    Y = as_matrix(Y, "Y")
    C = as_matrix(C, "C")
    Z, W = state.Z, state.W
    E = Y - state.Yhat
    R = E @ C.T
    Q = Z.T @ E @ C.T
    G = Z.T @ Z
    out = 2.0 * (R.T @ R)
    CWt = C @ W.T
    out -= CWt @ Q.T + Q @ CWt.T
    out -= Q.T @ G + G @ Q
    return 0.5 * (out + out.T)
