"""Closed-form oracles for the stationary points of feedback alignment.

These functions predict where FA/FA* land without running any dynamics:
the converged solution is the projection of Y onto the column span of
Y C^T, its error has an explicit spectral formula, and the convergence
time of FA* admits an a-priori bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidShape, RankDeficient, ZeroFeedbackImage
from .numerics import RANK_TOL, as_matrix, column_projector
from .problem import (FeedbackMatrix, TargetMatrix, make_feedback, make_target,
                      rep_spectrum, rng_for, separation_spectrum)


@dataclass(frozen=True)
class StationaryReport:
    predicted_yhat: np.ndarray
    predicted_error: float
    optimal_error: float
    achieved_error: float | None = None
    overlap: float | None = None  # r = 1 only


def predicted_solution(Y: TargetMatrix, C: FeedbackMatrix) -> np.ndarray:
    """Yhat at a random-C stationary point: the projection of Y onto span(Y C^T)."""
    Cmat = C.C if isinstance(C, FeedbackMatrix) else as_matrix(C, "C")
    A = Y.Y @ Cmat.T
    if not A.any():
        raise ZeroFeedbackImage("Y C^T is zero; no stationary prediction")
    return column_projector(A) @ Y.Y


def projection_error(Y: TargetMatrix, A) -> float:
    """sum_i sigma_i^2 (1 - ||P_A u_i||^2), the error of projecting Y onto span(A)."""
    A = as_matrix(A, "A")
    P = column_projector(A)
    PU = P @ Y.svd.U
    captured = np.einsum("ij,ij->j", PU, PU)
    s2 = Y.svd.singular_values**2
    return float(np.sum(s2 * (1.0 - captured)))


def optimal_rank_r_error(Y: TargetMatrix, r: int) -> float:
    """Best possible rank-r error: the sum of squared tail singular values."""
    if r < 0:
        raise InvalidShape("r must be nonnegative")
    s = Y.svd.singular_values
    return float(np.sum(s[r:] ** 2))


def report(Y: TargetMatrix, C: FeedbackMatrix, r: int,
           achieved_error: float | None = None) -> StationaryReport:
    yhat = predicted_solution(Y, C)
    return StationaryReport(
        predicted_yhat=yhat,
        predicted_error=projection_error(Y, Y.Y @ C.C.T),
        optimal_error=optimal_rank_r_error(Y, r),
        achieved_error=achieved_error,
    )


def separation_trial(n: int, r: int, seed: int) -> tuple[float, float]:
    """One draw of the two-level-spectrum experiment.

    Returns (fa_error, gd_error): the closed-form stationary error of
    feedback alignment and the exact optimum that gradient flow attains.
    """
    spectrum = separation_spectrum(n, r)
    Y = make_target(n, n, spectrum, seed)
    C = make_feedback(r, n, seed)
    fa_error = projection_error(Y, Y.Y @ C.C.T)
    gd_error = optimal_rank_r_error(Y, r)
    return fa_error, gd_error


def separation_trial_coords(n: int, r: int, seed: int) -> tuple[float, float]:
    """Same statistic as separation_trial, computed in the singular basis.

    Skips forming the n x n target, so proof-constant-scale n is feasible.
    The C coordinates V^T C^T are drawn directly (they are i.i.d. N(0,1)
    for orthonormal V and Gaussian C).
    """
    spectrum = separation_spectrum(n, r)
    G = rng_for(seed, "sep-coords-C").standard_normal((n, r))
    Q, _ = np.linalg.qr(spectrum.values[:, None] * G)
    captured = np.einsum("ij,ij->i", Q, Q)
    s2 = spectrum.values**2
    fa_error = float(np.sum(s2 * (1.0 - captured)))
    gd_error = float(np.sum(s2[r:]))
    return fa_error, gd_error


def representation_overlap(n: int, eps: float, seed: int) -> tuple[float, float]:
    """Overlap and error ratio between the rank-1 FA and GD solutions.

    Works in the singular basis of Y (spectrum [1, eps, ..., eps]): with
    orthonormal U, V and Gaussian C, the coordinates of Y C^T in the left
    singular basis are sigma_i * g_i with g ~ N(0, I), and the GD direction
    is the first basis vector. No n x n matrices are formed, so n = 10^4
    runs in milliseconds.
    """
    spectrum = rep_spectrum(n, eps)
    g = rng_for(seed, "overlap-C").standard_normal(n)
    a = spectrum.values * g  # Y C^T in u-coordinates
    norm_a = np.linalg.norm(a)
    if norm_a == 0.0:
        raise ZeroFeedbackImage("Y C^T is zero; no stationary prediction")
    a_hat = a / norm_a
    overlap = float(abs(a_hat[0]))
    s2 = spectrum.values**2
    fa_error = float(np.sum(s2 * (1.0 - a_hat**2)))
    gd_error = float(np.sum(s2[1:]))
    return overlap, fa_error / gd_error


def convergence_time_bound(Y: TargetMatrix, C: FeedbackMatrix, Z0, eps: float) -> float:
    """Flow time by which FA* is guaranteed to have visited residual_sq <= eps."""
    if eps <= 0:
        raise InvalidShape("eps must be positive")
    Z0 = as_matrix(Z0, "Z0")
    n, r = Z0.shape
    m = Y.Y.shape[1]
    sz = np.linalg.svd(Z0, compute_uv=False)
    if sz[0] == 0.0 or sz[-1] <= RANK_TOL * max(Z0.shape) * sz[0]:
        raise RankDeficient("Z0 is numerically rank deficient")
    s1_y = float(Y.svd.singular_values[0])
    s1_c = float(np.linalg.svd(C.C if isinstance(C, FeedbackMatrix) else C,
                               compute_uv=False)[0])
    return (24.0 / eps) * s1_y * s1_c * sz[0] ** 6 * np.sqrt(r * min(m, n)) / sz[-1] ** 5


def stationarity_check(state, Y: TargetMatrix, C: FeedbackMatrix, tol: float) -> bool:
    """True iff both stationary-point equations hold at relative tolerance tol."""
    Ymat = Y.Y if isinstance(Y, TargetMatrix) else as_matrix(Y, "Y")
    Cmat = C.C if isinstance(C, FeedbackMatrix) else as_matrix(C, "C")
    E = Ymat - state.Yhat
    y_norm = np.linalg.norm(Ymat)
    ok_feedback = np.linalg.norm(E @ Cmat.T) <= tol * y_norm * np.linalg.norm(Cmat)
    ok_gradient = np.linalg.norm(state.Z.T @ E) <= tol * np.linalg.norm(state.Z) * y_norm
    return bool(ok_feedback and ok_gradient)
