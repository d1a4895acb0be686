"""Forward-Euler integrators for the GD, FA, and FA* flows.

The integrator is deliberately plain explicit Euler with a fixed step:
adaptive stepping would mask the non-monotone residual behaviour the
library exists to exhibit. Flow-level conservation laws (optimal-W
residual, constant Z^T Z for FA*) hold exactly only in continuous time;
discretized, they are O(eta) statements.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import diagnostics
from .errors import (FaLabError, InvalidShape, NonFinite, NotIsotropic,
                     NotPositiveDefinite)
from .numerics import as_matrix, least_squares
from .problem import FeedbackMatrix, TargetMatrix
from .state import FactorState

RULES = ("GD", "FA", "FA_STAR")


@dataclass(frozen=True)
class TrainerConfig:
    rule: str
    eta: float
    max_steps: int
    eta_w: float | None = None  # FA only; defaults to eta
    record_stride: int = 1
    stop_residual: float = 0.0  # 0 disables early stopping
    seed: int = 0

    def __post_init__(self):
        if self.rule not in RULES:
            raise InvalidShape(f"rule must be one of {RULES}, got {self.rule!r}")
        if self.eta <= 0:
            raise InvalidShape("eta must be positive")
        if self.record_stride < 1:
            raise InvalidShape("record_stride must be >= 1")
        if self.max_steps < 0 or self.stop_residual < 0:
            raise InvalidShape("max_steps and stop_residual must be nonnegative")


@dataclass(frozen=True)
class TrajectoryRecord:
    step: int
    t: float
    error: float          # ||Z W - Y||_F^2
    residual_sq: float    # ||(Y - Yhat) C^T||_F^2 for FA/FA*, ||grad||_F^2 for GD
    align_loss: float | None = None
    min_eig_A: float | None = None
    trace_potential: float | None = None


class StepFailure(FaLabError):
    """A step raised; carries the step index and the partial trajectory."""

    def __init__(self, step: int, cause: Exception, records=None):
        super().__init__(f"step {step}: {cause}")
        self.step = step
        self.cause = cause
        self.records = records or []


def _check_finite(Z: np.ndarray, W: np.ndarray) -> None:
    if not (np.isfinite(Z).all() and np.isfinite(W).all()):
        raise NonFinite("update overflowed; reduce eta")


def gd_step(state: FactorState, Y, eta: float) -> FactorState:
    """Simultaneous (Jacobi) Euler step along the negative gradient."""
    Y = as_matrix(Y, "Y")
    E = Y - state.Yhat
    if not E.any():
        return state
    with np.errstate(over="ignore", invalid="ignore"):
        Z = state.Z + eta * (E @ state.W.T)
        W = state.W + eta * (state.Z.T @ E)
    _check_finite(Z, W)
    return FactorState(Z=Z, W=W)


def fa_step(state: FactorState, Y, C, eta_z: float, eta_w: float | None = None) -> FactorState:
    """FA Euler step: Z follows the feedback direction, W the gradient."""
    Y = as_matrix(Y, "Y")
    C = as_matrix(C, "C")
    if eta_w is None:
        eta_w = eta_z
    E = Y - state.Yhat
    if not E.any():
        return state
    with np.errstate(over="ignore", invalid="ignore"):
        Z = state.Z + eta_z * (E @ C.T)
        W = state.W + eta_w * (state.Z.T @ E)
    _check_finite(Z, W)
    return FactorState(Z=Z, W=W)


def fa_star_step(state: FactorState, Y, C, eta: float) -> FactorState:
    """FA* Euler step: feedback move on Z, then W reset to its optimum."""
    Y = as_matrix(Y, "Y")
    C = as_matrix(C, "C")
    E = Y - state.Yhat
    if not E.any():
        return state
    with np.errstate(over="ignore", invalid="ignore"):
        Z = state.Z + eta * (E @ C.T)
    _check_finite(Z, Z)
    W = least_squares(Z, Y)  # raises RankDeficient if Z lost rank
    _check_finite(Z, W)
    return FactorState(Z=Z, W=W)


def _gd_residual_sq(state: FactorState, E: np.ndarray) -> float:
    with np.errstate(over="ignore", invalid="ignore"):
        gz = E @ state.W.T
        gw = state.Z.T @ E
        return float(np.linalg.norm(gz) ** 2 + np.linalg.norm(gw) ** 2)


def run(problem: TargetMatrix, init: FactorState, C: FeedbackMatrix | None,
        config: TrainerConfig, on_record=None) -> tuple[list[TrajectoryRecord], FactorState]:
    """Iterate the configured rule, recording diagnostics every record_stride
    steps plus the final step. Stops at max_steps or when residual_sq drops
    to stop_residual. Step errors propagate as StepFailure with the index.
    on_record(step, state), if given, fires at every recorded step.
    """
    Y = problem.Y if isinstance(problem, TargetMatrix) else as_matrix(problem, "Y")
    if config.rule != "GD" and C is None:
        raise InvalidShape(f"rule {config.rule} requires a feedback matrix")
    Cmat = C.C if isinstance(C, FeedbackMatrix) else (as_matrix(C, "C") if C is not None else None)
    ZtZ0 = init.Z.T @ init.Z

    records: list[TrajectoryRecord] = []
    state = init

    def record(step: int) -> float:
        E = Y - state.Yhat
        error = float(np.linalg.norm(E) ** 2)
        if config.rule == "GD":
            residual_sq = _gd_residual_sq(state, E)
            rec = TrajectoryRecord(step=step, t=step * config.eta, error=error,
                                   residual_sq=residual_sq)
        else:
            try:
                snap = diagnostics.snapshot(state, Y, Cmat, ZtZ0)
                ell: float | None = snap.ell
                min_eig = snap.min_eig_A
                residual_sq = float(np.linalg.norm(snap.R) ** 2)
            except NotPositiveDefinite:
                # Singular initial Gram matrix: the weighted loss is undefined,
                # fall back to the unweighted alignment matrix for min_eig_A.
                snap = diagnostics.snapshot(state, Y, Cmat, np.eye(init.Z.shape[1]))
                ell = None
                min_eig = snap.min_eig_A
                residual_sq = float(np.linalg.norm(snap.R) ** 2)
            tv = diagnostics.trace_potential(state, Y, Cmat) if config.rule == "FA" else None
            rec = TrajectoryRecord(step=step, t=step * config.eta, error=error,
                                   residual_sq=residual_sq, align_loss=ell,
                                   min_eig_A=min_eig, trace_potential=tv)
        records.append(rec)
        if on_record is not None:
            on_record(step, state)
        return residual_sq

    def residual_only() -> float:
        E = Y - state.Yhat
        if config.rule == "GD":
            return _gd_residual_sq(state, E)
        with np.errstate(over="ignore", invalid="ignore"):
            return float(np.linalg.norm(E @ Cmat.T) ** 2)

    res = record(0)
    if config.max_steps == 0 or (config.stop_residual > 0 and res <= config.stop_residual):
        return records, state

    step = 0
    while step < config.max_steps:
        try:
            if config.rule == "GD":
                state = gd_step(state, Y, config.eta)
            elif config.rule == "FA":
                state = fa_step(state, Y, Cmat, config.eta, config.eta_w)
            else:
                state = fa_star_step(state, Y, Cmat, config.eta)
        except FaLabError as exc:
            raise StepFailure(step + 1, exc, records) from exc
        step += 1
        on_stride = step % config.record_stride == 0
        if on_stride:
            res = record(step)
        else:
            res = residual_only()
        if config.stop_residual > 0 and res <= config.stop_residual:
            if not on_stride:
                record(step)
            break
    else:
        if step % config.record_stride != 0:
            record(step)
    return records, state


def nn_equivalence_check(X, Y, init: FactorState, C, rule: str, eta: float,
                         steps: int) -> float:
    """Run the two-layer linear-network update (written with O = X Y) and the
    factorization update side by side; return the max state deviation."""
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    if np.linalg.norm(X.T @ X - np.eye(X.shape[1])) > 1e-8:
        raise NotIsotropic("X^T X deviates from the identity")
    if rule not in RULES:
        raise InvalidShape(f"unknown rule {rule!r}")
    Cmat = C.C if isinstance(C, FeedbackMatrix) else as_matrix(C, "C")
    O = X @ Y

    Zn, Wn = init.Z.copy(), init.W.copy()
    fac = init
    max_dev = 0.0
    for _ in range(steps):
        # network side, written literally with X and O
        En = X.T @ (O - X @ (Zn @ Wn))
        if rule == "GD":
            Zn, Wn = Zn + eta * (En @ Wn.T), Wn + eta * (Zn.T @ En)
        elif rule == "FA":
            Zn, Wn = Zn + eta * (En @ Cmat.T), Wn + eta * (Zn.T @ En)
        else:
            Zn = Zn + eta * (En @ Cmat.T)
            Wn = least_squares(X @ Zn, O)
        # factorization side
        if rule == "GD":
            fac = gd_step(fac, Y, eta)
        elif rule == "FA":
            fac = fa_step(fac, Y, Cmat, eta)
        else:
            fac = fa_star_step(fac, Y, Cmat, eta)
        dev = np.sqrt(np.linalg.norm(Zn - fac.Z) ** 2 + np.linalg.norm(Wn - fac.W) ** 2)
        max_dev = max(max_dev, float(dev))
    return max_dev
