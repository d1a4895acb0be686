"""Trainable factor pair (Z, W) with cached product."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidShape
from .numerics import as_matrix


@dataclass(frozen=True)
class FactorState:
    """Immutable (Z, W) pair; Yhat = Z W is computed once at construction."""

    Z: np.ndarray
    W: np.ndarray
    Yhat: np.ndarray = field(init=False)

    def __post_init__(self):
        Z = as_matrix(self.Z, "Z")
        W = as_matrix(self.W, "W")
        if Z.shape[1] != W.shape[0]:
            raise InvalidShape(f"Z is {Z.shape}, W is {W.shape}: inner dims differ")
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "W", W)
        with np.errstate(over="ignore", invalid="ignore"):
            object.__setattr__(self, "Yhat", Z @ W)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.Z.shape[0], self.Z.shape[1], self.W.shape[1]
