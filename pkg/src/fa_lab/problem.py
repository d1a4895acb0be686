"""Reproducible construction of targets, initializations, and feedback matrices.

Every generator is a pure function of (shape parameters, seed). Sub-draws
derive their stream from the user seed and a string label via SeedSequence,
so results are stable across platforms and numpy versions using the same
bit generator (PCG64).
"""

from __future__ import annotations

import re
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import InvalidShape, RankDeficient
from .numerics import RANK_TOL, SvdFactors, as_matrix, least_squares, orthonormalize
from .state import FactorState


def rng_for(seed: int, label: str) -> np.random.Generator:
    """Independent stream for (seed, label); deterministic across platforms."""
    key = zlib.crc32(label.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(key,)))


@dataclass(frozen=True)
class SpectrumSpec:
    """Nonincreasing, nonnegative singular values."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).ravel()
        if v.size == 0:
            raise InvalidShape("spectrum is empty")
        if (v < 0).any():
            raise InvalidShape("spectrum has negative values")
        if (np.diff(v) > 0).any():
            raise InvalidShape("spectrum is not nonincreasing")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return int(self.values.size)


def flat_spectrum(k: int, scale: float | None = None) -> SpectrumSpec:
    """k equal singular values; default scale 1/sqrt(k) gives ||Y||_F = 1."""
    if k < 1:
        raise InvalidShape("flat spectrum needs k >= 1")
    if scale is None:
        scale = 1.0 / np.sqrt(k)
    return SpectrumSpec(np.full(k, float(scale)))


def separation_spectrum(n: int, r: int) -> SpectrumSpec:
    """Two-level spectrum: 1/sqrt(2r) for the first r values, 1/sqrt(2(n-r)) after."""
    if not 1 <= r < n:
        raise InvalidShape(f"need 1 <= r < n, got n={n}, r={r}")
    v = np.empty(n)
    v[:r] = 1.0 / np.sqrt(2.0 * r)
    v[r:] = 1.0 / np.sqrt(2.0 * (n - r))
    return SpectrumSpec(v)


def rep_spectrum(n: int, eps: float) -> SpectrumSpec:
    """[1, eps, eps, ...] of length n, with 0 < eps < 1."""
    if n < 1:
        raise InvalidShape("rep spectrum needs n >= 1")
    if not 0.0 < eps < 1.0:
        raise InvalidShape(f"need 0 < eps < 1, got {eps}")
    v = np.full(n, float(eps))
    v[0] = 1.0
    return SpectrumSpec(v)


_SPECTRUM_FAMILY = re.compile(r"^\s*(flat|separation|rep)\s*\(([^)]*)\)\s*$")


def parse_spectrum(text) -> SpectrumSpec:
    """Parse a config spectrum: explicit value list or a named family.

    Accepted forms: a list of numbers, "1,0.5,0.5", "flat(50)",
    "flat(50, 0.2)", "separation(500, 50)", "rep(100, 0.5)".
    """
    if isinstance(text, SpectrumSpec):
        return text
    if isinstance(text, (list, tuple, np.ndarray)):
        return SpectrumSpec(np.asarray(text, dtype=np.float64))
    m = _SPECTRUM_FAMILY.match(str(text))
    if m:
        name = m.group(1)
        args = [a.strip() for a in m.group(2).split(",") if a.strip()]
        if name == "flat":
            k = int(args[0])
            scale = float(args[1]) if len(args) > 1 else None
            return flat_spectrum(k, scale)
        if name == "separation":
            return separation_spectrum(int(args[0]), int(args[1]))
        return rep_spectrum(int(args[0]), float(args[1]))
    try:
        values = [float(tok) for tok in str(text).split(",") if tok.strip()]
    except ValueError as exc:
        raise InvalidShape(f"cannot parse spectrum {text!r}") from exc
    return SpectrumSpec(np.asarray(values))


@dataclass(frozen=True)
class TargetMatrix:
    """Target Y together with its singular-value decomposition and rank."""

    Y: np.ndarray
    svd: SvdFactors
    rank: int


@dataclass(frozen=True)
class FeedbackMatrix:
    """Fixed random backward matrix C (r x m)."""

    C: np.ndarray
    seed: int


def make_target(n: int, m: int, spectrum, seed: int) -> TargetMatrix:
    """Y = U diag(sigma) V^T with U, V orthonormalized Gaussian draws."""
    spectrum = parse_spectrum(spectrum)
    k = len(spectrum)
    if n < 1 or m < 1 or k > min(n, m):
        raise InvalidShape(f"spectrum length {k} exceeds min(n, m) = {min(n, m)}")
    U = orthonormalize(rng_for(seed, "target-U").standard_normal((n, k)))
    V = orthonormalize(rng_for(seed, "target-V").standard_normal((m, k)))
    s = spectrum.values
    Y = (U * s) @ V.T
    top = s[0]
    rank = int(np.sum(s > RANK_TOL * top)) if top > 0 else 0
    return TargetMatrix(Y=Y, svd=SvdFactors(U=U, singular_values=s, V=V), rank=rank)


def target_from_matrix(Y) -> TargetMatrix:
    """Wrap an explicit matrix, computing its SVD and numerical rank."""
    from .numerics import svd as _svd

    Y = as_matrix(Y, "Y")
    f = _svd(Y)
    s = f.singular_values
    rank = int(np.sum(s > RANK_TOL * s[0])) if s.size and s[0] > 0 else 0
    return TargetMatrix(Y=Y, svd=f, rank=rank)


def gaussian_init(n: int, r: int, m: int, std: float, seed: int) -> FactorState:
    """Z (n x r) and W (r x m) with i.i.d. N(0, std^2) entries."""
    if std < 0:
        raise InvalidShape("std must be nonnegative")
    Z = std * rng_for(seed, "init-Z").standard_normal((n, r))
    W = std * rng_for(seed, "init-W").standard_normal((r, m))
    return FactorState(Z=Z, W=W)


def fa_star_init(n: int, r: int, Y: TargetMatrix, seed: int,
                 z_mode: str = "orthonormal", std: float = 0.001) -> FactorState:
    """Z per z_mode ("orthonormal" or "gaussian"), W set to its least-squares optimum."""
    if z_mode not in ("orthonormal", "gaussian"):
        raise InvalidShape(f"unknown z_mode {z_mode!r}")
    last_err: Exception | None = None
    for attempt in range(8):
        rng = rng_for(seed, f"fa-star-Z-{attempt}")
        Z = rng.standard_normal((n, r))
        try:
            if z_mode == "orthonormal":
                Z = orthonormalize(Z)
            else:
                Z = std * Z
            W = least_squares(Z, Y.Y)
            return FactorState(Z=Z, W=W)
        except RankDeficient as exc:
            last_err = exc
    raise RankDeficient(f"no full-rank Z after 8 draws: {last_err}")


def make_feedback(r: int, m: int, seed: int) -> FeedbackMatrix:
    """Standard-Gaussian feedback matrix C (r x m)."""
    if r < 1 or m < 1:
        raise InvalidShape(f"invalid feedback shape ({r}, {m})")
    C = rng_for(seed, "feedback-C").standard_normal((r, m))
    return FeedbackMatrix(C=C, seed=seed)


def adversarial_1d_init(y, c) -> FactorState:
    """Z(0) = -y c^T, w(0) = 0: the m = 1 init under which FA alignment decreases."""
    y = np.asarray(y, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if (y.ndim == 2 and y.shape[1] != 1) or (c.ndim == 2 and c.shape[1] != 1):
        raise InvalidShape("y and c must be column vectors (m = 1)")
    y = y.reshape(-1, 1)
    c = c.reshape(-1, 1)
    Z = -y @ c.T
    w = np.zeros((c.shape[0], 1))
    return FactorState(Z=Z, W=w)
