"""Low-rank penalties on the trajectory matrix and their gradients.

Three penalties are supported:

* nuclear norm: the sum of singular values, a convex rank surrogate;
* empirical dimension: the ratio ||s||_e / ||s||_(e/(1-e)) of pseudo-norms of
  the singular spectrum, a scale- and rotation-invariant dimension estimator;
* explicit factorization: the tail sum of singular values beyond a chosen
  rank d, i.e. the nuclear norm of the residual after the best rank-d
  approximation.

Gradients with respect to the current-frame positions use the spectral
derivative ds_i/dM = u_i v_i^T chained through column centering; a central
finite-difference fallback covers spectral crossings where that derivative
is not well defined.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RankParamTooLarge
from .trajectory import assemble_M
from .errors import InsufficientHistory, TooFewFeatures

KINDS = ("nuclear_norm", "empirical_dimension", "explicit_factorization")

# Singular values below ZERO_SCALE * max(1, s_max) are treated as zero.
ZERO_SCALE = 1e-12
# Minimum relative gap s_d - s_{d+1} for the analytic factorization gradient.
GAP_SCALE = 1e-8

FD_STEP = 1e-4


@dataclass(frozen=True)
class PenaltyKind:
    """Penalty selection plus its parameters; rank is only valid for factorization."""

    kind: str = "empirical_dimension"
    epsilon: float = 0.6
    rank: int | None = None
    centered: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.rank is not None:
            if self.kind != "explicit_factorization":
                raise ValueError("rank applies only to the explicit factorization penalty")
            if self.rank < 1:
                raise ValueError("rank must be >= 1")

    @property
    def effective_rank(self) -> int:
        """The factorization rank d: explicit, or 3 centered / 4 uncentered."""
        if self.rank is not None:
            return self.rank
        return 3 if self.centered else 4


@dataclass(frozen=True)
class SingularSpectrum:
    values: np.ndarray  # descending
    left: np.ndarray    # U, shape (m, r)
    right: np.ndarray   # V, shape (n, r)


@dataclass
class GradientPathStats:
    """Counts of analytic vs finite-difference penalty-gradient evaluations."""

    analytic: int = 0
    fallback: int = 0

    @property
    def total(self) -> int:
        return self.analytic + self.fallback

    @property
    def fallback_fraction(self) -> float:
        return self.fallback / self.total if self.total else 0.0

    def reset(self):
        self.analytic = 0
        self.fallback = 0


GRADIENT_STATS = GradientPathStats()


def reset_gradient_stats():
    GRADIENT_STATS.reset()


def singular_spectrum(M: np.ndarray) -> SingularSpectrum:
    u, s, vt = np.linalg.svd(np.asarray(M, dtype=np.float64), full_matrices=False)
    return SingularSpectrum(values=s, left=u, right=vt.T)


def _zero_floor(s: np.ndarray) -> float:
    return ZERO_SCALE * max(1.0, float(s[0])) if s.size else ZERO_SCALE


def nuclear_norm(M: np.ndarray) -> float:
    """Sum of singular values."""
    return float(np.linalg.svd(np.asarray(M, dtype=np.float64), compute_uv=False).sum())


def empirical_dimension(M: np.ndarray, epsilon: float = 0.6) -> float:
    """||s||_e / ||s||_(e/(1-e)) over the singular spectrum s; 0 for the zero matrix.

    Equal singular values give exactly their count; the value never exceeds the
    exact rank for noise-free data.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    s = np.linalg.svd(np.asarray(M, dtype=np.float64), compute_uv=False)
    return _empirical_dimension_sigma(s, epsilon)


def _empirical_dimension_sigma(s: np.ndarray, epsilon: float) -> float:
    floor = _zero_floor(s)
    s = s[s > floor]
    if s.size == 0:
        return 0.0
    q = epsilon / (1.0 - epsilon)
    a = float(np.power(s, epsilon).sum()) ** (1.0 / epsilon)
    b = float(np.power(s, q).sum()) ** (1.0 / q)
    return a / b


def factorization_penalty(M: np.ndarray, d: int) -> float:
    """Tail singular-value sum beyond rank d (nuclear norm of the rank-d residual)."""
    M = np.asarray(M, dtype=np.float64)
    if d >= min(M.shape):
        raise RankParamTooLarge(f"rank {d} must be below min(M.shape) = {min(M.shape)}")
    s = np.linalg.svd(M, compute_uv=False)
    return float(s[d:].sum())


def penalty_of_matrix(M: np.ndarray, cfg: PenaltyKind) -> float:
    if cfg.kind == "nuclear_norm":
        return nuclear_norm(M)
    if cfg.kind == "empirical_dimension":
        return empirical_dimension(M, cfg.epsilon)
    return factorization_penalty(M, cfg.effective_rank)


def penalty_value(tracks, x: np.ndarray, cfg: PenaltyKind, scale: float = 1.0,
                  min_window: int = 1) -> tuple[float, bool]:
    """Penalty at state x, or (0, False) when the window matrix is not yet defined.

    min_window > 1 keeps the penalty off until the sliding window holds that
    many past frames; degenerate two-or-three-row windows otherwise pin the
    optimizer to whatever rank-deficient configuration initialization lands on.
    """
    try:
        tm = assemble_M(tracks, x, cfg.centered, scale, min_window)
    except (InsufficientHistory, TooFewFeatures):
        return 0.0, False
    if tm.window < min_window:
        return 0.0, False
    return penalty_of_matrix(tm.matrix, cfg), True


def _matrix_gradient(M: np.ndarray, cfg: PenaltyKind) -> np.ndarray | None:
    """dP/dM via the spectral derivative, or None where a crossing demands fallback.

    Singular values below the zero floor are dropped, which picks the zero
    subgradient at the non-smooth origin; the factorization penalty also needs
    a spectral gap at the rank cut whenever the value just past the cut is
    significant.
    """
    spec = singular_spectrum(M)
    s, u, v = spec.values, spec.left, spec.right
    floor = _zero_floor(s)
    if s.size == 0 or s[0] <= floor:
        return np.zeros_like(M)

    if cfg.kind == "nuclear_norm":
        keep = s > floor
        return u[:, keep] @ v[:, keep].T

    if cfg.kind == "empirical_dimension":
        keep = s > floor
        sk = s[keep]
        eps = cfg.epsilon
        q = eps / (1.0 - eps)
        sa = float(np.power(sk, eps).sum())
        sb = float(np.power(sk, q).sum())
        a = sa ** (1.0 / eps)
        b = sb ** (1.0 / q)
        da = sa ** (1.0 / eps - 1.0) * np.power(sk, eps - 1.0)
        db = sb ** (1.0 / q - 1.0) * np.power(sk, q - 1.0)
        dp = (da * b - a * db) / (b * b)
        return (u[:, keep] * dp) @ v[:, keep].T

    d = cfg.effective_rank
    if d >= min(M.shape):
        raise RankParamTooLarge(f"rank {d} must be below min(M.shape) = {min(M.shape)}")
    if s[d] > floor and (s[d - 1] - s[d]) <= GAP_SCALE * s[0]:
        return None
    keep = s > floor
    keep[:d] = False
    return u[:, keep] @ v[:, keep].T


def penalty_gradient(tracks, x: np.ndarray, cfg: PenaltyKind, scale: float = 1.0,
                     min_window: int = 1) -> np.ndarray:
    """dP/dx as a 2F vector; zero for features absent from the window matrix.

    Only the first two rows of M depend on x, so the spectral gradient is read
    off those rows after applying the column-centering projector. Falls back to
    central finite differences at spectral crossings (counted in GRADIENT_STATS).
    """
    out = np.zeros_like(x, dtype=np.float64)
    try:
        tm = assemble_M(tracks, x, cfg.centered, scale, min_window)
    except (InsufficientHistory, TooFewFeatures):
        return out
    if tm.window < min_window:
        return out

    g = _matrix_gradient(tm.matrix, cfg)
    if g is not None:
        GRADIENT_STATS.analytic += 1
        if cfg.centered:
            g = g - g.mean(axis=1, keepdims=True)
        for c, i in enumerate(tm.track_indices):
            out[2 * i] = g[0, c]
            out[2 * i + 1] = g[1, c]
        return out

    GRADIENT_STATS.fallback += 1
    uncentered = assemble_M(tracks, x, centered=False, scale=scale,
                            min_window=min_window)
    base = uncentered.matrix

    def value_with_rows(r0: np.ndarray, r1: np.ndarray) -> float:
        m = base.copy()
        m[0] = r0
        m[1] = r1
        if cfg.centered:
            m = m - m.mean(axis=1, keepdims=True)
        return penalty_of_matrix(m, cfg)

    h = FD_STEP
    for c, i in enumerate(tm.track_indices):
        for k in range(2):
            rows = [base[0].copy(), base[1].copy()]
            rows[k][c] += h
            up = value_with_rows(rows[0], rows[1])
            rows[k][c] -= 2 * h
            dn = value_with_rows(rows[0], rows[1])
            out[2 * i + k] = (up - dn) / (2 * h)
    return out
