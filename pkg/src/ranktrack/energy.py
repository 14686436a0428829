"""Template-fit energies, the rank-penalized total energy, and its gradient.

The per-feature fit term is the mean absolute difference between a feature's
template and the frame sampled around the candidate position. The joint
penalized energy drops the 1/(F n^2) normalization and instead multiplies the
raw fit sums by a weight alpha that also sets the relative strength of the
low-rank penalty: alpha = 1/(m n^2) rivals a single feature (weak mode),
alpha = 1/(m F n^2) rivals the whole cohort (strong mode).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import OutOfBounds
from .imaging import Frame, Template, sample_bilinear_many, support_in_bounds, \
    template_offsets, _sample_and_gradient_unchecked, _sample_unchecked
from .regularizers import PenaltyKind, penalty_value, penalty_gradient

MODES = ("weak", "strong", "none")

# Fractional parts closer than this to the integer lattice are nudged before
# analytic differentiation (the interpolant's gradient jumps across cells).
LATTICE_EPS = 1e-9
NUDGE = 1e-7
# Residuals at or below this magnitude take the zero subgradient of |.|, so a
# perfectly matched template stays exactly stationary despite the nudge.
SIGN_DEADBAND = 1e-7


def _signs(diffs: np.ndarray) -> np.ndarray:
    s = np.sign(diffs)
    s[np.abs(diffs) <= SIGN_DEADBAND] = 0.0
    return s


@dataclass(frozen=True)
class EnergyConfig:
    mode: str = "weak"
    m: float = 4.0
    template_size: int = 7
    penalty: PenaltyKind = field(default_factory=PenaltyKind)
    # Frames of history the sliding window must hold before the penalty turns on.
    penalty_min_window: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.m <= 0:
            raise ValueError("m must be positive")
        if self.template_size % 2 != 1:
            raise ValueError("template size must be odd")

    def alpha(self, feature_count: int) -> float:
        return alpha_for_mode(self.mode, self.m, feature_count, self.template_size)


def alpha_for_mode(mode: str, m: float, feature_count: int, n: int) -> float:
    """Fit-term weight: weak -> 1/(m n^2); strong -> 1/(m F n^2); none -> 1/(F n^2)."""
    if mode == "weak":
        return 1.0 / (m * n * n)
    if mode == "strong":
        return 1.0 / (m * feature_count * n * n)
    if mode == "none":
        return 1.0 / (feature_count * n * n)
    raise ValueError(f"unknown mode {mode!r}")


def single_feature_energy(template: Template, frame: Frame, x_f) -> float:
    """Mean absolute template-vs-frame difference around x_f (bilinear sampling)."""
    x_f = np.asarray(x_f, dtype=np.float64)
    n = template.size
    if not support_in_bounds(frame, x_f, n):
        raise OutOfBounds("template support around x_f leaves the frame")
    pts = x_f[None, :] + template_offsets(n)
    vals = sample_bilinear_many(frame, pts)
    return float(np.abs(template.data.ravel() - vals).mean())


def _fit_sum_raw(template: Template, frame: Frame, x_f: np.ndarray) -> float:
    pts = x_f[None, :] + template_offsets(template.size)
    vals = sample_bilinear_many(frame, pts)
    return float(np.abs(template.data.ravel() - vals).sum())


def total_fit_energy(tracks, frame: Frame, x: np.ndarray) -> float:
    """Eq-style joint fit energy: (1/(F n^2)) sum of all per-feature fit sums."""
    active = [(i, t) for i, t in enumerate(tracks) if t.active]
    if not active:
        raise ValueError("no active features")
    bad = [t.id for i, t in active
           if not support_in_bounds(frame, x[2 * i:2 * i + 2], t.template.size)]
    if bad:
        raise OutOfBounds(f"template support out of bounds for features {bad}")
    total = 0.0
    n = active[0][1].template.size
    for i, t in active:
        total += _fit_sum_raw(t.template, frame, x[2 * i:2 * i + 2])
    return total / (len(active) * n * n)


def regularized_energy(tracks, frame: Frame, x: np.ndarray, cfg: EnergyConfig) -> float:
    """alpha * (sum of raw fit sums) + penalty; the penalty is dropped in mode none."""
    active = [(i, t) for i, t in enumerate(tracks) if t.active]
    if not active:
        raise ValueError("no active features")
    bad = [t.id for i, t in active
           if not support_in_bounds(frame, x[2 * i:2 * i + 2], t.template.size)]
    if bad:
        raise OutOfBounds(f"template support out of bounds for features {bad}")
    alpha = cfg.alpha(len(active))
    total = 0.0
    for i, t in active:
        total += _fit_sum_raw(t.template, frame, x[2 * i:2 * i + 2])
    e = alpha * total
    if cfg.mode != "none":
        p, _ = penalty_value(tracks, x, cfg.penalty,
                             min_window=cfg.penalty_min_window)
        e += p
    return e


def nudge_off_lattice(x: np.ndarray) -> np.ndarray:
    """Shift coordinates sitting exactly on the integer lattice by a tiny amount."""
    x = np.array(x, dtype=np.float64)
    frac = x - np.floor(x)
    on = (frac < LATTICE_EPS) | (frac > 1.0 - LATTICE_EPS)
    x[on] += NUDGE
    return x


def _fit_gradient_pair(template: Template, frame: Frame, x_f: np.ndarray) -> np.ndarray:
    """d/dx_f of the raw fit sum: sum of sign(T - I) * (-grad I) over the support."""
    pts = nudge_off_lattice(x_f)[None, :] + template_offsets(template.size)
    vals, gx, gy = _sample_and_gradient_unchecked(frame.data, pts)
    s = _signs(template.data.ravel() - vals)
    return np.array([-(s * gx).sum(), -(s * gy).sum()])


def energy_gradient(tracks, frame: Frame, x: np.ndarray, cfg: EnergyConfig) -> np.ndarray:
    """Gradient of the penalized energy with respect to the 2F state vector."""
    active = [(i, t) for i, t in enumerate(tracks) if t.active]
    if not active:
        raise ValueError("no active features")
    bad = [t.id for i, t in active
           if not support_in_bounds(frame, x[2 * i:2 * i + 2], t.template.size)]
    if bad:
        raise OutOfBounds(f"template support out of bounds for features {bad}")
    alpha = cfg.alpha(len(active))
    g = np.zeros_like(x, dtype=np.float64)
    for i, t in active:
        g[2 * i:2 * i + 2] = alpha * _fit_gradient_pair(t.template, frame, x[2 * i:2 * i + 2])
    if cfg.mode != "none":
        g += penalty_gradient(tracks, x, cfg.penalty,
                              min_window=cfg.penalty_min_window)
    return g


# ---------------------------------------------------------------------------
# Vectorized kernels shared with the optimizer's per-level inner loop.

def fit_sums_batch(data: np.ndarray, tvals: np.ndarray, offsets: np.ndarray,
                   xs: np.ndarray) -> np.ndarray:
    """Raw absolute-difference sums for several features against one frame.

    data: (h, w) frame array; tvals: (F, n^2) template values; offsets: (n^2, 2);
    xs: (F, 2) positions. Bounds are the caller's responsibility.
    """
    pts = (xs[:, None, :] + offsets[None, :, :]).reshape(-1, 2)
    vals = _sample_unchecked(data, pts).reshape(tvals.shape)
    return np.abs(tvals - vals).sum(axis=1)


def fit_sums_and_gradients_batch(data: np.ndarray, tvals: np.ndarray,
                                 offsets: np.ndarray, xs: np.ndarray):
    """Raw fit sums plus their (F, 2) gradients; positions are nudged off-lattice."""
    xs = nudge_off_lattice(xs)
    pts = (xs[:, None, :] + offsets[None, :, :]).reshape(-1, 2)
    vals, gx, gy = _sample_and_gradient_unchecked(data, pts)
    diffs = tvals - vals.reshape(tvals.shape)
    sums = np.abs(diffs).sum(axis=1)
    s = _signs(diffs)
    grads = np.stack([
        -(s * gx.reshape(tvals.shape)).sum(axis=1),
        -(s * gy.reshape(tvals.shape)).sum(axis=1),
    ], axis=1)
    return sums, grads
