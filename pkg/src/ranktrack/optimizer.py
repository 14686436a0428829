"""Coarse-to-fine minimization of the penalized tracking energy.

Each frame is tracked by registering it globally against the previous frame,
initializing every feature with that shift, then descending the energy on each
pyramid level from coarsest to finest. The step direction blends the raw
negative gradient with its per-feature normalized version, so weak features
keep influence over the step regardless of gradient magnitude; a line search
finds a local minimum along the blend. A level's loop exits early once the
gradient norm stops shrinking by more than the decay ratio.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .energy import alpha_for_mode, fit_sums_batch, fit_sums_and_gradients_batch
from .imaging import Frame, build_pyramid, register_pyramids, support_in_bounds, \
    template_offsets
from .linesearch import line_search
from .regularizers import GRADIENT_STATS, PenaltyKind, penalty_of_matrix, \
    _matrix_gradient, FD_STEP
from .trajectory import LOST, eligible_indices, push_frame

__all__ = [
    "OptimizerConfig", "LevelStats", "FrameStats", "blended_direction",
    "line_search", "optimize_level", "track_frame",
]


@dataclass(frozen=True)
class OptimizerConfig:
    min_iters: int = 2
    max_iters: int = 20
    blend: float = 0.5
    decay_ratio: float = 0.99
    pyramid_levels: int = 4
    step_init: float = 0.5
    step_doublings: int = 6
    step_halvings: int = 6
    step_tol: float = 1e-3
    registration_level: int = 3
    registration_iters: int = 50

    def __post_init__(self):
        if not 1 <= self.min_iters <= self.max_iters:
            raise ValueError("need 1 <= min_iters <= max_iters")


@dataclass
class LevelStats:
    level: int
    iterations: int = 0
    energies: list[float] = field(default_factory=list)
    gradient_norms: list[float] = field(default_factory=list)
    exit_reason: str = "max_iters"  # max_iters | gradient_decay | stationary


@dataclass
class FrameStats:
    frame: int
    alpha: float = 0.0
    active_features: int = 0
    pyramid_seconds: float = 0.0
    registration_seconds: float = 0.0
    optimize_seconds: float = 0.0
    levels: list[LevelStats] = field(default_factory=list)


def blended_direction(g: np.ndarray, blend: float = 0.5) -> np.ndarray:
    """Half raw descent direction, half per-feature unit descent direction.

    Features whose 2-vector gradient is below 1e-12 contribute nothing to the
    normalized part, so exactly stationary features do not move.
    """
    a = -np.asarray(g, dtype=np.float64)
    pairs = a.reshape(-1, 2)
    norms = np.sqrt((pairs * pairs).sum(axis=1))
    b = np.zeros_like(pairs)
    ok = norms > 1e-12
    b[ok] = pairs[ok] / norms[ok, None]
    return blend * a + (1.0 - blend) * b.ravel()


class _LevelProblem:
    """Precomputed state for one pyramid level's energy and gradient."""

    def __init__(self, frame: Frame, tracks, x_level: np.ndarray, level: int,
                 scale: float, alpha: float, mode: str,
                 penalty: PenaltyKind | None, penalty_min_window: int = 1):
        self.data = frame.data
        self.alpha = alpha
        self.nf = len(tracks)

        fit_idx = []
        tvals = []
        n = None
        for i, t in enumerate(tracks):
            if not t.active:
                continue
            tpl = t.level_templates[level] if level < len(t.level_templates) else None
            if tpl is None:
                continue
            if not support_in_bounds(frame, x_level[2 * i:2 * i + 2], tpl.size):
                continue
            fit_idx.append(i)
            tvals.append(tpl.data.ravel())
            n = tpl.size
        self.fit_idx = np.asarray(fit_idx, dtype=np.intp)
        self.tvals = np.asarray(tvals) if tvals else np.zeros((0, 0))
        self.offsets = template_offsets(n) if n else np.zeros((0, 2))
        half = (n - 1) / 2.0 if n else 0.0
        h, w = self.data.shape
        self.xlim = (half, w - 1 - half)
        self.ylim = (half, h - 1 - half)

        # Penalty bookkeeping: mature mobile features form the window matrix.
        self.penalty = None
        if penalty is not None and mode != "none":
            elig = eligible_indices(tracks, penalty_min_window)
            if len(elig) >= 2:
                l_eff = min(len(tracks[i].history) for i in elig)
                if l_eff >= penalty_min_window:
                    hist = np.empty((2 * l_eff, len(elig)))
                    for c, i in enumerate(elig):
                        for l in range(l_eff):
                            hist[2 * l, c] = tracks[i].history[l][0]
                            hist[2 * l + 1, c] = tracks[i].history[l][1]
                    hist *= scale
                    self.penalty = penalty
                    self.elig = np.asarray(elig, dtype=np.intp)
                    self.hist_block = hist

    # -- energy ------------------------------------------------------------

    def _window_matrix(self, x: np.ndarray) -> np.ndarray:
        top = np.empty((2, self.elig.size))
        top[0] = x[2 * self.elig]
        top[1] = x[2 * self.elig + 1]
        m = np.vstack([top, self.hist_block])
        if self.penalty.centered:
            m = m - m.mean(axis=1, keepdims=True)
        return m

    def energy(self, x: np.ndarray) -> float:
        e = 0.0
        if self.fit_idx.size:
            xs = np.stack([x[2 * self.fit_idx], x[2 * self.fit_idx + 1]], axis=1)
            if (xs[:, 0] < self.xlim[0]).any() or (xs[:, 0] > self.xlim[1]).any() \
                    or (xs[:, 1] < self.ylim[0]).any() or (xs[:, 1] > self.ylim[1]).any():
                return np.inf
            e = self.alpha * fit_sums_batch(self.data, self.tvals, self.offsets, xs).sum()
        if self.penalty is not None:
            e += penalty_of_matrix(self._window_matrix(x), self.penalty)
        return float(e)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        g = np.zeros_like(x)
        if self.fit_idx.size:
            xs = np.stack([x[2 * self.fit_idx], x[2 * self.fit_idx + 1]], axis=1)
            _, grads = fit_sums_and_gradients_batch(self.data, self.tvals, self.offsets, xs)
            g[2 * self.fit_idx] = self.alpha * grads[:, 0]
            g[2 * self.fit_idx + 1] = self.alpha * grads[:, 1]
        if self.penalty is not None:
            m = self._window_matrix(x)
            gm = _matrix_gradient(m, self.penalty)
            if gm is not None:
                GRADIENT_STATS.analytic += 1
                if self.penalty.centered:
                    gm = gm - gm.mean(axis=1, keepdims=True)
                g[2 * self.elig] += gm[0]
                g[2 * self.elig + 1] += gm[1]
            else:
                GRADIENT_STATS.fallback += 1
                g += self._penalty_fd(x)
        return g

    def _penalty_fd(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros_like(x)
        for i in self.elig:
            for k in range(2):
                xp = x.copy()
                xp[2 * i + k] += FD_STEP
                up = penalty_of_matrix(self._window_matrix(xp), self.penalty)
                xp[2 * i + k] -= 2 * FD_STEP
                dn = penalty_of_matrix(self._window_matrix(xp), self.penalty)
                out[2 * i + k] = (up - dn) / (2 * FD_STEP)
        return out


def _descend(problem: _LevelProblem, x: np.ndarray, cfg: OptimizerConfig,
             level: int) -> tuple[np.ndarray, LevelStats]:
    stats = LevelStats(level=level)
    f_cur = problem.energy(x)
    stats.energies.append(f_cur)
    gnorm_old = np.inf
    for i in range(1, cfg.max_iters + 1):
        g = problem.gradient(x)
        gnorm = float(np.linalg.norm(g))
        c = blended_direction(g, cfg.blend)
        step, f_new = line_search(
            lambda t: problem.energy(x + t * c), f0=f_cur,
            t0=cfg.step_init, max_doublings=cfg.step_doublings,
            max_halvings=cfg.step_halvings, tol=cfg.step_tol)
        if step > 0.0:
            x = x + step * c
            f_cur = f_new
        stats.iterations = i
        stats.energies.append(f_cur)
        stats.gradient_norms.append(gnorm)
        if gnorm == 0.0 and i >= cfg.min_iters:
            # Exactly stationary: no step is possible, so the decay test would
            # idle until max_iters (0 > 0.99*0 never holds).
            stats.exit_reason = "stationary"
            break
        if gnorm > cfg.decay_ratio * gnorm_old and i > cfg.min_iters:
            stats.exit_reason = "gradient_decay"
            break
        gnorm_old = gnorm
    return x, stats


def optimize_level(x: np.ndarray, level_frame: Frame, tracks, energy_cfg,
                   opt_cfg: OptimizerConfig | None = None, level: int = 0,
                   feature_count: int | None = None) -> np.ndarray:
    """Descend one pyramid level's energy from state x (given in level coordinates)."""
    opt_cfg = opt_cfg or OptimizerConfig()
    nf = feature_count if feature_count is not None else sum(t.active for t in tracks)
    alpha = energy_cfg.alpha(max(nf, 1))
    scale = 0.5 ** level
    problem = _LevelProblem(level_frame, tracks, x, level, scale, alpha,
                            energy_cfg.mode, energy_cfg.penalty,
                            energy_cfg.penalty_min_window)
    x_out, _ = _descend(problem, x, opt_cfg, level)
    return x_out


def track_frame(session, frame: Frame) -> np.ndarray:
    """Track all features into a new frame and commit the result to the session."""
    cfg = session.optimizer_config
    ecfg = session.energy_config
    tracks = session.tracks
    stats = FrameStats(frame=session.frame_index + 1)

    t0 = time.perf_counter()
    pyr = build_pyramid(frame, levels=cfg.pyramid_levels)
    stats.pyramid_seconds = time.perf_counter() - t0

    x = np.zeros(2 * len(tracks))
    for i, t in enumerate(tracks):
        x[2 * i:2 * i + 2] = t.current
    active_idx = [i for i, t in enumerate(tracks) if t.active]

    if active_idx:
        t0 = time.perf_counter()
        delta = register_pyramids(session.pyramid, pyr, cfg.registration_level)
        stats.registration_seconds = time.perf_counter() - t0
        for i in active_idx:
            x[2 * i:2 * i + 2] += delta

        feature_count = len(active_idx)
        alpha = alpha_for_mode(ecfg.mode, ecfg.m, feature_count, ecfg.template_size)
        stats.alpha = alpha
        stats.active_features = feature_count

        t0 = time.perf_counter()
        for level in range(cfg.pyramid_levels - 1, -1, -1):
            scale = 0.5 ** level
            if level == 0 and ecfg.mode != "strong":
                # Features whose support left the full-resolution frame are lost
                # and frozen; in strong mode they stay mobile under the penalty.
                for i in active_idx:
                    t = tracks[i]
                    if not support_in_bounds(pyr[0], x[2 * i:2 * i + 2],
                                             t.template.size):
                        t.status = LOST
                        x[2 * i:2 * i + 2] = t.current
            xl = x * scale
            problem = _LevelProblem(pyr[level], tracks, xl, level, scale, alpha,
                                    ecfg.mode, ecfg.penalty,
                                    ecfg.penalty_min_window)
            xl, lstats = _descend(problem, xl, cfg, level)
            x = xl / scale
            stats.levels.append(lstats)
        stats.optimize_seconds = time.perf_counter() - t0

    push_frame(tracks, x, session.config.window)
    session.pyramid = pyr
    session.frame_index += 1
    session.frame_stats.append(stats)
    return x
