"""Tracker façade: feature lifecycle, configuration, and trajectory export."""

from __future__ import annotations

import io
from dataclasses import dataclass, replace

import numpy as np

from . import optimizer
from .energy import EnergyConfig
from .errors import OutOfBounds, UnknownId
from .imaging import Frame, Pyramid, build_pyramid, extract_template, support_in_bounds
from .optimizer import OptimizerConfig
from .regularizers import KINDS, PenaltyKind
from .trajectory import ACTIVE, FeatureTrack

# Penalty strengths found by the harness's calibration sweep (weak mode,
# degraded rigid corpus); overridable through SessionConfig.m.
DEFAULT_M = {
    "nuclear_norm": 16.0,
    "empirical_dimension": 8.0,
    "explicit_factorization": 16.0,
}

TRAJECTORY_HEADER = "frame,id,x,y,status"


@dataclass(frozen=True)
class SessionConfig:
    """Flat tracker configuration; every field maps to one config-file key."""

    mode: str = "weak"                    # weak | strong | none
    penalty: str = "empirical_dimension"  # one of regularizers.KINDS
    centered: bool = True
    m: float | None = None                # None -> DEFAULT_M[penalty]
    epsilon: float = 0.6
    rank: int | None = None               # None -> 3 centered / 4 uncentered
    window: int = 10                      # L past frames in the trajectory matrix
    penalty_min_window: int = 4           # history depth before the penalty turns on
    template_size: int = 7
    pyramid_levels: int = 4
    min_iters: int = 2
    max_iters: int = 20
    step_init: float = 0.5
    step_doublings: int = 6
    step_tol: float = 1e-3
    registration_level: int = 3
    registration_iters: int = 50

    def __post_init__(self):
        if self.mode not in ("weak", "strong", "none"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.penalty not in KINDS:
            raise ValueError(f"unknown penalty {self.penalty!r}")
        if self.window < 1:
            raise ValueError("window must be >= 1")

    def resolved_m(self) -> float:
        return DEFAULT_M[self.penalty] if self.m is None else self.m

    def penalty_kind(self) -> PenaltyKind:
        return PenaltyKind(kind=self.penalty, epsilon=self.epsilon,
                           rank=self.rank, centered=self.centered)

    def energy_config(self) -> EnergyConfig:
        return EnergyConfig(mode=self.mode, m=self.resolved_m(),
                            template_size=self.template_size,
                            penalty=self.penalty_kind(),
                            penalty_min_window=self.penalty_min_window)

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(min_iters=self.min_iters, max_iters=self.max_iters,
                               pyramid_levels=self.pyramid_levels,
                               step_init=self.step_init,
                               step_doublings=self.step_doublings,
                               step_tol=self.step_tol,
                               registration_level=self.registration_level,
                               registration_iters=self.registration_iters)


class TrackerSession:
    """Owns the feature set, the previous frame's pyramid, and the trajectory log."""

    def __init__(self, first_frame: Frame, config: SessionConfig | None = None):
        self.config = config or SessionConfig()
        self.energy_config = self.config.energy_config()
        self.optimizer_config = self.config.optimizer_config()
        self.pyramid: Pyramid = build_pyramid(first_frame, self.config.pyramid_levels)
        self.tracks: list[FeatureTrack] = []
        self.frame_index = 0
        self.frame_stats: list[optimizer.FrameStats] = []
        self._next_id = 0
        self._log: dict[tuple[int, int], tuple[float, float, str]] = {}

    # -- feature lifecycle ---------------------------------------------------

    @property
    def active_count(self) -> int:
        return sum(t.active for t in self.tracks)

    def _extract_all_levels(self, position: np.ndarray):
        n = self.config.template_size
        if not support_in_bounds(self.pyramid[0], position, n):
            raise OutOfBounds(f"template support at {position} leaves the frame")
        per_level = []
        for m, level_frame in enumerate(self.pyramid.levels):
            center = position * (0.5 ** m)
            if support_in_bounds(level_frame, center, n):
                per_level.append(extract_template(level_frame, center, n))
            else:
                per_level.append(None)
        return per_level

    def add_feature(self, position, at_frame: int | None = None) -> int:
        """Acquire a template at the given position in the session's current frame."""
        if at_frame is not None and at_frame != self.frame_index:
            raise ValueError(
                f"features can only be added at the current frame {self.frame_index}")
        position = np.asarray(position, dtype=np.float64)
        per_level = self._extract_all_levels(position)
        fid = self._next_id
        self._next_id += 1
        self.tracks.append(FeatureTrack(
            id=fid, template=per_level[0], current=position.copy(),
            level_templates=tuple(per_level)))
        self._log[(self.frame_index, fid)] = (position[0], position[1], "ok")
        return fid

    def _find(self, feature_id: int) -> FeatureTrack:
        for t in self.tracks:
            if t.id == feature_id:
                return t
        raise UnknownId(f"no feature with id {feature_id}")

    def reinitialize_feature(self, feature_id: int, position) -> None:
        """Reset a wandered feature: fresh template, cleared history."""
        t = self._find(feature_id)
        position = np.asarray(position, dtype=np.float64)
        per_level = self._extract_all_levels(position)
        t.template = per_level[0]
        t.level_templates = tuple(per_level)
        t.current = position.copy()
        t.history.clear()
        t.status = ACTIVE
        t.reinit_count += 1
        self._log[(self.frame_index, t.id)] = (position[0], position[1], "reinit")

    # -- tracking --------------------------------------------------------------

    def track(self, frame: Frame) -> np.ndarray:
        """Track all features into the next frame; logs one row per feature."""
        x = optimizer.track_frame(self, frame)
        for t in self.tracks:
            status = "ok" if t.active else "lost"
            self._log[(self.frame_index, t.id)] = (t.current[0], t.current[1], status)
        return x

    # -- export ------------------------------------------------------------

    def export_trajectories(self) -> str:
        """CSV text, one row per (frame, id), ordered by frame then id."""
        out = io.StringIO()
        out.write(TRAJECTORY_HEADER + "\n")
        for (frame, fid) in sorted(self._log):
            px, py, status = self._log[(frame, fid)]
            out.write(f"{frame},{fid},{px:.4f},{py:.4f},{status}\n")
        return out.getvalue()

    def write_trajectories(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.export_trajectories())

    def total_reinits(self) -> int:
        return sum(t.reinit_count for t in self.tracks)


def with_overrides(config: SessionConfig, **kwargs) -> SessionConfig:
    return replace(config, **kwargs)
