"""Per-feature position history and the sliding-window trajectory matrix."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientHistory, TooFewFeatures
from .imaging import Template

ACTIVE = "active"
LOST = "lost"


@dataclass
class FeatureTrack:
    """One tracked feature: its template(s), current position, and recent history.

    history[l] holds the feature's position l+1 frames in the past (most recent
    first) and is capped at the sliding-window length. level_templates[m] is the
    patch resampled from pyramid level m at acquisition time; entries are None
    where the support did not fit that level.
    """

    id: int
    template: Template
    current: np.ndarray
    history: list[np.ndarray] = field(default_factory=list)
    status: str = ACTIVE
    level_templates: tuple[Template | None, ...] = ()
    reinit_count: int = 0

    @property
    def active(self) -> bool:
        return self.status == ACTIVE


@dataclass(frozen=True)
class TrajectoryMatrix:
    """The 2(L_eff+1) x F window matrix: rows 2l, 2l+1 hold positions l frames ago."""

    matrix: np.ndarray
    centered: bool
    column_mean: np.ndarray | None
    track_indices: tuple[int, ...]  # index into the source track list per column
    window: int  # L_eff


def eligible_indices(tracks, min_window: int = 1) -> list[int]:
    """Tracks that participate in the trajectory matrix.

    A track takes part once it has at least min(min_window, longest history)
    past positions, so freshly added or re-initialized features sit out until
    they mature instead of truncating the whole cohort's window.
    """
    lengths = [len(t.history) for t in tracks if t.active]
    if not lengths:
        return []
    need = max(1, min(min_window, max(lengths)))
    return [i for i, t in enumerate(tracks) if t.active and len(t.history) >= need]


def assemble_M(tracks, x: np.ndarray, centered: bool, scale: float = 1.0,
               min_window: int = 1) -> TrajectoryMatrix:
    """Build the trajectory matrix from the variable state x and fixed histories.

    Column f stacks feature f's current position (taken from x) followed by its
    past positions, most recent first, truncated to the shortest history among
    the participating features. x is expected in the coordinate scale the matrix
    should have; scale converts the stored level-0 histories into that scale, so
    a coarser pyramid level passes its own x together with scale = 2**-level.
    """
    idx = eligible_indices(tracks, min_window)
    if not idx:
        raise InsufficientHistory("no active feature has any past positions")
    if len(idx) < 2:
        raise TooFewFeatures("the trajectory matrix needs at least 2 features")
    l_eff = min(len(tracks[i].history) for i in idx)
    cols = len(idx)
    m = np.empty((2 * (l_eff + 1), cols))
    for c, i in enumerate(idx):
        m[0, c] = x[2 * i]
        m[1, c] = x[2 * i + 1]
        for l in range(1, l_eff + 1):
            m[2 * l, c] = tracks[i].history[l - 1][0] * scale
            m[2 * l + 1, c] = tracks[i].history[l - 1][1] * scale
    mean = None
    if centered:
        mean = m.mean(axis=1)
        m = m - mean[:, None]
    return TrajectoryMatrix(matrix=m, centered=centered, column_mean=mean,
                            track_indices=tuple(idx), window=l_eff)


def push_frame(tracks, x_solved: np.ndarray, window: int):
    """Commit a solved frame: each active track's new position enters its history.

    After the push, history[0] equals the track's current position, so the next
    frame's window sees this frame as "one frame ago". History is truncated to
    the window length; lost tracks are left untouched.
    """
    for i, t in enumerate(tracks):
        if not t.active:
            continue
        pos = np.array([x_solved[2 * i], x_solved[2 * i + 1]])
        t.history.insert(0, pos)
        del t.history[window:]
        t.current = pos.copy()
    return tracks
