"""Shared driver: seed a session from a points table and track a whole sequence."""

from __future__ import annotations

import numpy as np

from ..imaging import Frame
from ..session import SessionConfig, TrackerSession


def seeds_by_frame(seeds) -> dict[int, list[tuple[int, tuple[float, float]]]]:
    """Group {(frame, id): (x, y)} seed points by their acquisition frame."""
    grouped: dict[int, list] = {}
    for (t, fid), pos in seeds.items():
        grouped.setdefault(t, []).append((fid, pos))
    for entries in grouped.values():
        entries.sort()
    return grouped


def track_sequence(frames: list[Frame], seeds,
                   config: SessionConfig | None = None) -> TrackerSession:
    """Track every frame of a sequence, adding seeded features as frames arrive.

    seeds maps (frame, id) to (x, y); ids must be contiguous with session order
    (features are added in id order per frame, and session-assigned ids follow).
    """
    grouped = seeds_by_frame(seeds)
    session = TrackerSession(frames[0], config)
    for fid, pos in grouped.get(0, []):
        session.add_feature(np.asarray(pos))
    for t in range(1, len(frames)):
        session.track(frames[t])
        for fid, pos in grouped.get(t, []):
            session.add_feature(np.asarray(pos))
    return session


def frame0_seeds(gt_points) -> dict[tuple[int, int], tuple[float, float]]:
    """Restrict a ground-truth table to its frame-0 rows."""
    return {(0, fid): pos for (t, fid), pos in gt_points.items() if t == 0}
