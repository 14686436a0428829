"""Both evaluation protocols plus the CSV formats they exchange.

Mean-L1 mode: features are seeded from ground truth at frame 0, never touched
again, and scored by the per-feature L1 error accumulated over the horizon.
Re-initialization mode: after every tracked frame, any feature farther than a
threshold from ground truth is reset onto it; the score is feature-frames per
re-initialization (more frames between resets is better).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from ..errors import MissingGroundTruth
from ..imaging import Frame
from ..session import SessionConfig, TrackerSession


# -- CSV formats -------------------------------------------------------------

def points_from_array(truth: np.ndarray) -> dict[tuple[int, int], tuple[float, float]]:
    """Index an (T, F, 2) array as {(frame, id): (x, y)} with ids 0..F-1."""
    out = {}
    for t in range(truth.shape[0]):
        for f in range(truth.shape[1]):
            out[(t, f)] = (float(truth[t, f, 0]), float(truth[t, f, 1]))
    return out


def write_points_csv(path: str, points) -> None:
    """Write ground truth or seeds as id,frame,x,y rows (4-decimal positions)."""
    if isinstance(points, np.ndarray):
        points = points_from_array(points)
    with open(path, "w", newline="") as fh:
        fh.write("id,frame,x,y\n")
        for (t, f) in sorted(points, key=lambda k: (k[1], k[0])):
            x, y = points[(t, f)]
            fh.write(f"{f},{t},{x:.4f},{y:.4f}\n")


def read_points_csv(path: str) -> dict[tuple[int, int], tuple[float, float]]:
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out[(int(row["frame"]), int(row["id"]))] = (float(row["x"]), float(row["y"]))
    return out


def read_trajectory_csv(path: str) -> dict[tuple[int, int], tuple[float, float, str]]:
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out[(int(row["frame"]), int(row["id"]))] = (
                float(row["x"]), float(row["y"]), row["status"])
    return out


def parse_trajectory_text(text: str) -> dict[tuple[int, int], tuple[float, float, str]]:
    out = {}
    for row in csv.DictReader(io.StringIO(text)):
        out[(int(row["frame"]), int(row["id"]))] = (
            float(row["x"]), float(row["y"]), row["status"])
    return out


def write_metrics_csv(path: str, rows) -> None:
    """rows: iterable of (sequence, tracker, metric, value)."""
    with open(path, "w", newline="") as fh:
        fh.write("sequence,tracker,metric,value\n")
        for seq, tracker, metric, value in rows:
            fh.write(f"{seq},{tracker},{metric},{value:.6f}\n")


# -- mean L1 trajectory error ------------------------------------------------

def eval_mean_l1(traj, gt, horizon: int = 30) -> float:
    """Mean over frame-0 features of the L1 error summed over frames 1..horizon.

    traj maps (frame, id) to (x, y[, status]); gt maps (frame, id) to (x, y)
    or is an (T, F, 2) array. Missing entries raise MissingGroundTruth.
    """
    if isinstance(gt, np.ndarray):
        gt = points_from_array(gt)
    ids = sorted(fid for (t, fid) in gt if t == 0)
    if not ids:
        raise MissingGroundTruth("ground truth has no frame-0 features")
    total = 0.0
    for fid in ids:
        for t in range(1, horizon + 1):
            if (t, fid) not in gt:
                raise MissingGroundTruth(f"no ground truth for feature {fid} at frame {t}")
            if (t, fid) not in traj:
                raise MissingGroundTruth(f"no trajectory row for feature {fid} at frame {t}")
            gx, gy = gt[(t, fid)]
            row = traj[(t, fid)]
            total += abs(row[0] - gx) + abs(row[1] - gy)
    return total / len(ids)


# -- re-initialization interval ----------------------------------------------

class SessionRunner:
    """Drives a TrackerSession frame by frame for the re-initialization protocol."""

    def __init__(self, frames: list[Frame], config: SessionConfig | None = None,
                 seeds: dict[int, tuple[float, float]] | None = None,
                 gt=None):
        if seeds is None:
            if gt is None:
                raise ValueError("need either explicit seeds or ground truth")
            if isinstance(gt, np.ndarray):
                gt = points_from_array(gt)
            seeds = {fid: gt[(t, fid)] for (t, fid) in gt if t == 0}
        self.frames = frames
        self.session = TrackerSession(frames[0], config)
        self._ids = {}
        for fid in sorted(seeds):
            self._ids[fid] = self.session.add_feature(np.asarray(seeds[fid]))
        self.t = 0

    @property
    def num_frames(self) -> int:
        return len(self.frames)

    def track_next(self) -> dict[int, tuple[float, float]]:
        self.t += 1
        self.session.track(self.frames[self.t])
        out = {}
        for fid, sid in self._ids.items():
            track = next(tr for tr in self.session.tracks if tr.id == sid)
            out[fid] = (float(track.current[0]), float(track.current[1]))
        return out

    def reinitialize(self, fid: int, position) -> None:
        self.session.reinitialize_feature(self._ids[fid], np.asarray(position))


@dataclass(frozen=True)
class ReinitResult:
    interval: float
    reinit_count: int
    feature_frames: int

    @property
    def clean(self) -> bool:
        return self.reinit_count == 0


def eval_reinit_interval(runner, gt, threshold: float = 10.0) -> ReinitResult:
    """Run the reset-on-wander protocol; interval = feature-frames / resets.

    A runner exposes num_frames, track_next() -> {id: (x, y)}, and
    reinitialize(id, position). With zero resets the interval equals the total
    feature-frames (reported as a clean run).
    """
    if isinstance(gt, np.ndarray):
        gt = points_from_array(gt)
    reinits = 0
    feature_frames = 0
    for t in range(1, runner.num_frames):
        positions = runner.track_next()
        for fid in sorted(positions):
            if (t, fid) not in gt:
                raise MissingGroundTruth(f"no ground truth for feature {fid} at frame {t}")
            feature_frames += 1
            px, py = positions[fid]
            gx, gy = gt[(t, fid)]
            if np.hypot(px - gx, py - gy) > threshold:
                runner.reinitialize(fid, (gx, gy))
                reinits += 1
    interval = feature_frames / reinits if reinits else float(feature_frames)
    return ReinitResult(interval=interval, reinit_count=reinits,
                        feature_frames=feature_frames)
