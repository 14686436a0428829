"""Grid search for the penalty-strength parameter m."""

from __future__ import annotations

from dataclasses import dataclass

from ..session import SessionConfig, with_overrides
from .evaluate import eval_mean_l1, parse_trajectory_text, points_from_array
from .run import frame0_seeds, track_sequence

M_GRID = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0)


@dataclass(frozen=True)
class CalibrationResult:
    penalty: str
    best_m: float
    errors: dict  # m -> mean L1 error over the corpus

    def log_rows(self):
        return [(f"m={m:g}", err) for m, err in sorted(self.errors.items())]


def calibrate_m(corpus, penalty: str, base_config: SessionConfig | None = None,
                horizon: int = 30, grid=M_GRID) -> CalibrationResult:
    """Pick the m minimizing weak-mode mean L1 error over a ground-truthed corpus.

    corpus: iterable of (frames, truth) pairs, truth as an (T, F, 2) array or a
    {(frame, id): (x, y)} table. Deterministic: ties go to the smaller m.
    """
    base = base_config or SessionConfig()
    corpus = list(corpus)
    errors: dict[float, float] = {}
    for m in grid:
        cfg = with_overrides(base, mode="weak", penalty=penalty, m=float(m))
        total = 0.0
        for frames, truth in corpus:
            gt = points_from_array(truth) if not isinstance(truth, dict) else truth
            session = track_sequence(frames, frame0_seeds(gt), cfg)
            traj = parse_trajectory_text(session.export_trajectories())
            total += eval_mean_l1(traj, gt, horizon=horizon)
        errors[float(m)] = total / max(len(corpus), 1)
    best_m = min(sorted(errors), key=lambda m: errors[m])
    return CalibrationResult(penalty=penalty, best_m=best_m, errors=errors)
