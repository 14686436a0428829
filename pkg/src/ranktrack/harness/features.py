"""Minimal corner scorer for seeding experiments on unlabeled image directories."""

from __future__ import annotations

import numpy as np
from scipy.ndimage import uniform_filter

from ..imaging import Frame


def min_eigen_scores(frame: Frame, window: int = 5) -> np.ndarray:
    """Smaller eigenvalue of the local gradient structure tensor per pixel."""
    data = frame.data
    gy, gx = np.gradient(data)
    ixx = uniform_filter(gx * gx, size=window)
    iyy = uniform_filter(gy * gy, size=window)
    ixy = uniform_filter(gx * gy, size=window)
    tr = ixx + iyy
    disc = np.sqrt(np.maximum((ixx - iyy) ** 2 + 4.0 * ixy * ixy, 0.0))
    return 0.5 * (tr - disc)


def select_features(frame: Frame, count: int, min_distance: float = 12.0,
                    margin: int = 8) -> np.ndarray:
    """Greedy pick of the strongest corners, enforcing pairwise separation."""
    scores = min_eigen_scores(frame)
    scores[:margin, :] = -1.0
    scores[-margin:, :] = -1.0
    scores[:, :margin] = -1.0
    scores[:, -margin:] = -1.0
    order = np.argsort(scores, axis=None)[::-1]
    h, w = scores.shape
    chosen: list[tuple[float, float]] = []
    for flat in order:
        if len(chosen) >= count:
            break
        y, x = divmod(int(flat), w)
        if scores[y, x] <= 0:
            break
        if all((x - cx) ** 2 + (y - cy) ** 2 >= min_distance ** 2 for cx, cy in chosen):
            chosen.append((float(x), float(y)))
    return np.asarray(chosen)
