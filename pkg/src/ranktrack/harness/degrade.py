"""Video degradation: darken, noise, strong blur, noise again.

Noise is injected both before and after the blur so it appears at two spatial
scales, which is considerably harder on a tracker than per-pixel noise alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from ..imaging import Frame


@dataclass(frozen=True)
class DegradeParams:
    darken: float = 0.35
    noise1_sigma: float = 0.03
    blur_sigma: float = 2.0
    noise2_sigma: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.darken <= 1.0:
            raise ValueError("darken must lie in (0, 1]")
        if min(self.noise1_sigma, self.blur_sigma, self.noise2_sigma) < 0:
            raise ValueError("sigmas must be non-negative")


def degrade_frame(frame: Frame, params: DegradeParams, rng: np.random.Generator) -> Frame:
    data = frame.data * params.darken
    if params.noise1_sigma > 0:
        data = data + rng.normal(0.0, params.noise1_sigma, size=data.shape)
    if params.blur_sigma > 0:
        data = gaussian_filter(data, params.blur_sigma, mode="nearest", truncate=3.0)
    if params.noise2_sigma > 0:
        data = data + rng.normal(0.0, params.noise2_sigma, size=data.shape)
    return Frame(np.clip(data, 0.0, 1.0))


def degrade_sequence(frames: list[Frame], params: DegradeParams) -> list[Frame]:
    """Degrade every frame; deterministic for a given seed."""
    rng = np.random.default_rng(params.seed)
    return [degrade_frame(f, params, rng) for f in frames]


def gaussian_kernel_1d(sigma: float, truncate: float = 3.0) -> np.ndarray:
    """The normalized 1-d kernel the blur applies along each axis."""
    radius = int(truncate * sigma + 0.5)
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (xs / sigma) ** 2)
    return k / k.sum()
