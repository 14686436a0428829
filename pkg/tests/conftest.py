import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

from ranktrack.imaging import Frame


def smooth_noise_frame(width, height, seed=0, sigma=11.0):
    """Aperiodic textured frame: band-limited noise stretched into [0.1, 0.9]."""
    rng = np.random.default_rng(seed)
    img = gaussian_filter(rng.random((height, width)), sigma)
    lo, hi = img.min(), img.max()
    return Frame(0.1 + 0.8 * (img - lo) / (hi - lo))


def sinusoid_frame(width, height, seed=0, waves=6, contrast=0.45, base=0.5):
    """Smooth band-limited texture covering the whole frame (registration-friendly)."""
    rng = np.random.default_rng(seed)
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    img = np.full((height, width), base)
    amp = rng.uniform(0.5, 1.0, size=waves)
    amp *= contrast / amp.sum()
    for k in range(waves):
        freq = rng.uniform(0.05, 0.25)
        ang = rng.uniform(0, np.pi)
        phase = rng.uniform(0, 2 * np.pi)
        img += amp[k] * np.cos(freq * (np.cos(ang) * xs + np.sin(ang) * ys) + phase)
    return Frame(np.clip(img, 0.0, 1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
