"""Image representation, bilinear sampling, pyramids, templates, frame registration.

Coordinates are continuous (x, y) with x along columns and y along rows;
pixel (i, j) of a frame sits at the point (i, j). The valid sampling
rectangle of a w-by-h frame is [0, w-1] x [0, h-1].
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .errors import OutOfBounds, TooSmall
from .linesearch import line_search

# ITU-R BT.601 luma weights for RGB -> grayscale.
_LUMA = np.array([0.299, 0.587, 0.114])

PYRAMID_LEVELS = 4


@dataclass(frozen=True)
class Frame:
    """A grayscale raster with intensities normalized to [0, 1]."""

    data: np.ndarray  # (height, width) float64, read-only

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("frame data must be a non-empty 2-d array")
        lo, hi = float(arr.min()), float(arr.max())
        if lo < -1e-12 or hi > 1.0 + 1e-12:
            raise ValueError(f"frame intensities must lie in [0, 1], got [{lo}, {hi}]")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class Pyramid:
    """Multi-resolution stack; level 0 is full resolution, each level halves both axes."""

    levels: tuple[Frame, ...]

    def __getitem__(self, m: int) -> Frame:
        return self.levels[m]

    def __len__(self) -> int:
        return len(self.levels)


@dataclass(frozen=True)
class Template:
    """An n-by-n intensity patch anchored at a (possibly fractional) acquisition center."""

    size: int
    data: np.ndarray   # (n, n); data[j, i] is the sample at offset (i-h, j-h)
    origin: np.ndarray  # (2,) acquisition center, same coordinate frame as the source

    def __post_init__(self):
        if self.size % 2 != 1 or self.size < 1:
            raise ValueError("template size must be a positive odd integer")


def template_offsets(n: int) -> np.ndarray:
    """Integer (x, y) offsets of the symmetric n-by-n grid about a center, row-major."""
    h = (n - 1) // 2
    ys, xs = np.mgrid[-h:h + 1, -h:h + 1]
    return np.stack([xs.ravel(), ys.ravel()], axis=1).astype(np.float64)


def support_in_bounds(frame: Frame, center, n: int) -> bool:
    """True if the n-by-n symmetric support around center fits the sampling rectangle."""
    h = (n - 1) / 2.0
    cx, cy = float(center[0]), float(center[1])
    return (cx - h >= 0.0 and cx + h <= frame.width - 1
            and cy - h >= 0.0 and cy + h <= frame.height - 1)


def _cells(shape, pts):
    """Cell corners and fractional offsets using the lower-left cell convention.

    On grid lines the cell toward the origin is used (fraction 1.0 at the far
    edge), which keeps the interpolant's gradient a well-defined function.
    """
    h, w = shape
    x0 = np.clip(np.ceil(pts[..., 0]) - 1.0, 0, w - 2).astype(np.intp)
    y0 = np.clip(np.ceil(pts[..., 1]) - 1.0, 0, h - 2).astype(np.intp)
    fx = pts[..., 0] - x0
    fy = pts[..., 1] - y0
    return x0, y0, fx, fy


def sample_bilinear_many(frame: Frame, pts: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of the frame at an (N, 2) array of (x, y) points.

    Raises OutOfBounds if any point leaves the valid rectangle.
    """
    data = frame.data
    h, w = data.shape
    x, y = pts[..., 0], pts[..., 1]
    if (x < 0).any() or (x > w - 1).any() or (y < 0).any() or (y > h - 1).any():
        raise OutOfBounds("sample point outside the valid rectangle")
    return _sample_unchecked(data, pts)


def _sample_unchecked(data: np.ndarray, pts: np.ndarray) -> np.ndarray:
    h, w = data.shape
    x0, y0, fx, fy = _cells((h, w), pts)
    flat = data.ravel()
    idx = y0 * w + x0
    v00 = flat[idx]
    v10 = flat[idx + 1]
    v01 = flat[idx + w]
    v11 = flat[idx + w + 1]
    top = v00 + fx * (v10 - v00)
    bot = v01 + fx * (v11 - v01)
    return top + fy * (bot - top)


def _sample_and_gradient_unchecked(data: np.ndarray, pts: np.ndarray):
    """Values and (d/dx, d/dy) of the bilinear interpolant; shares the corner gathers."""
    h, w = data.shape
    x0, y0, fx, fy = _cells((h, w), pts)
    flat = data.ravel()
    idx = y0 * w + x0
    v00 = flat[idx]
    v10 = flat[idx + 1]
    v01 = flat[idx + w]
    v11 = flat[idx + w + 1]
    top = v00 + fx * (v10 - v00)
    bot = v01 + fx * (v11 - v01)
    vals = top + fy * (bot - top)
    gx = (v10 - v00) + fy * ((v11 - v01) - (v10 - v00))
    gy = bot - top
    return vals, gx, gy


def sample_bilinear(frame: Frame, p) -> float:
    """Bilinear interpolation at a single continuous point (exact at integer points)."""
    pts = np.asarray(p, dtype=np.float64).reshape(1, 2)
    return float(sample_bilinear_many(frame, pts)[0])


def image_gradient_at(frame: Frame, p) -> np.ndarray:
    """Gradient (dI/dx, dI/dy) of the bilinear interpolant at a single point.

    The interpolant is piecewise bilinear, so the gradient is constant in the
    differentiated direction within each cell; on cell boundaries the cell
    toward the origin is used.
    """
    pts = np.asarray(p, dtype=np.float64).reshape(1, 2)
    x, y = pts[0]
    if not (0.0 <= x <= frame.width - 1 and 0.0 <= y <= frame.height - 1):
        raise OutOfBounds("gradient point outside the valid rectangle")
    _, gx, gy = _sample_and_gradient_unchecked(frame.data, pts)
    return np.array([gx[0], gy[0]])


def extract_template(frame: Frame, center, n: int) -> Template:
    """Sample an n-by-n patch on the symmetric grid about a continuous center."""
    center = np.asarray(center, dtype=np.float64)
    if not support_in_bounds(frame, center, n):
        raise OutOfBounds("template support exceeds the frame")
    pts = center[None, :] + template_offsets(n)
    vals = sample_bilinear_many(frame, pts)
    return Template(size=n, data=vals.reshape(n, n), origin=center.copy())


def decimate(frame: Frame) -> Frame:
    """One pyramid step: 2x2 box filter followed by 2x subsampling (odd edges dropped)."""
    data = frame.data
    h2, w2 = data.shape[0] // 2, data.shape[1] // 2
    if h2 < 2 or w2 < 2:
        raise TooSmall("decimated level would collapse below 2x2")
    trimmed = data[:h2 * 2, :w2 * 2]
    pooled = trimmed.reshape(h2, 2, w2, 2).mean(axis=(1, 3))
    return Frame(pooled)


def build_pyramid(frame: Frame, levels: int = PYRAMID_LEVELS) -> Pyramid:
    """Build the multi-resolution stack used for coarse-to-fine optimization."""
    if frame.width < 16 or frame.height < 16:
        raise TooSmall("frame must be at least 16x16 to build a 4-level pyramid")
    out = [frame]
    for _ in range(levels - 1):
        out.append(decimate(out[-1]))
    return Pyramid(levels=tuple(out))


def _mad_objective(ref: np.ndarray, mov: np.ndarray, grid: np.ndarray, shift) -> float:
    """Mean absolute difference between ref and mov resampled at grid - shift."""
    pts = grid - shift
    h, w = mov.shape
    ok = ((pts[:, 0] >= 0) & (pts[:, 0] <= w - 1)
          & (pts[:, 1] >= 0) & (pts[:, 1] <= h - 1))
    if ok.sum() < grid.shape[0] // 4:
        return np.inf
    vals = _sample_unchecked(mov, pts[ok])
    return float(np.abs(ref[ok] - vals).mean())


def _register_images(prev: Frame, cur: Frame, max_iters: int = 50) -> np.ndarray:
    """Translation minimizing mean |cur(p) - prev(p - shift)| by descent with line search."""
    h, w = cur.data.shape
    ys, xs = np.mgrid[0:h, 0:w]
    grid = np.stack([xs.ravel(), ys.ravel()], axis=1).astype(np.float64)
    ref = cur.data.ravel()
    mov = prev.data

    shift = np.zeros(2)
    f_cur = _mad_objective(ref, mov, grid, shift)
    for _ in range(max_iters):
        pts = grid - shift
        ok = ((pts[:, 0] >= 0) & (pts[:, 0] <= w - 1)
              & (pts[:, 1] >= 0) & (pts[:, 1] <= h - 1))
        vals, gx, gy = _sample_and_gradient_unchecked(mov, pts[ok])
        r = ref[ok] - vals
        s = np.sign(r)
        g = np.array([np.mean(s * gx), np.mean(s * gy)])
        gnorm = float(np.hypot(g[0], g[1]))
        if gnorm < 1e-14:
            break
        direction = -g / gnorm
        step, f_new = line_search(
            lambda t: _mad_objective(ref, mov, grid, shift + t * direction), f0=f_cur)
        if step == 0.0:
            break
        shift = shift + step * direction
        f_cur = f_new
        if step < 1e-3:
            break
    return shift


def register_frames(prev: Frame, cur: Frame, level: int = 3) -> np.ndarray:
    """Whole-frame shift between consecutive frames, in level-0 pixel units.

    The returned shift is the scene's motion: cur(p) ~ prev(p - shift). It is
    estimated at the given pyramid level and scaled back to full resolution.
    Best effort; returns (0, 0) when no step improves the objective.
    """
    if prev.data.shape != cur.data.shape:
        raise ValueError("frames must have identical dimensions")
    a, b = prev, cur
    for _ in range(level):
        a, b = decimate(a), decimate(b)
    return _register_images(a, b) * float(2 ** level)


def register_pyramids(prev: Pyramid, cur: Pyramid, level: int = 3) -> np.ndarray:
    """register_frames on already-built pyramids (avoids re-decimation per frame)."""
    return _register_images(prev[level], cur[level]) * float(2 ** level)


def frame_from_array(arr: np.ndarray, clamp: bool = False) -> Frame:
    """Wrap a float array as a Frame, optionally clamping into [0, 1]."""
    arr = np.asarray(arr, dtype=np.float64)
    if clamp:
        arr = np.clip(arr, 0.0, 1.0)
    return Frame(arr)


def to_grayscale(rgb: np.ndarray) -> np.ndarray:
    """BT.601 luma conversion for an (h, w, 3) array in [0, 1]."""
    return rgb @ _LUMA


def load_frame(path: str) -> Frame:
    """Read an 8-bit grayscale or RGB image (PNG or PGM) into a normalized Frame."""
    with Image.open(path) as im:
        if im.mode in ("L", "P"):
            arr = np.asarray(im.convert("L"), dtype=np.float64) / 255.0
        elif im.mode in ("RGB", "RGBA"):
            rgb = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
            arr = to_grayscale(rgb)
        elif im.mode.startswith("I"):
            arr = np.asarray(im, dtype=np.float64) / 65535.0
        else:
            raise ValueError(f"unsupported image mode {im.mode!r} in {path}")
    return Frame(np.clip(arr, 0.0, 1.0))


def save_frame(frame: Frame, path: str) -> None:
    """Write a frame as an 8-bit PNG or PGM, chosen by file extension."""
    q = np.clip(np.rint(frame.data * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(q, mode="L").save(path)


def load_sequence(directory: str) -> list[Frame]:
    """Load every .png/.pgm in a directory, lexicographic name order = temporal order."""
    names = sorted(f for f in os.listdir(directory)
                   if f.lower().endswith((".png", ".pgm")))
    if not names:
        raise FileNotFoundError(f"no .png or .pgm frames found in {directory}")
    return [load_frame(os.path.join(directory, f)) for f in names]
