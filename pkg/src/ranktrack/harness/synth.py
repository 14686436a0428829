"""Synthetic scenes with exact ground truth for tracker evaluation.

Feature positions follow an affine-camera model: a rigid cloud of 3-d points
projected by a smoothly varying 2x3 camera matrix plus translation. Stacked
over any time window, such trajectories span an affine subspace of dimension
at most 3 (rank 4 uncentered, 3 after centering) by construction, which is
exactly the structure the tracker's penalties reward. Frames are rendered as
Gaussian-windowed sinusoid patches moving along the trajectories, with a
contrast class per feature (strong, weak, or flat: no texture at all).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..imaging import Frame

CONTRAST = {"strong": 0.50, "weak": 0.05, "flat": 0.0}

PATCH_SIGMA = 6.0
PATCH_RADIUS = 18
BACKGROUND = 0.5
BORDER_SAFE = 8.0  # trajectories must keep this distance from the frame edge


@dataclass(frozen=True)
class SynthSceneSpec:
    motion_kind: str = "rigid_affine"  # rigid_affine | two_body | deformable
    feature_count: int = 20
    width: int = 224
    height: int = 160
    num_frames: int = 40
    weak_fraction: float = 0.15
    flat_fraction: float = 0.15
    translation_amplitude: float = 9.0   # px
    translation_drift: tuple[float, float] = (0.0, 0.0)  # px per frame, monotone
    rotation_amplitude: float = 0.10     # rad
    scale_amplitude: float = 0.025
    seed: int = 0
    # (feature, start, end): the feature's patch is not drawn for start <= t < end
    occlusions: tuple[tuple[int, int, int], ...] = ()
    # draw a static textured square over each occluded feature's path; when
    # False the occluded region is simply blank background
    textured_occluders: bool = False

    def __post_init__(self):
        if self.motion_kind not in ("rigid_affine", "two_body", "deformable"):
            raise ValueError(f"unknown motion kind {self.motion_kind!r}")
        if self.feature_count < 2:
            raise ValueError("need at least 2 features")


def _camera_path(rng, spec, times):
    """Smooth A(t) in R^{2x3} and b(t) in R^2 for one rigid body."""
    cx, cy = (spec.width - 1) / 2.0, (spec.height - 1) / 2.0
    wx, wy = rng.uniform(0.08, 0.18, size=2)
    px, py = rng.uniform(0, 2 * np.pi, size=2)
    wr = rng.uniform(0.05, 0.12)
    pr = rng.uniform(0, 2 * np.pi)
    ws = rng.uniform(0.05, 0.12)
    ps = rng.uniform(0, 2 * np.pi)
    woop = rng.uniform(0.05, 0.12, size=2)
    poop = rng.uniform(0, 2 * np.pi, size=2)
    # out-of-plane mixing scales with the rotation so zero-motion specs stay static
    koop = spec.rotation_amplitude * rng.uniform(0.2, 0.4, size=2)

    theta = spec.rotation_amplitude * np.sin(wr * times + pr)
    s = 1.0 + spec.scale_amplitude * np.sin(ws * times + ps)
    mid = (times[0] + times[-1]) / 2.0
    bx = cx + spec.translation_amplitude * np.sin(wx * times + px) \
        + spec.translation_drift[0] * (times - mid)
    by = cy + spec.translation_amplitude * np.sin(wy * times + py) \
        + spec.translation_drift[1] * (times - mid)

    a = np.zeros((times.size, 2, 3))
    a[:, 0, 0] = s * np.cos(theta)
    a[:, 0, 1] = -s * np.sin(theta)
    a[:, 1, 0] = s * np.sin(theta)
    a[:, 1, 1] = s * np.cos(theta)
    a[:, 0, 2] = koop[0] * np.sin(woop[0] * times + poop[0])
    a[:, 1, 2] = koop[1] * np.sin(woop[1] * times + poop[1])
    b = np.stack([bx, by], axis=1)
    return a, b


def _grid_positions(rng, count, width, height, margin):
    """Jittered grid placement keeping features apart and away from borders."""
    usable_w = width - 1 - 2 * margin
    usable_h = height - 1 - 2 * margin
    if usable_w < 10 or usable_h < 10:
        raise ValueError("frame too small for the requested motion amplitudes")
    cols = int(np.ceil(np.sqrt(count * usable_w / usable_h)))
    rows = int(np.ceil(count / cols))
    xs = np.linspace(margin, width - 1 - margin, cols)
    ys = np.linspace(margin, height - 1 - margin, rows)
    cells = [(x, y) for y in ys for x in xs]
    order = rng.permutation(len(cells))[:count]
    jitter_x = min(4.0, usable_w / cols / 4)
    jitter_y = min(4.0, usable_h / rows / 4)
    out = np.array([cells[i] for i in order])
    out[:, 0] += rng.uniform(-jitter_x, jitter_x, size=count)
    out[:, 1] += rng.uniform(-jitter_y, jitter_y, size=count)
    return out


def _rigid_truth(rng, spec, times, positions, group_seed_offset=0):
    """Exact trajectories for one rigid group anchored at the frame-0 positions."""
    a, b = _camera_path(rng, spec, times)
    count = positions.shape[0]
    pz = rng.uniform(-10.0, 10.0, size=count)
    # Solve the frame-0 projection for the in-plane point coordinates.
    rhs = positions - b[0][None, :] - np.outer(pz, a[0][:, 2])
    pxy = np.linalg.solve(a[0][:, :2], rhs.T).T
    pts = np.column_stack([pxy, pz])  # (count, 3)
    return np.einsum("tij,fj->tfi", a, pts) + b[:, None, :]


def contrast_classes(spec: SynthSceneSpec) -> list[str]:
    """Per-feature contrast class; weak and flat features are interleaved evenly."""
    count = spec.feature_count
    n_flat = int(round(spec.flat_fraction * count))
    n_weak = int(round(spec.weak_fraction * count))
    classes = ["strong"] * count
    rng = np.random.default_rng(spec.seed + 101)
    special = rng.permutation(count)[:n_flat + n_weak]
    for i in special[:n_flat]:
        classes[i] = "flat"
    for i in special[n_flat:]:
        classes[i] = "weak"
    return classes


def _placement_margin(spec: SynthSceneSpec) -> float:
    r_max = 0.5 * np.hypot(spec.width, spec.height)
    drift = np.hypot(*spec.translation_drift) * (spec.num_frames - 1) / 2.0
    sway = spec.translation_amplitude + drift + r_max * (
        spec.rotation_amplitude + spec.scale_amplitude) \
        + 4.0 * spec.rotation_amplitude + 1.0
    return 26.0 + sway


def ground_truth(spec: SynthSceneSpec) -> np.ndarray:
    """(num_frames, feature_count, 2) exact positions for the spec's motion model."""
    rng = np.random.default_rng(spec.seed)
    times = np.arange(spec.num_frames, dtype=np.float64)
    margin = _placement_margin(spec)

    if spec.motion_kind == "two_body":
        half = spec.feature_count // 2
        # Left and right halves of the frame, one independent rigid body each.
        left = _grid_positions(rng, half, spec.width // 2, spec.height, margin)
        right = _grid_positions(rng, spec.feature_count - half,
                                spec.width // 2, spec.height, margin)
        right[:, 0] += spec.width // 2
        t_left = _rigid_truth(rng, spec, times, left)
        t_right = _rigid_truth(rng, spec, times, right)
        truth = np.concatenate([t_left, t_right], axis=1)
    else:
        positions = _grid_positions(rng, spec.feature_count,
                                    spec.width, spec.height, margin)
        truth = _rigid_truth(rng, spec, times, positions)
        if spec.motion_kind == "deformable":
            dirs = rng.normal(size=(spec.feature_count, 2, 2))
            dirs /= np.linalg.norm(dirs, axis=2, keepdims=True)
            amp = rng.uniform(0.5, 2.0, size=(spec.feature_count, 2))
            w = rng.uniform(0.05, 0.15, size=2)
            p = rng.uniform(0, 2 * np.pi, size=2)
            for k in range(2):
                c = np.sin(w[k] * times + p[k])
                truth = truth + c[:, None, None] * (amp[:, k, None] * dirs[:, k, :])[None]

    lo = BORDER_SAFE
    if (truth[..., 0].min() < lo or truth[..., 0].max() > spec.width - 1 - lo
            or truth[..., 1].min() < lo or truth[..., 1].max() > spec.height - 1 - lo):
        raise ValueError("scene spec pushes trajectories too close to the border; "
                         "reduce amplitudes or enlarge the frame")
    return truth


def _textures(rng, classes):
    out = []
    for cls in classes:
        contrast = CONTRAST[cls]
        k = 3
        freq = rng.uniform(0.18, 0.5, size=k)
        ang = rng.uniform(0, np.pi, size=k)
        phase = rng.uniform(0, 2 * np.pi, size=k)
        amp = rng.uniform(0.5, 1.0, size=k)
        amp *= contrast / amp.sum() if contrast > 0 else 0.0
        out.append((freq * np.cos(ang), freq * np.sin(ang), phase, amp))
    return out


def _render_frame(spec, positions, textures, visible) -> Frame:
    img = np.full((spec.height, spec.width), BACKGROUND)
    r = PATCH_RADIUS
    for f in range(positions.shape[0]):
        if not visible[f]:
            continue
        ux, uy, phase, amp = textures[f]
        if amp.sum() == 0.0:
            continue
        cx, cy = positions[f]
        x0, x1 = max(0, int(np.ceil(cx - r))), min(spec.width - 1, int(np.floor(cx + r)))
        y0, y1 = max(0, int(np.ceil(cy - r))), min(spec.height - 1, int(np.floor(cy + r)))
        if x1 < x0 or y1 < y0:
            continue
        dx = np.arange(x0, x1 + 1) - cx
        dy = np.arange(y0, y1 + 1) - cy
        gx, gy = np.meshgrid(dx, dy)
        env = np.exp(-(gx * gx + gy * gy) / (2 * PATCH_SIGMA ** 2))
        tex = np.zeros_like(env)
        for j in range(amp.size):
            tex += amp[j] * np.cos(ux[j] * gx + uy[j] * gy + phase[j])
        img[y0:y1 + 1, x0:x1 + 1] += env * tex
    return Frame(np.clip(img, 0.0, 1.0))


def _occluder_boxes(spec, truth, rng):
    """Static textured squares covering each occluded feature's path."""
    boxes = []
    for f, start, end in spec.occlusions:
        path = truth[start:end, f]
        lo = path.min(axis=0) - PATCH_RADIUS - 2
        hi = path.max(axis=0) + PATCH_RADIUS + 2
        k = 3
        freq = rng.uniform(0.18, 0.5, size=k)
        ang = rng.uniform(0, np.pi, size=k)
        phase = rng.uniform(0, 2 * np.pi, size=k)
        amp = rng.uniform(0.5, 1.0, size=k)
        amp *= CONTRAST["strong"] / amp.sum()
        boxes.append((start, end, lo, hi,
                      (freq * np.cos(ang), freq * np.sin(ang), phase, amp)))
    return boxes


def _draw_occluder(img, spec, box):
    _, _, lo, hi, (ux, uy, phase, amp) = box
    x0, x1 = max(0, int(lo[0])), min(spec.width - 1, int(np.ceil(hi[0])))
    y0, y1 = max(0, int(lo[1])), min(spec.height - 1, int(np.ceil(hi[1])))
    gx, gy = np.meshgrid(np.arange(x0, x1 + 1), np.arange(y0, y1 + 1))
    tex = np.full(gx.shape, BACKGROUND)
    for j in range(amp.size):
        tex += amp[j] * np.cos(ux[j] * gx + uy[j] * gy + phase[j])
    img[y0:y1 + 1, x0:x1 + 1] = tex


def generate_synthetic(spec: SynthSceneSpec) -> tuple[list[Frame], np.ndarray]:
    """Render the scene; returns (frames, exact ground-truth trajectories)."""
    truth = ground_truth(spec)
    classes = contrast_classes(spec)
    rng = np.random.default_rng(spec.seed + 202)
    textures = _textures(rng, classes)
    occluded = np.zeros((spec.num_frames, spec.feature_count), dtype=bool)
    for f, start, end in spec.occlusions:
        occluded[start:end, f] = True
    boxes = _occluder_boxes(spec, truth, rng) if spec.textured_occluders else []
    frames = []
    for t in range(spec.num_frames):
        frame = _render_frame(spec, truth[t], textures, ~occluded[t])
        active = [b for b in boxes if b[0] <= t < b[1]]
        if active:
            img = frame.data.copy()
            for box in active:
                _draw_occluder(img, spec, box)
            frame = Frame(np.clip(img, 0.0, 1.0))
        frames.append(frame)
    return frames, truth
