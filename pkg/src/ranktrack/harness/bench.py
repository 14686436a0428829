"""Throughput measurement and complexity regression for the tracker's hot paths."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..energy import alpha_for_mode
from ..imaging import Frame, extract_template
from ..optimizer import _LevelProblem
from ..regularizers import PenaltyKind
from ..session import SessionConfig, TrackerSession, with_overrides
from ..trajectory import FeatureTrack
from .synth import SynthSceneSpec, generate_synthetic


@dataclass
class ThroughputResult:
    window: int
    frames_tracked: int
    total_seconds: float
    fps: float
    pyramid_seconds: float
    registration_seconds: float
    optimize_seconds: float
    mean_iterations_per_level: dict = field(default_factory=dict)


def bench_throughput(window: int = 5, frames: int = 12, width: int = 640,
                     height: int = 480, feature_count: int = 35,
                     template_size: int = 7, seed: int = 7,
                     config: SessionConfig | None = None) -> ThroughputResult:
    """Track a rendered scene at the benchmark operating point and time it."""
    spec = SynthSceneSpec(width=width, height=height, feature_count=feature_count,
                          num_frames=frames + 1, translation_amplitude=16.0,
                          rotation_amplitude=0.06, weak_fraction=0.1,
                          flat_fraction=0.1, seed=seed)
    scene_frames, truth = generate_synthetic(spec)
    cfg = config or SessionConfig()
    cfg = with_overrides(cfg, window=window, template_size=template_size)
    session = TrackerSession(scene_frames[0], cfg)
    for f in range(feature_count):
        session.add_feature(truth[0, f])

    start = time.perf_counter()
    for t in range(1, frames + 1):
        session.track(scene_frames[t])
    total = time.perf_counter() - start

    stats = session.frame_stats
    iters: dict[int, list[int]] = {}
    for fs in stats:
        for ls in fs.levels:
            iters.setdefault(ls.level, []).append(ls.iterations)
    return ThroughputResult(
        window=window,
        frames_tracked=frames,
        total_seconds=total,
        fps=frames / total,
        pyramid_seconds=sum(fs.pyramid_seconds for fs in stats),
        registration_seconds=sum(fs.registration_seconds for fs in stats),
        optimize_seconds=sum(fs.optimize_seconds for fs in stats),
        mean_iterations_per_level={lvl: float(np.mean(v)) for lvl, v in sorted(iters.items())},
    )


def _synthetic_problem(rng, feature_count: int, n: int, window: int):
    """A level-0 energy/gradient problem with randomized templates and history."""
    h, w = 240, 320
    data = rng.random((h, w))
    frame = Frame(data)
    margin = n + 2
    xs = rng.uniform(margin, w - 1 - margin, size=feature_count)
    ys = rng.uniform(margin, h - 1 - margin, size=feature_count)
    tracks = []
    for f in range(feature_count):
        pos = np.array([xs[f], ys[f]])
        tpl = extract_template(frame, pos, n)
        hist = [pos + rng.normal(0, 1.0, size=2) for _ in range(window)]
        tracks.append(FeatureTrack(id=f, template=tpl, current=pos.copy(),
                                   history=hist, level_templates=(tpl,)))
    x = np.concatenate([t.current for t in tracks]) + rng.normal(0, 0.3, size=2 * feature_count)
    alpha = alpha_for_mode("weak", 8.0, feature_count, n)
    problem = _LevelProblem(frame, tracks, x, level=0, scale=1.0, alpha=alpha,
                            mode="weak", penalty=PenaltyKind())
    return problem, x


def _time_call(fn, min_seconds: float = 0.004) -> float:
    """Seconds per call, estimated from the fastest of three timed batches."""
    fn()
    reps = 1
    while True:
        start = time.perf_counter()
        for _ in range(reps):
            fn()
        elapsed = time.perf_counter() - start
        if elapsed >= min_seconds:
            break
        reps *= 2
    best = elapsed
    for _ in range(2):
        start = time.perf_counter()
        for _ in range(reps):
            fn()
        best = min(best, time.perf_counter() - start)
    return best / reps


def _r_squared(design: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    return 1.0 - ss_res / ss_tot, coef


@dataclass
class RegressionResult:
    energy_r2: float
    gradient_r2: float
    grid: list


def complexity_regression(seed: int = 0,
                          feature_counts=(8, 16, 32, 48),
                          template_sizes=(5, 9, 15, 23),
                          windows=(2, 5, 10)) -> RegressionResult:
    """Fit energy time to c1*F*n^2 + c2*L^2*F and gradient time to c1*F*n^2 + c2*L*F^2."""
    rng = np.random.default_rng(seed)
    rows = []
    for feats in feature_counts:
        for n in template_sizes:
            for window in windows:
                problem, x = _synthetic_problem(rng, feats, n, window)
                te = _time_call(lambda: problem.energy(x))
                tg = _time_call(lambda: problem.gradient(x))
                rows.append((feats, n, window, te, tg))
    feats = np.array([r[0] for r in rows], dtype=np.float64)
    ns = np.array([r[1] for r in rows], dtype=np.float64)
    ls = np.array([r[2] for r in rows], dtype=np.float64)
    te = np.array([r[3] for r in rows])
    tg = np.array([r[4] for r in rows])
    ones = np.ones_like(feats)
    e_design = np.stack([ones, feats * ns ** 2, ls ** 2 * feats], axis=1)
    g_design = np.stack([ones, feats * ns ** 2, ls * feats ** 2], axis=1)
    e_r2, _ = _r_squared(e_design, te)
    g_r2, _ = _r_squared(g_design, tg)
    return RegressionResult(energy_r2=e_r2, gradient_r2=g_r2, grid=rows)


def format_report(results: list[ThroughputResult],
                  regression: RegressionResult | None) -> str:
    lines = ["tracking throughput (640x480, 35 features, 7x7 templates)", ""]
    for r in results:
        lines.append(f"window L={r.window}: {r.fps:.2f} fps "
                     f"({r.frames_tracked} frames in {r.total_seconds:.3f}s)")
        lines.append(f"  pyramid      {r.pyramid_seconds:.3f}s")
        lines.append(f"  registration {r.registration_seconds:.3f}s")
        lines.append(f"  optimization {r.optimize_seconds:.3f}s")
        iters = ", ".join(f"L{lvl}={v:.1f}" for lvl, v in r.mean_iterations_per_level.items())
        lines.append(f"  mean iterations per level: {iters}")
        lines.append("")
    if regression is not None:
        lines.append("complexity regression (time vs F, n, L):")
        lines.append(f"  energy   ~ a*F*n^2 + b*L^2*F : R^2 = {regression.energy_r2:.4f}")
        lines.append(f"  gradient ~ a*F*n^2 + b*L*F^2 : R^2 = {regression.gradient_r2:.4f}")
    return "\n".join(lines) + "\n"
