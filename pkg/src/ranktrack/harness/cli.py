"""Command-line interface: synth, degrade, track, eval, calibrate, bench."""

from __future__ import annotations

import argparse
import os
import shutil
import sys

from ..errors import TrackingError
from ..imaging import load_sequence, save_frame
from ..session import SessionConfig
from .bench import bench_throughput, complexity_regression, format_report
from .calibrate import M_GRID, calibrate_m
from .config import apply_overrides, load_config
from .degrade import DegradeParams, degrade_sequence
from .evaluate import SessionRunner, eval_mean_l1, eval_reinit_interval, \
    read_points_csv, read_trajectory_csv, write_metrics_csv, write_points_csv
from .features import select_features
from .run import track_sequence
from .synth import SynthSceneSpec, generate_synthetic


def _write_frames(frames, out_dir: str, fmt: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for i, frame in enumerate(frames):
        save_frame(frame, os.path.join(out_dir, f"frame_{i:04d}.{fmt}"))


def _session_config(args) -> SessionConfig:
    cfg = load_config(args.config) if args.config else SessionConfig()
    if args.set:
        cfg = apply_overrides(cfg, args.set)
    return cfg


def _add_config_args(p) -> None:
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key (repeatable)")


def _cmd_synth(args) -> int:
    spec = SynthSceneSpec(
        motion_kind=args.motion, feature_count=args.features, width=args.width,
        height=args.height, num_frames=args.frames, weak_fraction=args.weak_fraction,
        flat_fraction=args.flat_fraction, translation_amplitude=args.translation,
        rotation_amplitude=args.rotation, scale_amplitude=args.scale_amplitude,
        seed=args.seed)
    frames, truth = generate_synthetic(spec)
    _write_frames(frames, args.out, args.format)
    write_points_csv(os.path.join(args.out, "gt.csv"), truth)
    write_points_csv(os.path.join(args.out, "seeds.csv"), truth[:1])
    print(f"wrote {len(frames)} frames and ground truth to {args.out}")
    return 0


def _cmd_degrade(args) -> int:
    frames = load_sequence(args.input)
    params = DegradeParams(darken=args.darken, noise1_sigma=args.noise1,
                           blur_sigma=args.blur, noise2_sigma=args.noise2,
                           seed=args.seed)
    degraded = degrade_sequence(frames, params)
    _write_frames(degraded, args.out, args.format)
    for side in ("gt.csv", "seeds.csv"):
        src = os.path.join(args.input, side)
        if os.path.exists(src):
            shutil.copyfile(src, os.path.join(args.out, side))
    print(f"wrote {len(degraded)} degraded frames to {args.out}")
    return 0


def _cmd_track(args) -> int:
    frames = load_sequence(args.frames)
    seeds_path = args.seeds or os.path.join(args.frames, "seeds.csv")
    if os.path.exists(seeds_path):
        seeds = read_points_csv(seeds_path)
    else:
        picked = select_features(frames[0], args.auto_features)
        seeds = {(0, i): (float(p[0]), float(p[1])) for i, p in enumerate(picked)}
    session = track_sequence(frames, seeds, _session_config(args))
    session.write_trajectories(args.out)
    print(f"tracked {len(frames)} frames, {len(session.tracks)} features -> {args.out}")
    return 0


def _cmd_eval(args) -> int:
    if args.mode == "l1" and not args.traj:
        raise ValueError("--traj is required in l1 mode")
    if args.mode == "reinit" and not args.frames:
        raise ValueError("--frames is required in reinit mode")
    gt = read_points_csv(args.gt)
    if args.mode == "l1":
        traj = read_trajectory_csv(args.traj)
        value = eval_mean_l1(traj, gt, horizon=args.horizon)
        rows = [(args.sequence, args.tracker, f"mean_l1_{args.horizon}", value)]
    else:
        frames = load_sequence(args.frames)
        runner = SessionRunner(frames, _session_config(args), gt=gt)
        result = eval_reinit_interval(runner, gt, threshold=args.threshold)
        rows = [
            (args.sequence, args.tracker, "reinit_interval", result.interval),
            (args.sequence, args.tracker, "reinit_count", float(result.reinit_count)),
            (args.sequence, args.tracker, "feature_frames", float(result.feature_frames)),
        ]
    write_metrics_csv(args.out, rows)
    for _, _, metric, value in rows:
        print(f"{metric} = {value:.4f}")
    return 0


def _cmd_calibrate(args) -> int:
    corpus = []
    for d in args.corpus:
        corpus.append((load_sequence(d), read_points_csv(os.path.join(d, "gt.csv"))))
    result = calibrate_m(corpus, args.penalty, base_config=_session_config(args),
                         horizon=args.horizon)
    with open(args.out, "w") as fh:
        fh.write("penalty,m,mean_l1,is_best\n")
        for m in sorted(result.errors):
            best = "1" if m == result.best_m else "0"
            fh.write(f"{args.penalty},{m:g},{result.errors[m]:.6f},{best}\n")
    print(f"best m for {args.penalty}: {result.best_m:g}")
    return 0


def _cmd_bench(args) -> int:
    frames = 4 if args.quick else args.frames
    results = [bench_throughput(window=5, frames=frames),
               bench_throughput(window=10, frames=frames)]
    regression = None
    if not args.skip_regression:
        if args.quick:
            regression = complexity_regression(feature_counts=(8, 24),
                                               template_sizes=(5, 11),
                                               windows=(2, 8))
        else:
            regression = complexity_regression()
    report = format_report(results, regression)
    print(report, end="")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(report)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ranktrack",
        description="Joint multi-feature tracker with low-rank trajectory penalties")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="render a synthetic scene with ground truth")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--frames", type=int, default=40)
    p.add_argument("--width", type=int, default=224)
    p.add_argument("--height", type=int, default=160)
    p.add_argument("--features", type=int, default=20)
    p.add_argument("--motion", default="rigid_affine",
                   choices=["rigid_affine", "two_body", "deformable"])
    p.add_argument("--weak-fraction", type=float, default=0.15)
    p.add_argument("--flat-fraction", type=float, default=0.15)
    p.add_argument("--translation", type=float, default=9.0)
    p.add_argument("--rotation", type=float, default=0.10)
    p.add_argument("--scale-amplitude", type=float, default=0.025)
    p.add_argument("--format", default="png", choices=["png", "pgm"])
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("degrade", help="darken, noise, blur, noise again")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--darken", type=float, default=0.35)
    p.add_argument("--noise1", type=float, default=0.03)
    p.add_argument("--blur", type=float, default=2.0)
    p.add_argument("--noise2", type=float, default=0.02)
    p.add_argument("--format", default="png", choices=["png", "pgm"])
    p.set_defaults(func=_cmd_degrade)

    p = sub.add_parser("track", help="track a frame directory")
    p.add_argument("--frames", required=True)
    p.add_argument("--seeds", help="seed CSV (default: <frames>/seeds.csv)")
    p.add_argument("--out", required=True)
    p.add_argument("--auto-features", type=int, default=20,
                   help="corner count when no seed file exists")
    _add_config_args(p)
    p.set_defaults(func=_cmd_track)

    p = sub.add_parser("eval", help="score a tracker against ground truth")
    p.add_argument("--mode", required=True, choices=["l1", "reinit"])
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sequence", default="seq")
    p.add_argument("--tracker", default="ranktrack")
    p.add_argument("--traj", help="trajectory CSV (l1 mode)")
    p.add_argument("--frames", help="frame directory (reinit mode)")
    p.add_argument("--horizon", type=int, default=30)
    p.add_argument("--threshold", type=float, default=10.0)
    _add_config_args(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("calibrate", help=f"sweep m over {M_GRID}")
    p.add_argument("--corpus", nargs="+", required=True,
                   help="sequence directories containing frames and gt.csv")
    p.add_argument("--penalty", required=True,
                   choices=["nuclear_norm", "empirical_dimension", "explicit_factorization"])
    p.add_argument("--out", required=True)
    p.add_argument("--horizon", type=int, default=30)
    _add_config_args(p)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("bench", help="throughput and complexity scaling report")
    p.add_argument("--out")
    p.add_argument("--frames", type=int, default=12)
    p.add_argument("--quick", action="store_true")
    p.add_argument("--skip-regression", action="store_true")
    p.set_defaults(func=_cmd_bench)

    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (TrackingError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())
