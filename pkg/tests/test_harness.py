import numpy as np
import pytest

from ranktrack.errors import ConfigError, MissingGroundTruth
from ranktrack.imaging import Frame
from ranktrack.session import SessionConfig
from ranktrack.harness.config import apply_overrides, config_from_text, \
    config_to_text, parse_config_text
from ranktrack.harness.degrade import DegradeParams, degrade_sequence, \
    gaussian_kernel_1d
from ranktrack.harness.evaluate import ReinitResult, eval_mean_l1, \
    eval_reinit_interval, points_from_array, write_points_csv, read_points_csv
from ranktrack.harness.features import select_features
from ranktrack.harness.synth import SynthSceneSpec, contrast_classes, \
    generate_synthetic, ground_truth


class TestDegrade:
    def test_identity_params(self, rng):
        frames = [Frame(rng.random((24, 24))) for _ in range(2)]
        out = degrade_sequence(frames, DegradeParams(
            darken=1.0, noise1_sigma=0.0, blur_sigma=0.0, noise2_sigma=0.0))
        for a, b in zip(frames, out):
            assert np.array_equal(a.data, b.data)

    def test_darken_only(self):
        frames = [Frame(np.ones((16, 16)))]
        out = degrade_sequence(frames, DegradeParams(
            darken=0.5, noise1_sigma=0.0, blur_sigma=0.0, noise2_sigma=0.0))
        assert np.allclose(out[0].data, 0.5)

    def test_blur_kernel_mass(self):
        k = gaussian_kernel_1d(2.0)
        assert k.sum() == pytest.approx(1.0, abs=1e-6)
        # impulse response sums to one inside the frame
        data = np.zeros((41, 41))
        data[20, 20] = 1.0
        out = degrade_sequence([Frame(data)], DegradeParams(
            darken=1.0, noise1_sigma=0.0, blur_sigma=2.0, noise2_sigma=0.0))
        assert out[0].data.sum() == pytest.approx(1.0, abs=1e-6)

    def test_seed_determinism_and_shape(self, rng):
        frames = [Frame(rng.random((20, 28))) for _ in range(3)]
        p = DegradeParams(seed=42)
        a = degrade_sequence(frames, p)
        b = degrade_sequence(frames, p)
        for fa, fb in zip(a, b):
            assert np.array_equal(fa.data, fb.data)
            assert fa.data.shape == (20, 28)

    def test_output_clamped(self, rng):
        frames = [Frame(rng.random((20, 20)))]
        out = degrade_sequence(frames, DegradeParams(noise1_sigma=0.5, seed=1))
        assert out[0].data.min() >= 0.0 and out[0].data.max() <= 1.0


class TestSynth:
    def test_zero_motion_is_static(self):
        spec = SynthSceneSpec(feature_count=6, num_frames=5,
                              translation_amplitude=0.0, rotation_amplitude=0.0,
                              scale_amplitude=0.0, seed=2)
        truth = ground_truth(spec)
        assert np.allclose(truth, truth[0][None], atol=1e-9)

    def test_rigid_window_rank(self):
        spec = SynthSceneSpec(feature_count=12, num_frames=30, seed=4)
        truth = ground_truth(spec)
        for start in (0, 9, 19):
            window = truth[start:start + 11]  # (11, F, 2)
            m = window.transpose(1, 0, 2).reshape(12, -1).T  # 22 x F
            s = np.linalg.svd(m, compute_uv=False)
            assert s[4] / s[0] < 1e-10
            centered = m - m.mean(axis=1, keepdims=True)
            sc = np.linalg.svd(centered, compute_uv=False)
            assert sc[3] / sc[0] < 1e-10

    def test_two_body_group_ranks(self):
        spec = SynthSceneSpec(motion_kind="two_body", feature_count=16,
                              width=352, height=224, num_frames=20,
                              translation_amplitude=6.0, rotation_amplitude=0.06,
                              seed=6)
        truth = ground_truth(spec)
        m = truth[:11].transpose(1, 0, 2).reshape(16, -1).T
        s = np.linalg.svd(m, compute_uv=False)
        assert s[8] / s[0] < 1e-10  # union of two rank-<=4 groups
        for block in (m[:, :8], m[:, 8:]):
            sb = np.linalg.svd(block, compute_uv=False)
            assert sb[4] / sb[0] < 1e-10

    def test_deformable_breaks_rank_four(self):
        spec = SynthSceneSpec(motion_kind="deformable", feature_count=12,
                              num_frames=20, seed=8)
        truth = ground_truth(spec)
        m = truth[:11].transpose(1, 0, 2).reshape(12, -1).T
        s = np.linalg.svd(m, compute_uv=False)
        assert s[4] / s[0] > 1e-8

    def test_frames_rendered_and_deterministic(self):
        spec = SynthSceneSpec(feature_count=6, width=224, height=160,
                              num_frames=3, seed=3)
        f1, t1 = generate_synthetic(spec)
        f2, t2 = generate_synthetic(spec)
        assert np.array_equal(t1, t2)
        for a, b in zip(f1, f2):
            assert np.array_equal(a.data, b.data)
        assert f1[0].data.shape == (160, 224)

    def test_contrast_classes_fractions(self):
        spec = SynthSceneSpec(feature_count=20, weak_fraction=0.15,
                              flat_fraction=0.15, seed=0)
        classes = contrast_classes(spec)
        assert classes.count("flat") == 3
        assert classes.count("weak") == 3

    def test_occlusion_blanks_patch(self):
        spec = SynthSceneSpec(feature_count=6, width=224, height=160,
                              num_frames=6, weak_fraction=0.0, flat_fraction=0.0,
                              seed=3, occlusions=((0, 2, 5),))
        frames, truth = generate_synthetic(spec)
        x, y = truth[3, 0]
        xi, yi = int(round(x)), int(round(y))
        patch = frames[3].data[yi - 3:yi + 4, xi - 3:xi + 4]
        assert np.allclose(patch, patch.mean(), atol=1e-9)  # featureless
        patch_visible = frames[1].data[yi - 3:yi + 4, xi - 3:xi + 4]
        assert patch_visible.std() > 0.01


class TestEvalMeanL1:
    def test_exact_match_zero(self):
        gt = {(t, f): (float(f), float(t)) for t in range(31) for f in range(3)}
        traj = {k: (*v, "ok") for k, v in gt.items()}
        assert eval_mean_l1(traj, gt) == 0.0

    def test_constant_offset_formula(self):
        F = 4
        gt = {(t, f): (10.0, 20.0) for t in range(31) for f in range(F)}
        traj = {}
        for (t, f), (x, y) in gt.items():
            if f == 0 and t >= 1:
                traj[(t, f)] = (x + 1.0, y + 1.0, "ok")
            else:
                traj[(t, f)] = (x, y, "ok")
        assert eval_mean_l1(traj, gt) == pytest.approx(60.0 / F)

    def test_hand_computed_fixture(self):
        gt = {(t, 0): (float(t), 0.0) for t in range(4)}
        traj = {(1, 0): (1.5, 0.0, "ok"), (2, 0): (2.0, 0.25, "ok"),
                (3, 0): (3.0, 0.0, "ok"), (0, 0): (0.0, 0.0, "ok")}
        # |0.5| + (|0| + |0.25|) + 0 = 0.75
        assert eval_mean_l1(traj, gt, horizon=3) == pytest.approx(0.75)

    def test_missing_ground_truth(self):
        gt = {(0, 0): (1.0, 1.0), (1, 0): (1.0, 1.0)}
        traj = {(1, 0): (1.0, 1.0, "ok")}
        with pytest.raises(MissingGroundTruth):
            eval_mean_l1(traj, gt, horizon=5)

    def test_array_ground_truth(self):
        truth = np.zeros((31, 2, 2))
        traj = {(t, f): (0.0, 0.0, "ok") for t in range(31) for f in range(2)}
        assert eval_mean_l1(traj, truth) == 0.0


class ScriptedRunner:
    """Fake tracker: follows ground truth but jumps 11 px at scheduled frames."""

    def __init__(self, gt, feature_ids, num_frames, jump_frames):
        self.gt = gt
        self.ids = feature_ids
        self.num_frames = num_frames
        self.jump_frames = jump_frames
        self.offset = {f: np.zeros(2) for f in feature_ids}

    def track_next(self):
        self.t = getattr(self, "t", 0) + 1
        out = {}
        for f in self.ids:
            if (self.t, f) in self.jump_frames:
                self.offset[f] = np.array([11.0, 0.0])
            g = np.asarray(self.gt[(self.t, f)])
            out[f] = tuple(g + self.offset[f])
        return out

    def reinitialize(self, f, position):
        self.offset[f] = np.zeros(2)


class TestEvalReinitInterval:
    @staticmethod
    def flat_gt(num_frames, ids):
        return {(t, f): (50.0, 50.0) for t in range(num_frames) for f in ids}

    def test_perfect_tracker_sentinel(self):
        gt = self.flat_gt(101, [0, 1])
        runner = ScriptedRunner(gt, [0, 1], 101, set())
        res = eval_reinit_interval(runner, gt)
        assert res.clean
        assert res.reinit_count == 0
        assert res.feature_frames == 2 * 100
        assert res.interval == 200.0

    def test_jump_every_five_frames(self):
        T = 101
        gt = self.flat_gt(T, [0])
        jumps = {(t, 0) for t in range(5, T, 5)}
        runner = ScriptedRunner(gt, [0], T, jumps)
        res = eval_reinit_interval(runner, gt)
        assert res.reinit_count == 20
        assert res.interval == pytest.approx(5.0)

    def test_hand_trace_ten_frames(self):
        # 2 features, 10 frames: feature 0 jumps at t=4 and t=8; feature 1 clean.
        # feature-frames = 2*9 = 18, re-inits = 2, interval = 9.
        T = 10
        gt = self.flat_gt(T, [0, 1])
        runner = ScriptedRunner(gt, [0, 1], T, {(4, 0), (8, 0)})
        res = eval_reinit_interval(runner, gt)
        assert res == ReinitResult(interval=9.0, reinit_count=2, feature_frames=18)

    def test_threshold_respected(self):
        # 9-px jumps never trigger the 10-px threshold
        T = 20
        gt = self.flat_gt(T, [0])

        class NineOff(ScriptedRunner):
            def track_next(self):
                self.t = getattr(self, "t", 0) + 1
                return {0: (50.0 + 9.0, 50.0)}

        res = eval_reinit_interval(NineOff(gt, [0], T, set()), gt)
        assert res.clean


class TestPointsCsv:
    def test_roundtrip(self, tmp_path, rng):
        truth = rng.uniform(0, 100, size=(5, 3, 2))
        path = str(tmp_path / "gt.csv")
        write_points_csv(path, truth)
        back = read_points_csv(path)
        for t in range(5):
            for f in range(3):
                assert back[(t, f)][0] == pytest.approx(truth[t, f, 0], abs=1e-4)
                assert back[(t, f)][1] == pytest.approx(truth[t, f, 1], abs=1e-4)


class TestFeatureScorer:
    def test_finds_blobs(self):
        from test_optimizer import blob_frame
        centers = [(20.0, 20.0), (60.0, 24.0), (40.0, 52.0)]
        f = blob_frame(80, 72, centers, sigma=2.0)
        picks = select_features(f, 3, min_distance=10)
        assert picks.shape == (3, 2)
        for cx, cy in centers:
            d = np.hypot(picks[:, 0] - cx, picks[:, 1] - cy).min()
            assert d < 4.0


class TestConfigFiles:
    def test_defaults_roundtrip(self):
        cfg = SessionConfig()
        text = config_to_text(cfg)
        back = config_from_text(text)
        assert back == cfg

    def test_parse_values_and_comments(self):
        text = "mode=strong\npenalty=nuclear_norm # headline\n\nm=0.25\nwindow=5\ncentered=false\n"
        values = parse_config_text(text)
        assert values == {"mode": "strong", "penalty": "nuclear_norm",
                          "m": 0.25, "window": 5, "centered": False}
        cfg = config_from_text(text)
        assert cfg.mode == "strong" and cfg.m == 0.25 and not cfg.centered

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            parse_config_text("turbo=yes\n")

    def test_bad_value_rejected(self):
        with pytest.raises(ConfigError):
            parse_config_text("window=many\n")
        with pytest.raises(ConfigError):
            config_from_text("mode=sideways\n")

    def test_auto_m(self):
        cfg = config_from_text("m=auto\n")
        assert cfg.m is None

    def test_overrides(self):
        cfg = apply_overrides(SessionConfig(), ["mode=none", "max_iters=5"])
        assert cfg.mode == "none" and cfg.max_iters == 5
