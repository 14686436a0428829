"""Benchmark harness: synthetic scenes, degradation, evaluation, calibration, CLI."""

from .degrade import DegradeParams, degrade_sequence
from .evaluate import SessionRunner, eval_mean_l1, eval_reinit_interval
from .synth import SynthSceneSpec, generate_synthetic
