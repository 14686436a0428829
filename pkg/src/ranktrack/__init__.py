"""Joint multi-feature video tracking with low-rank trajectory regularization.

Features are tracked together: the template-matching energy of the whole
cohort is augmented with a penalty on the rank of the sliding-window
trajectory matrix, so poorly textured features inherit motion from strong
ones instead of wandering.
"""

from .energy import EnergyConfig, alpha_for_mode, energy_gradient, \
    regularized_energy, single_feature_energy, total_fit_energy
from .errors import ConfigError, InsufficientHistory, MissingGroundTruth, \
    OutOfBounds, RankParamTooLarge, TooFewFeatures, TooSmall, TrackingError, UnknownId
from .imaging import Frame, Pyramid, Template, build_pyramid, extract_template, \
    frame_from_array, image_gradient_at, load_frame, load_sequence, register_frames, \
    sample_bilinear, save_frame
from .optimizer import OptimizerConfig, blended_direction, line_search, \
    optimize_level, track_frame
from .regularizers import GRADIENT_STATS, PenaltyKind, SingularSpectrum, \
    empirical_dimension, factorization_penalty, nuclear_norm, penalty_gradient, \
    penalty_value, reset_gradient_stats, singular_spectrum
from .session import DEFAULT_M, SessionConfig, TrackerSession
from .trajectory import FeatureTrack, TrajectoryMatrix, assemble_M, push_frame

__version__ = "0.1.0"
