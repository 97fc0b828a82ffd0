"""Blind identification of SM-OFDM and AL-OFDM signals from second-order cyclostationarity."""

from .channel import (
    ChannelRealization, ImpairmentSpec, add_awgn, apply_channel, apply_freq_offset,
    apply_phase_noise, apply_timing_offset, draw_channel, flat_channel, identity_channel, impair,
)
from .cyclostat import (
    CcfGrid, DelaySets, analytical_ccf_flat, compute_delay_sets, cycle_frequencies, estimate_ccf,
    estimate_grid, estimate_null_sigma, phase_noise_scaling,
)
from .detector import (
    Decision, DetectorConfig, FeatureSet, classify, decide, decide_features, extract_features,
    finite_sample_false_alarm, flop_count, invert_false_alarm, invert_false_alarm_finite, threshold,
)
from .estimators import CcfFeatureExtractor, StbcClassifier
from .exceptions import ConfigurationError, DomainError, FormatError, ShapeError
from .txchain import (
    QPSK, ConstellationSpec, OfdmParams, SampleStream, StbcScheme, apply_window_cp,
    generate_data_blocks, ifft_block, serialize, stbc_encode, transmit,
)

__version__ = "0.1.0"
