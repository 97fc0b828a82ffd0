"""Constant-false-alarm kappa-out-of-zeta identification of SM-OFDM and AL-OFDM."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy.special import betainc
from scipy.stats import gamma as gamma_dist

from ._validation import check_int, check_probability, check_streams
from .cyclostat import (
    DEFAULT_CF_INDICES, CcfGrid, compute_delay_sets, cycle_frequencies, estimate_grid,
    estimate_null_sigma,
)
from .exceptions import ConfigurationError
from .txchain import OfdmParams, StbcScheme

_BRACKET = (1e-15, 1.0 - 1e-15)
_MAX_ITER = 200


@dataclass(frozen=True)
class DetectorConfig:
    """Detector settings.

    ``kappa`` is the per-antenna-pair exceedance count (default nu/2); both it
    and the feature count zeta are multiplied by the number of receive antenna
    pairs. ``n_rx`` is optional and, if given, must match the streams passed to
    :func:`classify`.

    ``calibration="plugin"`` treats the estimated null level as exact when
    converting P_F into a threshold. ``"finite"`` instead averages the
    false-alarm rate over the sampling distribution of the null-level estimate
    (a Gamma law with as many degrees of freedom as noise-delay values), which
    removes the excess false alarms that the plug-in rule incurs.
    """

    p_false_alarm: float = 1e-2
    kappa: int | None = None
    cf_indices: tuple = DEFAULT_CF_INDICES
    n_rx: int | None = None
    calibration: str = "plugin"

    def __post_init__(self):
        check_probability(self.p_false_alarm, "p_false_alarm")
        if self.calibration not in ("plugin", "finite"):
            raise ConfigurationError(f"calibration must be 'plugin' or 'finite', got {self.calibration!r}")
        if self.kappa is not None:
            check_int(self.kappa, "kappa", minimum=1)
        if not self.cf_indices:
            raise ConfigurationError("at least one cycle frequency is required")
        if self.n_rx is not None:
            check_int(self.n_rx, "n_rx", minimum=2)

    def resolve(self, params: OfdmParams, n_rx: int) -> tuple[int, int]:
        """Scaled (kappa, zeta) for ``n_rx`` receive antennas."""
        pairs = n_rx * (n_rx - 1) // 2
        kappa = (params.nu // 2 if self.kappa is None else self.kappa) * pairs
        zeta = len(self.cf_indices) * compute_delay_sets(params).zeta * pairs
        if not 1 <= kappa <= zeta:
            raise ConfigurationError(f"kappa={kappa} must lie in [1, zeta={zeta}]")
        return kappa, zeta


@dataclass
class FeatureSet:
    """CCF estimates of one observation, per receive antenna pair."""

    pairs: list[tuple[int, int]]
    features: list[CcfGrid]
    noise: list[CcfGrid]
    sigma_hat: float

    def magnitudes(self) -> np.ndarray:
        return np.concatenate([g.magnitudes.ravel() for g in self.features])


@dataclass
class Decision:
    label: StbcScheme
    n_exceedances: int
    threshold: float
    sigma_hat: float
    kappa: int
    zeta: int
    p_single: float
    features: list[CcfGrid] = field(default_factory=list, repr=False)

    def as_dict(self) -> dict:
        return {
            "label": self.label.value,
            "n_exceedances": self.n_exceedances,
            "threshold": self.threshold,
            "sigma_hat": self.sigma_hat,
            "kappa": self.kappa,
            "zeta": self.zeta,
            "p_single": self.p_single,
        }


def binomial_tail(p: float, kappa: int, zeta: int) -> float:
    """P[at least kappa of zeta independent events with probability p occur]."""
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 1.0
    # regularized incomplete beta form of the upper binomial tail
    return float(betainc(kappa, zeta - kappa + 1, p))


def _bisect_increasing(fn, target: float) -> float:
    lo, hi = _BRACKET
    for _ in range(_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if fn(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _check_rule(p_fa, kappa, zeta):
    p_fa = check_probability(p_fa, "P_F")
    kappa = check_int(kappa, "kappa", minimum=1)
    zeta = check_int(zeta, "zeta", minimum=1)
    if kappa > zeta:
        raise ConfigurationError(f"kappa={kappa} exceeds zeta={zeta}")
    return p_fa, kappa, zeta


def invert_false_alarm(p_fa: float, kappa: int, zeta: int) -> float:
    """Per-feature false-alarm probability giving an overall rate ``p_fa``.

    Solves sum_{l=kappa}^{zeta} C(zeta, l) p^l (1-p)^(zeta-l) = p_fa for p by
    bisection; the tail is strictly increasing in p.
    """
    p_fa, kappa, zeta = _check_rule(p_fa, kappa, zeta)
    return _bisect_increasing(lambda p: binomial_tail(p, kappa, zeta), p_fa)


@lru_cache(maxsize=16)
def _gamma_nodes(k_null: int, n_nodes: int = 4001):
    # trapezoid nodes for expectations over sigma_hat^2 / sigma^2 ~ Gamma(k, 1/k)
    law = gamma_dist(k_null, scale=1.0 / k_null)
    x = np.linspace(law.ppf(1e-14), law.ppf(1 - 1e-14), n_nodes)
    w = law.pdf(x) * np.gradient(x)
    return x, w / w.sum()


def finite_sample_false_alarm(p_single: float, kappa: int, zeta: int, k_null: int) -> float:
    """Overall false-alarm rate when the null level comes from ``k_null`` independent values.

    With sigma_hat^2 / sigma^2 = X ~ Gamma(k_null, 1/k_null), a feature exceeds
    the plug-in threshold with probability p_single**X.
    """
    x, w = _gamma_nodes(int(k_null))
    tails = betainc(kappa, zeta - kappa + 1, np.power(p_single, x))
    return float(np.dot(w, tails))


@lru_cache(maxsize=256)
def invert_false_alarm_finite(p_fa: float, kappa: int, zeta: int, k_null: int) -> float:
    """Like :func:`invert_false_alarm` but accounting for the null-level estimation error."""
    p_fa, kappa, zeta = _check_rule(p_fa, kappa, zeta)
    k_null = check_int(k_null, "k_null", minimum=1)
    return _bisect_increasing(lambda p: finite_sample_false_alarm(p, kappa, zeta, k_null), p_fa)


def threshold(sigma_hat: float, p_single: float) -> float:
    """Rayleigh threshold Gamma with exp(-Gamma^2 / sigma^2) = p_single."""
    return sigma_hat * math.sqrt(-math.log(p_single))


def _magnitudes(features) -> np.ndarray:
    if isinstance(features, CcfGrid):
        return features.magnitudes.ravel()
    if isinstance(features, FeatureSet):
        return features.magnitudes()
    if isinstance(features, (list, tuple)) and features and isinstance(features[0], CcfGrid):
        return np.concatenate([g.magnitudes.ravel() for g in features])
    return np.abs(np.asarray(features, dtype=complex)).ravel()


def decide(features, gamma: float, kappa: int) -> Decision:
    """Label AL when at least ``kappa`` magnitudes are strictly above ``gamma``.

    ``threshold``-only fields of the returned Decision (sigma_hat, p_single,
    zeta) are filled by :func:`classify`; here they are left at neutral values.
    """
    mags = _magnitudes(features)
    kappa = check_int(kappa, "kappa", minimum=1)
    if kappa > mags.size:
        raise ConfigurationError(f"kappa={kappa} exceeds the number of features {mags.size}")
    count = int(np.count_nonzero(mags > gamma))
    label = StbcScheme.AL if count >= kappa else StbcScheme.SM
    if isinstance(features, FeatureSet):
        grids = features.features
    elif isinstance(features, CcfGrid):
        grids = [features]
    else:
        grids = list(features) if isinstance(features, list) else []
    return Decision(label, count, float(gamma), float("nan"), kappa, int(mags.size), float("nan"), grids)


def extract_features(rx, params: OfdmParams, cf_indices: Sequence[int] = DEFAULT_CF_INDICES) -> FeatureSet:
    """Estimate feature and noise-delay CCF grids for every receive antenna pair."""
    streams = check_streams(rx, min_streams=2)
    sets = compute_delay_sets(params)
    if len(streams[0]) <= sets.noise_delays[-1]:
        raise ConfigurationError(
            f"observation of {len(streams[0])} samples is shorter than the largest delay {sets.noise_delays[-1]}"
        )
    cfs = cycle_frequencies(params, cf_indices)
    pairs = list(combinations(range(len(streams)), 2))
    features, noise = [], []
    for i0, i1 in pairs:
        features.append(estimate_grid(streams[i0], streams[i1], cfs, sets.feature_delays))
        noise.append(estimate_grid(streams[i0], streams[i1], cfs, sets.noise_delays))
    return FeatureSet(pairs, features, noise, estimate_null_sigma(noise))


def decide_features(fs: FeatureSet, params: OfdmParams, cfg: DetectorConfig) -> Decision:
    n_rx = max(max(p) for p in fs.pairs) + 1
    kappa, zeta = cfg.resolve(params, n_rx)
    if cfg.calibration == "finite":
        k_null = sum(g.values.size for g in fs.noise)
        p_single = invert_false_alarm_finite(cfg.p_false_alarm, kappa, zeta, k_null)
    else:
        p_single = invert_false_alarm(cfg.p_false_alarm, kappa, zeta)
    gamma = threshold(fs.sigma_hat, p_single) if fs.sigma_hat > 0 else 0.0
    d = decide(fs.features, gamma, kappa)
    d.sigma_hat, d.zeta, d.p_single = fs.sigma_hat, zeta, p_single
    return d


def classify(rx, params: OfdmParams = OfdmParams(), cfg: DetectorConfig = DetectorConfig()) -> Decision:
    """Identify the space-time code of a multi-antenna observation.

    For each antenna pair the CCF is estimated at the configured cycle
    frequencies over the feature delays and over the noise delays
    2(N+nu)+1 .. 3(N+nu). The pooled noise-delay estimates give the null level
    sigma, the kappa-out-of-zeta target P_F gives the per-feature probability
    and hence the threshold, and the signal is labelled AL when enough
    feature magnitudes from all pairs exceed it.
    """
    streams = check_streams(rx, min_streams=2)
    if cfg.n_rx is not None and cfg.n_rx != len(streams):
        raise ConfigurationError(f"config expects {cfg.n_rx} receive streams, got {len(streams)}")
    return decide_features(extract_features(streams, params, cfg.cf_indices), params, cfg)


def flop_count(n_symbols: int, n_subcarriers: int, nu: int) -> int:
    """Floating point operations of the N_r = 2 detector: 3 (14 N_s (N+nu) - 2) (N + 9 nu + 2)."""
    n_symbols = check_int(n_symbols, "n_symbols", minimum=1)
    n_subcarriers = check_int(n_subcarriers, "n_subcarriers", minimum=1)
    nu = check_int(nu, "nu", minimum=1)
    return 3 * (14 * n_symbols * (n_subcarriers + nu) - 2) * (n_subcarriers + 9 * nu + 2)
