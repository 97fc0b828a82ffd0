"""scikit-learn style wrappers around the feature extractor and the detector.

A sample ``X`` is one multi-antenna recording. A batch is a 3-D array
``(n_recordings, n_rx, n_samples)`` or a list of recordings (each a list of
SampleStream objects or 1-D arrays), so recordings of different length can be
mixed. The detector is unsupervised: ``fit`` only validates the hyperparameters
and fixes the label set, ``y`` is accepted and ignored.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_recordings
from .cyclostat import DEFAULT_CF_INDICES
from .detector import DetectorConfig, decide_features, extract_features
from .txchain import OfdmParams, StbcScheme


class _OfdmMixin:
    def _make_params(self) -> OfdmParams:
        return OfdmParams(self.n_subcarriers, self.n_guard, self.n_window)


class CcfFeatureExtractor(_OfdmMixin, TransformerMixin, BaseEstimator):
    """Map each recording to its vector of CCF feature magnitudes.

    The output row holds |C(alpha, tau)| over every antenna pair, cycle
    frequency and feature delay, divided by the null level sigma if
    ``normalize`` is set (so values are comparable across SNRs).
    """

    def __init__(self, n_subcarriers=64, n_guard=6, n_window=2, cf_indices=DEFAULT_CF_INDICES,
                 normalize=True):
        self.n_subcarriers = n_subcarriers
        self.n_guard = n_guard
        self.n_window = n_window
        self.cf_indices = cf_indices
        self.normalize = normalize

    def fit(self, X=None, y=None):
        self.params_ = self._make_params()
        if X is not None:
            recs = check_recordings(X)
            self.n_rx_ = len(recs[0])
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        rows = []
        for rec in check_recordings(X):
            fs = extract_features(rec, self.params_, tuple(self.cf_indices))
            mags = fs.magnitudes()
            if self.normalize and fs.sigma_hat > 0:
                mags = mags / fs.sigma_hat
            rows.append(mags)
        if len({len(r) for r in rows}) > 1:
            raise ValueError("recordings in one batch must have the same number of receive antennas")
        return np.vstack(rows)


class StbcClassifier(_OfdmMixin, ClassifierMixin, BaseEstimator):
    """Blind SM / AL identification with the kappa-out-of-zeta CFAR rule.

    >>> clf = StbcClassifier(p_false_alarm=0.01).fit()
    >>> clf.predict(batch)            # doctest: +SKIP
    array(['AL', 'SM'], dtype='<U2')
    """

    def __init__(self, n_subcarriers=64, n_guard=6, n_window=2, p_false_alarm=0.01, kappa=None,
                 cf_indices=DEFAULT_CF_INDICES, calibration="plugin"):
        self.n_subcarriers = n_subcarriers
        self.n_guard = n_guard
        self.n_window = n_window
        self.p_false_alarm = p_false_alarm
        self.kappa = kappa
        self.cf_indices = cf_indices
        self.calibration = calibration

    def fit(self, X=None, y=None):
        self.params_ = self._make_params()
        self.config_ = DetectorConfig(p_false_alarm=self.p_false_alarm, kappa=self.kappa,
                                      cf_indices=tuple(self.cf_indices), calibration=self.calibration)
        self.classes_ = np.array([s.value for s in StbcScheme])
        if X is not None:
            check_recordings(X)
        return self

    def decide(self, X) -> list:
        """Full Decision objects (counts, threshold, sigma) for every recording."""
        check_is_fitted(self, "config_")
        out = []
        for rec in check_recordings(X):
            fs = extract_features(rec, self.params_, self.config_.cf_indices)
            out.append(decide_features(fs, self.params_, self.config_))
        return out

    def predict(self, X) -> np.ndarray:
        return np.array([d.label.value for d in self.decide(X)])

    def decision_function(self, X) -> np.ndarray:
        """Exceedance count minus kappa; positive means AL."""
        return np.array([d.n_exceedances - d.kappa for d in self.decide(X)], dtype=float)
