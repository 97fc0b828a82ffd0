"""Input validation helpers shared by the functional API and the estimators."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .exceptions import ConfigurationError, ShapeError


def as_samples(x) -> np.ndarray:
    """Return the complex sample array behind ``x`` (a SampleStream or array-like)."""
    samples = getattr(x, "samples", x)
    arr = np.asarray(samples)
    if arr.ndim != 1:
        raise ShapeError(f"expected a 1-D sample sequence, got shape {arr.shape}")
    return arr.astype(np.complex128, copy=False)


def check_streams(streams, min_streams: int = 1) -> list[np.ndarray]:
    """Validate a group of equal-length antenna streams.

    Accepts a sequence of SampleStream objects or 1-D arrays, or a 2-D array
    with one row per antenna.
    """
    if isinstance(streams, np.ndarray) and streams.ndim == 2:
        arrays = [streams[i].astype(np.complex128, copy=False) for i in range(streams.shape[0])]
    else:
        arrays = [as_samples(s) for s in streams]
    if len(arrays) < min_streams:
        raise ConfigurationError(f"need at least {min_streams} streams, got {len(arrays)}")
    lengths = {len(a) for a in arrays}
    if len(lengths) > 1:
        raise ShapeError(f"streams have unequal lengths {sorted(lengths)}")
    return arrays


def check_recordings(X) -> list[list[np.ndarray]]:
    """Normalize a batch of multi-antenna recordings for the estimator API.

    ``X`` is a 3-D array ``(n_recordings, n_rx, n_samples)``, a single 2-D
    recording, or a sequence whose items are anything :func:`check_streams`
    accepts.
    """
    if isinstance(X, np.ndarray):
        if X.ndim == 2:
            X = X[np.newaxis]
        if X.ndim != 3:
            raise ShapeError(f"expected a 3-D array (n_recordings, n_rx, n_samples), got {X.shape}")
    if len(X) == 0:
        raise ShapeError("empty batch of recordings")
    return [check_streams(rec, min_streams=2) for rec in X]


def check_int(value, name: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise ConfigurationError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ConfigurationError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_probability(value, name: str) -> float:
    value = float(value)
    if not 0.0 < value < 1.0:
        raise ConfigurationError(f"{name} must lie in (0, 1), got {value}")
    return value


def check_finite(values: Sequence[float], name: str) -> list[float]:
    out = [float(v) for v in values]
    if not all(np.isfinite(out)):
        raise ConfigurationError(f"{name} must be finite, got {out}")
    return out
