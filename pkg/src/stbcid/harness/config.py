"""Experiment configuration."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .._validation import check_finite, check_int, check_probability
from ..channel import ImpairmentSpec, canonical_profile
from ..exceptions import ConfigurationError
from ..txchain import OfdmParams, StbcScheme


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo experiment: a scheme swept over an SNR grid.

    Every SNR point runs ``n_trials`` independent trials; each trial is judged
    at every false-alarm target in ``p_false_alarm`` (the CCF estimates are
    shared between targets). Defaults follow the standard simulation setup:
    QPSK, N=64, nu=8, N_W=2, N_s=2000, P_F=0.01, exponential 4-path channel,
    two receive antennas.
    """

    scheme: str = "AL"
    snr_grid: tuple = (10.0,)
    n_symbols: int = 2000
    n_trials: int = 200
    p_false_alarm: tuple = (1e-2,)
    n_rx: int = 2
    profile: str = "exponential"
    n_paths: int | None = None
    phase_noise_rate: float = 0.0
    freq_offset: float = 0.0
    timing_offset: float = 0.0
    n_subcarriers: int = 64
    n_guard: int = 6
    n_window: int = 2
    kappa: int | None = None
    master_seed: int = 0
    output: str | None = None
    workers: int = 1
    timing: bool = True
    # recorded as metadata only
    carrier_hz: float = 2.5e9
    symbol_duration_s: float = 91.4e-6

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("scheme", StbcScheme.parse(self.scheme).value)
        set_("snr_grid", tuple(check_finite(_as_tuple(self.snr_grid), "snr_grid")))
        set_("p_false_alarm", tuple(check_probability(p, "p_false_alarm") for p in _as_tuple(self.p_false_alarm)))
        if not self.p_false_alarm:
            raise ConfigurationError("p_false_alarm needs at least one value")
        check_int(self.n_trials, "n_trials", minimum=1)
        check_int(self.n_symbols, "n_symbols", minimum=1)
        check_int(self.n_rx, "n_rx", minimum=2)
        check_int(self.workers, "workers", minimum=1)
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ConfigurationError(f"master_seed must be an unsigned 64-bit integer, got {self.master_seed}")
        set_("profile", canonical_profile(self.profile))
        if self.scheme == "AL" and self.n_symbols % 2:
            raise ConfigurationError(f"AL requires an even number of OFDM symbols, got {self.n_symbols}")
        self.params  # validates the numerology
        self.impairments(0.0)

    @property
    def params(self) -> OfdmParams:
        return OfdmParams(self.n_subcarriers, self.n_guard, self.n_window)

    def impairments(self, snr_db: float) -> ImpairmentSpec:
        return ImpairmentSpec(snr_db, self.phase_noise_rate, self.freq_offset, self.timing_offset)

    @property
    def impairment(self) -> tuple[str, float]:
        """(kind, value) label of the active impairment for result tables."""
        active = [(k, v) for k, v in (("phase_noise", self.phase_noise_rate),
                                       ("freq_offset", self.freq_offset),
                                       ("timing_offset", self.timing_offset)) if v]
        if not active:
            return "none", 0.0
        if len(active) > 1:
            return "+".join(k for k, _ in active), math.nan
        return active[0]

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown configuration keys: {sorted(unknown)}")
        return cls(**data)


def _as_tuple(value) -> tuple:
    if isinstance(value, (list, tuple)):
        return tuple(value)
    return (value,)


def parse_range(text: str) -> tuple[float, ...]:
    """Parse ``a:b:step`` (inclusive of b), ``a,b,c`` or a single number."""
    try:
        if ":" in text:
            parts = [float(x) for x in text.split(":")]
            if len(parts) == 2:
                parts.append(1.0)
            if len(parts) != 3 or parts[2] <= 0:
                raise ValueError
            start, stop, step = parts
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return tuple(round(start + i * step, 10) for i in range(max(n, 0)))
        if not text.strip():
            return ()
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise ConfigurationError(f"cannot parse range {text!r}; expected 'a:b:step' or 'a,b,c'") from None


def load_config(path) -> ExperimentConfig:
    """Read an ExperimentConfig from a JSON file."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top level must be an object")
    return ExperimentConfig.from_dict(data)
