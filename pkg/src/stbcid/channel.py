"""MIMO multipath channel and receiver impairments.

Every operator takes and returns lists of :class:`SampleStream`; none of them
modifies its input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_int, check_streams
from .exceptions import ConfigurationError
from .txchain import OfdmParams, SampleStream

# Sampling period implied by a 91.4 us OFDM symbol of N + nu = 72 samples.
DEFAULT_SAMPLE_PERIOD = 91.4e-6 / 72

# ITU-R M.1225 tapped delay lines: (delay in seconds, relative power in dB).
ITU_PROFILES = {
    "pedestrianA": ([0.0, 110e-9, 190e-9, 410e-9], [0.0, -9.7, -19.2, -22.8]),
    "vehicularA": ([0.0, 310e-9, 710e-9, 1090e-9, 1730e-9, 2510e-9],
                   [0.0, -1.0, -9.0, -10.0, -15.0, -20.0]),
}
ITU_DOPPLER_HZ = {"pedestrianA": 6.9, "vehicularA": 104.2}

_PROFILE_ALIASES = {
    "flat": "flat",
    "exp": "exponential",
    "exponential": "exponential",
    "peda": "pedestrianA",
    "pedestriana": "pedestrianA",
    "veha": "vehicularA",
    "vehiculara": "vehicularA",
}


def canonical_profile(name: str) -> str:
    try:
        return _PROFILE_ALIASES[str(name).lower()]
    except KeyError:
        raise ConfigurationError(
            f"unknown channel profile {name!r}; expected one of flat, exponential, pedestrianA, vehicularA"
        ) from None


@dataclass(frozen=True)
class ImpairmentSpec:
    """Receiver-side impairments applied after the multipath channel.

    ``phase_noise_rate`` is the Wiener rate beta*T, ``freq_offset`` the
    normalized offset f_o*T, ``timing_offset`` the fractional delay epsilon of
    the two-tap model.
    """

    snr_db: float = float("inf")
    phase_noise_rate: float = 0.0
    freq_offset: float = 0.0
    timing_offset: float = 0.0

    def __post_init__(self):
        if np.isnan(self.snr_db) or self.snr_db == -np.inf:
            raise ConfigurationError(f"snr_db must be a number or +inf, got {self.snr_db}")
        if not self.phase_noise_rate >= 0:
            raise ConfigurationError(f"phase noise rate must be >= 0, got {self.phase_noise_rate}")
        if not np.isfinite(self.freq_offset):
            raise ConfigurationError(f"frequency offset must be finite, got {self.freq_offset}")
        if not 0.0 <= self.timing_offset <= 0.5:
            raise ConfigurationError(f"timing offset must lie in [0, 0.5], got {self.timing_offset}")


@dataclass(frozen=True)
class SumOfSinusoids:
    """Per-tap Rayleigh fading process built from random-angle sinusoids."""

    doppler: float  # maximum Doppler shift in cycles per sample
    angles: np.ndarray  # (n_rx, n_tx, n_paths, n_sinusoids)
    phases: np.ndarray  # same shape

    def evaluate(self, n_samples: int) -> np.ndarray:
        """Unit-power fading coefficients, shape (n_rx, n_tx, n_paths, n_samples)."""
        m = np.arange(n_samples)
        n_sin = self.angles.shape[-1]
        out = np.zeros(self.angles.shape[:-1] + (n_samples,), dtype=np.complex128)
        for i in range(n_sin):
            freq = self.doppler * np.cos(self.angles[..., i])
            out += np.exp(1j * (2 * np.pi * freq[..., None] * m + self.phases[..., i, None]))
        return out / np.sqrt(n_sin)


@dataclass(frozen=True)
class ChannelRealization:
    """Tap gains ``gains[v, f, p]`` from transmit antenna f to receive antenna v.

    ``delays[p]`` is the integer sample delay of path p and ``pdp`` the average
    path powers (summing to one). When ``fading`` is set the gains are scaled
    by a time-varying unit-power fading process.
    """

    delays: np.ndarray
    gains: np.ndarray
    pdp: np.ndarray
    pdp_scale: float = 1.0
    profile: str = "flat"
    fading: SumOfSinusoids | None = None

    @property
    def n_paths(self) -> int:
        return len(self.delays)

    @property
    def n_rx(self) -> int:
        return self.gains.shape[0]

    @property
    def n_tx(self) -> int:
        return self.gains.shape[1]

    def flat_matrix(self) -> np.ndarray:
        """The (n_rx, n_tx) gain matrix of a single-path channel."""
        if self.n_paths != 1:
            raise ConfigurationError("flat_matrix requires a single-path channel")
        return self.gains[:, :, 0]


def _exponential_pdp(n_paths: int) -> tuple[np.ndarray, float]:
    raw = np.exp(-np.arange(n_paths) / 5.0)
    scale = 1.0 / raw.sum()
    return raw * scale, scale


def _itu_taps(profile: str, sample_period: float) -> tuple[np.ndarray, np.ndarray]:
    delays_s, powers_db = ITU_PROFILES[profile]
    sample_delays = np.rint(np.asarray(delays_s) / sample_period).astype(int)
    powers = 10.0 ** (np.asarray(powers_db) / 10.0)
    taps = np.unique(sample_delays)
    merged = np.array([powers[sample_delays == d].sum() for d in taps])
    return taps, merged


def draw_channel(n_paths: int | None = None, profile: str = "exponential", seed=None, *,
                 n_rx: int = 2, n_tx: int = 2, sample_period: float = DEFAULT_SAMPLE_PERIOD,
                 time_varying: bool = True, n_sinusoids: int = 16) -> ChannelRealization:
    """Draw one channel realization.

    ``flat`` is a single unit-power tap, ``exponential`` has ``n_paths`` taps at
    delays 0, 1, ..., with powers proportional to exp(-p/5). The two ITU
    profiles use their standard tap tables rounded to the sample grid (taps
    that land on the same sample are merged) and, unless ``time_varying`` is
    False, sum-of-sinusoids Doppler fading at the profile's maximum Doppler.
    """
    name = canonical_profile(profile)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n_rx = check_int(n_rx, "n_rx", minimum=1)
    n_tx = check_int(n_tx, "n_tx", minimum=1)
    fading = None
    if name == "flat":
        if n_paths not in (None, 1):
            raise ConfigurationError(f"flat channel has exactly one path, got n_paths={n_paths}")
        delays, pdp, scale = np.array([0]), np.array([1.0]), 1.0
    elif name == "exponential":
        n_paths = check_int(4 if n_paths is None else n_paths, "n_paths", minimum=1)
        pdp, scale = _exponential_pdp(n_paths)
        delays = np.arange(n_paths)
    else:
        delays, raw = _itu_taps(name, sample_period)
        if n_paths is not None and n_paths != len(delays):
            raise ConfigurationError(f"{name} resolves to {len(delays)} taps, got n_paths={n_paths}")
        scale = 1.0 / raw.sum()
        pdp = raw * scale
    shape = (n_rx, n_tx, len(delays))
    g = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    if name in ITU_DOPPLER_HZ and time_varying:
        # the fading process carries the Rayleigh statistics; gains hold only the tap amplitudes
        g = np.ones(shape, dtype=complex)
        sos_shape = shape + (n_sinusoids,)
        fading = SumOfSinusoids(
            doppler=ITU_DOPPLER_HZ[name] * sample_period,
            angles=rng.uniform(-np.pi, np.pi, sos_shape),
            phases=rng.uniform(-np.pi, np.pi, sos_shape),
        )
    gains = g * np.sqrt(pdp)
    return ChannelRealization(delays=np.asarray(delays), gains=gains, pdp=pdp,
                              pdp_scale=float(scale), profile=name, fading=fading)


def identity_channel(n: int = 2) -> ChannelRealization:
    """Single-path channel with gain matrix eye(n)."""
    return ChannelRealization(delays=np.array([0]), gains=np.eye(n, dtype=complex)[:, :, None],
                              pdp=np.array([1.0]))


def flat_channel(h) -> ChannelRealization:
    """Single-path channel with the given (n_rx, n_tx) gain matrix."""
    h = np.asarray(h, dtype=complex)
    return ChannelRealization(delays=np.array([0]), gains=h[:, :, None], pdp=np.array([1.0]))


def _shift(x: np.ndarray, d: int) -> np.ndarray:
    if d == 0:
        return x
    out = np.zeros_like(x)
    if d < len(x):
        out[d:] = x[:-d]
    return out


def apply_channel(tx, ch: ChannelRealization) -> list[SampleStream]:
    """r_v(m) = sum_f sum_p h_vf(p) s_f(m - delay_p), zero before the first sample."""
    arrays = check_streams(tx)
    if len(arrays) != ch.n_tx:
        raise ConfigurationError(f"channel expects {ch.n_tx} transmit streams, got {len(arrays)}")
    n = len(arrays[0])
    shifted = [[_shift(s, int(d)) for d in ch.delays] for s in arrays]
    fade = ch.fading.evaluate(n) if ch.fading is not None else None
    origin = getattr(tx[0], "origin_index", 0)
    out = []
    for v in range(ch.n_rx):
        r = np.zeros(n, dtype=np.complex128)
        for f in range(ch.n_tx):
            for p in range(ch.n_paths):
                gain = ch.gains[v, f, p] if fade is None else ch.gains[v, f, p] * fade[v, f, p]
                r += gain * shifted[f][p]
        out.append(SampleStream(r, origin_index=origin, antenna_id=v))
    return out


def _with_samples(streams, arrays) -> list[SampleStream]:
    out = []
    for i, (s, a) in enumerate(zip(streams, arrays)):
        if isinstance(s, SampleStream):
            out.append(s.replace(a))
        else:
            out.append(SampleStream(a, antenna_id=i))
    return out


def noise_variance(snr_db: float) -> float:
    """sigma_w^2 such that 10 log10(2 / sigma_w^2) equals ``snr_db``."""
    return 2.0 * 10.0 ** (-snr_db / 10.0)


def add_awgn(streams, snr_db: float, seed=None) -> list[SampleStream]:
    """Add independent circular complex Gaussian noise to every stream."""
    arrays = check_streams(streams)
    if snr_db == np.inf:
        return _with_samples(streams, [a.copy() for a in arrays])
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    scale = np.sqrt(noise_variance(snr_db) / 2.0)
    noisy = []
    for a in arrays:
        w = rng.standard_normal(len(a)) + 1j * rng.standard_normal(len(a))
        noisy.append(a + scale * w)
    return _with_samples(streams, noisy)


def wiener_phase(n_samples: int, beta_t: float, params: OfdmParams, seed=None) -> np.ndarray:
    """Wiener phase trajectory with phi(0) = 0 and step variance 2 pi beta_t / (N + nu)."""
    if not beta_t >= 0:
        raise ConfigurationError(f"phase noise rate must be >= 0, got {beta_t}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    steps = rng.standard_normal(n_samples - 1) * np.sqrt(2 * np.pi * beta_t / params.symbol_length)
    return np.concatenate([[0.0], np.cumsum(steps)])


def apply_phase_noise(streams, beta_t: float, params: OfdmParams, seed=None) -> list[SampleStream]:
    """Rotate all streams by one common oscillator phase, sample m times exp(-j phi(m))."""
    if not beta_t >= 0:
        raise ConfigurationError(f"phase noise rate must be >= 0, got {beta_t}")
    arrays = check_streams(streams)
    if beta_t == 0:
        return _with_samples(streams, [a.copy() for a in arrays])
    rot = np.exp(-1j * wiener_phase(len(arrays[0]), beta_t, params, seed))
    return _with_samples(streams, [a * rot for a in arrays])


def apply_freq_offset(streams, f_ot: float, params: OfdmParams) -> list[SampleStream]:
    """Multiply sample m by exp(j 2 pi f_oT m / (N + nu))."""
    arrays = check_streams(streams)
    if f_ot == 0:
        return _with_samples(streams, [a.copy() for a in arrays])
    m = np.arange(len(arrays[0]))
    rot = np.exp(2j * np.pi * f_ot * m / params.symbol_length)
    return _with_samples(streams, [a * rot for a in arrays])


def apply_timing_offset(streams, epsilon: float) -> list[SampleStream]:
    """Two-tap fractional delay: out(m) = (1 - eps) in(m) + eps in(m - 1)."""
    if not 0.0 <= epsilon <= 0.5:
        raise ConfigurationError(f"timing offset must lie in [0, 0.5], got {epsilon}")
    arrays = check_streams(streams)
    return _with_samples(streams, [(1 - epsilon) * a + epsilon * _shift(a, 1) for a in arrays])


def impair(streams, spec: ImpairmentSpec, params: OfdmParams, seed=None) -> list[SampleStream]:
    """Apply timing offset, frequency offset, phase noise and AWGN, in that order."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    pn_rng, noise_rng = rng.spawn(2)
    out = streams
    if spec.timing_offset:
        out = apply_timing_offset(out, spec.timing_offset)
    if spec.freq_offset:
        out = apply_freq_offset(out, spec.freq_offset, params)
    if spec.phase_noise_rate:
        out = apply_phase_noise(out, spec.phase_noise_rate, params, pn_rng)
    return add_awgn(out, spec.snr_db, noise_rng)


__all__ = [
    "ChannelRealization", "ImpairmentSpec", "SumOfSinusoids", "add_awgn", "apply_channel",
    "apply_freq_offset", "apply_phase_noise", "apply_timing_offset", "draw_channel",
    "flat_channel", "identity_channel", "impair", "noise_variance", "wiener_phase",
]
