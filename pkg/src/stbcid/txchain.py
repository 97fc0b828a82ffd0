"""SM-OFDM and AL-OFDM baseband transmit chain.

Data blocks are space-time encoded, OFDM modulated with an IFFT, extended
with a cyclic prefix/postfix and raised-cosine edges, and overlap-added into
one sample stream per transmit antenna.

Sample indexing follows the usual OFDM convention: inside a windowed symbol
``z`` the index ``n`` runs from ``-nu`` to ``N + N_W - 1`` and the useful part
occupies ``0 .. N-1``. In a serialized stream, block ``b`` has its useful part
starting at absolute index ``b * (N + nu)``; the first stored sample is
absolute index ``-nu`` (``SampleStream.origin_index``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._validation import check_int
from .exceptions import ConfigurationError, ShapeError


class StbcScheme(str, enum.Enum):
    """Space-time block code used by the two transmit antennas."""

    SM = "SM"
    AL = "AL"

    @property
    def block_span(self) -> int:
        """Number of OFDM symbol instants one code matrix occupies (U)."""
        return 1 if self is StbcScheme.SM else 2

    @classmethod
    def parse(cls, value) -> "StbcScheme":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ConfigurationError(f"unknown STBC scheme {value!r}; expected 'SM' or 'AL'") from None


@dataclass(frozen=True)
class OfdmParams:
    """OFDM numerology.

    Parameters
    ----------
    n_subcarriers : int
        FFT size N.
    n_guard : int
        Cyclic prefix length N_G, excluding the window transition.
    n_window : int
        Raised-cosine transition length N_W. The effective prefix is
        ``nu = n_guard + n_window``.
    """

    n_subcarriers: int = 64
    n_guard: int = 6
    n_window: int = 2

    def __post_init__(self):
        n = check_int(self.n_subcarriers, "n_subcarriers", minimum=2)
        check_int(self.n_guard, "n_guard", minimum=0)
        n_w = check_int(self.n_window, "n_window", minimum=0)
        nu = self.nu
        if n % 2 or nu % 2:
            raise ConfigurationError(f"N and nu must be even, got N={n}, nu={nu}")
        if not nu < n / 2:
            raise ConfigurationError(f"nu={nu} must be smaller than N/2={n / 2}")
        if not 2 * (n_w - 1) < n:
            raise ConfigurationError(f"2*(N_W-1)={2 * (n_w - 1)} must be smaller than N={n}")

    @classmethod
    def from_nu(cls, n_subcarriers: int, nu: int, n_window: int) -> "OfdmParams":
        if nu < n_window:
            raise ConfigurationError(f"nu={nu} cannot be smaller than N_W={n_window}")
        return cls(n_subcarriers, nu - n_window, n_window)

    @property
    def nu(self) -> int:
        return self.n_guard + self.n_window

    @property
    def symbol_length(self) -> int:
        """Samples per OFDM symbol on air, N + nu."""
        return self.n_subcarriers + self.nu

    @property
    def cycle_period(self) -> int:
        """Fundamental period 2(N + nu) of the AL-OFDM correlation."""
        return 2 * self.symbol_length

    @property
    def alpha0(self) -> float:
        return 1.0 / self.cycle_period

    @property
    def window_indices(self) -> np.ndarray:
        return np.arange(-self.nu, self.n_subcarriers + self.n_window)

    @cached_property
    def window(self) -> np.ndarray:
        """Window coefficients W_n for n = -nu .. N+N_W-1 (array position n + nu).

        The rising edge is ``0.5 * (1 - cos(pi * (n + nu + 0.5) / N_W))`` for the
        first N_W samples, the falling edge over n = N .. N+N_W-1 is its mirror
        image ``0.5 * (1 + cos(pi * (n - N + 0.5) / N_W))``, and the window is 1 in
        between. Rising and falling samples that overlap in a serialized stream
        sum to exactly one.
        """
        n_w = self.n_window
        w = np.ones(self.n_subcarriers + n_w + self.nu)
        if n_w:
            k = (np.arange(n_w) + 0.5) / n_w
            w[:n_w] = 0.5 * (1.0 - np.cos(np.pi * k))
            w[-n_w:] = 0.5 * (1.0 + np.cos(np.pi * k))
        w.setflags(write=False)
        return w

    def w(self, n: int) -> float:
        """Window coefficient at symbol index ``n``; zero outside the support."""
        if -self.nu <= n < self.n_subcarriers + self.n_window:
            return float(self.window[n + self.nu])
        return 0.0


@dataclass(frozen=True)
class ConstellationSpec:
    """Unit-energy PSK or square QAM alphabet."""

    family: str = "PSK"
    order: int = 4
    power: float = 1.0

    def __post_init__(self):
        family = str(self.family).upper()
        object.__setattr__(self, "family", family)
        order = self.order
        if isinstance(order, bool) or int(order) != order or order < 4:
            raise ConfigurationError(f"constellation order must be an integer >= 4, got {order!r}")
        if family == "PSK":
            if order & (order - 1):
                raise ConfigurationError(f"PSK order must be a power of two, got {order}")
        elif family == "QAM":
            side = int(round(np.sqrt(order)))
            if side * side != order or side & (side - 1):
                raise ConfigurationError(f"QAM order must be a square power of two, got {order}")
        else:
            raise ConfigurationError(f"unknown constellation family {self.family!r}")
        if not self.power > 0:
            raise ConfigurationError(f"symbol power must be positive, got {self.power}")

    @cached_property
    def alphabet(self) -> np.ndarray:
        if self.family == "PSK":
            # offset by pi/order so that QPSK is (+-1 +-1j)/sqrt(2)
            pts = np.exp(1j * (2 * np.pi * np.arange(self.order) + np.pi) / self.order)
        else:
            side = int(round(np.sqrt(self.order)))
            levels = np.arange(-side + 1, side, 2, dtype=float)
            pts = (levels[:, None] + 1j * levels[None, :]).ravel()
        pts = pts * np.sqrt(self.power / np.mean(np.abs(pts) ** 2))
        pts.setflags(write=False)
        return pts


QPSK = ConstellationSpec("PSK", 4)


@dataclass
class SampleStream:
    """Complex baseband samples of one antenna.

    ``origin_index`` is the absolute sample index of ``samples[0]``.
    """

    samples: np.ndarray
    origin_index: int = 0
    antenna_id: int = 0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128)

    def __len__(self) -> int:
        return len(self.samples)

    def replace(self, samples) -> "SampleStream":
        return SampleStream(samples, self.origin_index, self.antenna_id)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def generate_data_blocks(n_blocks: int, constellation: ConstellationSpec = QPSK, seed=None,
                         n_subcarriers: int = 64) -> np.ndarray:
    """Draw ``n_blocks`` blocks of ``n_subcarriers`` i.i.d. constellation symbols.

    Returns an array of shape ``(n_blocks, n_subcarriers)``.
    """
    n_blocks = check_int(n_blocks, "n_blocks", minimum=1)
    if not isinstance(constellation, ConstellationSpec):
        raise ConfigurationError(f"expected a ConstellationSpec, got {constellation!r}")
    idx = _rng(seed).integers(0, constellation.order, size=(n_blocks, n_subcarriers))
    return constellation.alphabet[idx]


def stbc_encode(d_even, d_odd, scheme) -> np.ndarray:
    """Map a pair of data blocks onto the code matrix of ``scheme``.

    Works on the last axis, so stacks of block pairs are encoded at once. The
    result has shape ``(..., 2, U*N)``; row ``f`` is what antenna ``f`` sends
    over the U block instants.
    """
    scheme = StbcScheme.parse(scheme)
    d_even = np.asarray(d_even)
    d_odd = np.asarray(d_odd)
    if d_even.shape != d_odd.shape:
        raise ShapeError(f"data blocks differ in shape: {d_even.shape} vs {d_odd.shape}")
    if scheme is StbcScheme.SM:
        return np.stack([d_even, d_odd], axis=-2)
    ant0 = np.concatenate([d_even, -np.conj(d_odd)], axis=-1)
    ant1 = np.concatenate([d_odd, np.conj(d_even)], axis=-1)
    return np.stack([ant0, ant1], axis=-2)


def ifft_block(c) -> np.ndarray:
    """Unitary IFFT along the last axis: x(n) = N^-1/2 sum_k c(k) exp(+j 2 pi n k / N)."""
    c = np.asarray(c)
    return np.fft.ifft(c, axis=-1, norm="ortho")


def apply_window_cp(x, params: OfdmParams) -> np.ndarray:
    """Extend OFDM symbols with prefix and postfix and apply the window.

    Output position ``i`` holds ``z(n)`` for ``n = i - nu``, with
    ``z(n) = W_n * x(n mod N)``.
    """
    x = np.asarray(x)
    if x.shape[-1] != params.n_subcarriers:
        raise ShapeError(f"symbol length {x.shape[-1]} != N={params.n_subcarriers}")
    idx = np.mod(params.window_indices, params.n_subcarriers)
    return x[..., idx] * params.window


def serialize(blocks, params: OfdmParams, antenna_id: int = 0) -> SampleStream:
    """Overlap-add windowed symbols into a continuous stream.

    ``blocks`` has shape ``(n_symbols, N + N_W + nu)`` in transmission order.
    The postfix of each symbol is added onto the rising edge of the next one.
    The stream holds ``n_symbols * (N + nu)`` samples starting at absolute
    index ``-nu``; the postfix of the final symbol falls past the end and is
    dropped.
    """
    z = np.asarray(blocks)
    length = params.n_subcarriers + params.n_window + params.nu
    if z.ndim != 2 or z.shape[1] != length:
        raise ShapeError(f"expected blocks of shape (n_symbols, {length}), got {z.shape}")
    step = params.symbol_length
    n_w = params.n_window
    out = z[:, :step].astype(np.complex128, copy=True)
    if n_w and len(z) > 1:
        out[1:, :n_w] += z[:-1, step:]
    return SampleStream(out.ravel(), origin_index=-params.nu, antenna_id=antenna_id)


def transmit(scheme, n_symbols: int, params: OfdmParams = OfdmParams(),
             constellation: ConstellationSpec = QPSK, seed=None) -> list[SampleStream]:
    """Generate the two transmit streams of ``n_symbols`` OFDM symbols each.

    SM consumes ``2 * n_symbols`` data blocks, AL consumes ``n_symbols`` blocks
    and needs an even ``n_symbols``.
    """
    scheme = StbcScheme.parse(scheme)
    n_symbols = check_int(n_symbols, "n_symbols", minimum=1)
    u = scheme.block_span
    if n_symbols % u:
        raise ConfigurationError(f"AL requires an even number of OFDM symbols, got {n_symbols}")
    n_code = n_symbols // u
    d = generate_data_blocks(2 * n_code, constellation, seed, params.n_subcarriers)
    code = stbc_encode(d[0::2], d[1::2], scheme)  # (n_code, 2, U*N)
    streams = []
    for f in range(2):
        symbols = code[:, f, :].reshape(n_symbols, params.n_subcarriers)
        z = apply_window_cp(ifft_block(symbols), params)
        streams.append(serialize(z, params, antenna_id=f))
    return streams
