from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stbcid import (
    ConfigurationError, DomainError, OfdmParams, SampleStream, ShapeError, analytical_ccf_flat,
    compute_delay_sets, cycle_frequencies, estimate_ccf, estimate_grid, estimate_null_sigma,
    phase_noise_scaling, stbc_encode, transmit,
)
from stbcid.cyclostat import analytical_grid_flat, phase_noise_scaling_quoted, phase_noise_scaling_text
from stbcid.txchain import apply_window_cp, ifft_block, serialize


def brute_ccf(r0, r1, alpha, tau):
    """Direct O(M) summation, one term at a time, with zero padding."""
    m_r = len(r0)
    acc = 0j
    for m in range(m_r):
        if 0 <= m + tau < m_r:
            acc += complex(r0[m]) * complex(r1[m + tau]) * np.exp(-2j * np.pi * ((alpha * m) % 1.0))
    return acc / m_r


def enumerate_delay_sets(n, nu, n_w):
    """Count, per even |tau|, the q in {0, 1, 2} whose window indices both fall in the support."""
    counts = {}
    for mag in range(0, 3 * n + 4 * nu, 2):
        k = 0
        for q in range(3):
            a2, b2 = q * n - mag + n + nu, q * n + mag - n - nu
            if a2 % 2 or b2 % 2:
                continue
            a, b = a2 // 2, b2 // 2
            if -nu <= a < n + n_w and -nu <= b < n + n_w:
                k += 1
        counts[mag] = k
    return counts


def random_params(rng):
    while True:
        n = int(rng.choice([16, 32, 64, 128]))
        nu = int(rng.integers(1, n // 4)) * 2
        n_w = int(rng.integers(0, nu + 1))
        try:
            return OfdmParams.from_nu(n, nu, n_w)
        except ConfigurationError:
            continue


def al_linear_maps(params, n_code):
    """Matrices A, B with stream = A d + B conj(d) for the AL transmitter."""
    n = params.n_subcarriers
    n_data = 2 * n_code * n

    def streams(d):
        d = d.reshape(2 * n_code, n)
        code = stbc_encode(d[0::2], d[1::2], "AL")
        out = []
        for f in range(2):
            sym = code[:, f, :].reshape(2 * n_code, n)
            out.append(serialize(apply_window_cp(ifft_block(sym), params), params).samples)
        return np.stack(out)

    length = 2 * n_code * params.symbol_length
    a = np.zeros((2, length, n_data), complex)
    b = np.zeros((2, length, n_data), complex)
    for i in range(n_data):
        e = np.zeros(n_data, complex)
        e[i] = 1
        s1, sj = streams(e), streams(1j * e)
        a[:, :, i] = (s1 - 1j * sj) / 2
        b[:, :, i] = (s1 + 1j * sj) / 2
    return a, b


def expected_flat_ccf(h, params, alphas, taus, n_code=5):
    """Fourier coefficients of E[r0(m) r1(m + tau)] over one period in the middle of the stream."""
    a, b = al_linear_maps(params, n_code)
    r_a = np.einsum("vf,fmi->vmi", h, a)
    r_b = np.einsum("vf,fmi->vmi", h, b)
    period = params.cycle_period
    start = 2 * period  # away from both stream ends
    m_idx = np.arange(start, start + period)
    m_abs = m_idx - params.nu
    out = np.zeros((len(alphas), len(taus)), complex)
    for k, tau in enumerate(taus):
        c = np.sum(r_a[0, m_idx] * r_b[1, m_idx + tau] + r_b[0, m_idx] * r_a[1, m_idx + tau], axis=1)
        for i, alpha in enumerate(alphas):
            out[i, k] = np.mean(c * np.exp(-2j * np.pi * alpha * m_abs))
    return out


class TestDelaySets:
    def test_small_example(self):
        s = compute_delay_sets(OfdmParams.from_nu(32, 4, 1))
        assert s.i0 == frozenset(range(28, 45, 2)) and len(s.i0) == 9
        assert s.i1 == frozenset(range(4, 69, 2))
        assert s.i2 == frozenset({36})
        assert s.zeta == 34

    def test_default(self):
        s = compute_delay_sets(OfdmParams())
        mags = np.abs(s.feature_delays)
        assert mags.min() == 56 and mags.max() == 88
        assert s.zeta == 66 == 8 * 8 + 2
        assert s.i2 < s.i0 < s.i1
        assert list(s.noise_delays) == list(range(145, 217))

    def test_rejects_non_params(self):
        with pytest.raises(ConfigurationError):
            compute_delay_sets((64, 6, 2))

    def test_enumeration_oracle(self):
        rng = np.random.default_rng(20)
        for _ in range(20):
            p = random_params(rng)
            s = compute_delay_sets(p)
            counts = enumerate_delay_sets(p.n_subcarriers, p.nu, p.n_window)
            assert s.i1 == frozenset(m for m, k in counts.items() if k >= 1)
            assert s.i0 == frozenset(m for m, k in counts.items() if k >= 2)
            assert s.i2 == frozenset(m for m, k in counts.items() if k >= 3)
            assert set(np.abs(s.feature_delays)) == set(range(p.n_subcarriers - p.nu, p.n_subcarriers + 3 * p.nu + 1))
            assert len(s.feature_delays) == 8 * p.nu + 2


class TestEstimator:
    def test_zero_streams(self):
        z = np.zeros(100)
        assert estimate_ccf(z, z, 0.1, 3) == 0

    @pytest.mark.parametrize("tau", [0, 1, 7, 99, 100, 150])
    def test_constant(self, tau):
        one = np.ones(100)
        assert estimate_ccf(one, one, 0.0, tau) == pytest.approx(max(100 - tau, 0) / 100)

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            estimate_ccf(np.ones(10), np.ones(11), 0, 0)

    @given(st.integers(0, 2 ** 32 - 1), st.integers(-40, 40), st.sampled_from([0, 1, -1, 2, -3]))
    @settings(max_examples=40, deadline=None)
    def test_brute_force_oracle(self, seed, tau, ell):
        rng = np.random.default_rng(seed)
        r0 = rng.standard_normal(300) + 1j * rng.standard_normal(300)
        r1 = rng.standard_normal(300) + 1j * rng.standard_normal(300)
        alpha = ell / 144
        got = estimate_ccf(r0, r1, alpha, tau)
        ref = brute_ccf(r0, r1, alpha, tau)
        assert abs(got - ref) <= 1e-12 * max(abs(ref), 1e-3)

    def test_grid_bit_identical(self):
        rng = np.random.default_rng(0)
        r0 = rng.standard_normal(2000) + 1j * rng.standard_normal(2000)
        r1 = rng.standard_normal(2000) + 1j * rng.standard_normal(2000)
        p = OfdmParams()
        cfs = cycle_frequencies(p)
        delays = compute_delay_sets(p).feature_delays
        g = estimate_grid(r0, r1, cfs, delays)
        assert len(g) == 198
        for i, a in enumerate(cfs):
            for k, t in enumerate(delays):
                assert g.values[i, k] == estimate_ccf(r0, r1, a, t)
        assert g[(cfs[1], delays[3])] == g.values[1, 3]
        assert g.entries[(float(cfs[2]), int(delays[0]))] == g.values[2, 0]

    def test_single_cf_grid(self):
        p = OfdmParams.from_nu(32, 4, 1)
        x = np.ones(500)
        g = estimate_grid(x, x, [0.0], compute_delay_sets(p).feature_delays)
        assert len(g) == 34

    def test_empty_grid(self):
        with pytest.raises(ConfigurationError):
            estimate_grid(np.ones(10), np.ones(10), [], [1])
        with pytest.raises(ConfigurationError):
            estimate_grid(np.ones(10), np.ones(10), [0.0], [])

    def test_time_shift(self):
        rng = np.random.default_rng(1)
        n, m0 = 4000, 7
        r0 = rng.standard_normal(n + m0) + 1j * rng.standard_normal(n + m0)
        r1 = rng.standard_normal(n + m0) + 1j * rng.standard_normal(n + m0)
        alpha, tau = 1 / 144, 20
        a = estimate_ccf(r0[m0:], r1[m0:], alpha, tau)
        b = estimate_ccf(r0[:n], r1[:n], alpha, tau)
        # shifting the record start by m0 rotates the estimate by exp(-j 2 pi alpha m0), up to edge terms
        direct = sum(r0[m] * r1[m + tau] * np.exp(-2j * np.pi * alpha * (m - m0)) for m in range(m0, n + m0 - tau)) / n
        assert a == pytest.approx(direct, abs=1e-12)
        assert abs(abs(a) - abs(b)) <= np.max(np.abs(r0 * r1)) * (m0 + tau) / n * 2

    def test_negative_alpha_matches_oracle(self):
        rng = np.random.default_rng(2)
        r0 = rng.standard_normal(500) + 1j * rng.standard_normal(500)
        r1 = rng.standard_normal(500) + 1j * rng.standard_normal(500)
        assert estimate_ccf(r0, r1, -1 / 144, -12) == pytest.approx(brute_ccf(r0, r1, -1 / 144, -12), abs=1e-14)

    def test_sample_stream_input(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(50) + 0j
        assert estimate_ccf(SampleStream(x), SampleStream(x), 0, 2) == estimate_ccf(x, x, 0, 2)

    def test_sm_mean_vanishes(self):
        p = OfdmParams()
        vals = []
        for seed in range(30):
            tx = transmit("SM", 200, p, seed=seed)
            vals.append(estimate_ccf(tx[0], tx[1], 0.0, 64))
        vals = np.array(vals)
        sigma = np.sqrt(np.mean(np.abs(vals) ** 2))
        assert abs(vals.mean()) < 3 * sigma / np.sqrt(len(vals))


class TestNullSigma:
    def test_constant(self):
        assert estimate_null_sigma(np.full(10, 0.3 + 0.4j)) == pytest.approx(0.5)

    def test_rayleigh_consistency(self):
        rng = np.random.default_rng(4)
        sigma = 0.7
        k = 3 * 72
        c = sigma / np.sqrt(2) * (rng.standard_normal(k) + 1j * rng.standard_normal(k))
        assert estimate_null_sigma(c) == pytest.approx(sigma, rel=0.05)

    def test_scale(self):
        rng = np.random.default_rng(5)
        c = rng.standard_normal(50) + 1j * rng.standard_normal(50)
        assert estimate_null_sigma(2 * c) == pytest.approx(2 * estimate_null_sigma(c))

    def test_grid_inputs(self):
        g = estimate_grid(np.ones(300), np.ones(300), [0.0], [1, 2])
        assert estimate_null_sigma(g) == estimate_null_sigma([g]) == estimate_null_sigma(g.values)

    def test_empty(self):
        with pytest.raises(ConfigurationError):
            estimate_null_sigma(np.array([]))


class TestAnalytical:
    p = OfdmParams.from_nu(32, 4, 1)

    def test_outside_i1(self):
        assert analytical_ccf_flat(np.eye(2), self.p, 1.0, 0, 0) == 0
        assert analytical_ccf_flat(np.eye(2), self.p, 1.0, 0, 70) == 0

    def test_rank_one(self):
        h = np.outer([1, 2j], [0.5, -1])
        for tau in range(-70, 71):
            assert analytical_ccf_flat(h, self.p, 1.0, Fraction(1, 72), tau) == 0

    def test_i2_example(self):
        # window indices {0, 16, 32} for q = 0, 1, 2: W = 1, 1 and W_32 = W_N = 0.5
        got = analytical_ccf_flat(np.eye(2), self.p, 1.0, 0, 36)
        w = self.p.w
        expected = (w(0) * w(0) + w(16) * w(16) + w(32) * w(32)) / 72
        assert w(32) == pytest.approx(0.5)
        assert got == pytest.approx(expected)
        assert got == pytest.approx(2.25 / 72)

    def test_sign_and_parity(self):
        h = np.array([[1, 0.3], [0.2j, 1]])
        assert analytical_ccf_flat(h, self.p, 1.0, 0, 31) == 0
        assert analytical_ccf_flat(h, self.p, 1.0, 0, -30) == pytest.approx(-analytical_ccf_flat(h, self.p, 1.0, 0, 30)
                                                                             * np.exp(0))

    def test_off_lattice(self):
        with pytest.raises(DomainError):
            analytical_ccf_flat(np.eye(2), self.p, 1.0, 0.001, 36)
        with pytest.raises(DomainError):
            analytical_ccf_flat(np.eye(2), self.p, 1.0, Fraction(1, 7), 36)

    def test_bad_shape(self):
        with pytest.raises(ShapeError):
            analytical_ccf_flat(np.eye(3), self.p, 1.0, 0, 36)

    @pytest.mark.parametrize("params", [OfdmParams.from_nu(16, 4, 1), OfdmParams.from_nu(16, 4, 2),
                                        OfdmParams.from_nu(32, 4, 0), OfdmParams.from_nu(16, 6, 3)])
    def test_expectation_oracle(self, params):
        rng = np.random.default_rng(6)
        h = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / np.sqrt(2)
        alphas = [Fraction(l, params.cycle_period) for l in (0, 1, -1, 2, 3)]
        span = 2 * params.n_subcarriers + 4 * params.nu
        taus = list(range(-span, span + 1))
        ref = expected_flat_ccf(h, params, [float(a) for a in alphas], taus)
        grid = analytical_grid_flat(h, params, alphas, taus)
        assert np.max(np.abs(grid.values - ref)) < 1e-12

    def test_estimate_converges(self):
        from stbcid import apply_channel, flat_channel

        p = self.p
        h = np.array([[1.0, 0.4j], [-0.3, 0.9 + 0.2j]])
        tx = transmit("AL", 20000, p, seed=8)
        rx = apply_channel(tx, flat_channel(h))
        alpha = 1 / p.cycle_period
        noise = estimate_grid(rx[0], rx[1], [alpha], compute_delay_sets(p).noise_delays)
        sigma = estimate_null_sigma(noise)
        for tau in (28, 36, -40, 50, -66):
            est = estimate_ccf(rx[0], rx[1], alpha, tau)
            # the estimator indexes the stored samples from 0, the model from the first symbol start
            est *= np.exp(2j * np.pi * alpha * p.nu)
            ref = analytical_ccf_flat(h, p, 1.0, Fraction(1, p.cycle_period), tau)
            assert abs(est - ref) < 5 * sigma


class TestPhaseNoiseScaling:
    def test_limit(self):
        assert phase_noise_scaling(0.0, 2000) == 1.0
        assert phase_noise_scaling(1e-12, 2000) == pytest.approx(1.0, abs=1e-7)

    def test_monotone(self):
        vals = [phase_noise_scaling(b, 2000) for b in np.logspace(-7, -2, 30)]
        assert all(x > y for x, y in zip(vals, vals[1:]))

    def test_odd(self):
        with pytest.raises(ConfigurationError):
            phase_noise_scaling(1e-5, 2001)
        with pytest.raises(ConfigurationError):
            phase_noise_scaling(-1e-5, 2000)

    def test_forms(self):
        b, ns = 1e-5, 2000
        displayed = 2 / ns * (1 - np.exp(-4 * ns * np.pi * b)) / (1 - np.exp(-8 * np.pi * b))
        assert phase_noise_scaling(b, ns) == pytest.approx(displayed, rel=1e-12)
        assert phase_noise_scaling(b, ns) == pytest.approx(0.8843, abs=1e-4)
        assert phase_noise_scaling_text(1e-5, 2000) == pytest.approx(0.940, abs=1e-3)
        quoted = [phase_noise_scaling_quoted(b, 2000) for b in (1e-5, 3e-5, 1e-4)]
        # agrees with the quoted values up to last-digit truncation
        assert quoted == pytest.approx([0.9692, 0.9114, 0.7426], abs=2e-4)
