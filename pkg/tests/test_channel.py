import numpy as np
import pytest

from stbcid import (
    ConfigurationError, ImpairmentSpec, OfdmParams, SampleStream, add_awgn, apply_channel,
    apply_freq_offset, apply_phase_noise, apply_timing_offset, draw_channel, flat_channel,
    identity_channel, impair,
)
from stbcid.channel import ITU_PROFILES, noise_variance, wiener_phase


def rand_streams(n=512, k=2, seed=0):
    rng = np.random.default_rng(seed)
    return [SampleStream(rng.standard_normal(n) + 1j * rng.standard_normal(n), origin_index=-8, antenna_id=i)
            for i in range(k)]


class TestDrawChannel:
    def test_flat(self):
        ch = draw_channel(profile="flat", seed=0)
        assert ch.n_paths == 1 and ch.gains.shape == (2, 2, 1)
        assert list(ch.delays) == [0]

    def test_flat_rejects_paths(self):
        with pytest.raises(ConfigurationError):
            draw_channel(3, "flat")

    def test_exponential_profile(self):
        ch = draw_channel(4, "exponential", seed=0)
        ratios = np.exp(-np.arange(4) / 5)
        assert np.allclose(ch.pdp, ratios / ratios.sum())
        assert ch.pdp_scale == pytest.approx(1 / ratios.sum())
        assert list(ch.delays) == [0, 1, 2, 3]

    def test_empirical_power(self):
        rng = np.random.default_rng(1)
        pdp = draw_channel(4, "exp", 0).pdp
        # 25 draws of 4000 links each: 1e5 i.i.d. realizations per path
        big = np.concatenate([draw_channel(4, "exp", rng, n_rx=20, n_tx=200).gains.reshape(-1, 4)
                              for _ in range(25)])
        assert len(big) == 100_000
        assert np.allclose(np.mean(np.abs(big) ** 2, axis=0), pdp, rtol=0.02)
        assert abs(np.mean(big)) < 0.01

    def test_unknown_profile(self):
        with pytest.raises(ConfigurationError):
            draw_channel(profile="rician")

    @pytest.mark.parametrize("name", ["peda", "veha"])
    def test_itu(self, name):
        ch = draw_channel(profile=name, seed=2)
        assert ch.delays[0] == 0 and np.all(np.diff(ch.delays) > 0)
        assert ch.pdp.sum() == pytest.approx(1.0)
        assert ch.fading is not None
        fade = ch.fading.evaluate(1000)
        assert fade.shape == (2, 2, ch.n_paths, 1000)
        static = draw_channel(profile=name, seed=2, time_varying=False)
        assert static.fading is None
        assert set(ITU_PROFILES) >= {ch.profile}


class TestApplyChannel:
    def test_identity(self):
        tx = rand_streams()
        rx = apply_channel(tx, identity_channel())
        for a, b in zip(tx, rx):
            assert np.array_equal(a.samples, b.samples)
            assert b.origin_index == a.origin_index

    def test_linear_in_gain(self):
        tx = rand_streams()
        h = np.array([[1 + 1j, 0.5], [-0.2j, 2]])
        r1 = apply_channel(tx, flat_channel(h))
        r2 = apply_channel(tx, flat_channel(3 * h))
        assert np.allclose(r2[0].samples, 3 * r1[0].samples)
        assert np.allclose(r1[1].samples, h[1, 0] * tx[0].samples + h[1, 1] * tx[1].samples)

    def test_two_path_convolution(self):
        tx = rand_streams(200)
        ch = draw_channel(2, "exp", seed=4, n_rx=3)
        rx = apply_channel(tx, ch)
        assert len(rx) == 3
        for v in range(3):
            ref = np.zeros(200, complex)
            for f in range(2):
                taps = np.zeros(2, complex)
                taps[ch.delays] = ch.gains[v, f]
                ref += np.convolve(tx[f].samples, taps)[:200]
            assert np.allclose(rx[v].samples, ref, atol=1e-13)

    def test_tx_count(self):
        with pytest.raises(ConfigurationError):
            apply_channel(rand_streams(k=3), identity_channel())


class TestNoise:
    def test_variance_definition(self):
        assert noise_variance(3.0103) == pytest.approx(1.0, rel=1e-4)

    def test_infinite_snr(self):
        tx = rand_streams()
        out = add_awgn(tx, np.inf, seed=0)
        assert np.array_equal(out[0].samples, tx[0].samples)

    def test_empirical_variance_and_independence(self):
        z = [SampleStream(np.zeros(1_000_000))] * 2
        out = add_awgn(z, 0.0, seed=3)
        w0, w1 = out[0].samples, out[1].samples
        assert np.var(w0) == pytest.approx(2.0, rel=0.01)
        assert abs(np.mean(w0 * np.conj(w1))) / 2.0 < 5 / np.sqrt(len(w0))
        assert abs(np.mean(w0 * w0)) / 2.0 < 5 / np.sqrt(len(w0))


class TestPhaseNoise:
    p = OfdmParams()

    def test_zero_identity(self):
        tx = rand_streams()
        out = apply_phase_noise(tx, 0.0, self.p, seed=0)
        assert np.array_equal(out[1].samples, tx[1].samples)

    def test_negative(self):
        with pytest.raises(ConfigurationError):
            apply_phase_noise(rand_streams(), -1e-5, self.p)

    def test_increment_variance(self):
        beta, m0 = 1e-3, 36
        rng = np.random.default_rng(0)
        phis = np.stack([wiener_phase(400, beta, self.p, rng) for _ in range(4000)])
        inc = phis[:, 100 + m0] - phis[:, 100]
        expected = 2 * np.pi * beta * m0 / self.p.symbol_length
        assert np.var(inc) == pytest.approx(expected, rel=0.07)
        assert np.all(phis[:, 0] == 0)

    def test_common_and_unit_modulus(self):
        tx = rand_streams()
        out = apply_phase_noise(tx, 1e-3, self.p, seed=5)
        rot0 = out[0].samples / tx[0].samples
        rot1 = out[1].samples / tx[1].samples
        assert np.allclose(np.abs(rot0), 1.0)
        assert np.allclose(rot0, rot1)


class TestOffsets:
    p = OfdmParams()

    def test_freq_zero(self):
        tx = rand_streams()
        assert np.array_equal(apply_freq_offset(tx, 0.0, self.p)[0].samples, tx[0].samples)

    def test_freq_symbol_advance(self):
        ones = [SampleStream(np.ones(300))] * 2
        out = apply_freq_offset(ones, 0.01, self.p)[0].samples
        assert np.angle(out[72] / out[0]) == pytest.approx(2 * np.pi * 0.01)

    def test_freq_tone_shift(self):
        n = 72 * 64
        tone = [SampleStream(np.exp(2j * np.pi * 5 * np.arange(n) / n))] * 2
        f_ot = 72 * 3 / n  # three bins
        out = apply_freq_offset(tone, f_ot, self.p)[0].samples
        assert np.argmax(np.abs(np.fft.fft(out))) == 8

    def test_timing(self):
        imp = np.zeros(8)
        imp[0] = 1
        out = apply_timing_offset([SampleStream(imp)] * 2, 0.3)[0].samples
        assert np.allclose(out[:3], [0.7, 0.3, 0])
        assert np.array_equal(apply_timing_offset([SampleStream(imp)] * 2, 0.0)[0].samples, imp)
        dc = apply_timing_offset([SampleStream(np.ones(8))] * 2, 0.5)[0].samples
        assert np.allclose(dc[1:], 1.0)

    @pytest.mark.parametrize("eps", [-0.1, 0.6])
    def test_timing_range(self, eps):
        with pytest.raises(ConfigurationError):
            apply_timing_offset(rand_streams(), eps)
        with pytest.raises(ConfigurationError):
            ImpairmentSpec(timing_offset=eps)

    def test_spec_validation(self):
        with pytest.raises(ConfigurationError):
            ImpairmentSpec(snr_db=float("nan"))
        with pytest.raises(ConfigurationError):
            ImpairmentSpec(phase_noise_rate=-1.0)


class TestImpair:
    def test_scaling_commutes(self):
        p = OfdmParams()
        tx = rand_streams()
        spec = ImpairmentSpec(np.inf, 1e-4, 1e-3, 0.2)
        a = impair(tx, spec, p, seed=1)
        b = impair([s.replace(2.5 * s.samples) for s in tx], spec, p, seed=1)
        assert np.allclose(b[0].samples, 2.5 * a[0].samples)

    def test_inputs_untouched(self):
        tx = rand_streams()
        before = tx[0].samples.copy()
        impair(tx, ImpairmentSpec(0.0, 1e-3, 1e-3, 0.3), OfdmParams(), seed=0)
        assert np.array_equal(tx[0].samples, before)
