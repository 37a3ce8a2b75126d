import math

import numpy as np
import pytest

from sp8d import channel, modem
from sp8d.channel import add_awgn, frame_stream, observations, snr_to_sigma


class TestSnrToSigma:
    @pytest.mark.parametrize("snr_db,sigma", [
        (0.0, math.sqrt(0.5)),
        (10.0, math.sqrt(0.05)),
        (-10.0, math.sqrt(5.0)),
    ])
    def test_convention(self, snr_db, sigma):
        assert snr_to_sigma(snr_db) == pytest.approx(sigma, rel=1e-12)


class TestAddAwgn:
    def test_noiseless_identity(self):
        frame = np.linspace(-1, 1, 8)
        out = add_awgn(frame, 0.0, frame_stream(1, 0))
        np.testing.assert_array_equal(out, frame)

    def test_deterministic_per_frame(self):
        frame = np.ones(8)
        a = add_awgn(frame, 0.3, frame_stream(42, 17))
        b = add_awgn(frame, 0.3, frame_stream(42, 17))
        np.testing.assert_array_equal(a, b)

    def test_distinct_frames_distinct_noise(self):
        frame = np.zeros(8)
        a = add_awgn(frame, 1.0, frame_stream(42, 0))
        b = add_awgn(frame, 1.0, frame_stream(42, 1))
        assert not np.array_equal(a, b)

    def test_noise_statistics(self):
        # Law of large numbers over 1e6 draws at sigma = 1.
        stream = frame_stream(7, 0)
        noise = add_awgn(np.zeros((125_000, 8)), 1.0, stream)
        assert np.all(np.abs(noise.mean(axis=0)) < 0.01)
        assert np.all(np.abs(noise.var(axis=0) - 1.0) < 0.02)

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValueError):
            add_awgn(np.zeros(8), -1.0, frame_stream(1, 0))


class TestObservations:
    def test_zero_sample_is_erasure(self):
        assert observations(np.zeros(8), 1.0)[0] == 0.0

    def test_unit_case(self):
        # y = a at sigma^2 = 1 gives L = 2 a^2 = 1.
        got = observations(np.full(8, modem.AMPLITUDE), 1.0)
        np.testing.assert_allclose(got, 1.0)

    def test_linearity(self, rng):
        y = rng.normal(size=8)
        np.testing.assert_allclose(
            observations(3.5 * y, 0.7), 3.5 * observations(y, 0.7), rtol=1e-12)

    def test_sign_consistency(self, toy):
        # Noiseless all-zero codeword at small sigma: positive observations.
        frame = modem.map_8d(toy, [0])
        obs = observations(frame, 0.05)
        assert np.all(obs > 0)

    def test_invalid_sigma(self):
        with pytest.raises(ValueError):
            observations(np.zeros(8), 0.0)
        with pytest.raises(ValueError):
            observations(np.zeros(8), -1.0)


class TestChannelParams:
    def test_from_snr(self):
        params = channel.ChannelParams.from_snr(3.0, master_seed=9)
        assert params.sigma == pytest.approx(snr_to_sigma(3.0))
        assert params.master_seed == 9

    def test_substream_independence(self):
        base = channel.substream(1, channel.DOMAIN_SIM, 0, 0).normal(size=4)
        for args in [(1, channel.DOMAIN_SIM, 0, 1), (1, channel.DOMAIN_SIM, 1, 0),
                     (1, channel.DOMAIN_GMI, 0, 0), (2, channel.DOMAIN_SIM, 0, 0)]:
            assert not np.array_equal(base, channel.substream(*args).normal(size=4))
