"""
Fourier Transform Tests
=======================

radix-2 FFT와 naive DFT의 일치, 역변환, 2D 토큰 혼합 검사.
"""
import numpy as np
import pytest

from acmca.errors import UsageError
from acmca.fourier import dft, dft1d, fft_radix2, fourier_mix_2d, idft1d, is_power_of_two, naive_dft


def double_loop_dft2(x: np.ndarray) -> np.ndarray:
    """정의 그대로의 2D DFT"""
    t, d = x.shape
    out = np.zeros((t, d), dtype=np.complex128)
    for k in range(t):
        for l in range(d):
            for n in range(t):
                for m in range(d):
                    out[k, l] += x[n, m] * np.exp(-2j * np.pi * (k * n / t + l * m / d))
    return out


class TestDft:

    @pytest.mark.parametrize("n", [1, 2, 4, 8, 16, 32, 64])
    def test_fft_matches_naive(self, rng, n):
        """2의 거듭제곱 길이에서 두 경로가 1e-9 안에서 일치"""
        x = rng.normal(size=n) + 1j * rng.normal(size=n)
        np.testing.assert_allclose(fft_radix2(x), naive_dft(x), atol=1e-9)

    @pytest.mark.parametrize("n", [3, 5, 6, 12])
    def test_non_power_of_two_uses_naive(self, rng, n):
        x = rng.normal(size=n)
        assert not is_power_of_two(n)
        np.testing.assert_allclose(dft1d(x), naive_dft(x), atol=1e-12)
        with pytest.raises(UsageError):
            fft_radix2(x)

    def test_inverse_recovers_signal(self, rng):
        x = rng.normal(size=16) + 1j * rng.normal(size=16)
        np.testing.assert_allclose(idft1d(dft1d(x)), x, atol=1e-12)

    @pytest.mark.parametrize("seed", range(20))
    @pytest.mark.parametrize("n", [10, 32])
    def test_parseval(self, seed, n):
        """Σ|x|² = (1/N) Σ|X|², 상대 오차 1e-9"""
        x = np.random.default_rng(seed).normal(size=n)
        big_x = dft1d(x)
        np.testing.assert_allclose(np.sum(np.abs(x) ** 2), np.sum(np.abs(big_x) ** 2) / n, rtol=1e-9)

    def test_impulse_is_flat(self):
        x = np.zeros(8)
        x[0] = 1.0
        np.testing.assert_allclose(dft1d(x), np.ones(8), atol=1e-12)

    def test_dft_along_axis(self, rng):
        x = rng.normal(size=(3, 8))
        np.testing.assert_allclose(dft(x, axis=0), naive_dft(x, axis=0), atol=1e-12)

    def test_dft1d_rejects_matrix(self):
        with pytest.raises(UsageError):
            dft1d(np.ones((2, 2)))


class TestFourierMix:

    @pytest.mark.parametrize("shape", [(4, 4), (3, 5), (10, 10)])
    def test_matches_double_loop(self, rng, shape):
        """Re(2D DFT)와 정의식 일치"""
        x = rng.normal(size=shape)
        np.testing.assert_allclose(fourier_mix_2d(x), np.real(double_loop_dft2(x)), atol=1e-9)

    def test_batched(self, rng):
        x = rng.normal(size=(2, 4, 3))
        mixed = fourier_mix_2d(x)
        for b in range(2):
            np.testing.assert_allclose(mixed[b], fourier_mix_2d(x[b]), atol=1e-12)
