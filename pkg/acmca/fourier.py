"""
이산 푸리에 변환 - 길이가 2의 거듭제곱이면 radix-2 FFT, 아니면 naive DFT
"""
import numpy as np

from .errors import UsageError


# =============================================================================
# 헬퍼
# =============================================================================

def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def _bit_reverse_indices(n: int) -> np.ndarray:
    """2의 거듭제곱 n에 대한 비트 반전 순열"""
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


# =============================================================================
# 변환 경로
# =============================================================================

def naive_dft(x: np.ndarray, axis: int = -1, inverse: bool = False) -> np.ndarray:
    """
    O(N²) DFT. X[k] = Σₙ e^(−i2πnk/N)·x[n]

    Args:
        x: 복소수 배열
        axis: 변환할 축
        inverse: True면 역변환 (1/N 스케일 포함)

    Returns:
        np.ndarray: 같은 형상의 복소수 배열
    """
    x = np.moveaxis(np.asarray(x, dtype=np.complex128), axis, -1)
    n = x.shape[-1]
    sign = 1.0 if inverse else -1.0
    k = np.arange(n)
    matrix = np.exp(sign * 2j * np.pi * np.outer(k, k) / n)
    out = x @ matrix.T
    if inverse:
        out = out / n
    return np.moveaxis(out, -1, axis)


def fft_radix2(x: np.ndarray, axis: int = -1, inverse: bool = False) -> np.ndarray:
    """
    반복형 radix-2 Cooley–Tukey FFT (DIT). 앞쪽 축들에 대해 벡터화되어 있다.

    Args:
        x: 복소수 배열, 변환 축 길이는 2의 거듭제곱
        axis: 변환할 축
        inverse: True면 역변환

    Returns:
        np.ndarray: 같은 형상의 복소수 배열
    """
    x = np.moveaxis(np.asarray(x, dtype=np.complex128), axis, -1)
    n = x.shape[-1]
    if not is_power_of_two(n):
        raise UsageError(f"radix-2 FFT requires a power-of-two length, got {n}")

    lead = x.shape[:-1]
    x = x[..., _bit_reverse_indices(n)]
    sign = 1.0 if inverse else -1.0

    m = 2
    while m <= n:
        half = m // 2
        twiddle = np.exp(sign * 2j * np.pi * np.arange(half) / m)
        blocks = x.reshape(*lead, n // m, m)
        u = blocks[..., :half]
        t = blocks[..., half:] * twiddle
        x = np.concatenate([u + t, u - t], axis=-1).reshape(*lead, n)
        m <<= 1

    if inverse:
        x = x / n
    return np.moveaxis(x, -1, axis)


def dft(x: np.ndarray, axis: int = -1, inverse: bool = False) -> np.ndarray:
    """축 길이에 따라 FFT 또는 naive DFT 경로 선택"""
    x = np.asarray(x)
    n = x.shape[axis]
    if n < 1:
        raise UsageError("DFT requires a sequence of length >= 1")
    if is_power_of_two(n):
        return fft_radix2(x, axis=axis, inverse=inverse)
    return naive_dft(x, axis=axis, inverse=inverse)


def dft1d(x) -> np.ndarray:
    """길이 N 복소 시퀀스의 DFT"""
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim != 1:
        raise UsageError(f"dft1d expects a 1-D sequence, got shape {arr.shape}")
    return dft(arr)


def idft1d(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim != 1:
        raise UsageError(f"idft1d expects a 1-D sequence, got shape {arr.shape}")
    return dft(arr, inverse=True)


def fourier_mix_2d(x: np.ndarray) -> np.ndarray:
    """FNet 토큰 혼합: 토큰 축(-2) DFT 후 특징 축(-1) DFT, 실수부만 유지"""
    return np.real(dft(dft(x, axis=-2), axis=-1))
