"""Radix-2 Cooley-Tukey FFT, a literal DFT double-sum oracle, and
convolution-theorem filtering.

Conventions: the forward transform uses the e^{-i2pi...} kernel and no
scaling; the inverse uses e^{+i2pi...} and divides by the length (1/(M*N)
for the 2-D transform, applied entirely on the inverse side).
`fft_conv2d` performs true convolution (kernel flipped); cross-correlation
callers flip their kernels before delegating.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


def next_pow2(n: int) -> int:
    """Smallest power of two >= n."""
    if n < 1:
        raise ValueError("length must be >= 1")
    return 1 << (n - 1).bit_length()


class FftPlan:
    """Precomputed twiddle factors and bit-reversal permutation for one length.

    twiddles[k] = exp(-2i*pi*k/length) for k in [0, length/2); stages slice
    this table with a stride. Plans are immutable and shareable.
    """

    def __init__(self, length: int):
        if length < 1 or (length & (length - 1)) != 0:
            raise ValueError(f"FFT length must be a power of two, got {length}")
        self.length = length
        k = np.arange(length // 2)
        self.twiddles = np.exp(-2j * np.pi * k / length)
        bits = (length - 1).bit_length()
        rev = np.zeros(length, dtype=np.intp)
        for i in range(length):
            r = 0
            v = i
            for _ in range(bits):
                r = (r << 1) | (v & 1)
                v >>= 1
            rev[i] = r
        self.bitrev = rev


@lru_cache(maxsize=None)
def _plan(length: int) -> FftPlan:
    return FftPlan(length)


def fft1d(x: np.ndarray, inverse: bool = False) -> np.ndarray:
    """FFT along the last axis. Length must be a power of two.

    Accepts real or complex input of any leading shape; float32/complex64
    input stays in complex64.
    """
    x = np.asarray(x)
    n = x.shape[-1]
    plan = _plan(n)
    out_dtype = np.result_type(x.dtype, np.complex64)
    y = np.ascontiguousarray(x[..., plan.bitrev], dtype=out_dtype)
    if n == 1:
        return y
    lead = y.shape[:-1]
    half = 1
    while half < n:
        m = 2 * half
        w = plan.twiddles[:: n // m][:half]
        if inverse:
            w = w.conj()
        w = w.astype(out_dtype, copy=False)
        y = y.reshape(lead + (n // m, m))
        even = y[..., :half]
        odd = y[..., half:] * w
        np.subtract(even, odd, out=y[..., half:])
        np.add(even, odd, out=y[..., :half])
        half = m
    y = y.reshape(lead + (n,))
    if inverse:
        y /= n
    return y


def fft2d(img: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Separable 2-D FFT over the last two axes (both powers of two).

    The inverse carries the full 1/(M*N) factor (1/N per axis).
    """
    y = fft1d(img, inverse)
    y = fft1d(np.swapaxes(y, -1, -2), inverse)
    return np.swapaxes(y, -1, -2)


def naive_dft2(img: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Direct O((MN)^2) evaluation of the 2-D DFT double sum.

    Deliberately unfactored (no row-column split), so it is an independent
    oracle for fft2d. Works for any rectangular shape.
    """
    img = np.asarray(img, dtype=np.complex128)
    M, N = img.shape
    sign = 1.0 if inverse else -1.0
    mm = np.arange(M)[:, None] / M
    nn = np.arange(N)[None, :] / N
    out = np.empty((M, N), dtype=np.complex128)
    for x in range(M):
        for y in range(N):
            phase = np.exp(sign * 2j * np.pi * (x * mm + y * nn))
            out[x, y] = np.sum(img * phase)
    if inverse:
        out /= M * N
    return out


def _conv_crop(full: np.ndarray, h: int, w: int, kh: int, kw: int) -> np.ndarray:
    # center-aligned "same" window of the full linear convolution
    return full[..., kh // 2: kh // 2 + h, kw // 2: kw // 2 + w]


def fft_conv2d(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """True 2-D convolution via the convolution theorem.

    Zero-pads both operands to a power-of-two size covering H+kh-1 by
    W+kw-1 (linear, not circular, convolution), multiplies the spectra,
    inverts, and crops the centered H-by-W window.
    """
    img = np.asarray(img)
    kernel = np.asarray(kernel)
    if kernel.size == 0:
        raise ValueError("empty kernel")
    if img.ndim != 2 or kernel.ndim != 2:
        raise ValueError("img and kernel must both be 2-D")
    h, w = img.shape
    kh, kw = kernel.shape
    ph = next_pow2(h + kh - 1)
    pw = next_pow2(w + kw - 1)
    cdtype = np.result_type(img.dtype, kernel.dtype, np.complex64)
    a = np.zeros((ph, pw), dtype=cdtype)
    a[:h, :w] = img
    b = np.zeros((ph, pw), dtype=cdtype)
    b[:kh, :kw] = kernel
    full = fft2d(fft2d(a) * fft2d(b), inverse=True).real
    out = _conv_crop(full, h, w, kh, kw)
    return np.ascontiguousarray(out, dtype=np.result_type(img.dtype, kernel.dtype))


def direct_conv2d(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Direct (shift-and-add) spatial convolution, same crop as fft_conv2d.

    The non-FFT timing reference; also a cross-check path for the FFT route.
    """
    img = np.asarray(img)
    kernel = np.asarray(kernel)
    if kernel.size == 0:
        raise ValueError("empty kernel")
    h, w = img.shape
    kh, kw = kernel.shape
    sh, sw = kh // 2, kw // 2
    xp = np.pad(img, ((kh - 1 - sh, sh), (kw - 1 - sw, sw)))
    out = np.zeros((h, w), dtype=np.result_type(img.dtype, kernel.dtype))
    for u in range(kh):
        for v in range(kw):
            out += kernel[kh - 1 - u, kw - 1 - v] * xp[u:u + h, v:v + w]
    return out
