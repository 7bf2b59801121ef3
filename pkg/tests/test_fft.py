import numpy as np
import pytest

from fftseg.core import Rng
from fftseg.fft import FftPlan, direct_conv2d, fft1d, fft2d, fft_conv2d, naive_dft2


def naive_dft1(x, inverse=False):
    """O(n^2) DFT sum, the 1-D oracle."""
    x = np.asarray(x, dtype=np.complex128)
    n = len(x)
    sign = 1.0 if inverse else -1.0
    k = np.arange(n)
    out = np.array([np.sum(x * np.exp(sign * 2j * np.pi * kk * k / n)) for kk in k])
    return out / n if inverse else out


def conv2d_oracle(img, kernel):
    """Per-output-pixel true convolution with zero padding, center crop."""
    h, w = img.shape
    kh, kw = kernel.shape
    sh, sw = kh // 2, kw // 2
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            acc = 0.0
            for u in range(kh):
                for v in range(kw):
                    ii, jj = i + sh - u, j + sw - v
                    if 0 <= ii < h and 0 <= jj < w:
                        acc += kernel[u, v] * img[ii, jj]
            out[i, j] = acc
    return out


def random_complex(rng, shape):
    return rng.uniform(shape) - 0.5 + 1j * (rng.uniform(shape) - 0.5)


class TestFft1d:
    def test_constant_signal_dc_only(self):
        out = fft1d(np.ones(4))
        np.testing.assert_allclose(out, [4, 0, 0, 0], atol=1e-14)

    def test_round_trip(self):
        x = random_complex(Rng(1), (16,))
        np.testing.assert_allclose(fft1d(fft1d(x), inverse=True), x, atol=1e-12)

    def test_matches_naive_dft(self):
        x = random_complex(Rng(2), (8,))
        np.testing.assert_allclose(fft1d(x), naive_dft1(x), atol=1e-10)
        np.testing.assert_allclose(fft1d(x, inverse=True), naive_dft1(x, inverse=True), atol=1e-10)

    @pytest.mark.parametrize("n", [1, 2, 4, 32, 128])
    def test_matches_naive_all_small_lengths(self, n):
        x = random_complex(Rng(n), (n,))
        np.testing.assert_allclose(fft1d(x), naive_dft1(x), atol=1e-9)

    def test_batched_axis(self):
        x = random_complex(Rng(3), (5, 16))
        batched = fft1d(x)
        for row in range(5):
            np.testing.assert_allclose(batched[row], fft1d(x[row]), atol=1e-13)

    def test_non_power_of_two_rejected(self):
        with pytest.raises(ValueError):
            fft1d(np.ones(12))

    def test_parseval(self):
        x = random_complex(Rng(4), (64,))
        X = fft1d(x)
        lhs = np.sum(np.abs(x) ** 2)
        rhs = np.sum(np.abs(X) ** 2) / 64
        assert abs(lhs - rhs) / abs(lhs) < 1e-9

    def test_float32_input_stays_single_precision(self):
        x = np.ones(8, dtype=np.float32)
        assert fft1d(x).dtype == np.complex64


class TestFftPlan:
    def test_twiddle_table_size(self):
        plan = FftPlan(16)
        assert len(plan.twiddles) == 8
        assert plan.length == 16

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError):
            FftPlan(6)


class TestNaiveDft2:
    def test_constant_image_dc_only(self):
        c = 1.7
        out = naive_dft2(np.full((2, 2), c))
        expected = np.zeros((2, 2), dtype=complex)
        expected[0, 0] = 4 * c
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_round_trip(self):
        x = random_complex(Rng(5), (4, 6))
        np.testing.assert_allclose(naive_dft2(naive_dft2(x), inverse=True), x, atol=1e-10)

    def test_impulse_flat_spectrum(self):
        img = np.zeros((4, 4))
        img[0, 0] = 1.0
        np.testing.assert_allclose(naive_dft2(img), np.ones((4, 4)), atol=1e-12)


class TestFft2d:
    def test_constant_image_dc_only(self):
        c = -0.3
        out = fft2d(np.full((4, 4), c, dtype=complex))
        expected = np.zeros((4, 4), dtype=complex)
        expected[0, 0] = 16 * c
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_matches_naive_dft2(self):
        x = random_complex(Rng(6), (8, 8))
        np.testing.assert_allclose(fft2d(x), naive_dft2(x), atol=1e-10)
        np.testing.assert_allclose(fft2d(x, inverse=True), naive_dft2(x, inverse=True), atol=1e-10)

    def test_rectangular(self):
        x = random_complex(Rng(7), (4, 16))
        np.testing.assert_allclose(fft2d(x), naive_dft2(x), atol=1e-10)

    def test_round_trip(self):
        x = random_complex(Rng(8), (8, 8))
        np.testing.assert_allclose(fft2d(fft2d(x), inverse=True), x, atol=1e-12)

    def test_linearity(self):
        rng = Rng(9)
        x = random_complex(rng, (8, 8))
        y = random_complex(rng, (8, 8))
        a, b = 1.3 - 0.2j, -0.7 + 0.5j
        lhs = fft2d(a * x + b * y)
        rhs = a * fft2d(x) + b * fft2d(y)
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)


class TestFftConv2d:
    def test_delta_kernel_is_identity(self):
        img = Rng(10).uniform((8, 8))
        kernel = np.zeros((3, 3))
        kernel[1, 1] = 1.0
        np.testing.assert_allclose(fft_conv2d(img, kernel), img, atol=1e-10)

    def test_impulse_response_box(self):
        img = np.zeros((9, 9))
        img[4, 4] = 1.0
        out = fft_conv2d(img, np.ones((3, 3)))
        expected = np.zeros((9, 9))
        expected[3:6, 3:6] = 1.0
        np.testing.assert_allclose(out, expected, atol=1e-10)

    def test_matches_direct_oracle(self):
        rng = Rng(11)
        img = (rng.uniform((16, 16)) - 0.5).astype(np.float32)
        kernel = (rng.uniform((5, 5)) - 0.5).astype(np.float32)
        out = fft_conv2d(img, kernel)
        np.testing.assert_allclose(out, conv2d_oracle(img, kernel), atol=1e-6)

    @pytest.mark.parametrize("kh,kw", [(1, 1), (2, 2), (3, 5), (4, 3)])
    def test_kernel_parity_alignment(self, kh, kw):
        rng = Rng(kh * 10 + kw)
        img = rng.uniform((7, 9)) - 0.5
        kernel = rng.uniform((kh, kw)) - 0.5
        np.testing.assert_allclose(fft_conv2d(img, kernel), conv2d_oracle(img, kernel), atol=1e-10)

    def test_empty_kernel_rejected(self):
        with pytest.raises(ValueError):
            fft_conv2d(np.ones((4, 4)), np.zeros((0, 0)))

    def test_direct_conv_matches_oracle(self):
        rng = Rng(12)
        img = rng.uniform((10, 11)) - 0.5
        kernel = rng.uniform((3, 3)) - 0.5
        np.testing.assert_allclose(direct_conv2d(img, kernel), conv2d_oracle(img, kernel), atol=1e-12)
