import numpy as np
import pytest

from fftseg.core import Rng
from fftseg.fft import fft_conv2d
from fftseg.layers import (
    concat_channels,
    conv2d_backward,
    conv2d_forward,
    dropout,
    dropout_backward,
    elu,
    elu_backward,
    fft_input_block,
    fft_input_block_backward,
    maxpool2x2,
    maxpool2x2_backward,
    sigmoid,
    sigmoid_backward,
    split_channels,
    upconv2x2,
    upconv2x2_backward,
)


from fdcheck import assert_grad_close, fd_grad


class TestConv2d:
    def test_zero_weights_gives_bias(self):
        x = Rng(1).uniform((2, 3, 5, 5))
        w = np.zeros((4, 3, 3, 3))
        b = np.array([0.1, -0.2, 0.3, 0.0])
        y, _ = conv2d_forward(x, w, b)
        for o in range(4):
            np.testing.assert_allclose(y[:, o], b[o])

    def test_delta_kernel_identity(self):
        x = Rng(2).uniform((1, 1, 6, 6))
        w = np.zeros((1, 1, 3, 3))
        w[0, 0, 1, 1] = 1.0
        y, _ = conv2d_forward(x, w, np.zeros(1), pad="same")
        np.testing.assert_allclose(y, x, atol=1e-15)

    def test_matches_fft_convolution_after_flip(self):
        rng = Rng(3)
        x = (rng.uniform((1, 1, 8, 8)) - 0.5).astype(np.float32)
        w = (rng.uniform((1, 1, 3, 3)) - 0.5).astype(np.float32)
        y, _ = conv2d_forward(x, w, np.zeros(1, dtype=np.float32), pad="same")
        spectral = fft_conv2d(x[0, 0], w[0, 0, ::-1, ::-1])
        np.testing.assert_allclose(y[0, 0], spectral, atol=1e-5)

    def test_valid_padding_shrinks(self):
        x = Rng(4).uniform((1, 2, 7, 9))
        w = Rng(5).uniform((3, 2, 3, 3)) - 0.5
        y, _ = conv2d_forward(x, w, np.zeros(3), pad="valid")
        assert y.shape == (1, 3, 5, 7)

    def test_channel_mismatch_rejected(self):
        with pytest.raises(ValueError):
            conv2d_forward(np.zeros((1, 2, 4, 4)), np.zeros((1, 3, 3, 3)), np.zeros(1))

    def test_zero_grad_out(self):
        x = Rng(6).uniform((1, 2, 4, 4))
        w = Rng(7).uniform((2, 2, 3, 3))
        y, cache = conv2d_forward(x, w, np.zeros(2))
        dx, dw, db = conv2d_backward(cache, np.zeros_like(y))
        assert not dx.any() and not dw.any() and not db.any()

    def test_bias_gradient_is_sum(self):
        x = Rng(8).uniform((2, 2, 4, 4))
        w = Rng(9).uniform((3, 2, 3, 3))
        y, cache = conv2d_forward(x, w, np.zeros(3))
        g = Rng(10).uniform(y.shape)
        _, _, db = conv2d_backward(cache, g)
        np.testing.assert_allclose(db, g.sum(axis=(0, 2, 3)), rtol=1e-12)

    @pytest.mark.parametrize("pad,ksize", [("same", (3, 3)), ("valid", (3, 3)), ("same", (2, 2)), ("same", (1, 1))])
    def test_gradients_match_finite_differences(self, pad, ksize):
        rng = Rng(11)
        x = rng.uniform((2, 2, 5, 4)) - 0.5
        w = rng.uniform((3, 2) + ksize) - 0.5
        b = rng.uniform(3) - 0.5
        r = rng.uniform(conv2d_forward(x, w, b, pad)[0].shape) - 0.5

        def loss():
            return float(np.sum(conv2d_forward(x, w, b, pad)[0] * r))

        _, cache = conv2d_forward(x, w, b, pad)
        dx, dw, db = conv2d_backward(cache, r)
        assert_grad_close(dx, fd_grad(loss, x), 1e-6)
        assert_grad_close(dw, fd_grad(loss, w), 1e-6)
        assert_grad_close(db, fd_grad(loss, b), 1e-6)


class TestElu:
    def test_values(self):
        x = np.array([0.0, 1.0, -1.0])
        y = elu(x)
        assert y[0] == 0.0 and y[1] == 1.0
        np.testing.assert_allclose(y[2], np.exp(-1) - 1)

    def test_gradient_matches_finite_differences(self):
        x = np.array([-2.0, -0.5, 0.5, 2.0])
        r = np.array([1.0, -0.3, 0.7, 0.2])

        def loss():
            return float(np.sum(elu(x) * r))

        assert_grad_close(elu_backward(x, r), fd_grad(loss, x), 1e-7)


class TestMaxpool:
    def test_window_max(self):
        x = np.array([[1.0, 2.0], [3.0, 4.0]]).reshape(1, 1, 2, 2)
        y, _ = maxpool2x2(x)
        assert y[0, 0, 0, 0] == 4.0

    def test_tie_break_first_element(self):
        x = np.full((1, 1, 2, 2), 5.0)
        y, tape = maxpool2x2(x)
        assert y[0, 0, 0, 0] == 5.0
        dx = maxpool2x2_backward(tape, np.ones((1, 1, 1, 1)))
        np.testing.assert_array_equal(dx[0, 0], [[1.0, 0.0], [0.0, 0.0]])

    def test_matches_window_oracle(self):
        x = Rng(12).uniform((1, 2, 8, 8))
        y, _ = maxpool2x2(x)
        for c in range(2):
            for i in range(4):
                for j in range(4):
                    assert y[0, c, i, j] == x[0, c, 2 * i:2 * i + 2, 2 * j:2 * j + 2].max()

    def test_odd_dims_rejected(self):
        with pytest.raises(ValueError):
            maxpool2x2(np.zeros((1, 1, 5, 4)))

    def test_gradient_matches_finite_differences(self):
        rng = Rng(13)
        x = rng.uniform((1, 2, 4, 4))  # distinct values, no ties
        r = rng.uniform((1, 2, 2, 2)) - 0.5

        def loss():
            return float(np.sum(maxpool2x2(x)[0] * r))

        _, tape = maxpool2x2(x)
        assert_grad_close(maxpool2x2_backward(tape, r), fd_grad(loss, x, h=1e-8), 1e-6)


class TestUpconv:
    def test_single_pixel_expansion(self):
        x = np.full((1, 1, 1, 1), 3.0)
        w = np.array([[[[1.0, 2.0], [3.0, 4.0]]]])
        y, _ = upconv2x2(x, w, np.zeros(1))
        np.testing.assert_allclose(y[0, 0], 3.0 * w[0, 0])

    def test_output_shape_doubles(self):
        y, _ = upconv2x2(np.zeros((2, 3, 4, 5)), np.zeros((6, 3, 2, 2)), np.zeros(6))
        assert y.shape == (2, 6, 8, 10)

    def test_non_2x2_kernel_rejected(self):
        with pytest.raises(ValueError):
            upconv2x2(np.zeros((1, 1, 2, 2)), np.zeros((1, 1, 3, 3)), np.zeros(1))

    def test_gradients_match_finite_differences(self):
        rng = Rng(14)
        x = rng.uniform((2, 2, 3, 3)) - 0.5
        w = rng.uniform((3, 2, 2, 2)) - 0.5
        b = rng.uniform(3) - 0.5
        r = rng.uniform((2, 3, 6, 6)) - 0.5

        def loss():
            return float(np.sum(upconv2x2(x, w, b)[0] * r))

        _, cache = upconv2x2(x, w, b)
        dx, dw, db = upconv2x2_backward(cache, r)
        assert_grad_close(dx, fd_grad(loss, x), 1e-6)
        assert_grad_close(dw, fd_grad(loss, w), 1e-6)
        assert_grad_close(db, fd_grad(loss, b), 1e-6)


class TestDropout:
    def test_rate_zero_identity(self):
        x = Rng(15).uniform((1, 1, 4, 4))
        for training in (True, False):
            y, cache = dropout(x, 0.0, Rng(0), training)
            np.testing.assert_array_equal(y, x)
            assert cache is None

    def test_inference_identity(self):
        x = Rng(16).uniform((1, 1, 4, 4))
        y, cache = dropout(x, 0.5, None, training=False)
        np.testing.assert_array_equal(y, x)
        assert cache is None

    def test_zeroed_fraction(self):
        x = np.ones((1, 1, 400, 250))
        y, _ = dropout(x, 0.2, Rng(17), training=True)
        frac = np.mean(y == 0.0)
        assert 0.19 <= frac <= 0.21
        survivors = y[y != 0]
        np.testing.assert_allclose(survivors, 1.0 / 0.8, rtol=1e-12)

    def test_backward_uses_same_mask(self):
        x = Rng(18).uniform((1, 1, 8, 8))
        y, scale = dropout(x, 0.3, Rng(19), training=True)
        g = np.ones_like(x)
        np.testing.assert_array_equal(dropout_backward(scale, g), scale)
        np.testing.assert_array_equal(y, x * scale)

    def test_bad_rate_rejected(self):
        with pytest.raises(ValueError):
            dropout(np.zeros((1, 1, 2, 2)), 1.0, Rng(0), True)


class TestConcat:
    def test_shapes(self):
        y = concat_channels(np.zeros((1, 2, 4, 4)), np.ones((1, 3, 4, 4)))
        assert y.shape == (1, 5, 4, 4)

    def test_split_round_trip(self):
        a = Rng(20).uniform((2, 2, 3, 3))
        b = Rng(21).uniform((2, 4, 3, 3))
        ga, gb = split_channels(concat_channels(a, b), 2)
        np.testing.assert_array_equal(ga, a)
        np.testing.assert_array_equal(gb, b)

    def test_spatial_mismatch_rejected(self):
        with pytest.raises(ValueError):
            concat_channels(np.zeros((1, 1, 4, 4)), np.zeros((1, 1, 5, 4)))


class TestSigmoid:
    def test_zero_is_half(self):
        assert sigmoid(np.zeros(1))[0] == 0.5

    def test_saturation_without_overflow(self):
        with np.errstate(over="raise"):
            y = sigmoid(np.array([40.0, -40.0, 400.0, -400.0]))
        assert y[0] > 1 - 1e-15 and y[1] < 1e-15
        assert np.all(np.isfinite(y))

    def test_gradient_matches_finite_differences(self):
        x = np.array([-3.0, -0.5, 0.0, 0.5, 3.0])
        r = np.array([0.4, -1.0, 0.3, 0.9, -0.2])

        def loss():
            return float(np.sum(sigmoid(x) * r))

        y = sigmoid(x)
        analytic = sigmoid_backward(y, r)
        np.testing.assert_allclose(analytic, r * y * (1 - y), rtol=1e-15)
        assert_grad_close(analytic, fd_grad(loss, x), 1e-7)


class TestFftInputBlock:
    @staticmethod
    def identity_weights(dtype=np.float64):
        w = np.zeros((2, 2, 3, 3), dtype=dtype)
        w[0, 0, 1, 1] = 1.0  # re -> re
        w[1, 1, 1, 1] = 1.0  # im -> im
        return w

    def test_identity_mixing_round_trip(self):
        x = Rng(22).uniform((2, 1, 8, 8)) - 0.5
        y, _ = fft_input_block(x, self.identity_weights(), np.zeros(2), activation=False)
        np.testing.assert_allclose(y, x, atol=1e-5)

    def test_output_shape(self):
        x = Rng(23).uniform((3, 1, 16, 16))
        w = Rng(24).uniform((2, 2, 3, 3)) - 0.5
        y, _ = fft_input_block(x, w, np.zeros(2))
        assert y.shape == x.shape

    def test_non_power_of_two_rejected(self):
        with pytest.raises(ValueError):
            fft_input_block(np.zeros((1, 1, 12, 16)), self.identity_weights(), np.zeros(2))

    def test_gradients_match_finite_differences(self):
        rng = Rng(25)
        x = rng.uniform((1, 1, 8, 8)) - 0.5
        w = rng.uniform((2, 2, 3, 3)) - 0.5
        b = rng.uniform(2) - 0.5
        r = rng.uniform((1, 1, 8, 8)) - 0.5

        def loss():
            return float(np.sum(fft_input_block(x, w, b)[0] * r))

        _, cache = fft_input_block(x, w, b)
        dx, dw, db = fft_input_block_backward(cache, r)
        assert_grad_close(dx, fd_grad(loss, x), 1e-5)
        assert_grad_close(dw, fd_grad(loss, w), 1e-5)
        assert_grad_close(db, fd_grad(loss, b), 1e-5)
