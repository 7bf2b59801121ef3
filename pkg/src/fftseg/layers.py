"""Differentiable building blocks: convolution, eLU, max-pool, transposed
convolution, dropout, channel concat, sigmoid, and the spectral input block.

Each op is a forward function returning (output, cache) plus a backward
function consuming the cache, in the style of hand-rolled numpy autodiff.
Convolutions here are cross-correlations (no kernel flip); equivalence with
the fft module's true convolution needs an explicit flip.
"""

from __future__ import annotations

import numpy as np

from .core import Rng, check_grid4
from .fft import fft2d


def _same_pads(k: int) -> tuple[int, int]:
    # asymmetric for even kernels: (k-1)//2 before, k//2 after
    return (k - 1) // 2, k // 2


def _im2col(xp, kh, kw, ho, wo):
    """(cin*kh*kw, b*ho*wo) column matrix from a padded (b,cin,hp,wp) input."""
    b, cin = xp.shape[0], xp.shape[1]
    cols = np.empty((cin, kh, kw, b, ho, wo), dtype=xp.dtype)
    src = xp.transpose(1, 0, 2, 3)
    for u in range(kh):
        for v in range(kw):
            cols[:, u, v] = src[:, :, u:u + ho, v:v + wo]
    return cols.reshape(cin * kh * kw, b * ho * wo)


def conv2d_forward(x, w, b, pad="same"):
    """Cross-correlation of (b, cin, h, w) with filters (cout, cin, kh, kw).

    "same" zero-pads to preserve spatial dims; "valid" shrinks by k-1.
    Runs as im2col + one large matmul; the column matrix is cached for
    backward.
    """
    x = check_grid4(x)
    if x.shape[1] != w.shape[1]:
        raise ValueError(f"input has {x.shape[1]} channels, filters expect {w.shape[1]}")
    cout, cin, kh, kw = w.shape
    if pad == "same":
        pt, pb = _same_pads(kh)
        pl, pr = _same_pads(kw)
        xp = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)))
    elif pad == "valid":
        xp = x
    else:
        raise ValueError(f"pad must be 'same' or 'valid', got {pad!r}")
    bsz = x.shape[0]
    ho, wo = xp.shape[2] - kh + 1, xp.shape[3] - kw + 1
    colmat = _im2col(xp, kh, kw, ho, wo)
    y = np.matmul(w.reshape(cout, cin * kh * kw), colmat)  # (cout, b*ho*wo)
    y = np.ascontiguousarray(y.reshape(cout, bsz, ho, wo).transpose(1, 0, 2, 3))
    y += b[None, :, None, None]
    return y, (x.shape, colmat, w, pad)


def conv2d_backward(cache, grad_out):
    """Gradients of conv2d_forward: (grad_x, grad_w, grad_b)."""
    x_shape, colmat, w, pad = cache
    g = np.asarray(grad_out)
    cout, cin, kh, kw = w.shape
    if g.shape[1] != cout:
        raise ValueError(f"grad has {g.shape[1]} channels, expected {cout}")
    bsz, _, ho, wo = g.shape
    gmat = g.transpose(1, 0, 2, 3).reshape(cout, bsz * ho * wo)

    grad_b = g.sum(axis=(0, 2, 3))
    grad_w = np.matmul(gmat, colmat.T).reshape(w.shape)

    dcol = np.matmul(w.reshape(cout, -1).T, gmat)  # (cin*kh*kw, b*ho*wo)
    dcol = dcol.reshape(cin, kh, kw, bsz, ho, wo)
    h, w_ = x_shape[2], x_shape[3]
    if pad == "same":
        pt, pb = _same_pads(kh)
        pl, pr = _same_pads(kw)
    else:
        pt = pb = pl = pr = 0
    grad_xp = np.zeros((cin, bsz, h + pt + pb, w_ + pl + pr), dtype=g.dtype)
    for u in range(kh):
        for v in range(kw):
            grad_xp[:, :, u:u + ho, v:v + wo] += dcol[:, u, v]
    grad_x = grad_xp.transpose(1, 0, 2, 3)[:, :, pt:pt + h, pl:pl + w_]
    return np.ascontiguousarray(grad_x), grad_w, grad_b


def elu(x):
    """y = x for x > 0, else e^x - 1 (alpha = 1)."""
    x = np.asarray(x)
    # maximum keeps the positive branch, expm1(min(x,0)) the negative one
    return np.maximum(x, 0) + np.expm1(np.minimum(x, 0))


def elu_backward(x, grad_out):
    # derivative is 1 for x > 0 and e^x otherwise, i.e. exp(min(x, 0))
    x = np.asarray(x)
    return grad_out * np.exp(np.minimum(x, 0))


def maxpool2x2(x):
    """2x2 max pooling with stride 2. Spatial dims must be even.

    Returns (pooled, tape); backward routes each cell's gradient to the
    first maximal element of its window in row-major order.
    """
    x = check_grid4(x)
    b, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ValueError(f"maxpool2x2 needs even spatial dims, got {h}x{w}")
    windows = x.reshape(b, c, h // 2, 2, w // 2, 2)
    flat = windows.transpose(0, 1, 2, 4, 3, 5).reshape(b, c, h // 2, w // 2, 4)
    idx = flat.argmax(axis=-1)  # first max wins ties
    y = np.take_along_axis(flat, idx[..., None], axis=-1)[..., 0]
    return y, (x.shape, idx)


def maxpool2x2_backward(tape, grad_out):
    (b, c, h, w), idx = tape
    flat = np.zeros((b, c, h // 2, w // 2, 4), dtype=grad_out.dtype)
    np.put_along_axis(flat, idx[..., None], grad_out[..., None], axis=-1)
    windows = flat.reshape(b, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    return np.ascontiguousarray(windows.reshape(b, c, h, w))


def upconv2x2(x, w, b):
    """Transposed convolution with 2x2 kernel, stride 2: (b,cin,h,w) ->
    (b,cout,2h,2w). Weights are (cout, cin, 2, 2)."""
    x = check_grid4(x)
    if w.shape[2:] != (2, 2):
        raise ValueError(f"upconv kernel must be 2x2, got {w.shape[2:]}")
    if x.shape[1] != w.shape[1]:
        raise ValueError(f"input has {x.shape[1]} channels, filters expect {w.shape[1]}")
    bsz, _, h, wd = x.shape
    cout = w.shape[0]
    t = np.tensordot(x, w, axes=([1], [1]))        # (b,h,w,cout,2,2)
    t = t.transpose(0, 3, 1, 4, 2, 5)              # (b,cout,h,2,w,2)
    y = np.ascontiguousarray(t).reshape(bsz, cout, 2 * h, 2 * wd)
    y += b[None, :, None, None]
    return y, (x, w)


def upconv2x2_backward(cache, grad_out):
    x, w = cache
    bsz, cin, h, wd = x.shape
    cout = w.shape[0]
    g = grad_out.reshape(bsz, cout, h, 2, wd, 2).transpose(0, 1, 2, 4, 3, 5)
    # g is (b,cout,h,w,2,2)
    grad_b = grad_out.sum(axis=(0, 2, 3))
    grad_x = np.tensordot(g, w, axes=([1, 4, 5], [0, 2, 3]))   # (b,h,w,cin)
    grad_x = np.ascontiguousarray(np.moveaxis(grad_x, 3, 1))
    grad_w = np.tensordot(g, x, axes=([0, 2, 3], [0, 2, 3]))   # (cout,2,2,cin)
    grad_w = np.ascontiguousarray(grad_w.transpose(0, 3, 1, 2))
    return grad_x, grad_w, grad_b


def dropout(x, rate, rng: Rng | None, training):
    """Inverted dropout: train mode zeroes with probability `rate` and
    rescales survivors by 1/(1-rate); inference is identity."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    x = np.asarray(x)
    if not training or rate == 0.0:
        return x, None
    if rng is None:
        raise ValueError("training-mode dropout needs an Rng")
    keep = rng.uniform(x.shape) >= rate
    scale = keep.astype(x.dtype) / np.asarray(1.0 - rate, dtype=x.dtype)
    return x * scale, scale


def dropout_backward(scale, grad_out):
    if scale is None:
        return grad_out
    return grad_out * scale


def concat_channels(a, b):
    """Stack two grids along the channel axis (a first)."""
    a = check_grid4(a)
    b = check_grid4(b)
    if a.shape[0] != b.shape[0] or a.shape[2:] != b.shape[2:]:
        raise ValueError(f"cannot concat {a.shape} with {b.shape}")
    return np.concatenate([a, b], axis=1)


def split_channels(grad_out, channels_a):
    """Backward of concat_channels."""
    return grad_out[:, :channels_a], grad_out[:, channels_a:]


def sigmoid(x):
    x = np.asarray(x)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_backward(y, grad_out):
    return grad_out * y * (1.0 - y)


def fft_input_block(x, w, b, activation=True):
    """Spectral input block: per-image 2-D FFT, a 3x3 conv (+ eLU) acting on
    the (re, im) channel pair, then inverse FFT; the real part comes back as
    a single channel.

    x must be (b, 1, h, w) with h, w powers of two. The transforms are
    linear, so the block is differentiable end to end. `activation=False`
    bypasses the eLU (used to probe the transform round trip).
    """
    x = check_grid4(x, channels=1)
    h, wd = x.shape[2], x.shape[3]
    if h & (h - 1) or wd & (wd - 1):
        raise ValueError(f"spectral block needs power-of-two dims, got {h}x{wd}")
    spec = fft2d(x[:, 0])                                   # (b,h,w) complex
    u = np.stack([spec.real, spec.imag], axis=1)            # (b,2,h,w)
    u = u.astype(x.dtype, copy=False)
    v, conv_cache = conv2d_forward(u, w, b, pad="same")
    a = elu(v) if activation else v
    out_spec = a[:, 0] + 1j * a[:, 1]
    y = fft2d(out_spec, inverse=True).real[:, None]
    return np.ascontiguousarray(y, dtype=x.dtype), (conv_cache, v, activation, h, wd)


def fft_input_block_backward(cache, grad_out):
    """Gradients through IFFT/conv/eLU/FFT.

    The adjoint of `y = Re(ifft2(Y))` for real upstream gradient g is
    dY = fft2(g)/(h*w); the adjoint of `u = [Re, Im](fft2(x))` for complex
    dU is dx = h*w * Re(ifft2(dU)).
    """
    conv_cache, v, activation, h, wd = cache
    g = np.asarray(grad_out)[:, 0]
    d_spec = fft2d(g) / (h * wd)
    da = np.stack([d_spec.real, d_spec.imag], axis=1).astype(grad_out.dtype, copy=False)
    dv = elu_backward(v, da) if activation else da
    du, grad_w, grad_b = conv2d_backward(conv_cache, dv)
    d_in = du[:, 0] + 1j * du[:, 1]
    grad_x = (h * wd) * fft2d(d_in, inverse=True).real[:, None]
    return np.ascontiguousarray(grad_x, dtype=grad_out.dtype), grad_w, grad_b
