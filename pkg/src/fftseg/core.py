"""Shared numeric plumbing: 4-D grid helpers, a portable deterministic RNG,
and corner-aligned bilinear resize.

All image-like data in this package is a rank-4 numpy array laid out as
(batch, channels, height, width).
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x00000100000001B3


def _mix64(z: int) -> int:
    """SplitMix64 finalizer on a 64-bit integer."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


class Rng:
    """Counter-based SplitMix64 generator.

    The stream is `mix(seed + i * golden)` for draw index i = 1, 2, ...,
    where `mix` is the SplitMix64 finalizer and `golden` is 2^64/phi.
    Pure 64-bit integer arithmetic, so equal seeds give bit-identical
    sequences on every platform. Bulk draws (`uniform`, `normal`) consume
    the same counter positions as the equivalent sequence of single draws.

    One Rng must not be shared between threads; derive sub-streams instead.
    """

    def __init__(self, seed: int):
        self._seed = seed & _MASK64
        self._counter = 0

    @property
    def seed(self) -> int:
        return self._seed

    def _raw(self, n: int) -> np.ndarray:
        """Next n raw 64-bit outputs as a uint64 array."""
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        z = np.uint64(self._seed) + idx * np.uint64(_GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))

    def next_uniform(self) -> float:
        """One draw in [0, 1) with 53 bits of precision."""
        self._counter += 1
        z = _mix64((self._seed + self._counter * _GOLDEN) & _MASK64)
        return (z >> 11) * 2.0 ** -53

    def uniform(self, shape) -> np.ndarray:
        """Array of draws in [0, 1), float64."""
        shape = _shape_tuple(shape)
        n = int(np.prod(shape, dtype=np.int64))
        u = (self._raw(n) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
        return u.reshape(shape)

    def normal(self, shape) -> np.ndarray:
        """Standard normal draws via Box-Muller on pairs of uniforms."""
        shape = _shape_tuple(shape)
        n = int(np.prod(shape, dtype=np.int64))
        u = self.uniform((2 * n,))
        r = np.sqrt(-2.0 * np.log1p(-u[:n]))  # 1-u in (0,1], log finite
        theta = 2.0 * np.pi * u[n:]
        return (r * np.cos(theta)).reshape(shape)

    def randint(self, n: int) -> int:
        """One draw in [0, n)."""
        if n < 1:
            raise ValueError("randint needs n >= 1")
        return min(int(self.next_uniform() * n), n - 1)

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates permutation of range(n)."""
        perm = np.arange(n)
        for i in range(n - 1, 0, -1):
            j = self.randint(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm

    def derive(self, tag: str | int) -> "Rng":
        """Child generator for an independent sub-stream.

        Derivation mixes the parent's seed (not its position), so the child
        stream depends only on (seed, tag).
        """
        if isinstance(tag, str):
            tag_int = _fnv1a64(tag.encode("utf-8"))
        else:
            tag_int = tag & _MASK64
        return Rng(_mix64(self._seed ^ _mix64(tag_int)))


def _shape_tuple(shape) -> tuple[int, ...]:
    if isinstance(shape, (int, np.integer)):
        return (int(shape),)
    return tuple(int(s) for s in shape)


def grid_new(shape, fill: float, dtype=np.float32) -> np.ndarray:
    """Allocate a (batch, channels, height, width) grid filled with a constant."""
    shape = tuple(int(s) for s in shape)
    if len(shape) != 4 or any(s < 1 for s in shape):
        raise ValueError(f"grid shape must be 4 dims, all >= 1, got {shape}")
    return np.full(shape, fill, dtype=dtype)


def check_grid4(x: np.ndarray, channels: int | None = None) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 4:
        raise ValueError(f"expected (batch, channels, height, width), got shape {x.shape}")
    if channels is not None and x.shape[1] != channels:
        raise ValueError(f"expected {channels} channels, got {x.shape[1]}")
    return x


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Corner-aligned bilinear resize of a (b, c, h, w) grid.

    Source position for target index t is t*(src-1)/(dst-1); a size-1
    target axis samples index 0. Resizing to the source shape is exact.
    """
    img = check_grid4(img)
    if out_h < 1 or out_w < 1:
        raise ValueError("target size must be >= 1")
    b, c, h, w = img.shape

    def axis_coords(dst: int, src: int):
        pos = np.linspace(0.0, src - 1.0, dst) if dst > 1 else np.zeros(1)
        lo = np.floor(pos).astype(int)
        hi = np.minimum(lo + 1, src - 1)
        return lo, hi, pos - lo

    r0, r1, wr = axis_coords(out_h, h)
    c0, c1, wc = axis_coords(out_w, w)

    rows = img[:, :, r0, :] * (1.0 - wr)[None, None, :, None] \
        + img[:, :, r1, :] * wr[None, None, :, None]
    out = rows[:, :, :, c0] * (1.0 - wc)[None, None, None, :] \
        + rows[:, :, :, c1] * wc[None, None, None, :]
    return out.astype(img.dtype, copy=False)
