"""Deterministic synthetic cell images, binary PGM image IO, and dataset
splitting/manifest handling.

Each sample is a dark background with soft-edged bright discs; the mask is
the exact union of the discs. Everything is a pure function of
(spec.seed, sample index).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .core import Rng


class DataError(Exception):
    """Raised for unreadable or malformed dataset files."""


@dataclass(frozen=True)
class SyntheticSpec:
    image_size: int = 64
    cell_count_range: tuple[int, int] = (1, 8)
    radius_range: tuple[float, float] = (4.0, 10.0)
    noise_sigma: float = 0.05
    overlap_allowed: bool = True
    min_gap: float = 2.0  # boundary clearance enforced when overlap is disallowed
    seed: int = 0

    def validate(self) -> None:
        if self.cell_count_range[0] > self.cell_count_range[1]:
            raise ValueError("cell_count_range min > max")
        if self.radius_range[0] > self.radius_range[1]:
            raise ValueError("radius_range min > max")
        if self.radius_range[0] < 2:
            raise ValueError("radius must be >= 2")
        if self.image_size < 8:
            raise ValueError("image_size too small")


@dataclass
class Sample:
    image: np.ndarray          # (1, 1, s, s) float32 in [0, 1]
    mask: np.ndarray           # (s, s) uint8 in {0, 1}
    truth_count: int
    truth_centers: np.ndarray | None  # (k, 2) float rows (row, col); None when loaded
    truth_radii: np.ndarray | None = None


_MAX_PLACE_TRIES = 200


def _generate_one(spec: SyntheticSpec, rng: Rng) -> Sample:
    s = spec.image_size
    lo, hi = spec.cell_count_range
    k = lo + rng.randint(hi - lo + 1)
    rows = np.arange(s, dtype=np.float64)[:, None]
    cols = np.arange(s, dtype=np.float64)[None, :]
    image = np.zeros((s, s), dtype=np.float64)
    mask = np.zeros((s, s), dtype=bool)
    centers = []
    radii = []
    for _ in range(k):
        placed = False
        for _ in range(_MAX_PLACE_TRIES):
            r = spec.radius_range[0] + rng.next_uniform() * (
                spec.radius_range[1] - spec.radius_range[0]
            )
            margin = min(r, (s - 1) / 2)
            cr = margin + rng.next_uniform() * (s - 1 - 2 * margin)
            cc = margin + rng.next_uniform() * (s - 1 - 2 * margin)
            if not spec.overlap_allowed:
                ok = all(
                    np.hypot(cr - pr, cc - pc) >= r + pr_r + spec.min_gap
                    for (pr, pc), pr_r in zip(centers, radii)
                )
                if not ok:
                    continue
            centers.append((cr, cc))
            radii.append(r)
            placed = True
            break
        if not placed:
            break  # image is full; truth reflects what was placed
    for (cr, cc), r in zip(centers, radii):
        d = np.hypot(rows - cr, cols - cc)
        sigma = r / 4.0
        falloff = np.exp(-np.maximum(d - r, 0.0) ** 2 / (2.0 * sigma * sigma))
        np.maximum(image, falloff, out=image)
        mask |= d <= r
    if spec.noise_sigma > 0:
        image = image + rng.normal((s, s)) * spec.noise_sigma
    image = np.clip(image, 0.0, 1.0)
    return Sample(
        image=image.astype(np.float32)[None, None],
        mask=mask.astype(np.uint8),
        truth_count=len(centers),
        truth_centers=np.array(centers, dtype=np.float64).reshape(-1, 2),
        truth_radii=np.array(radii, dtype=np.float64),
    )


def generate(spec: SyntheticSpec, n: int) -> list[Sample]:
    """n samples, each fully determined by (spec.seed, index)."""
    spec.validate()
    if n < 1:
        raise ValueError("n must be >= 1")
    base = Rng(spec.seed)
    return [_generate_one(spec, base.derive(f"sample-{i}")) for i in range(n)]


# -- PGM (binary, "P5", maxval 255) -----------------------------------------

def write_pgm(img, path) -> None:
    """img is (h, w) or (1, 1, h, w) with values in [0, 1]."""
    arr = np.asarray(img)
    if arr.ndim == 4:
        arr = arr[0, 0]
    if arr.ndim != 2:
        raise ValueError(f"expected a single 2-D image, got shape {np.asarray(img).shape}")
    quantized = np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)
    h, w = quantized.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(quantized.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM into a (1, 1, h, w) float32 grid scaled to [0, 1]."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise DataError(f"{path}: {exc}") from exc

    pos = 0

    def next_token():
        nonlocal pos
        while pos < len(raw):
            if raw[pos:pos + 1].isspace():
                pos += 1
            elif raw[pos:pos + 1] == b"#":
                while pos < len(raw) and raw[pos] != 0x0A:
                    pos += 1
            else:
                break
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DataError(f"{path}: truncated header")
        return raw[start:pos]

    magic = next_token()
    if magic != b"P5":
        raise DataError(f"{path}: unsupported PGM flavor {magic!r} (need binary P5)")
    try:
        width = int(next_token())
        height = int(next_token())
        maxval = int(next_token())
    except ValueError as exc:
        raise DataError(f"{path}: malformed header") from exc
    if maxval != 255:
        raise DataError(f"{path}: maxval must be 255, got {maxval}")
    pos += 1  # single whitespace after maxval
    pixels = raw[pos:pos + width * height]
    if len(pixels) != width * height:
        raise DataError(
            f"{path}: payload has {len(pixels)} bytes, expected {width * height}"
        )
    img = np.frombuffer(pixels, dtype=np.uint8).reshape(height, width)
    return (img.astype(np.float32) / 255.0)[None, None]


# -- splits & manifests ------------------------------------------------------

def split(samples, train_frac: float, val_frac: float, rng: Rng):
    """Seeded shuffle, then partition into (train, validation, test)."""
    if train_frac < 0 or val_frac < 0 or train_frac + val_frac > 1.0 + 1e-12:
        raise ValueError(f"invalid fractions {train_frac}/{val_frac}")
    n = len(samples)
    perm = rng.permutation(n)
    n_train = int(round(train_frac * n))
    n_val = int(round(val_frac * n))
    train = [samples[i] for i in perm[:n_train]]
    val = [samples[i] for i in perm[n_train:n_train + n_val]]
    test = [samples[i] for i in perm[n_train + n_val:]]
    return train, val, test


MANIFEST_NAME = "manifest.txt"


def write_dataset(samples, out_dir) -> None:
    """images/*.pgm, masks/*.pgm, and a `index,image,mask,truth_count`
    manifest under out_dir."""
    img_dir = os.path.join(out_dir, "images")
    mask_dir = os.path.join(out_dir, "masks")
    os.makedirs(img_dir, exist_ok=True)
    os.makedirs(mask_dir, exist_ok=True)
    lines = []
    for i, sample in enumerate(samples):
        img_rel = f"images/img_{i:04d}.pgm"
        mask_rel = f"masks/msk_{i:04d}.pgm"
        write_pgm(sample.image, os.path.join(out_dir, img_rel))
        write_pgm(sample.mask.astype(np.float32), os.path.join(out_dir, mask_rel))
        lines.append(f"{i},{img_rel},{mask_rel},{sample.truth_count}")
    with open(os.path.join(out_dir, MANIFEST_NAME), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_dataset(data_dir) -> list[Sample]:
    manifest = os.path.join(data_dir, MANIFEST_NAME)
    if not os.path.isfile(manifest):
        raise DataError(f"{manifest}: manifest not found")
    samples = []
    with open(manifest, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                _, img_rel, mask_rel, count_s = line.split(",")
            except ValueError as exc:
                raise DataError(f"{manifest}: malformed line {line!r}") from exc
            image = read_pgm(os.path.join(data_dir, img_rel))
            mask_img = read_pgm(os.path.join(data_dir, mask_rel))
            samples.append(Sample(
                image=image,
                mask=(mask_img[0, 0] > 0.5).astype(np.uint8),
                truth_count=int(count_s),
                truth_centers=None,
            ))
    return samples
