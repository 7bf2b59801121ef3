"""U-shaped segmentation network: spectral input block, contracting blocks
c1..c<depth>, a bottleneck, expanding blocks, and a 1x1 conv + sigmoid head.

Parameters live in an ordered name->array registry; gradients come back in
the same order. Checkpoints serialize the config plus the registry as
little-endian float32 blobs behind a text manifest.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import Rng, check_grid4
from . import layers


class CheckpointError(Exception):
    """Raised for unreadable, truncated, or mismatched checkpoint files."""


MAGIC = b"FSEG"
FORMAT_VERSION = 1


def default_dropout_schedule(depth: int) -> tuple[float, ...]:
    """0.1 on the two outermost blocks of each path, 0.2 everywhere else."""
    n = 2 * depth + 1
    sched = [0.2] * n
    for i in range(min(2, depth)):
        sched[i] = 0.1
        sched[n - 1 - i] = 0.1
    return tuple(sched)


@dataclass(frozen=True)
class UNetConfig:
    input_size: int = 256
    base_channels: int = 16
    depth: int = 4
    dropout_schedule: tuple[float, ...] | None = None  # per block c1..c(2*depth+1)
    use_fft_input: bool = True
    seed: int = 0

    def resolved_dropout(self) -> tuple[float, ...]:
        if self.dropout_schedule is None:
            return default_dropout_schedule(self.depth)
        sched = tuple(float(r) for r in self.dropout_schedule)
        if len(sched) != 2 * self.depth + 1:
            raise ValueError(
                f"dropout schedule needs {2 * self.depth + 1} entries, got {len(sched)}"
            )
        return sched

    def validate(self) -> None:
        if self.depth < 1 or self.base_channels < 1:
            raise ValueError("depth and base_channels must be >= 1")
        if self.input_size % (1 << self.depth) != 0:
            raise ValueError(
                f"input_size {self.input_size} not divisible by 2^depth = {1 << self.depth}"
            )
        if self.use_fft_input and (self.input_size & (self.input_size - 1)) != 0:
            raise ValueError("the spectral input block needs a power-of-two input_size")
        self.resolved_dropout()


def _conv_specs(config: UNetConfig) -> list[tuple[str, tuple[int, ...]]]:
    """(name, weight shape) for every parameterized layer, in manifest order."""
    specs = []
    if config.use_fft_input:
        specs.append(("fft_in", (2, 2, 3, 3)))
    depth = config.depth
    cin, ch = 1, config.base_channels
    for i in range(1, depth + 1):
        specs.append((f"c{i}.conv1", (ch, cin, 3, 3)))
        specs.append((f"c{i}.conv2", (ch, ch, 3, 3)))
        cin, ch = ch, ch * 2
    bn = depth + 1
    specs.append((f"c{bn}.conv1", (ch, cin, 3, 3)))
    specs.append((f"c{bn}.conv2", (ch, ch, 3, 3)))
    specs.append((f"c{bn}.conv3", (ch, ch, 2, 2)))
    for j in range(1, depth + 1):
        half = ch // 2
        specs.append((f"c{bn + j}.up", (half, ch, 2, 2)))
        specs.append((f"c{bn + j}.conv1", (half, 2 * half, 3, 3)))
        specs.append((f"c{bn + j}.conv2", (half, half, 3, 3)))
        ch = half
    specs.append(("out", (1, ch, 1, 1)))
    return specs


def parameter_count(config: UNetConfig) -> int:
    """Closed-form total parameter count (weights + biases)."""
    total = 0
    for _, shape in _conv_specs(config):
        total += int(np.prod(shape)) + shape[0]
    return total


class UNetModel:
    def __init__(self, config: UNetConfig, params: dict[str, np.ndarray]):
        self.config = config
        self.params = params
        self._tape = None

    @classmethod
    def build(cls, config: UNetConfig, rng: Rng | None = None, dtype=np.float32) -> "UNetModel":
        """He-initialized model; all draws come from `rng` (default: a
        stream derived from config.seed)."""
        config.validate()
        if rng is None:
            rng = Rng(config.seed).derive("init")
        params: dict[str, np.ndarray] = {}
        for name, shape in _conv_specs(config):
            fan_in = int(np.prod(shape[1:]))
            params[f"{name}.w"] = (rng.normal(shape) * np.sqrt(2.0 / fan_in)).astype(dtype)
            params[f"{name}.b"] = np.zeros(shape[0], dtype=dtype)
        return cls(config, params)

    @property
    def dtype(self):
        return next(iter(self.params.values())).dtype

    def astype(self, dtype) -> "UNetModel":
        return UNetModel(self.config, {k: v.astype(dtype) for k, v in self.params.items()})

    def _conv(self, h, name, tape, pad="same"):
        p = self.params
        y, cache = layers.conv2d_forward(h, p[f"{name}.w"], p[f"{name}.b"], pad)
        tape.append(("conv", name, cache))
        return y

    def _conv_elu(self, h, name, tape):
        y = self._conv(h, name, tape)
        tape.append(("elu", y))
        return layers.elu(y)

    def forward(self, x, training: bool = False, rng: Rng | None = None):
        """Probability map of shape (b, 1, s, s) for input (b, 1, s, s).

        Training mode applies dropout (needs an Rng) and records the tape
        that backward() consumes.
        """
        x = check_grid4(x, channels=1)
        s = self.config.input_size
        if x.shape[2] != s or x.shape[3] != s:
            raise ValueError(f"expected {s}x{s} input, got {x.shape[2]}x{x.shape[3]}")
        if training and rng is None:
            raise ValueError("training-mode forward needs an Rng for dropout")
        sched = self.config.resolved_dropout()
        depth = self.config.depth
        tape: list = []
        h = x.astype(self.dtype, copy=False)

        if self.config.use_fft_input:
            h, cache = layers.fft_input_block(h, self.params["fft_in.w"], self.params["fft_in.b"])
            tape.append(("fft_in", cache))

        skips = []
        for i in range(1, depth + 1):
            h = self._conv_elu(h, f"c{i}.conv1", tape)
            h = self._conv_elu(h, f"c{i}.conv2", tape)
            h, scale = layers.dropout(h, sched[i - 1], rng, training)
            tape.append(("dropout", scale))
            skips.append(h)
            h, pool_tape = layers.maxpool2x2(h)
            tape.append(("pool", pool_tape, i - 1))

        bn = depth + 1
        h = self._conv_elu(h, f"c{bn}.conv1", tape)
        h = self._conv_elu(h, f"c{bn}.conv2", tape)
        h, scale = layers.dropout(h, sched[depth], rng, training)
        tape.append(("dropout", scale))
        h = self._conv(h, f"c{bn}.conv3", tape)

        for j in range(1, depth + 1):
            name = f"c{bn + j}"
            up, cache = layers.upconv2x2(h, self.params[f"{name}.up.w"], self.params[f"{name}.up.b"])
            tape.append(("upconv", name, cache))
            skip = skips[depth - j]
            h = layers.concat_channels(up, skip)
            tape.append(("concat", up.shape[1], depth - j))
            h = self._conv_elu(h, f"{name}.conv1", tape)
            h = self._conv_elu(h, f"{name}.conv2", tape)
            h, scale = layers.dropout(h, sched[depth + j], rng, training)
            tape.append(("dropout", scale))

        h = self._conv(h, "out", tape)
        prob = layers.sigmoid(h)
        tape.append(("sigmoid", prob))
        self._tape = tape if training else None
        return prob

    def backward(self, grad_out) -> dict[str, np.ndarray]:
        """Gradient registry (same names/order as params) for the last
        training-mode forward pass."""
        if self._tape is None:
            raise RuntimeError("backward() requires a preceding forward(training=True)")
        grads: dict[str, np.ndarray] = {name: None for name in self.params}
        skip_grads: dict[int, np.ndarray] = {}
        g = np.asarray(grad_out)

        for op in reversed(self._tape):
            kind = op[0]
            if kind == "sigmoid":
                g = layers.sigmoid_backward(op[1], g)
            elif kind == "conv":
                _, name, cache = op
                g, gw, gb = layers.conv2d_backward(cache, g)
                grads[f"{name}.w"] = gw
                grads[f"{name}.b"] = gb
            elif kind == "elu":
                g = layers.elu_backward(op[1], g)
            elif kind == "dropout":
                g = layers.dropout_backward(op[1], g)
            elif kind == "concat":
                _, up_channels, level = op
                g, g_skip = layers.split_channels(g, up_channels)
                skip_grads[level] = g_skip
            elif kind == "upconv":
                _, name, cache = op
                g, gw, gb = layers.upconv2x2_backward(cache, g)
                grads[f"{name}.up.w"] = gw
                grads[f"{name}.up.b"] = gb
            elif kind == "pool":
                _, pool_tape, level = op
                g = layers.maxpool2x2_backward(pool_tape, g)
                g = g + skip_grads.pop(level)  # rejoin the skip branch
            elif kind == "fft_in":
                g, gw, gb = layers.fft_input_block_backward(op[1], g)
                grads["fft_in.w"] = gw
                grads["fft_in.b"] = gb
        missing = [k for k, v in grads.items() if v is None]
        if missing:
            raise RuntimeError(f"gradients missing for {missing}")
        return grads

    # -- checkpoint io ----------------------------------------------------

    def save(self, path) -> None:
        """Write magic, version, text header (config + manifest), then the
        float32 little-endian parameter payload."""
        lines = [
            f"input_size={self.config.input_size}",
            f"base_channels={self.config.base_channels}",
            f"depth={self.config.depth}",
            "dropout_schedule=" + ",".join(repr(r) for r in self.config.resolved_dropout()),
            f"use_fft_input={'true' if self.config.use_fft_input else 'false'}",
            f"seed={self.config.seed}",
        ]
        offset = 0
        blobs = []
        for name, arr in self.params.items():
            blob = np.ascontiguousarray(arr, dtype="<f4").tobytes()
            shape = ",".join(str(d) for d in arr.shape)
            lines.append(f"param={name};{shape};{offset}")
            blobs.append(blob)
            offset += len(blob)
        header = ("\n".join(lines) + "\n").encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(bytes([FORMAT_VERSION]))
            fh.write(len(header).to_bytes(4, "little"))
            fh.write(header)
            for blob in blobs:
                fh.write(blob)

    @classmethod
    def load(cls, path) -> "UNetModel":
        with open(path, "rb") as fh:
            raw = fh.read()
        if len(raw) < 9 or raw[:4] != MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
        if raw[4] != FORMAT_VERSION:
            raise CheckpointError(f"{path}: unsupported format version {raw[4]}")
        header_len = int.from_bytes(raw[5:9], "little")
        if len(raw) < 9 + header_len:
            raise CheckpointError(f"{path}: truncated header")
        try:
            header = raw[9:9 + header_len].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CheckpointError(f"{path}: undecodable header") from exc
        payload = raw[9 + header_len:]

        fields: dict[str, str] = {}
        manifest: list[tuple[str, tuple[int, ...], int]] = []
        for line in header.splitlines():
            if not line:
                continue
            key, _, value = line.partition("=")
            if not _:
                raise CheckpointError(f"{path}: malformed header line {line!r}")
            if key == "param":
                try:
                    name, shape_s, offset_s = value.split(";")
                    shape = tuple(int(d) for d in shape_s.split(","))
                    manifest.append((name, shape, int(offset_s)))
                except ValueError as exc:
                    raise CheckpointError(f"{path}: malformed manifest entry {line!r}") from exc
            else:
                fields[key] = value
        try:
            sched = tuple(float(r) for r in fields["dropout_schedule"].split(","))
            config = UNetConfig(
                input_size=int(fields["input_size"]),
                base_channels=int(fields["base_channels"]),
                depth=int(fields["depth"]),
                dropout_schedule=sched,
                use_fft_input=fields["use_fft_input"] == "true",
                seed=int(fields["seed"]),
            )
        except KeyError as exc:
            raise CheckpointError(f"{path}: header missing field {exc}") from exc

        params: dict[str, np.ndarray] = {}
        expected = 0
        for name, shape, offset in manifest:
            nbytes = int(np.prod(shape)) * 4
            if offset != expected:
                raise CheckpointError(f"{path}: manifest offset mismatch at {name}")
            expected += nbytes
            if offset + nbytes > len(payload):
                raise CheckpointError(
                    f"{path}: payload truncated ({len(payload)} bytes, "
                    f"need {offset + nbytes})"
                )
            flat = np.frombuffer(payload, dtype="<f4", count=int(np.prod(shape)),
                                 offset=offset)
            params[name] = flat.reshape(shape).copy()
        if expected != len(payload):
            raise CheckpointError(
                f"{path}: payload length {len(payload)} disagrees with manifest ({expected})"
            )
        expected_names = [f"{n}.{s}" for n, _ in _conv_specs(config) for s in ("w", "b")]
        if list(params) != expected_names:
            raise CheckpointError(f"{path}: manifest does not match the config's layer plan")
        return cls(config, params)


def build(config: UNetConfig, rng: Rng | None = None, dtype=np.float32) -> UNetModel:
    return UNetModel.build(config, rng, dtype)


def with_fft_input(config: UNetConfig, enabled: bool) -> UNetConfig:
    """Same config with the spectral input block toggled."""
    return replace(config, use_fft_input=enabled)
