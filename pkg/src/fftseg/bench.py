"""Timing harness: FFT-theorem convolution vs direct spatial convolution,
and per-training-step cost of the spectral-input vs plain network variants.

Every timed path is cross-checked for numerical agreement before any timing
is recorded; results are medians with interquartile ranges, never asserted
against absolute wall-clock claims.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .core import Rng
from .data import SyntheticSpec, generate
from .fft import direct_conv2d, fft_conv2d
from .training import AdamState, TrainConfig, adam_step, dice_loss, stack_samples
from .unet import UNetConfig, UNetModel


@dataclass(frozen=True)
class BenchRecord:
    scenario: str
    image_size: int
    kernel_size: int
    variant: str
    reps: int
    median_ms: float
    iqr_ms: float


@dataclass(frozen=True)
class TrainStepReport:
    fft: BenchRecord
    plain: BenchRecord
    losses_fft: tuple[float, ...]
    losses_plain: tuple[float, ...]

    @property
    def ratio(self) -> float:
        """fft / plain ms-per-step."""
        return self.fft.median_ms / self.plain.median_ms


def _time_runs(fn, reps: int, warmup: int = 2) -> tuple[float, float]:
    """(median_ms, iqr_ms) over `reps` timed runs after `warmup` runs."""
    if reps < 5:
        raise ValueError("need at least 5 repetitions")
    for _ in range(warmup):
        fn()
    samples = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        samples.append((time.perf_counter() - t0) * 1000.0)
    q25, q50, q75 = np.percentile(samples, [25, 50, 75])
    return float(q50), float(q75 - q25)


def bench_conv(sizes, kernels, reps: int = 7, seed: int = 0) -> list[BenchRecord]:
    """Time fft_conv2d against direct_conv2d on identical random inputs.

    Outputs are compared (max abs <= 1e-5) before timing counts; a mismatch
    raises instead of producing a record.
    """
    records = []
    for size in sizes:
        for ksize in kernels:
            rng = Rng(seed).derive(f"conv-{size}-{ksize}")
            img = (rng.uniform((size, size)) - 0.5).astype(np.float32)
            kernel = (rng.uniform((ksize, ksize)) - 0.5).astype(np.float32)
            spectral = fft_conv2d(img, kernel)
            spatial = direct_conv2d(img, kernel)
            err = float(np.max(np.abs(spectral - spatial)))
            if err > 1e-5:
                raise AssertionError(
                    f"fft/direct disagree at size={size} kernel={ksize}: {err:.2e}"
                )
            for variant, fn in (("fft", lambda: fft_conv2d(img, kernel)),
                                ("direct", lambda: direct_conv2d(img, kernel))):
                med, iqr = _time_runs(fn, reps)
                records.append(BenchRecord(
                    scenario="conv", image_size=size, kernel_size=ksize,
                    variant=variant, reps=reps, median_ms=med, iqr_ms=iqr,
                ))
    return records


def _step_runner(config: UNetConfig, train_config: TrainConfig, batch):
    model = UNetModel.build(config)
    state = AdamState()
    rng = Rng(train_config.seed).derive("bench-dropout")
    x, y = batch
    losses = []

    def step():
        pred = model.forward(x, training=True, rng=rng)
        loss, grad = dice_loss(pred, y)
        grads = model.backward(grad)
        adam_step(model.params, grads, state, train_config)
        losses.append(float(loss))

    return step, losses


def bench_train_step(config: UNetConfig, train_config: TrainConfig | None = None,
                     reps: int = 7, batch_size: int = 4,
                     n_samples: int = 4) -> TrainStepReport:
    """Median ms per training step for the spectral-input variant vs the
    plain variant, on identical synthetic batches.

    Both models share everything except use_fft_input. Data generation is
    excluded from the timed region.
    """
    train_config = train_config or TrainConfig(batch_size=batch_size)
    spec = SyntheticSpec(image_size=config.input_size, seed=train_config.seed)
    batch = stack_samples(generate(spec, n_samples))
    records = {}
    losses = {}
    for variant, enabled in (("fft-unet", True), ("plain-unet", False)):
        vcfg = replace(config, use_fft_input=enabled)
        step, loss_log = _step_runner(vcfg, train_config, batch)
        med, iqr = _time_runs(step, reps)
        records[variant] = BenchRecord(
            scenario="train_step", image_size=config.input_size, kernel_size=0,
            variant=variant, reps=reps, median_ms=med, iqr_ms=iqr,
        )
        losses[variant] = tuple(loss_log)
    return TrainStepReport(
        fft=records["fft-unet"], plain=records["plain-unet"],
        losses_fft=losses["fft-unet"], losses_plain=losses["plain-unet"],
    )


BENCH_CSV_HEADER = "scenario,image_size,kernel_size,variant,reps,median_ms,iqr_ms"


def write_bench_csv(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(BENCH_CSV_HEADER + "\n")
        for r in records:
            fh.write(
                f"{r.scenario},{r.image_size},{r.kernel_size},{r.variant},"
                f"{r.reps},{r.median_ms:.6g},{r.iqr_ms:.6g}\n"
            )
