#!/usr/bin/env python3
"""Run the timing harness at a small scale: convolution crossover table and
the per-training-step cost of the two network variants."""

from fftseg import UNetConfig, bench_conv, bench_train_step

print("== convolution: direct vs FFT (medians of 5) ==")
records = bench_conv(sizes=(64, 128), kernels=(3, 9, 15), reps=5)
print(f"{'size':>6} {'kernel':>7} {'variant':>8} {'median':>10} {'iqr':>8}")
for r in records:
    print(f"{r.image_size:>6} {r.kernel_size:>7} {r.variant:>8} "
          f"{r.median_ms:>8.2f}ms {r.iqr_ms:>6.2f}ms")

print("\n== training step: spectral input block on vs off ==")
report = bench_train_step(UNetConfig(input_size=32, base_channels=8, depth=2, seed=0),
                          reps=5)
print(f"fft-unet:   {report.fft.median_ms:8.1f} ms/step (iqr {report.fft.iqr_ms:.1f})")
print(f"plain-unet: {report.plain.median_ms:8.1f} ms/step (iqr {report.plain.iqr_ms:.1f})")
print(f"ratio fft/plain = {report.ratio:.3f}")
print("\nabsolute numbers are hardware-bound; the harness reports medians and")
print("ratios rather than asserting any particular wall-clock figure.")
