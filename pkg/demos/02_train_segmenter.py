#!/usr/bin/env python3
"""Train the segmenter at desk scale, with and without the spectral input
block, and write a sample prediction next to its ground truth as PGM files.

At this miniature scale the spectral variant converges noticeably more
slowly than the plain one: its input block first has to learn a useful
2-channel spectral mixing before the encoder sees a clean image. With the
bigger acceptance-scale budget (64x64, base 16, depth 4, 30 epochs) it
reaches a validation mean IoU of ~0.85.
"""

import os

from fftseg import SyntheticSpec, TrainConfig, UNetConfig, UNetModel, generate, predict, train, write_pgm
from fftseg.training import stack_samples
from fftseg.unet import with_fft_input

OUT = os.path.join(os.path.dirname(__file__), "out_train")
os.makedirs(OUT, exist_ok=True)

samples = generate(SyntheticSpec(image_size=32, cell_count_range=(1, 4),
                                 radius_range=(3.0, 7.0), seed=7), 64)
model_cfg = UNetConfig(input_size=32, base_channels=16, depth=2, seed=7)
train_cfg = TrainConfig(epochs=30, batch_size=4, learning_rate=3e-4, seed=7)

results = {}
for label, cfg in (("fft-unet", model_cfg),
                   ("plain-unet", with_fft_input(model_cfg, False))):
    model = UNetModel.build(cfg)
    _, reports = train(model, samples, train_cfg)
    results[label] = (model, reports)
    traj = " ".join(f"{r.val_mean_iou:.2f}" for r in reports[4::5])
    print(f"{label:>10}: val mean IoU every 5 epochs: {traj}")

print("\n== final validation mean IoU (direction reported, not asserted) ==")
for label, (_, reports) in results.items():
    print(f"  {label:>10}: {reports[-1].val_mean_iou:.4f}")

model = results["fft-unet"][0]
images, masks = stack_samples(samples[:1])
prob = predict(model, images)
write_pgm(images[0, 0], os.path.join(OUT, "input.pgm"))
write_pgm(masks[0, 0], os.path.join(OUT, "truth.pgm"))
write_pgm(prob[0, 0], os.path.join(OUT, "prediction.pgm"))
ckpt = os.path.join(OUT, "model.ckpt")
model.save(ckpt)
print(f"\nwrote input/truth/prediction PGMs and checkpoint under {OUT}")
