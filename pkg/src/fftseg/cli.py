"""Command-line front end: dataset generation, training, evaluation, object
counting, and benchmarking.

Configuration is a flat `key = value` text file ('#' comments); every key
has a default, unknown keys are rejected, and the effective values are
echoed into the run's output directory. Exit codes: 0 success, 2
usage/config error, 3 data error, 4 internal error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import bench as bench_mod
from . import data as data_mod
from .core import resize_bilinear
from .metrics import dice_coefficient, iou
from .postproc import CountParams, count_objects, format_count_record
from .training import TrainConfig, predict, train, write_epoch_csv
from .unet import CheckpointError, UNetConfig, UNetModel

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


class ConfigError(Exception):
    """Bad configuration file or incompatible options."""


def _parse_bool(text: str) -> bool:
    if text == "true":
        return True
    if text == "false":
        return False
    raise ValueError(f"expected true/false, got {text!r}")


def _parse_floats(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(float(tok) for tok in text.split(","))


# key -> (parser, default); echoed in this order
CONFIG_SCHEMA: dict = {
    "model.input_size": (int, 64),
    "model.base_channels": (int, 16),
    "model.depth": (int, 4),
    "model.dropout_schedule": (_parse_floats, ()),  # empty -> built-in schedule
    "model.use_fft_input": (_parse_bool, True),
    "model.seed": (int, 0),
    "train.epochs": (int, 30),
    "train.batch_size": (int, 8),
    "train.learning_rate": (float, 1e-4),
    "train.beta1": (float, 0.9),
    "train.beta2": (float, 0.999),
    "train.epsilon": (float, 1e-8),
    "train.seed": (int, 0),
    "train.validation_fraction": (float, 0.2),
    "data.image_size": (int, 64),
    "data.cell_count_min": (int, 1),
    "data.cell_count_max": (int, 8),
    "data.radius_min": (float, 4.0),
    "data.radius_max": (float, 10.0),
    "data.noise_sigma": (float, 0.05),
    "data.overlap_allowed": (_parse_bool, True),
    "data.min_gap": (float, 2.0),
    "data.seed": (int, 0),
    "count.min_distance": (int, 5),
    "count.abs_threshold": (float, 0.5),
    "count.eps": (float, 10.0),
    "count.min_pts": (int, 1),
    "count.resize_to": (int, 0),  # 0 -> no resize
}


def parse_config(path: str | None) -> dict:
    """Defaults overlaid with the key = value file at `path` (if given)."""
    values = {key: default for key, (_, default) in CONFIG_SCHEMA.items()}
    if path is None:
        return values
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw.rstrip()!r}")
            key = key.strip()
            value = value.strip()
            if key not in CONFIG_SCHEMA:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            parser = CONFIG_SCHEMA[key][0]
            try:
                values[key] = parser(value)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(repr(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def echo_config(values: dict, out_dir: str) -> None:
    path = os.path.join(out_dir, "effective_config.txt")
    with open(path, "w", encoding="utf-8") as fh:
        for key in CONFIG_SCHEMA:
            fh.write(f"{key} = {_format_value(values[key])}\n")


def unet_config_from(values: dict) -> UNetConfig:
    sched = values["model.dropout_schedule"] or None
    return UNetConfig(
        input_size=values["model.input_size"],
        base_channels=values["model.base_channels"],
        depth=values["model.depth"],
        dropout_schedule=sched,
        use_fft_input=values["model.use_fft_input"],
        seed=values["model.seed"],
    )


def train_config_from(values: dict) -> TrainConfig:
    return TrainConfig(
        epochs=values["train.epochs"],
        batch_size=values["train.batch_size"],
        learning_rate=values["train.learning_rate"],
        beta1=values["train.beta1"],
        beta2=values["train.beta2"],
        epsilon=values["train.epsilon"],
        seed=values["train.seed"],
        validation_fraction=values["train.validation_fraction"],
    )


def synthetic_spec_from(values: dict) -> data_mod.SyntheticSpec:
    return data_mod.SyntheticSpec(
        image_size=values["data.image_size"],
        cell_count_range=(values["data.cell_count_min"], values["data.cell_count_max"]),
        radius_range=(values["data.radius_min"], values["data.radius_max"]),
        noise_sigma=values["data.noise_sigma"],
        overlap_allowed=values["data.overlap_allowed"],
        min_gap=values["data.min_gap"],
        seed=values["data.seed"],
    )


def count_params_from(values: dict) -> CountParams:
    return CountParams(
        min_distance=values["count.min_distance"],
        abs_threshold=values["count.abs_threshold"],
        eps=values["count.eps"],
        min_pts=values["count.min_pts"],
        resize_to=values["count.resize_to"] or None,
    )


def _require_dataset_dir(path: str) -> None:
    manifest = os.path.join(path, data_mod.MANIFEST_NAME)
    if not os.path.isfile(manifest):
        raise ConfigError(f"no dataset manifest at {manifest}")


def cmd_gen(args) -> int:
    values = parse_config(args.config)
    spec = synthetic_spec_from(values)
    samples = data_mod.generate(spec, args.count)
    os.makedirs(args.out, exist_ok=True)
    data_mod.write_dataset(samples, args.out)
    echo_config(values, args.out)
    print(f"wrote {len(samples)} image/mask pairs to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    values = parse_config(args.config)
    if args.use_fft_input is not None:
        values["model.use_fft_input"] = args.use_fft_input
    _require_dataset_dir(args.data)
    samples = data_mod.load_dataset(args.data)
    model_cfg = unet_config_from(values)
    size = samples[0].image.shape[2]
    if size != model_cfg.input_size:
        raise ConfigError(
            f"data images are {size}x{size} but model.input_size is {model_cfg.input_size}"
        )
    model = UNetModel.build(model_cfg)
    train_cfg = train_config_from(values)
    os.makedirs(args.out, exist_ok=True)

    def log(r):
        print(f"epoch {r.epoch:3d}  train {r.train_loss:+.4f}  val {r.val_loss:+.4f}  "
              f"val mean IoU {r.val_mean_iou:.4f}  {r.ms_per_step:.0f} ms/step")

    _, reports = train(model, samples, train_cfg, log=log)
    model.save(os.path.join(args.out, "model.ckpt"))
    write_epoch_csv(reports, os.path.join(args.out, "metrics.csv"))
    echo_config(values, args.out)
    print(f"checkpoint and metrics written to {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    model = UNetModel.load(args.model)
    _require_dataset_dir(args.data)
    samples = data_mod.load_dataset(args.data)
    size = samples[0].image.shape[2]
    if size != model.config.input_size:
        raise ConfigError(
            f"data images are {size}x{size} but the model expects {model.config.input_size}"
        )
    images = np.concatenate([s.image for s in samples])
    preds = predict(model, images)
    lines = ["index,iou,dice"]
    ious, dices = [], []
    for i, sample in enumerate(samples):
        pred_mask = preds[i, 0] >= 0.5
        ious.append(iou(pred_mask, sample.mask))
        dices.append(dice_coefficient(pred_mask, sample.mask))
        lines.append(f"{i},{ious[-1]:.6f},{dices[-1]:.6f}")
    lines.append(f"mean,{np.mean(ious):.6f},{np.mean(dices):.6f}")
    text = "\n".join(lines) + "\n"
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "eval.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {path}")
    print(text, end="")
    return EXIT_OK


def cmd_count(args) -> int:
    values = parse_config(args.config)
    params = count_params_from(values)
    image = data_mod.read_pgm(args.image)
    if args.model:
        model = UNetModel.load(args.model)
        s = model.config.input_size
        if image.shape[2] != s or image.shape[3] != s:
            image = resize_bilinear(image, s, s)
        prob = predict(model, image)[0, 0]
    else:
        prob = image[0, 0]  # model bypass: treat the image as a probability mask
    count, centroids = count_objects(prob, params)
    record = format_count_record(os.path.basename(args.image), params, count, centroids)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "count.txt"), "w", encoding="utf-8") as fh:
            fh.write(record + "\n")
    print(record)
    return EXIT_OK


def cmd_bench(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    if args.suite == "conv":
        records = bench_mod.bench_conv(sizes=(64, 256), kernels=(3, 7, 15), reps=7)
        path = os.path.join(args.out, "conv.csv")
        bench_mod.write_bench_csv(records, path)
        for r in records:
            print(f"{r.variant:>6} {r.image_size:4d} k={r.kernel_size:<2d} "
                  f"median {r.median_ms:8.3f} ms  iqr {r.iqr_ms:.3f} ms")
    else:
        report = bench_mod.bench_train_step(
            UNetConfig(input_size=32, base_channels=8, depth=2, seed=0), reps=7)
        path = os.path.join(args.out, "train_step.csv")
        bench_mod.write_bench_csv([report.fft, report.plain], path)
        print(f"fft-unet   median {report.fft.median_ms:8.2f} ms/step")
        print(f"plain-unet median {report.plain.median_ms:8.2f} ms/step")
        print(f"ratio fft/plain = {report.ratio:.3f}")
    print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fftseg",
        description="FFT-input U-Net segmentation pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train a model on a dataset directory")
    p.add_argument("--config", default=None)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--use-fft-input", type=_parse_bool, default=None,
                   metavar="BOOL", help="override model.use_fft_input")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("count", help="count objects in an image")
    p.add_argument("--config", default=None)
    p.add_argument("--model", default=None,
                   help="checkpoint; omit to count on the raw image")
    p.add_argument("--image", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("bench", help="run a benchmark suite")
    p.add_argument("--suite", choices=("conv", "train"), required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (data_mod.DataError, CheckpointError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # internal invariant violations
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
