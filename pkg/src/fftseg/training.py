"""Soft-DICE loss, Adam, and the epoch loop with held-out validation and
per-step wall timing."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core import Rng
from .metrics import mean_iou
from .unet import UNetModel

DICE_EPS = 1e-6


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 8
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0
    validation_fraction: float = 0.2

    def validate(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class EpochReport:
    epoch: int
    train_loss: float
    val_loss: float
    val_mean_iou: float
    ms_per_step: float


def dice_loss(pred, target):
    """Negative soft DICE over the whole batch jointly.

    loss = -(2*sum(p*g) + eps) / (sum(p) + sum(g) + eps); returns
    (loss, d loss / d pred). Perfect prediction approaches -1, disjoint
    prediction approaches 0.
    """
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise ValueError(f"shapes differ: {pred.shape} vs {target.shape}")
    inter = float(np.sum(pred.astype(np.float64) * target))
    total = float(np.sum(pred, dtype=np.float64) + np.sum(target, dtype=np.float64))
    num = 2.0 * inter + DICE_EPS
    den = total + DICE_EPS
    loss = -num / den
    grad = ((num - 2.0 * target.astype(np.float64) * den) / den ** 2).astype(pred.dtype)
    return loss, grad


@dataclass
class AdamState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params, grads, state: AdamState, config: TrainConfig) -> None:
    """One in-place Adam update with bias correction."""
    if list(params) != list(grads):
        raise ValueError("parameter and gradient registries are misaligned")
    if not state.m:
        for name, p in params.items():
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
    state.step += 1
    b1, b2 = config.beta1, config.beta2
    correction1 = 1.0 - b1 ** state.step
    correction2 = 1.0 - b2 ** state.step
    for name, p in params.items():
        g = grads[name].astype(p.dtype, copy=False)
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        p -= config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)


def predict(model: UNetModel, images, batch_size: int = 16) -> np.ndarray:
    """Inference-mode probabilities for a (n, 1, s, s) stack."""
    images = np.asarray(images)
    chunks = [
        model.forward(images[i:i + batch_size])
        for i in range(0, images.shape[0], batch_size)
    ]
    return np.concatenate(chunks, axis=0)


def stack_samples(samples):
    """(images, masks) float32 stacks from a list of data.Sample."""
    images = np.concatenate([s.image for s in samples], axis=0).astype(np.float32)
    masks = np.stack([s.mask for s in samples]).astype(np.float32)[:, None]
    return images, masks


def train(model: UNetModel, samples, config: TrainConfig, log=None):
    """Train in place; returns (model, [EpochReport]).

    Holds out `validation_fraction` of the samples (seeded shuffle), runs
    seeded mini-batch epochs, and reports validation loss / mean IoU after
    each epoch. ms_per_step averages the wall time of forward + loss +
    backward + optimizer, excluding batch assembly.
    """
    config.validate()
    if len(samples) == 0:
        raise ValueError("empty dataset")
    images, masks = stack_samples(samples)
    n = images.shape[0]
    n_val = int(round(n * config.validation_fraction))
    order = Rng(config.seed).derive("val-split").permutation(n)
    val_idx = order[:n_val]
    train_idx = order[n_val:]
    if config.batch_size > len(train_idx):
        raise ValueError(
            f"batch size {config.batch_size} exceeds training split of {len(train_idx)}"
        )
    shuffle_rng = Rng(config.seed).derive("shuffle")
    dropout_rng = Rng(config.seed).derive("dropout")
    state = AdamState()
    reports = []
    for epoch in range(1, config.epochs + 1):
        perm = train_idx[shuffle_rng.permutation(len(train_idx))]
        losses = []
        weights = []
        step_seconds = []
        for start in range(0, len(perm), config.batch_size):
            batch = perm[start:start + config.batch_size]
            xb = images[batch]
            yb = masks[batch]
            t0 = time.perf_counter()
            pred = model.forward(xb, training=True, rng=dropout_rng)
            loss, grad = dice_loss(pred, yb)
            grads = model.backward(grad)
            adam_step(model.params, grads, state, config)
            step_seconds.append(time.perf_counter() - t0)
            losses.append(loss)
            weights.append(len(batch))
        train_loss = float(np.average(losses, weights=weights))
        if n_val:
            val_pred = predict(model, images[val_idx], config.batch_size)
            val_loss, _ = dice_loss(val_pred, masks[val_idx])
            val_iou = mean_iou(val_pred, masks[val_idx])
        else:
            val_loss, val_iou = float("nan"), float("nan")
        report = EpochReport(
            epoch=epoch,
            train_loss=train_loss,
            val_loss=float(val_loss),
            val_mean_iou=float(val_iou),
            ms_per_step=float(np.mean(step_seconds) * 1000.0),
        )
        reports.append(report)
        if log is not None:
            log(report)
    return model, reports


EPOCH_CSV_HEADER = "epoch,train_loss,val_loss,val_mean_iou,ms_per_step"


def write_epoch_csv(reports, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(EPOCH_CSV_HEADER + "\n")
        for r in reports:
            fh.write(
                f"{r.epoch},{r.train_loss:.9g},{r.val_loss:.9g},"
                f"{r.val_mean_iou:.9g},{r.ms_per_step:.6g}\n"
            )
