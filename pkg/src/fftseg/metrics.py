"""Segmentation quality measures: IoU (Jaccard), batch mean IoU, and the
DICE coefficient. Both set metrics define empty-vs-empty as 1.0."""

from __future__ import annotations

import numpy as np


def _as_binary(mask) -> np.ndarray:
    mask = np.asarray(mask)
    out = mask > 0.5 if mask.dtype != bool else mask
    return out


def _check_shapes(a, b):
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")


def iou(a, b) -> float:
    """|a & b| / |a | b| for binary masks."""
    a, b = _as_binary(a), _as_binary(b)
    _check_shapes(a, b)
    union = np.count_nonzero(a | b)
    if union == 0:
        return 1.0
    return np.count_nonzero(a & b) / union


def dice_coefficient(a, b) -> float:
    """2|a & b| / (|a| + |b|) for binary masks."""
    a, b = _as_binary(a), _as_binary(b)
    _check_shapes(a, b)
    size_sum = np.count_nonzero(a) + np.count_nonzero(b)
    if size_sum == 0:
        return 1.0
    return 2.0 * np.count_nonzero(a & b) / size_sum


def mean_iou(pred, targets, threshold: float = 0.5) -> float:
    """Per-image IoU of thresholded predictions, averaged over the batch.

    This is the set-IoU mean, not a confusion-matrix running mean. Inputs
    are (b, 1, h, w) or (b, h, w); predictions are binarized at
    `threshold`, targets at 0.5.
    """
    pred = np.asarray(pred)
    targets = np.asarray(targets)
    if pred.shape != targets.shape:
        raise ValueError(f"shapes differ: {pred.shape} vs {targets.shape}")
    pred_b = pred >= threshold
    targ_b = targets > 0.5
    flat_p = pred_b.reshape(pred_b.shape[0], -1)
    flat_t = targ_b.reshape(targ_b.shape[0], -1)
    scores = []
    for i in range(flat_p.shape[0]):
        union = np.count_nonzero(flat_p[i] | flat_t[i])
        scores.append(1.0 if union == 0 else np.count_nonzero(flat_p[i] & flat_t[i]) / union)
    return float(np.mean(scores))
