"""Object localization on probability masks: maximum filter, spaced local
peaks, DBSCAN clustering, and the end-to-end count.

Defaults (min_distance 5 px, threshold 0.5, eps = 2*min_distance,
min_pts 1) are config-overridable and echoed into every output record.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import resize_bilinear

NOISE = -1


def max_filter(img, window: int) -> np.ndarray:
    """Each pixel becomes the max over a window x window box centered on it;
    borders replicate (clamp) the edge pixels. `window` must be odd."""
    img = np.asarray(img)
    if img.ndim != 2:
        raise ValueError("max_filter expects a 2-D array")
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")
    if window == 1:
        return img.copy()
    r = window // 2
    padded = np.pad(img, r, mode="edge")
    win = sliding_window_view(padded, (window, window))
    return win.max(axis=(2, 3))


def local_maxima(img, min_distance: int, abs_threshold: float) -> np.ndarray:
    """(n, 2) array of (row, col) peaks.

    A pixel qualifies when it equals the max-filter output for window
    2*min_distance+1 and strictly exceeds abs_threshold. Qualifying pixels
    closer than min_distance (Chebyshev) are thinned, keeping the higher
    intensity (ties: smaller row, then smaller col).
    """
    img = np.asarray(img)
    if min_distance < 1:
        raise ValueError("min_distance must be >= 1")
    peak = (img == max_filter(img, 2 * min_distance + 1)) & (img > abs_threshold)
    cand = np.argwhere(peak)
    if cand.shape[0] == 0:
        return np.empty((0, 2), dtype=np.intp)
    vals = img[cand[:, 0], cand[:, 1]]
    order = np.lexsort((cand[:, 1], cand[:, 0], -vals))
    kept_r = np.empty(cand.shape[0], dtype=np.intp)
    kept_c = np.empty(cand.shape[0], dtype=np.intp)
    n_kept = 0
    for idx in order:
        r, c = cand[idx]
        if n_kept:
            cheb = np.maximum(np.abs(kept_r[:n_kept] - r), np.abs(kept_c[:n_kept] - c))
            if cheb.min() < min_distance:
                continue
        kept_r[n_kept] = r
        kept_c[n_kept] = c
        n_kept += 1
    points = np.stack([kept_r[:n_kept], kept_c[:n_kept]], axis=1)
    return points[np.lexsort((points[:, 1], points[:, 0]))]


@dataclass
class ClusterLabeling:
    labels: np.ndarray  # per-point cluster id >= 0, or NOISE (-1)
    cluster_count: int


def dbscan(points, eps: float, min_pts: int) -> ClusterLabeling:
    """Classic density clustering under Euclidean distance.

    With min_pts = 1 every point is core, so clusters are exactly the
    connected components of the eps-neighborhood graph.
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if eps <= 0:
        raise ValueError("eps must be > 0")
    if min_pts < 1:
        raise ValueError("min_pts must be >= 1")
    n = points.shape[0]
    labels = np.full(n, NOISE, dtype=np.intp)
    if n == 0:
        return ClusterLabeling(labels, 0)
    diff = points[:, None, :] - points[None, :, :]
    within = (diff ** 2).sum(axis=2) <= eps * eps
    neighbor_counts = within.sum(axis=1)
    core = neighbor_counts >= min_pts
    visited = np.zeros(n, dtype=bool)
    cluster = 0
    for i in range(n):
        if visited[i] or not core[i]:
            continue
        queue = [i]
        visited[i] = True
        labels[i] = cluster
        while queue:
            j = queue.pop()
            if not core[j]:
                continue
            for k in np.flatnonzero(within[j]):
                if labels[k] == NOISE:
                    labels[k] = cluster
                if not visited[k]:
                    visited[k] = True
                    queue.append(k)
        cluster += 1
    return ClusterLabeling(labels, cluster)


@dataclass(frozen=True)
class CountParams:
    min_distance: int = 5
    abs_threshold: float = 0.5
    eps: float | None = None  # None -> 2 * min_distance
    min_pts: int = 1
    resize_to: int | None = None  # None -> no resize

    def resolved_eps(self) -> float:
        return float(2 * self.min_distance if self.eps is None else self.eps)


def count_objects(prob_mask, params: CountParams = CountParams()):
    """(count, centroids) for a [0, 1] probability mask.

    Pipeline: optional bilinear resize, max-filter-based local maxima,
    DBSCAN over the peaks; centroid = mean peak coordinate per cluster.
    """
    img = np.asarray(prob_mask, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("count_objects expects a 2-D mask")
    if params.resize_to:
        img = resize_bilinear(img[None, None], params.resize_to, params.resize_to)[0, 0]
    points = local_maxima(img, params.min_distance, params.abs_threshold)
    labeling = dbscan(points, params.resolved_eps(), params.min_pts)
    centroids = np.array([
        points[labeling.labels == c].mean(axis=0) for c in range(labeling.cluster_count)
    ]).reshape(-1, 2)
    return labeling.cluster_count, centroids


def format_count_record(image_id: str, params: CountParams, count: int, centroids) -> str:
    """One-line provenance record: parameters used, count, centroid list."""
    cents = ";".join(f"({r:.2f},{c:.2f})" for r, c in np.asarray(centroids).reshape(-1, 2))
    return (
        f"image={image_id} min_distance={params.min_distance} "
        f"abs_threshold={params.abs_threshold:g} eps={params.resolved_eps():g} "
        f"min_pts={params.min_pts} resize_to={params.resize_to or 0} "
        f"count={count} centroids={cents}"
    )
