"""Superpixel extraction and per-region statistics."""

from dataclasses import dataclass

import numpy as np
from imageio.v3 import imread
from skimage.segmentation import slic
from skimage.util import img_as_float

from .errors import PrepError


def load_image(path):
    """Read an image as (H, W, 3) float RGB in [0, 1]."""
    try:
        raw = imread(path)
    except (OSError, ValueError) as exc:
        raise PrepError("cannot read image '%s': %s" % (path, exc)) from exc
    img = img_as_float(raw)
    if img.ndim == 2:
        img = np.stack([img] * 3, axis=-1)
    if img.shape[-1] == 4:
        img = img[..., :3]
    if img.ndim != 3 or img.shape[-1] != 3:
        raise PrepError("image '%s' has unsupported shape %s"
                        % (path, img.shape))
    return np.clip(img, 0.0, 1.0)


@dataclass
class RegionStats:
    """One frame's superpixel decomposition and per-region summaries."""

    labels: np.ndarray             # (H, W) region index per pixel
    n_sp: int
    counts: np.ndarray             # (n_sp,) pixels per region
    positions: np.ndarray          # (n_sp, 2) normalized centroid (x, y)
    colors: np.ndarray             # (n_sp, 3) mean RGB


def extract_regions(image, n_superpixels=200, compactness=10.0):
    """SLIC regions relabeled to a dense 0..n-1 range."""
    if n_superpixels < 1:
        raise PrepError("need at least one superpixel")
    labels = slic(image, n_segments=n_superpixels,
                  compactness=compactness, start_label=0)
    uniq, flat = np.unique(labels, return_inverse=True)
    labels = flat.reshape(labels.shape)
    n_sp = len(uniq)

    h, w = labels.shape
    counts = np.bincount(labels.ravel(), minlength=n_sp).astype(float)
    cols = np.tile(np.arange(w, dtype=float) + 0.5, (h, 1))
    rows = np.tile(np.arange(h, dtype=float).reshape(-1, 1) + 0.5, (1, w))
    x = np.bincount(labels.ravel(), weights=cols.ravel(), minlength=n_sp)
    y = np.bincount(labels.ravel(), weights=rows.ravel(), minlength=n_sp)
    positions = np.column_stack([x / counts / w, y / counts / h])

    colors = np.column_stack([
        np.bincount(labels.ravel(), weights=image[..., ch].ravel(),
                    minlength=n_sp) / counts
        for ch in range(3)
    ])
    return RegionStats(labels=labels, n_sp=n_sp, counts=counts,
                       positions=positions, colors=np.clip(colors, 0.0, 1.0))


def color_histograms(image, regions, bins=7):
    """Per-region color histogram columns, (bins^3, n_sp) with integer sums."""
    if bins < 2:
        raise PrepError("need at least two bins per channel")
    q = np.minimum((image * bins).astype(int), bins - 1)
    cell = (q[..., 0] * bins + q[..., 1]) * bins + q[..., 2]
    hist = np.zeros((bins ** 3, regions.n_sp))
    np.add.at(hist, (cell.ravel(), regions.labels.ravel()), 1.0)
    return hist
