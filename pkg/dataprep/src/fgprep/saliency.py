"""Saliency maps: loading, fusion, and region pooling."""

import numpy as np
from imageio.v3 import imread
from skimage.util import img_as_float

from .boxes import inside_mask
from .errors import PrepError


def load_map(path, shape):
    """A per-pixel saliency map in [0, 1] matching the image shape.

    PNG and friends are scaled from their integer range; .npy files are
    taken as already normalized.
    """
    path = str(path)
    try:
        if path.endswith(".npy"):
            sal = np.load(path)
        else:
            sal = img_as_float(imread(path))
    except (OSError, ValueError) as exc:
        raise PrepError("cannot read saliency map '%s': %s"
                        % (path, exc)) from exc
    sal = np.asarray(sal, dtype=float)
    if sal.ndim == 3:
        sal = sal.mean(axis=-1)
    if sal.shape != tuple(shape):
        raise PrepError("saliency map '%s' is %s but the image is %s"
                        % (path, sal.shape, tuple(shape)))
    if not np.all(np.isfinite(sal)):
        raise PrepError("saliency map '%s' has non-finite values" % path)
    if sal.min() < 0.0 or sal.max() > 1.0:
        raise PrepError("saliency map '%s' leaves [0, 1]" % path)
    return sal


def fuse_max(appearance, motion):
    """Per-pixel maximum of the two maps."""
    a = np.asarray(appearance, dtype=float)
    b = np.asarray(motion, dtype=float)
    if a.shape != b.shape:
        raise PrepError("saliency maps disagree on shape: %s vs %s"
                        % (a.shape, b.shape))
    return np.maximum(a, b)


def pool_regions(sal, regions):
    """Mean saliency per superpixel."""
    sums = np.bincount(regions.labels.ravel(), weights=sal.ravel(),
                       minlength=regions.n_sp)
    return np.clip(sums / regions.counts, 0.0, 1.0)


def pool_rect(sal, rect):
    """Mean saliency over the pixels inside one rectangle."""
    inside = inside_mask(sal.shape, rect)
    n = int(np.count_nonzero(inside))
    if n == 0:
        raise PrepError("rectangle %s covers no pixels" % list(rect))
    return float(np.clip(sal[inside].mean(), 0.0, 1.0))
