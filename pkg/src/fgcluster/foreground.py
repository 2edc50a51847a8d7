"""Histogram-matching foreground model.

The foreground of every frame should look alike: with H^k the per-frame
histogram matrix and y^k the frame's indicator slice, the model penalizes
sum over frame pairs of ||H^k y^k - H^l y^l||^2, which is a quadratic form
y^T F y in the global indicator. F is assembled blockwise and is PSD by
construction (it is a Gram-like matrix of histogram differences).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ForegroundMatrix:
    F: np.ndarray
    scale_mode: str                # "none" or "pairs"


def build_F(histograms, scale_mode="pairs", pair_mode="all"):
    """Assemble F over the global superpixel index.

    y^T F y = c * sum over matched frame pairs (k, l) of ||H^k y^k - H^l y^l||^2,
    with c = 1 for scale_mode="none" and c = 1/K for scale_mode="pairs" so the
    term's weight stays stable as the frame count K grows. pair_mode picks the
    matched pairs: every unordered pair, or consecutive frames only.
    """
    blocks = histograms.per_frame
    K = len(blocks)
    if K < 1:
        raise ValueError("need at least one frame")
    d_bins = blocks[0].shape[0]
    for h in blocks:
        if h.shape[0] != d_bins:
            raise ValueError("histogram bin counts differ across frames")
    if scale_mode not in ("none", "pairs"):
        raise ValueError("scale_mode must be 'none' or 'pairs'")
    if pair_mode not in ("all", "consecutive"):
        raise ValueError("pair_mode must be 'all' or 'consecutive'")

    sizes = [h.shape[1] for h in blocks]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    N = int(offsets[-1])
    c = 1.0 if scale_mode == "none" else 1.0 / K

    F = np.zeros((N, N))
    if K == 1:
        return ForegroundMatrix(F=F, scale_mode=scale_mode)

    H = [np.asarray(h, dtype=float) for h in blocks]
    sl = [slice(int(offsets[k]), int(offsets[k + 1])) for k in range(K)]
    if pair_mode == "all":
        # sum_{k<l} ||a_k - a_l||^2 = K sum_k ||a_k||^2 - ||sum_k a_k||^2
        G = np.hstack(H)
        F -= G.T @ G
        for k in range(K):
            F[sl[k], sl[k]] += K * (H[k].T @ H[k])
    else:
        for k in range(K - 1):
            F[sl[k], sl[k]] += H[k].T @ H[k]
            F[sl[k + 1], sl[k + 1]] += H[k + 1].T @ H[k + 1]
            cross = H[k].T @ H[k + 1]
            F[sl[k], sl[k + 1]] -= cross
            F[sl[k + 1], sl[k]] -= cross.T
    F *= c
    return ForegroundMatrix(F=0.5 * (F + F.T), scale_mode=scale_mode)
