"""Rounding of the relaxed solution to boxes and binary masks.

Box selection is a per-frame argmax over the relaxed z. Segmentation masks
come from thresholding: each frame's y slice is normalized by its maximum,
a uniform grid of thresholds is tried, and the candidate mask with the
smallest normalized-cut score under the frame's similarity graph wins.
"""

from __future__ import annotations

import numpy as np

from .similarity import ncut_score

ZERO_MAX = 1e-12


def select_boxes(solution_v, instance):
    """Per-frame index of the strongest box; ties go to the lowest index."""
    z = solution_v[instance.n_sp_total:]
    return [int(np.argmax(z[instance.box_slice(f)]))
            for f in range(instance.n_frames)]


def round_frame(y_frame, W, n_thresholds=30):
    """Threshold one frame's relaxed indicators into a binary mask.

    Thresholds t_k = k / (n_thresholds + 1) are applied to y / max(y).
    Candidates that are all-foreground, all-background, or have a degenerate
    cut score are discarded; among the rest the smallest ncut wins, with ties
    going to the larger threshold. If every candidate is degenerate the mask
    falls back to [y_hat >= 0.5].
    """
    y = np.asarray(y_frame, dtype=float)
    if n_thresholds < 1:
        raise ValueError("n_thresholds must be >= 1")
    top = y.max(initial=0.0)
    if top <= ZERO_MAX:
        return np.zeros(y.size, dtype=int)
    y_hat = y / top
    best_mask = None
    best_score = None
    for k in range(1, n_thresholds + 1):
        t = k / (n_thresholds + 1.0)
        mask = (y_hat >= t).astype(int)
        score = ncut_score(W, mask)
        if score is None:
            continue
        if best_score is None or score <= best_score:
            best_score = score
            best_mask = mask
    if best_mask is None:
        return (y_hat >= 0.5).astype(int)
    return best_mask


def round_segmentation(solution_v, instance, laplacians, n_thresholds=30):
    """Binary mask per frame from the relaxed y part of the solution."""
    y = solution_v[: instance.n_sp_total]
    return [
        round_frame(y[instance.sp_slice(f)], laplacians[f].W, n_thresholds)
        for f in range(instance.n_frames)
    ]


def restrict_masks_to_boxes(masks, boxes, instance):
    """Zero every mask entry outside the selected box's superpixels."""
    out = []
    for f, frame in enumerate(instance.frames):
        keep = np.zeros(frame.n_sp, dtype=int)
        keep[frame.memberships[boxes[f]]] = 1
        out.append(masks[f] * keep)
    return out
