"""Assemble per-frame summaries into a manifest plus FGCM sidecars.

The output format is the instance contract of the solving tool: a JSON
manifest naming per-frame structure and nine matrix sidecars holding the
globally stacked numeric data.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import PrepError
from .fgcm import write_matrix

MANIFEST_VERSION = 1
RAW_FEATURES = "raw_features"

_SIDE_NAMES = (
    "sp_positions", "sp_colors", "sp_pixel_counts", "sp_saliency",
    "box_rects", "box_saliency", "histograms", "sp_features", "box_features",
)


@dataclass
class FrameData:
    """Everything one frame contributes to the instance."""

    frame_id: str
    positions: np.ndarray          # (n_sp, 2)
    colors: np.ndarray             # (n_sp, 3)
    counts: np.ndarray             # (n_sp,)
    sp_saliency: np.ndarray        # (n_sp,)
    rects: np.ndarray              # (m_box, 4)
    box_saliency: np.ndarray       # (m_box,)
    memberships: list              # per box, int index array
    histograms: np.ndarray         # (d_bins, n_sp)
    sp_features: np.ndarray        # (n_sp, d)
    box_features: np.ndarray       # (m_box, d_box)
    gt_box: np.ndarray | None = None
    gt_mask: np.ndarray | None = None
    class_tag: str | None = None


def write_instance(frames, out_path, hyper=None):
    """Write the manifest and sidecars; returns the manifest path."""
    if not frames:
        raise PrepError("no frames to write")
    d_bins = {f.histograms.shape[0] for f in frames}
    if len(d_bins) != 1:
        raise PrepError("frames disagree on histogram bins: %s"
                        % sorted(d_bins))

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    stem = out_path.stem

    mats = {
        "sp_positions": np.vstack([f.positions for f in frames]),
        "sp_colors": np.vstack([f.colors for f in frames]),
        "sp_pixel_counts": np.concatenate([f.counts for f in frames]),
        "sp_saliency": np.concatenate([f.sp_saliency for f in frames]),
        "box_rects": np.vstack([f.rects for f in frames]),
        "box_saliency": np.concatenate([f.box_saliency for f in frames]),
        "histograms": np.hstack([f.histograms for f in frames]),
        "sp_features": np.vstack([f.sp_features for f in frames]),
        "box_features": np.vstack([f.box_features for f in frames]),
    }
    sidecars = {}
    for name in _SIDE_NAMES:
        rel = "%s.%s.fgcm" % (stem, name)
        write_matrix(out_path.parent / rel, mats[name])
        sidecars[name] = rel

    entries = []
    for f in frames:
        entry = {
            "frame_id": f.frame_id,
            "n_sp": int(f.positions.shape[0]),
            "m_box": int(f.rects.shape[0]),
            "memberships": [[int(j) for j in m] for m in f.memberships],
        }
        if f.class_tag is not None:
            entry["class"] = f.class_tag
        if f.gt_box is not None:
            entry["gt_box"] = [float(v) for v in f.gt_box]
        if f.gt_mask is not None:
            entry["gt_mask"] = [int(v) for v in f.gt_mask]
        entries.append(entry)

    manifest = {
        "format_version": MANIFEST_VERSION,
        "hyper": dict(hyper or {}),
        "sp_feature_kind": RAW_FEATURES,
        "box_feature_kind": RAW_FEATURES,
        "frames": entries,
        "sidecars": sidecars,
    }
    with open(out_path, "w") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")
    return out_path
