"""Localization and segmentation metrics against ground truth.

CorLoc counts frames whose predicted rectangle overlaps the true one with
IoU strictly above 0.5. Segmentation quality is the pixel-weighted Jaccard
index between predicted and true superpixel masks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

EVAL_FORMAT_VERSION = 1


def iou_rect(a, b):
    """Intersection over union of two (x_min, y_min, x_max, y_max) rectangles."""
    ax0, ay0, ax1, ay1 = (float(t) for t in a)
    bx0, by0, bx1, by1 = (float(t) for t in b)
    area_a = (ax1 - ax0) * (ay1 - ay0)
    area_b = (bx1 - bx0) * (by1 - by0)
    if area_a <= 0 or area_b <= 0:
        raise ValueError("degenerate rectangle")
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (area_a + area_b - inter)


def corloc(predicted, gt):
    """Percentage of frames with IoU > 0.5; frames without gt are skipped."""
    if len(predicted) != len(gt):
        raise ValueError("frame count mismatch")
    scored = [iou_rect(p, g) for p, g in zip(predicted, gt) if g is not None]
    if not scored:
        raise ValueError("no frames with ground-truth boxes")
    hits = sum(1 for s in scored if s > 0.5)
    return 100.0 * hits / len(scored)


def iou_mask(pred, gt, pixel_counts):
    """Pixel-weighted Jaccard of two superpixel masks; 1 if both are empty."""
    pred = np.asarray(pred).astype(bool)
    gt = np.asarray(gt).astype(bool)
    counts = np.asarray(pixel_counts, dtype=float)
    if pred.shape != gt.shape or pred.shape != counts.shape:
        raise ValueError("mask length mismatch")
    union = counts[pred | gt].sum()
    if union == 0:
        return 1.0
    return counts[pred & gt].sum() / union


@dataclass
class FrameResult:
    frame_id: str
    selected_box: int
    iou_box: float | None
    iou_mask: float | None
    class_tag: str | None = None


@dataclass
class EvaluationReport:
    frames: list
    corloc: float | None
    mean_iou_mask: float | None
    mean_iou_box: float | None
    per_class: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "format_version": EVAL_FORMAT_VERSION,
            "frames": [
                {
                    "frame_id": fr.frame_id,
                    "selected_box": fr.selected_box,
                    "iou_box": fr.iou_box,
                    "iou_mask": fr.iou_mask,
                    "class": fr.class_tag,
                }
                for fr in self.frames
            ],
            "aggregates": {
                "corloc": self.corloc,
                "mean_iou_mask": self.mean_iou_mask,
                "mean_iou_box": self.mean_iou_box,
                "per_class": self.per_class,
            },
        }


def evaluate(instance, selected_boxes, masks):
    """Score selected boxes and masks against whatever ground truth exists."""
    if len(selected_boxes) != instance.n_frames or len(masks) != instance.n_frames:
        raise ValueError("results cover %d/%d frames but instance has %d"
                         % (len(selected_boxes), len(masks), instance.n_frames))
    frames = []
    box_ious, mask_ious = [], []
    for f, frame in enumerate(instance.frames):
        ib = None
        im = None
        if frame.gt_box is not None:
            pred_rect = frame.box_rects[selected_boxes[f]]
            ib = iou_rect(pred_rect, frame.gt_box)
            box_ious.append(ib)
        if frame.gt_mask is not None:
            im = iou_mask(masks[f], frame.gt_mask, frame.sp_pixel_counts)
            mask_ious.append(im)
        frames.append(FrameResult(
            frame_id=frame.frame_id,
            selected_box=int(selected_boxes[f]),
            iou_box=ib, iou_mask=im, class_tag=frame.class_tag,
        ))

    cl = None
    if box_ious:
        cl = 100.0 * sum(1 for s in box_ious if s > 0.5) / len(box_ious)

    per_class = {}
    tags = {fr.class_tag for fr in frames if fr.class_tag is not None}
    for tag in sorted(tags):
        cls_box = [fr.iou_box for fr in frames
                   if fr.class_tag == tag and fr.iou_box is not None]
        cls_mask = [fr.iou_mask for fr in frames
                    if fr.class_tag == tag and fr.iou_mask is not None]
        per_class[tag] = {
            "corloc": (100.0 * sum(1 for s in cls_box if s > 0.5) / len(cls_box))
            if cls_box else None,
            "mean_iou_mask": float(np.mean(cls_mask)) if cls_mask else None,
        }

    return EvaluationReport(
        frames=frames,
        corloc=cl,
        mean_iou_mask=float(np.mean(mask_ious)) if mask_ious else None,
        mean_iou_box=float(np.mean(box_ious)) if box_ious else None,
        per_class=per_class,
    )
