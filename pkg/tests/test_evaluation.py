"""Scoring predicted boxes and masks against ground truth."""

import dataclasses

import numpy as np
import pytest

from fgcluster.evaluation import corloc, evaluate, iou_mask, iou_rect


def test_iou_rect_half_overlap():
    a = [0.0, 0.0, 10.0, 10.0]
    b = [5.0, 0.0, 15.0, 10.0]
    assert iou_rect(a, b) == pytest.approx(1.0 / 3.0)


def test_iou_rect_disjoint_and_identical():
    a = [0.0, 0.0, 10.0, 10.0]
    assert iou_rect(a, [20.0, 20.0, 30.0, 30.0]) == 0.0
    assert iou_rect(a, a) == pytest.approx(1.0)


def test_iou_rect_rejects_degenerate():
    with pytest.raises(ValueError):
        iou_rect([0.0, 0.0, 0.0, 10.0], [0.0, 0.0, 5.0, 5.0])


def test_corloc_is_a_percentage():
    # one hit above the half-overlap bar out of two frames
    preds = [[0.0, 0.0, 10.0, 10.0], [0.0, 0.0, 10.0, 10.0]]
    gts = [[1.0, 0.0, 11.0, 10.0], [50.0, 50.0, 60.0, 60.0]]
    assert corloc(preds, gts) == pytest.approx(50.0)


def test_corloc_threshold_is_strict():
    # exactly 0.5 overlap does not count as a hit
    preds = [[0.0, 0.0, 10.0, 10.0]]
    gts = [[0.0, 0.0, 10.0, 15.0]]
    assert iou_rect(preds[0], gts[0]) == pytest.approx(2.0 / 3.0)
    gts2 = [[0.0, 0.0, 10.0, 30.0]]
    assert iou_rect(preds[0], gts2[0]) == pytest.approx(1.0 / 3.0)
    assert corloc(preds, gts) == pytest.approx(100.0)
    assert corloc(preds, gts2) == pytest.approx(0.0)


def test_corloc_skips_missing_ground_truth():
    preds = [[0.0, 0.0, 10.0, 10.0], [0.0, 0.0, 10.0, 10.0]]
    gts = [None, [0.0, 0.0, 10.0, 10.0]]
    assert corloc(preds, gts) == pytest.approx(100.0)


def test_iou_mask_weights_by_pixel_counts():
    pred = np.array([1, 1, 0])
    gt = np.array([1, 0, 0])
    counts = np.array([10.0, 30.0, 5.0])
    # intersection 10 pixels, union 40 pixels
    assert iou_mask(pred, gt, counts) == pytest.approx(0.25)


def test_iou_mask_empty_conventions():
    counts = np.ones(3)
    assert iou_mask(np.zeros(3), np.zeros(3), counts) == 1.0
    assert iou_mask(np.ones(3), np.zeros(3), counts) == 0.0


def test_iou_mask_rejects_shape_mismatch():
    with pytest.raises(ValueError):
        iou_mask(np.ones(3), np.ones(4), np.ones(3))


def test_evaluate_toy_perfect_recovery(toy):
    report = evaluate(toy, [0], [np.array([0, 0, 1, 0, 0])])
    assert report.mean_iou_mask == pytest.approx(1.0)
    assert len(report.frames) == 1
    assert report.frames[0].selected_box == 0


def test_evaluate_rejects_frame_count_mismatch(toy):
    with pytest.raises(ValueError):
        evaluate(toy, [0, 1], [np.zeros(5), np.zeros(5)])


def test_evaluate_aggregates_per_class(small_instance):
    tagged = []
    for f, frame in enumerate(small_instance.frames):
        tag = "a" if f == 0 else "b"
        tagged.append(dataclasses.replace(frame, class_tag=tag))
    inst = dataclasses.replace(small_instance, frames=tuple(tagged))
    boxes = [0] * inst.n_frames
    masks = [np.asarray(f.gt_mask, dtype=int) for f in inst.frames]
    report = evaluate(inst, boxes, masks)
    assert set(report.per_class) == {"a", "b"}
    for stats in report.per_class.values():
        assert stats["mean_iou_mask"] == pytest.approx(1.0)


def test_report_json_layout(toy):
    report = evaluate(toy, [0], [np.array([0, 0, 1, 0, 0])])
    payload = report.to_json()
    assert payload["format_version"] == 1
    assert "aggregates" in payload and "frames" in payload
    agg = payload["aggregates"]
    assert set(agg) >= {"corloc", "mean_iou_mask", "mean_iou_box"}
    assert payload["frames"][0]["selected_box"] == 0
