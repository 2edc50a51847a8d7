"""Proposal handling and the half-area membership rule."""

import json

import numpy as np
import pytest

from fgprep.boxes import (box_memberships, inside_mask, load_proposals,
                          project_gt_mask, proposals_for)
from fgprep.errors import PrepError
from fgprep.regions import RegionStats


def _split_regions():
    """A 6x8 frame split into a left region (0) and a right region (1)."""
    labels = np.zeros((6, 8), dtype=int)
    labels[:, 4:] = 1
    return RegionStats(
        labels=labels,
        n_sp=2,
        counts=np.array([24.0, 24.0]),
        positions=np.array([[0.25, 0.5], [0.75, 0.5]]),
        colors=np.zeros((2, 3)),
    )


def test_inside_mask_uses_pixel_centers():
    inside = inside_mask((4, 4), (1.0, 1.0, 3.0, 2.0))
    # centers 1.5 and 2.5 fall in [1, 3]; only row center 1.5 in [1, 2]
    assert np.count_nonzero(inside) == 2
    assert inside[1, 1] and inside[1, 2]


def test_membership_needs_half_the_region():
    regions = _split_regions()
    # covers the left region fully and exactly half of the right one
    rects, members = box_memberships(regions, [[0, 0, 6, 6]])
    assert rects.shape == (1, 4)
    assert members[0].tolist() == [0, 1]
    # one column less leaves the right region below half
    _, members = box_memberships(regions, [[0, 0, 5, 6]])
    assert members[0].tolist() == [0]


def test_box_smaller_than_every_region_is_dropped():
    regions = _split_regions()
    with pytest.warns(UserWarning, match="no region majority"):
        rects, members = box_memberships(regions,
                                         [[0, 0, 1, 1], [0, 0, 8, 6]])
    assert rects.shape == (1, 4)
    assert len(members) == 1
    assert members[0].tolist() == [0, 1]


def test_full_image_box_takes_all_regions():
    regions = _split_regions()
    _, members = box_memberships(regions, [[0, 0, 8, 6]])
    assert members[0].tolist() == [0, 1]


def test_proposals_capped_by_score(tmp_path):
    entries = [[float(i), 0.0, float(i + 1), 1.0, i / 40.0]
               for i in range(35)]
    path = tmp_path / "p.json"
    path.write_text(json.dumps({"a.png": entries}))
    rects = proposals_for(load_proposals(path), "a.png", max_proposals=30)
    assert rects.shape == (30, 4)
    assert rects[0, 0] == 34.0
    assert rects[:, 0].min() == 5.0


def test_unscored_proposals_keep_file_order(tmp_path):
    entries = [[3.0, 0.0, 4.0, 1.0], [1.0, 0.0, 2.0, 1.0, 0.9]]
    path = tmp_path / "p.json"
    path.write_text(json.dumps({"a.png": entries}))
    rects = proposals_for(load_proposals(path), "a.png")
    assert rects[:, 0].tolist() == [3.0, 1.0]


def test_proposal_errors(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps({"a.png": [], "b.png": [[0, 0, 0, 1]],
                                "c.png": [[0, 0, 1]]}))
    props = load_proposals(path)
    with pytest.raises(PrepError, match="no proposals"):
        proposals_for(props, "missing.png")
    with pytest.raises(PrepError, match="empty"):
        proposals_for(props, "a.png")
    with pytest.raises(PrepError, match="degenerate"):
        proposals_for(props, "b.png")
    with pytest.raises(PrepError):
        proposals_for(props, "c.png")


def test_proposals_must_be_a_mapping(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps([[0, 0, 1, 1]]))
    with pytest.raises(PrepError, match="map"):
        load_proposals(path)


def test_gt_projection_is_strict_majority():
    regions = _split_regions()
    mask = np.zeros((6, 8))
    mask[:, :4] = 1.0    # all of region 0
    mask[:3, 4:] = 1.0   # exactly half of region 1
    assert project_gt_mask(regions, mask).tolist() == [1, 0]
    mask[3, 4] = 1.0     # one pixel over half
    assert project_gt_mask(regions, mask).tolist() == [1, 1]


def test_gt_projection_checks_shape():
    regions = _split_regions()
    with pytest.raises(PrepError, match="shape"):
        project_gt_mask(regions, np.zeros((4, 4)))
