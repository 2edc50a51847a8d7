"""End-to-end preparation runs on the bundled corpora."""

import json
import shutil
from pathlib import Path

import numpy as np
import pytest
from imageio.v3 import imwrite

from fgprep.errors import PrepError
from fgprep.fgcm import read_matrix, write_matrix
from fgprep.pipeline import prep_images, prep_video

from conftest import PLACEMENTS, SQUARE


def _prep_corpus(corpus, out, **kw):
    kw.setdefault("n_superpixels", 16)
    return prep_images(corpus / "images", corpus / "saliency",
                       corpus / "proposals.json", out, **kw)


def _load(out_path):
    manifest = json.loads(Path(out_path).read_text())
    stem = Path(out_path).parent
    mats = {name: read_matrix(stem / rel)
            for name, rel in manifest["sidecars"].items()}
    return manifest, mats


def test_image_run_layout(tmp_path, image_corpus):
    out = tmp_path / "inst.json"
    _prep_corpus(image_corpus, out)
    manifest, mats = _load(out)
    assert manifest["format_version"] == 1
    assert manifest["sp_feature_kind"] == "raw_features"
    assert manifest["box_feature_kind"] == "raw_features"
    assert [f["frame_id"] for f in manifest["frames"]] == [
        "img0.png", "img1.png", "img2.png"]
    n_sp = sum(f["n_sp"] for f in manifest["frames"])
    m_box = sum(f["m_box"] for f in manifest["frames"])
    assert all(f["m_box"] == 2 for f in manifest["frames"])
    assert mats["sp_positions"].shape == (n_sp, 2)
    assert mats["sp_features"].shape == (n_sp, 5)
    assert mats["box_rects"].shape == (m_box, 4)
    assert mats["box_features"].shape == (m_box, 7)
    assert mats["histograms"].shape == (343, n_sp)
    assert mats["sp_saliency"].shape == (n_sp, 1)
    assert mats["box_saliency"].shape == (m_box, 1)


def test_true_box_is_more_salient_than_decoy(tmp_path, image_corpus):
    out = tmp_path / "inst.json"
    _prep_corpus(image_corpus, out)
    manifest, mats = _load(out)
    box_sal = mats["box_saliency"][:, 0]
    at = 0
    for frame, (sx, sy) in zip(manifest["frames"], PLACEMENTS):
        rects = mats["box_rects"][at:at + frame["m_box"]]
        assert rects[0].tolist() == [sx, sy, sx + SQUARE, sy + SQUARE]
        assert box_sal[at] > 0.9
        assert box_sal[at + 1] < 0.2
        at += frame["m_box"]


def test_ground_truth_masks_flow_through(tmp_path, image_corpus):
    out = tmp_path / "inst.json"
    _prep_corpus(image_corpus, out, gt_mask_dir=image_corpus / "gt",
                 class_tag="square")
    manifest, mats = _load(out)
    at = 0
    for frame in manifest["frames"]:
        assert frame["class"] == "square"
        gt = np.asarray(frame["gt_mask"])
        assert gt.shape == (frame["n_sp"],)
        assert 0 < gt.sum() < frame["n_sp"]
        colors = mats["sp_colors"][at:at + frame["n_sp"]]
        # foreground regions are the red ones
        assert colors[gt == 1, 0].min() > 0.5
        assert colors[gt == 0, 2].min() > 0.5
        at += frame["n_sp"]


def test_reruns_are_byte_identical(tmp_path, image_corpus):
    out_a = tmp_path / "a" / "inst.json"
    out_b = tmp_path / "b" / "inst.json"
    for out in (out_a, out_b):
        out.parent.mkdir()
        _prep_corpus(image_corpus, out)
    assert out_a.read_bytes() == out_b.read_bytes()
    manifest = json.loads(out_a.read_text())
    for rel in manifest["sidecars"].values():
        assert (out_a.parent / rel).read_bytes() == \
            (out_b.parent / rel).read_bytes()


def test_hyper_overrides_recorded(tmp_path, image_corpus):
    out = tmp_path / "inst.json"
    _prep_corpus(image_corpus, out, hyper={"kappa": 2.5, "lambda": 0.5})
    manifest = json.loads(out.read_text())
    assert manifest["hyper"] == {"kappa": 2.5, "lambda": 0.5}


def _constant_corpus(root, n_images=2, size=(6, 8)):
    h, w = size
    for sub in ("images", "saliency"):
        (root / sub).mkdir(parents=True)
    proposals = {}
    for i in range(n_images):
        name = "im%d.png" % i
        imwrite(root / "images" / name,
                np.full((h, w, 3), 255, dtype=np.uint8))
        imwrite(root / "saliency" / name,
                np.full((h, w), 128, dtype=np.uint8))
        proposals[name] = [[0.0, 0.0, float(w), float(h)]]
    (root / "proposals.json").write_text(json.dumps(proposals))
    return root


def test_constant_images_one_bin_one_box_all_members(tmp_path):
    corpus = _constant_corpus(tmp_path / "flat")
    out = tmp_path / "inst.json"
    prep_images(corpus / "images", corpus / "saliency",
                corpus / "proposals.json", out, n_superpixels=4)
    manifest, mats = _load(out)
    populated = np.nonzero(mats["histograms"].sum(axis=1))[0]
    assert populated.tolist() == [342]
    for frame in manifest["frames"]:
        assert frame["memberships"] == [list(range(frame["n_sp"]))]


def test_feature_overrides_replace_defaults(tmp_path):
    corpus = _constant_corpus(tmp_path / "flat")
    out = tmp_path / "inst.json"
    prep_images(corpus / "images", corpus / "saliency",
                corpus / "proposals.json", out, n_superpixels=4)
    manifest, _ = _load(out)
    n_sp = sum(f["n_sp"] for f in manifest["frames"])

    sp_path = tmp_path / "sp.fgcm"
    custom = np.arange(n_sp * 2, dtype=float).reshape(n_sp, 2)
    write_matrix(sp_path, custom)
    out2 = tmp_path / "inst2.json"
    prep_images(corpus / "images", corpus / "saliency",
                corpus / "proposals.json", out2, n_superpixels=4,
                sp_features_path=sp_path)
    _, mats = _load(out2)
    np.testing.assert_array_equal(mats["sp_features"], custom)

    write_matrix(sp_path, np.zeros((n_sp + 1, 2)))
    with pytest.raises(PrepError, match="rows"):
        prep_images(corpus / "images", corpus / "saliency",
                    corpus / "proposals.json", tmp_path / "inst3.json",
                    n_superpixels=4, sp_features_path=sp_path)


def test_missing_saliency_map_is_an_error(tmp_path, image_corpus):
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(PrepError, match="missing saliency"):
        prep_images(image_corpus / "images", empty,
                    image_corpus / "proposals.json", tmp_path / "i.json",
                    n_superpixels=16)


def test_video_stride_takes_every_tenth_frame(tmp_path, video_corpus):
    out = tmp_path / "inst.json"
    prep_video(video_corpus / "frames", video_corpus / "appearance",
               video_corpus / "motion", video_corpus / "proposals.json",
               out, stride=10, n_superpixels=2)
    manifest = json.loads(out.read_text())
    ids = [f["frame_id"] for f in manifest["frames"]]
    assert len(ids) == 10
    assert ids == ["frame%03d.png" % i for i in range(0, 95, 10)]


def test_zero_motion_matches_image_route(tmp_path, video_corpus):
    """With an all-zero motion map the fused saliency is the appearance
    map, so the video route reproduces the image route exactly."""
    mini = tmp_path / "mini"
    for sub in ("frames", "appearance", "motion"):
        (mini / sub).mkdir(parents=True)
    for i in range(3):
        name = "frame%03d.png" % i
        for sub in ("frames", "appearance", "motion"):
            shutil.copy(video_corpus / sub / name, mini / sub / name)
    shutil.copy(video_corpus / "proposals.json", mini / "proposals.json")

    out_v = tmp_path / "v" / "inst.json"
    out_i = tmp_path / "i" / "inst.json"
    out_v.parent.mkdir()
    out_i.parent.mkdir()
    prep_video(mini / "frames", mini / "appearance", mini / "motion",
               mini / "proposals.json", out_v, stride=1, n_superpixels=2)
    prep_images(mini / "frames", mini / "appearance",
                mini / "proposals.json", out_i, n_superpixels=2)
    _, mats_v = _load(out_v)
    _, mats_i = _load(out_i)
    np.testing.assert_array_equal(mats_v["sp_saliency"],
                                  mats_i["sp_saliency"])
    np.testing.assert_array_equal(mats_v["box_saliency"],
                                  mats_i["box_saliency"])


def test_video_rejects_bad_stride(tmp_path, video_corpus):
    with pytest.raises(PrepError, match="stride"):
        prep_video(video_corpus / "frames", video_corpus / "appearance",
                   video_corpus / "motion",
                   video_corpus / "proposals.json",
                   tmp_path / "i.json", stride=0)


def test_empty_image_dir_is_an_error(tmp_path, image_corpus):
    empty = tmp_path / "none"
    empty.mkdir()
    with pytest.raises(PrepError, match="no images"):
        prep_images(empty, image_corpus / "saliency",
                    image_corpus / "proposals.json", tmp_path / "i.json")
