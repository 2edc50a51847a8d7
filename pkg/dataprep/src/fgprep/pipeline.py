"""End-to-end preparation of image folders and video frame folders."""

from pathlib import Path

import numpy as np

from .boxes import box_memberships, load_proposals, project_gt_mask, proposals_for
from .errors import PrepError
from .fgcm import read_matrix
from .manifest import FrameData, write_instance
from .regions import color_histograms, extract_regions, load_image
from .saliency import fuse_max, load_map, pool_rect, pool_regions

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")


def _list_images(folder):
    folder = Path(folder)
    if not folder.is_dir():
        raise PrepError("'%s' is not a directory" % folder)
    files = sorted(p for p in folder.iterdir()
                   if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise PrepError("no images found under '%s'" % folder)
    return files


def _find_map(folder, image_name):
    folder = Path(folder)
    stem = Path(image_name).stem
    for cand in (folder / image_name, folder / (stem + ".png"),
                 folder / (stem + ".npy")):
        if cand.exists():
            return cand
    raise PrepError("missing saliency map for '%s' under '%s'"
                    % (image_name, folder))


def _default_box_features(rects, colors, memberships, shape):
    h, w = shape
    feats = np.zeros((len(rects), 7))
    for i, (rect, members) in enumerate(zip(rects, memberships)):
        feats[i, :4] = [rect[0] / w, rect[1] / h, rect[2] / w, rect[3] / h]
        feats[i, 4:] = colors[members].mean(axis=0)
    return feats


def _build_frame(image_path, sal, n_superpixels, compactness, bins,
                 proposals, max_proposals, gt_mask_dir, class_tag):
    image = load_image(image_path)
    regions = extract_regions(image, n_superpixels, compactness)
    rects = proposals_for(proposals, image_path.name, max_proposals)
    rects, memberships = box_memberships(regions, rects)
    if len(memberships) == 0:
        raise PrepError("every proposal for '%s' was dropped"
                        % image_path.name)

    gt_mask = None
    if gt_mask_dir is not None:
        gt_path = _find_map(gt_mask_dir, image_path.name)
        gt_pixels = load_map(gt_path, regions.labels.shape)
        gt_mask = project_gt_mask(regions, gt_pixels > 0.5)

    sp_sal = pool_regions(sal, regions)
    box_sal = np.array([pool_rect(sal, r) for r in rects])
    hist = color_histograms(image, regions, bins=bins)
    sp_feats = np.hstack([regions.positions, regions.colors])
    box_feats = _default_box_features(rects, regions.colors, memberships,
                                      regions.labels.shape)
    return FrameData(
        frame_id=image_path.name,
        positions=regions.positions,
        colors=regions.colors,
        counts=regions.counts,
        sp_saliency=sp_sal,
        rects=rects,
        box_saliency=box_sal,
        memberships=memberships,
        histograms=hist,
        sp_features=sp_feats,
        box_features=box_feats,
        gt_mask=gt_mask,
        class_tag=class_tag,
    )


def _override_features(frames, sp_features_path, box_features_path):
    if sp_features_path is not None:
        mat = read_matrix(sp_features_path)
        total = sum(f.positions.shape[0] for f in frames)
        if mat.shape[0] != total:
            raise PrepError("superpixel feature file has %d rows for %d "
                            "superpixels" % (mat.shape[0], total))
        at = 0
        for f in frames:
            n = f.positions.shape[0]
            f.sp_features = mat[at:at + n]
            at += n
    if box_features_path is not None:
        mat = read_matrix(box_features_path)
        total = sum(f.rects.shape[0] for f in frames)
        if mat.shape[0] != total:
            raise PrepError("box feature file has %d rows for %d boxes"
                            % (mat.shape[0], total))
        at = 0
        for f in frames:
            m = f.rects.shape[0]
            f.box_features = mat[at:at + m]
            at += m


def prep_images(image_dir, saliency_dir, proposals_path, out_path,
                n_superpixels=200, compactness=10.0, max_proposals=30,
                bins=7, gt_mask_dir=None, class_tag=None, hyper=None,
                sp_features_path=None, box_features_path=None):
    """One instance from a folder of independent images."""
    proposals = load_proposals(proposals_path)
    frames = []
    for image_path in _list_images(image_dir):
        shape = load_image(image_path).shape[:2]
        sal = load_map(_find_map(saliency_dir, image_path.name), shape)
        frames.append(_build_frame(
            image_path, sal, n_superpixels, compactness, bins,
            proposals, max_proposals, gt_mask_dir, class_tag))
    _override_features(frames, sp_features_path, box_features_path)
    return write_instance(frames, out_path, hyper=hyper)


def prep_video(frame_dir, appearance_dir, motion_dir, proposals_path,
               out_path, stride=10, n_superpixels=200, compactness=10.0,
               max_proposals=30, bins=7, gt_mask_dir=None, class_tag=None,
               hyper=None, sp_features_path=None, box_features_path=None):
    """One instance from ordered video frames, key-framed by stride.

    Each kept frame's saliency is the per-pixel maximum of its appearance
    and motion maps.
    """
    if stride < 1:
        raise PrepError("stride must be >= 1")
    proposals = load_proposals(proposals_path)
    all_frames = _list_images(frame_dir)
    key_frames = all_frames[::stride]
    frames = []
    for image_path in key_frames:
        shape = load_image(image_path).shape[:2]
        app = load_map(_find_map(appearance_dir, image_path.name), shape)
        mot = load_map(_find_map(motion_dir, image_path.name), shape)
        sal = fuse_max(app, mot)
        frames.append(_build_frame(
            image_path, sal, n_superpixels, compactness, bins,
            proposals, max_proposals, gt_mask_dir, class_tag))
    _override_features(frames, sp_features_path, box_features_path)
    return write_instance(frames, out_path, hyper=hyper)
