"""Box proposals: loading, capping, and the region membership rule."""

import json
import warnings

import numpy as np

from .errors import PrepError


def load_proposals(path):
    """JSON mapping image filename to a list of [x0, y0, x1, y1(, score)]."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise PrepError("cannot read proposals '%s': %s" % (path, exc)) from exc
    if not isinstance(data, dict):
        raise PrepError("proposals file must map filenames to rectangle lists")
    return data


def proposals_for(proposals, name, max_proposals=30):
    """The capped rectangle list for one image, best scores first."""
    if name not in proposals:
        raise PrepError("no proposals listed for '%s'" % name)
    entries = proposals[name]
    if not entries:
        raise PrepError("empty proposal list for '%s'" % name)
    rects, scores = [], []
    for entry in entries:
        if len(entry) not in (4, 5):
            raise PrepError("proposal for '%s' must have 4 coordinates "
                            "and an optional score" % name)
        x0, y0, x1, y1 = (float(v) for v in entry[:4])
        if not (x1 > x0 and y1 > y0):
            raise PrepError("degenerate proposal %s for '%s'"
                            % (entry[:4], name))
        rects.append([x0, y0, x1, y1])
        scores.append(float(entry[4]) if len(entry) == 5 else None)
    if all(s is not None for s in scores):
        order = np.argsort(-np.asarray(scores), kind="stable")
        rects = [rects[i] for i in order]
    return np.asarray(rects[:max_proposals], dtype=float)


def inside_mask(shape, rect):
    """Boolean (H, W) mask of pixels whose centers fall inside the rectangle."""
    h, w = shape
    x0, y0, x1, y1 = rect
    cx = np.arange(w) + 0.5
    cy = np.arange(h) + 0.5
    return ((cy >= y0) & (cy <= y1))[:, None] & ((cx >= x0) & (cx <= x1))[None, :]


def box_memberships(regions, rects, min_area_frac=0.5):
    """Assign regions to boxes: a region joins a box when at least half of
    its pixels lie inside. Boxes left empty are dropped with a warning.

    Returns the kept rectangles and their member index arrays.
    """
    kept_rects, memberships = [], []
    for i, rect in enumerate(np.asarray(rects, dtype=float)):
        inside = inside_mask(regions.labels.shape, rect)
        covered = np.bincount(regions.labels[inside],
                              minlength=regions.n_sp).astype(float)
        members = np.nonzero(covered / regions.counts >= min_area_frac)[0]
        if members.size == 0:
            warnings.warn("box %d %s holds no region majority, dropping it"
                          % (i, rect.tolist()))
            continue
        kept_rects.append(rect)
        memberships.append(members.astype(int))
    return np.asarray(kept_rects, dtype=float).reshape(len(kept_rects), 4), memberships


def project_gt_mask(regions, pixel_mask):
    """Majority vote: a region is foreground when more than half of its
    pixels are foreground in the pixel mask."""
    mask = np.asarray(pixel_mask)
    if mask.shape != regions.labels.shape:
        raise PrepError("ground truth mask shape %s does not match image %s"
                        % (mask.shape, regions.labels.shape))
    on = np.bincount(regions.labels.ravel(),
                     weights=(mask > 0).ravel().astype(float),
                     minlength=regions.n_sp)
    return (on / regions.counts > 0.5).astype(int)
