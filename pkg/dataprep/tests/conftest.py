"""Shared fixture corpus: three tiny images with planted squares."""

import json
from pathlib import Path

import numpy as np
import pytest
from imageio.v3 import imwrite

WIDTH, HEIGHT = 48, 36
SQUARE = 14
PLACEMENTS = ((6, 6), (20, 12), (30, 16))


def build_image_corpus(root):
    """Three blue images with a red square, saliency maps, ground truth
    masks, and two scored proposals per image (true box first by score)."""
    root = Path(root)
    for sub in ("images", "saliency", "gt"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    proposals = {}
    for i, (sx, sy) in enumerate(PLACEMENTS):
        img = np.zeros((HEIGHT, WIDTH, 3), dtype=np.uint8)
        img[...] = (26, 51, 204)
        img[sy:sy + SQUARE, sx:sx + SQUARE] = (230, 26, 26)
        name = "img%d.png" % i
        imwrite(root / "images" / name, img)

        sal = np.full((HEIGHT, WIDTH), 25, dtype=np.uint8)
        sal[sy:sy + SQUARE, sx:sx + SQUARE] = 242
        imwrite(root / "saliency" / name, sal)

        gt = np.zeros((HEIGHT, WIDTH), dtype=np.uint8)
        gt[sy:sy + SQUARE, sx:sx + SQUARE] = 255
        imwrite(root / "gt" / name, gt)

        true_box = [float(sx), float(sy),
                    float(sx + SQUARE), float(sy + SQUARE)]
        dx = 2 if sx > WIDTH // 2 else WIDTH - SQUARE - 2
        dy = 2 if sy > HEIGHT // 2 else HEIGHT - SQUARE - 2
        decoy = [float(dx), float(dy),
                 float(dx + SQUARE), float(dy + SQUARE)]
        proposals[name] = [true_box + [0.9], decoy + [0.4]]
    (root / "proposals.json").write_text(json.dumps(proposals))
    return root


def build_video_corpus(root, n_frames=95, size=(6, 8)):
    """Tiny ordered frames with full-frame proposals and two map folders."""
    root = Path(root)
    for sub in ("frames", "appearance", "motion"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    h, w = size
    proposals = {}
    for i in range(n_frames):
        name = "frame%03d.png" % i
        img = np.full((h, w, 3), 80 + (i % 8), dtype=np.uint8)
        img[:, : w // 2] = 190
        imwrite(root / "frames" / name, img)
        app = np.zeros((h, w), dtype=np.uint8)
        app[:, : w // 2] = 230
        imwrite(root / "appearance" / name, app)
        imwrite(root / "motion" / name, np.zeros((h, w), dtype=np.uint8))
        proposals[name] = [[0.0, 0.0, float(w), float(h)]]
    (root / "proposals.json").write_text(json.dumps(proposals))
    return root


@pytest.fixture(scope="session")
def image_corpus(tmp_path_factory):
    return build_image_corpus(tmp_path_factory.mktemp("corpus"))


@pytest.fixture(scope="session")
def video_corpus(tmp_path_factory):
    return build_video_corpus(tmp_path_factory.mktemp("video"))
