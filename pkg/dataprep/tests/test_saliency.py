"""Saliency map loading, fusion, and pooling."""

import numpy as np
import pytest
from imageio.v3 import imwrite

from fgprep.errors import PrepError
from fgprep.saliency import fuse_max, load_map, pool_rect, pool_regions
from fgprep.regions import RegionStats


def test_load_png_scales_to_unit_range(tmp_path):
    imwrite(tmp_path / "s.png", np.full((3, 5), 127, dtype=np.uint8))
    sal = load_map(tmp_path / "s.png", (3, 5))
    np.testing.assert_allclose(sal, 127 / 255)


def test_load_npy_passthrough(tmp_path):
    vals = np.linspace(0, 1, 12).reshape(3, 4)
    np.save(tmp_path / "s.npy", vals)
    np.testing.assert_array_equal(load_map(tmp_path / "s.npy", (3, 4)), vals)


def test_load_map_averages_channels(tmp_path):
    rgb = np.zeros((2, 2, 3), dtype=np.uint8)
    rgb[..., 0] = 255
    imwrite(tmp_path / "s.png", rgb)
    sal = load_map(tmp_path / "s.png", (2, 2))
    np.testing.assert_allclose(sal, 1 / 3)


def test_load_map_validates(tmp_path):
    np.save(tmp_path / "big.npy", np.full((2, 2), 1.5))
    np.save(tmp_path / "nan.npy", np.full((2, 2), np.nan))
    np.save(tmp_path / "ok.npy", np.zeros((2, 2)))
    with pytest.raises(PrepError, match=r"\[0, 1\]"):
        load_map(tmp_path / "big.npy", (2, 2))
    with pytest.raises(PrepError, match="finite"):
        load_map(tmp_path / "nan.npy", (2, 2))
    with pytest.raises(PrepError, match="but the image"):
        load_map(tmp_path / "ok.npy", (3, 3))


def test_fuse_max_is_elementwise():
    a = np.array([[0.2, 0.8], [0.5, 0.0]])
    b = np.array([[0.3, 0.1], [0.5, 0.9]])
    np.testing.assert_array_equal(fuse_max(a, b),
                                  [[0.3, 0.8], [0.5, 0.9]])
    with pytest.raises(PrepError, match="shape"):
        fuse_max(a, np.zeros((3, 2)))


def test_fuse_with_zero_map_is_identity():
    a = np.random.default_rng(0).uniform(size=(4, 6))
    np.testing.assert_array_equal(fuse_max(a, np.zeros((4, 6))), a)


def _two_region_frame():
    labels = np.zeros((2, 4), dtype=int)
    labels[:, 2:] = 1
    return RegionStats(labels=labels, n_sp=2,
                       counts=np.array([4.0, 4.0]),
                       positions=np.zeros((2, 2)),
                       colors=np.zeros((2, 3)))


def test_pool_regions_takes_means():
    regions = _two_region_frame()
    sal = np.array([[0.0, 1.0, 0.5, 0.5],
                    [1.0, 0.0, 0.5, 0.5]])
    np.testing.assert_allclose(pool_regions(sal, regions), [0.5, 0.5])


def test_pool_rect_means_inside_pixels():
    sal = np.array([[0.0, 1.0, 0.5, 0.5],
                    [1.0, 0.0, 0.5, 0.5]])
    assert pool_rect(sal, (2.0, 0.0, 4.0, 2.0)) == pytest.approx(0.5)
    assert pool_rect(sal, (0.0, 0.0, 1.0, 1.0)) == pytest.approx(0.0)


def test_pool_rect_rejects_empty_rectangle():
    with pytest.raises(PrepError, match="no pixels"):
        pool_rect(np.zeros((2, 2)), (5.0, 5.0, 6.0, 6.0))
