"""Binary matrix container round trips and byte layout."""

import struct

import numpy as np
import pytest

from fgprep.errors import PrepError
from fgprep.fgcm import read_matrix, write_matrix


def test_round_trip_matrix(tmp_path):
    rng = np.random.default_rng(0)
    a = rng.normal(size=(7, 3))
    path = tmp_path / "a.fgcm"
    write_matrix(path, a)
    b = read_matrix(path)
    assert b.shape == (7, 3)
    assert b.dtype == np.float64
    np.testing.assert_array_equal(a, b)


def test_vector_becomes_column(tmp_path):
    v = np.array([1.0, 2.0, 3.0])
    path = tmp_path / "v.fgcm"
    write_matrix(path, v)
    out = read_matrix(path)
    assert out.shape == (3, 1)
    np.testing.assert_array_equal(out[:, 0], v)


def test_exact_byte_layout(tmp_path):
    """Header is a 5-byte magic plus two little-endian uint32 dims,
    then row-major little-endian float64 values."""
    a = np.array([[1.5, -2.0], [0.25, 8.0]])
    path = tmp_path / "a.fgcm"
    write_matrix(path, a)
    raw = path.read_bytes()
    assert raw[:5] == b"FGCM\x01"
    rows, cols = struct.unpack("<II", raw[5:13])
    assert (rows, cols) == (2, 2)
    vals = struct.unpack("<4d", raw[13:])
    assert vals == (1.5, -2.0, 0.25, 8.0)


def test_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.fgcm"
    write_matrix(path, np.eye(2))
    raw = bytearray(path.read_bytes())
    raw[0] = ord("X")
    path.write_bytes(bytes(raw))
    with pytest.raises(PrepError, match="magic"):
        read_matrix(path)


def test_rejects_truncated_payload(tmp_path):
    path = tmp_path / "cut.fgcm"
    write_matrix(path, np.eye(3))
    raw = path.read_bytes()
    path.write_bytes(raw[:-8])
    with pytest.raises(PrepError):
        read_matrix(path)


def test_rejects_non_2d(tmp_path):
    with pytest.raises(PrepError):
        write_matrix(tmp_path / "t.fgcm", np.zeros((2, 2, 2)))
