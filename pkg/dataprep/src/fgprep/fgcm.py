"""The FGCM matrix sidecar format.

Layout: 5 magic bytes, two little-endian uint32 dimensions (rows, cols),
then rows * cols float64 values in row-major order. Vectors are stored
as single-column matrices.
"""

import struct

import numpy as np

from .errors import PrepError

MAGIC = b"FGCM\x01"
_HEADER = struct.Struct("<II")


def write_matrix(path, array):
    arr = np.asarray(array, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise PrepError("FGCM stores 2-d matrices, got %d-d" % arr.ndim)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(arr.shape[0], arr.shape[1]))
        fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_matrix(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:len(MAGIC)] != MAGIC:
        raise PrepError("'%s' is not an FGCM file" % path)
    rows, cols = _HEADER.unpack_from(blob, len(MAGIC))
    payload = blob[len(MAGIC) + _HEADER.size:]
    expected = rows * cols * 8
    if len(payload) != expected:
        raise PrepError("'%s' holds %d payload bytes, expected %d"
                        % (path, len(payload), expected))
    return np.frombuffer(payload, dtype="<f8").reshape(rows, cols).copy()
