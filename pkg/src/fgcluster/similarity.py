"""Per-frame spatial similarity graphs and normalized Laplacians.

Smoothness inside a frame is encoded by a dense similarity
W_ab = exp(-lambda_p ||p_a - p_b||^2 - lambda_c ||c_a - c_b||^2)
over superpixel positions p and mean colors c, and by the normalized
Laplacian L = I - Q^{-1/2} W Q^{-1/2} built from it. Similarity never
crosses frame boundaries, so the Laplacian for the full problem is the
block-diagonal stack of the per-frame ones. The same W also scores binary
segmentations by their two-way normalized-cut value during rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag


@dataclass
class FrameLaplacian:
    W: np.ndarray              # symmetric, nonnegative, zero diagonal
    degrees: np.ndarray        # Q_ii = sum_j W_ij
    L: np.ndarray              # I - Q^{-1/2} W Q^{-1/2}


def build_W(positions, colors, lambda_p, lambda_c, knn=None):
    """Dense similarity over one frame's superpixels; diagonal forced to 0.

    knn, when set, keeps only each node's knn strongest edges, symmetrically
    (an edge survives if either endpoint selects it).
    """
    p = np.asarray(positions, dtype=float)
    c = np.asarray(colors, dtype=float)
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(c))):
        raise ValueError("non-finite positions or colors")
    if lambda_p < 0 or lambda_c < 0:
        raise ValueError("lambda_p and lambda_c must be >= 0")
    dp = np.sum((p[:, None, :] - p[None, :, :]) ** 2, axis=2)
    dc = np.sum((c[:, None, :] - c[None, :, :]) ** 2, axis=2)
    W = np.exp(-lambda_p * dp - lambda_c * dc)
    np.fill_diagonal(W, 0.0)
    if knn is not None and knn < W.shape[0] - 1:
        keep = np.zeros_like(W, dtype=bool)
        # argsort descending; diagonal is 0 and loses to any positive edge
        order = np.argsort(-W, axis=1)[:, :knn]
        rows = np.repeat(np.arange(W.shape[0]), order.shape[1])
        keep[rows, order.ravel()] = True
        keep |= keep.T
        np.fill_diagonal(keep, False)
        W = np.where(keep, W, 0.0)
    return W


def build_L(W):
    """Normalized Laplacian with the isolated-node convention Q_ii^{-1/2} = 0."""
    W = np.asarray(W, dtype=float)
    if np.any(W < 0):
        raise ValueError("similarity weights must be nonnegative")
    if np.max(np.abs(W - W.T), initial=0.0) > 1e-9:
        raise ValueError("similarity matrix not symmetric")
    q = W.sum(axis=1)
    inv_sqrt = np.where(q > 0, 1.0 / np.sqrt(np.where(q > 0, q, 1.0)), 0.0)
    L = np.eye(W.shape[0]) - (inv_sqrt[:, None] * W) * inv_sqrt[None, :]
    return FrameLaplacian(W=W, degrees=q, L=0.5 * (L + L.T))


def stack_laplacians(laplacians):
    """Block-diagonal global Laplacian in global superpixel order."""
    if not laplacians:
        raise ValueError("no frames")
    return block_diag(*[fl.L for fl in laplacians])


def ncut_score(W, y_bin):
    """Two-way normalized cut cut/assoc(A) + cut/assoc(B); None if degenerate.

    Degenerate means one side is empty or has zero association, in which
    case the score carries no information for threshold selection.
    """
    W = np.asarray(W, dtype=float)
    y = np.asarray(y_bin)
    if y.shape[0] != W.shape[0]:
        raise ValueError("mask length %d != graph size %d" % (y.shape[0], W.shape[0]))
    a = y.astype(bool)
    b = ~a
    if not a.any() or not b.any():
        return None
    assoc_a = W[a].sum()
    assoc_b = W[b].sum()
    if assoc_a <= 0 or assoc_b <= 0:
        return None
    cut = W[np.ix_(a, b)].sum()
    return cut / assoc_a + cut / assoc_b
