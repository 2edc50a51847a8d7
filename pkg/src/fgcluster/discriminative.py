"""Discriminative-clustering cost matrices.

Labeling quality is measured by how well a ridge regressor can reproduce a
candidate labeling y from the features: the optimal regressor has a closed
form, and plugging it back in collapses the clustering cost to a quadratic
form y^T D y. D depends only on the (centered) features and the ridge
weight. An explicit-feature route and a kernel route are provided; the two
agree through the Woodbury identity, which the tests use as an oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

COND_LIMIT = 1e12
SYM_TOL = 1e-9
EIG_TOL = 1e-8
CHI2_EPS = 1e-12


class NumericalError(RuntimeError):
    """A factorization was too ill-conditioned to trust."""


@dataclass
class DiscriminativeMatrix:
    D: np.ndarray
    beta: float
    source: str                    # "linear" or "kernel"


def center_features(X):
    """Remove the column means: (I - (1/n) 1 1^T) X."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("feature matrix must be 2-d")
    if not np.all(np.isfinite(X)):
        raise ValueError("features contain non-finite entries")
    return X - X.mean(axis=0, keepdims=True)


def _spd_inverse_apply(A, B, label):
    """Solve A X = B for symmetric positive definite A, guarding conditioning."""
    w = np.linalg.eigvalsh(A)
    if w[0] <= 0 or w[-1] / w[0] > COND_LIMIT:
        raise NumericalError(
            "%s: condition number beyond %g (eigenvalue range [%g, %g])"
            % (label, COND_LIMIT, w[0], w[-1])
        )
    cf = linalg.cho_factor(A, lower=True)
    return linalg.cho_solve(cf, B)


def build_D_linear(Xc, beta):
    """D = I - Xc (Xc^T Xc + beta I)^{-1} Xc^T for centered features Xc.

    Equivalently beta (Xc Xc^T + beta I)^{-1}; the n x n route is used when
    d > n since the two d x d / n x n Gram matrices trade roles.
    """
    Xc = np.asarray(Xc, dtype=float)
    if beta <= 0:
        raise ValueError("beta must be > 0")
    n, d = Xc.shape
    if n and np.max(np.abs(Xc.sum(axis=0))) > 1e-6 * max(n, 1):
        raise ValueError("features must be centered (column sums not ~0)")
    if d > n:
        gram = Xc @ Xc.T
        D = beta * _spd_inverse_apply(gram + beta * np.eye(n), np.eye(n), "XX^T+betaI")
    else:
        inner = Xc.T @ Xc + beta * np.eye(d)
        D = np.eye(n) - Xc @ _spd_inverse_apply(inner, Xc.T, "X^TX+betaI")
    return DiscriminativeMatrix(D=0.5 * (D + D.T), beta=beta, source="linear")


def build_D_kernel(K, beta):
    """Kernelized variant: D = beta (Pi K Pi + beta I)^{-1}, Pi the centering map."""
    K = np.asarray(K, dtype=float)
    if beta <= 0:
        raise ValueError("beta must be > 0")
    n = K.shape[0]
    if K.shape != (n, n):
        raise ValueError("kernel matrix must be square")
    if np.max(np.abs(K - K.T), initial=0.0) > SYM_TOL:
        raise ValueError("kernel matrix not symmetric")
    w = np.linalg.eigvalsh(K)
    if n and w[0] < -EIG_TOL:
        raise ValueError("kernel matrix indefinite (min eigenvalue %g)" % w[0])
    # double centering: Pi K Pi = K - row means - col means + grand mean
    row = K.mean(axis=1, keepdims=True)
    Kc = K - row - row.T + K.mean()
    D = beta * _spd_inverse_apply(Kc + beta * np.eye(n), np.eye(n), "PiKPi+betaI")
    return DiscriminativeMatrix(D=0.5 * (D + D.T), beta=beta, source="kernel")


def chi2_kernel(features):
    """Exponentiated chi-square kernel over histogram-like rows.

    K_ab = exp(-chi2(a, b) / sigma) with
    chi2(a, b) = 0.5 sum_t (a_t - b_t)^2 / (a_t + b_t + 1e-12)
    and sigma the mean pairwise chi2 distance over distinct pairs (1 when
    that mean vanishes, e.g. all rows identical).
    """
    F = np.asarray(features, dtype=float)
    if np.any(F < 0):
        raise ValueError("chi-square kernel needs nonnegative entries")
    diff = F[:, None, :] - F[None, :, :]
    tot = F[:, None, :] + F[None, :, :] + CHI2_EPS
    chi2 = 0.5 * np.sum(diff * diff / tot, axis=2)
    n = F.shape[0]
    off = ~np.eye(n, dtype=bool)
    sigma = chi2[off].mean() if n > 1 else 0.0
    if sigma <= 0:
        sigma = 1.0
    K = np.exp(-chi2 / sigma)
    np.fill_diagonal(K, 1.0)
    return K
