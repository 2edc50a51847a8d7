"""Assembly of the relaxed quadratic program and the integer enumeration oracle.

The joint objective over v = (y; z) is

  E(v) = y^T (D_s + kappa F + alpha L) y + mu y^T s_s
       + lambda (z^T D_b z + nu z^T s_b)

so Q = blockdiag(D_s + kappa F + alpha L, lambda D_b) and
c = (mu s_s; lambda nu s_b), with objective(v) = v^T Q v + c^T v. A tiny
diagonal lift keeps Q numerically positive definite. The brute-force oracle
enumerates every binary point satisfying the box/superpixel coupling
constraints exactly and is the ground truth the relaxation is tested against.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .constraints import ConstraintSet, build_constraints, coverage_counts
from .discriminative import build_D_kernel, build_D_linear, center_features
from .foreground import build_F
from .instance import PRECOMPUTED_KERNEL
from .similarity import build_L, build_W, stack_laplacians

RIDGE_EPS = 1e-9
EIG_TOL = 1e-8


@dataclass
class QuadraticProgram:
    Q: np.ndarray
    c: np.ndarray
    constraints: ConstraintSet
    ridge_eps: float = RIDGE_EPS

    @property
    def n_vars(self):
        return self.c.size

    def objective(self, v):
        v = np.asarray(v, dtype=float)
        return float(v @ self.Q @ v + self.c @ v)


@dataclass
class ModelParts:
    """Every matrix of the objective, kept for reuse by rounding and tests."""

    D_s: np.ndarray
    D_b: np.ndarray
    F: np.ndarray
    L_global: np.ndarray
    laplacians: list               # per-frame FrameLaplacian
    s_s: np.ndarray
    s_b: np.ndarray


def _discriminative(block, beta):
    if block.kind == PRECOMPUTED_KERNEL:
        return build_D_kernel(block.matrix, beta).D
    return build_D_linear(center_features(block.matrix), beta).D


def build_parts(instance):
    """Compute all objective matrices for an instance under its hyperparameters."""
    hyper = instance.hyper
    D_s = _discriminative(instance.sp_features, hyper.beta_s)
    D_b = _discriminative(instance.box_features, hyper.beta_b)
    laps = [
        build_L(build_W(f.sp_positions, f.sp_colors,
                        hyper.lambda_p, hyper.lambda_c, knn=hyper.knn))
        for f in instance.frames
    ]
    F = build_F(instance.histograms, scale_mode=hyper.f_scale,
                pair_mode=hyper.f_pairs).F
    return ModelParts(
        D_s=D_s, D_b=D_b, F=F,
        L_global=stack_laplacians(laps), laplacians=laps,
        s_s=instance.sp_saliency_cost(), s_b=instance.box_saliency_cost(),
    )


def assemble_qp(instance, D_s, F, L_global, D_b, s_s, s_b, hyper=None,
                constraint_set=None, ridge_eps=RIDGE_EPS, check_psd=True):
    """Stack the objective blocks into one QuadraticProgram."""
    hyper = instance.hyper if hyper is None else hyper
    N = instance.n_sp_total
    M = instance.m_box_total
    for name, mat, dim in (("D_s", D_s, N), ("F", F, N),
                           ("L_global", L_global, N), ("D_b", D_b, M)):
        if mat.shape != (dim, dim):
            raise ValueError("%s has shape %s, expected (%d, %d)"
                             % (name, mat.shape, dim, dim))
    if s_s.shape != (N,) or s_b.shape != (M,):
        raise ValueError("saliency vectors sized %s/%s, expected %d/%d"
                         % (s_s.shape, s_b.shape, N, M))

    Q = np.zeros((N + M, N + M))
    Q[:N, :N] = D_s + hyper.kappa * F + hyper.alpha * L_global
    Q[N:, N:] = hyper.lambda_ * D_b
    Q = 0.5 * (Q + Q.T)
    if check_psd:
        w_min = float(np.linalg.eigvalsh(Q)[0])
        if w_min < -EIG_TOL:
            raise ValueError("assembled Q indefinite: min eigenvalue %g" % w_min)
    Q[np.diag_indices_from(Q)] += ridge_eps
    c = np.concatenate([hyper.mu * s_s, hyper.lambda_ * hyper.nu * s_b])
    cs = constraint_set if constraint_set is not None else build_constraints(instance)
    return QuadraticProgram(Q=Q, c=c, constraints=cs, ridge_eps=ridge_eps)


def build_qp(instance, hyper=None):
    """Full pipeline: matrices, constraints, assembled program."""
    if hyper is not None:
        from dataclasses import replace as _replace
        instance = _replace(instance, hyper=hyper)
    parts = build_parts(instance)
    qp = assemble_qp(instance, parts.D_s, parts.F, parts.L_global, parts.D_b,
                     parts.s_s, parts.s_b)
    return qp, parts


# ---------------------------------------------------------------------------
# Integer oracle

BRUTE_MAX_SP = 16
BRUTE_MAX_BOX = 6


def binary_feasible(v, instance, gamma=None, eta=None):
    """Direct check of the integer constraints for a binary candidate.

    Written against the constraint definitions themselves (per-box indicator
    bounds with the box's own superpixels, one-box-per-frame, coverage caps),
    independently of the ConstraintSet assembly, so the two can be tested
    against each other.
    """
    hyper = instance.hyper
    gamma = hyper.gamma if gamma is None else gamma
    eta = hyper.eta if eta is None else eta
    y = v[: instance.n_sp_total]
    z = v[instance.n_sp_total:]
    for f, frame in enumerate(instance.frames):
        ys = y[instance.sp_slice(f)]
        zs = z[instance.box_slice(f)]
        if zs.sum() != 1:
            return False
        c = coverage_counts(frame)
        for j in range(frame.n_sp):
            cover_z = sum(zs[i] for i, m in enumerate(frame.memberships) if j in m)
            if c[j] == 0 and ys[j] != 0:
                return False
            if c[j] > 0 and c[j] * ys[j] > cover_z:
                return False
        for i, members in enumerate(frame.memberships):
            inside = ys[members].sum()
            if gamma * len(members) * zs[i] - inside > 1e-12:
                return False
            if inside - eta * len(members) * zs[i] > 1e-12:
                return False
    return True


def _frame_candidates(frame, gamma, eta):
    """Per frame: every (one-hot z, binary y) satisfying the integer constraints.

    With box b selected, every superpixel outside S_b or covered by a second
    box is forced to 0; the free ones are S_b's exclusively-covered members,
    subject to the gamma/eta count window on S_b.
    """
    c = coverage_counts(frame)
    out = []
    for b, members in enumerate(frame.memberships):
        free = [int(j) for j in members if c[int(j)] == 1]
        size = len(members)
        lo = gamma * size
        hi = eta * size
        z = np.zeros(frame.m_box)
        z[b] = 1.0
        for bits in itertools.product((0, 1), repeat=len(free)):
            if not lo - 1e-12 <= sum(bits) <= hi + 1e-12:
                continue
            y = np.zeros(frame.n_sp)
            y[free] = bits
            out.append((y, z))
    return out


def brute_force(instance, qp):
    """Exact minimum of the integer program by candidate enumeration.

    Ties on the objective are broken toward the lexicographically smallest
    stacked vector v, making the result deterministic.
    """
    if instance.n_sp_total > BRUTE_MAX_SP or instance.m_box_total > BRUTE_MAX_BOX:
        raise ValueError("instance too large to enumerate (%d superpixels, %d boxes)"
                         % (instance.n_sp_total, instance.m_box_total))
    hyper = instance.hyper
    per_frame = [_frame_candidates(f, hyper.gamma, hyper.eta)
                 for f in instance.frames]
    if any(len(cands) == 0 for cands in per_frame):
        raise ValueError("no feasible integer point")

    Ys = [np.array([y for y, _ in cands]) for cands in per_frame]
    Zs = [np.array([z for _, z in cands]) for cands in per_frame]
    grids = np.meshgrid(*[np.arange(len(c)) for c in per_frame], indexing="ij")
    idx = [g.ravel() for g in grids]
    V = np.hstack([Ys[f][idx[f]] for f in range(len(per_frame))]
                  + [Zs[f][idx[f]] for f in range(len(per_frame))])
    objs = np.einsum("ij,jk,ik->i", V, qp.Q, V) + V @ qp.c
    best = objs.min()
    winners = V[objs == best]
    v = np.array(min(map(tuple, winners)))
    return v, float(best)
