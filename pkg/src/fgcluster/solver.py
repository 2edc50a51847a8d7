"""Convex QP solver: ADMM operator splitting with an active-set refinement.

The relaxed program  min v^T Q v + c^T v  s.t.  A_ineq v <= b_ineq,
A_eq v = b_eq, 0 <= v <= 1  is rewritten in the standard splitting form
min 0.5 x^T P x + q^T x s.t. l <= A x <= u by stacking the inequality rows
(l = -inf), the equality rows (l = u) and an identity block for the bounds.
Each iteration solves one quasi-definite KKT system (factored once, refactored
only when the step size changes) and projects onto the constraint interval.

Termination is decided in the original problem units on the clipped iterate:
equality residual and inequality violation below tol_feas, and Lagrangian
stationarity below tol_kkt * (1 + ||c||_inf). After the splitting loop an
active-set equality-QP refinement with add/drop exchange is attempted, which
typically sharpens the solution to near machine precision; the refined point
is kept only when its residuals are better.

Everything is deterministic: no randomization, fixed operation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import lsq_linear

OPTIMAL = "optimal"
MAX_ITER = "max_iter"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class SolverSettings:
    tol_feas: float = 1e-6
    tol_kkt: float = 1e-6
    max_iter: int = 20000
    seed: int | None = None        # recorded in diagnostics; algorithm is seed-free
    sigma: float = 1e-6
    over_relax: float = 1.6
    rho: float = 0.1
    rho_eq_scale: float = 1e3
    check_interval: int = 25
    scaling_iters: int = 10
    adaptive_rho: bool = True
    polish: bool = True
    eps_pinf: float = 1e-9
    stall_checks: int = 40         # convergence checks without progress before
                                   # handing the best iterate to the refinement


@dataclass
class Solution:
    v: np.ndarray
    objective: float
    primal_residual: float
    dual_residual: float
    iterations: int
    status: str
    diagnostics: dict = field(default_factory=dict)


def _stack_problem(qp):
    """Stacked (P, q, A, l, u) splitting form; bound rows come last."""
    cs = qp.constraints
    n = qp.n_vars
    mi = cs.A_ineq.shape[0]
    me = cs.A_eq.shape[0]
    A = sp.vstack([cs.A_ineq, cs.A_eq, sp.eye(n, format="csr")], format="csc")
    l = np.concatenate([np.full(mi, -np.inf), cs.b_eq, cs.lower])
    u = np.concatenate([cs.b_ineq, cs.b_eq, cs.upper])
    P = 2.0 * qp.Q
    return P, qp.c.copy(), A, l, u, mi, me


def _ruiz_equilibrate(P, q, A, iters):
    """Max-norm equilibration of Q's columns and A's rows (and columns).

    Returns scaled copies plus the diagonal scalings d (variables) and
    e (constraint rows); x = d * x_scaled, y = e * y_scaled.
    """
    n = P.shape[0]
    m = A.shape[0]
    d = np.ones(n)
    e = np.ones(m)
    Pb = P.copy()
    qb = q.copy()
    Ab = A.copy()
    for _ in range(iters):
        col_a = np.abs(Ab).max(axis=0).toarray().ravel() if m else np.zeros(n)
        col_p = np.abs(Pb).max(axis=0)
        col = np.maximum(col_a, col_p)
        col[col == 0] = 1.0
        dd = 1.0 / np.sqrt(col)
        row_a = np.abs(Ab).max(axis=1).toarray().ravel() if m else np.zeros(0)
        row_a[row_a == 0] = 1.0
        ee = 1.0 / np.sqrt(row_a)
        Pb = Pb * dd[None, :] * dd[:, None]
        qb = qb * dd
        Ab = sp.diags(ee) @ Ab @ sp.diags(dd)
        d *= dd
        e *= ee
    return Pb, qb, Ab.tocsc(), d, e


class _KKT:
    """Factorization of [[P + sigma I, A^T], [A, -diag(1/rho)]]."""

    def __init__(self, P, A, sigma):
        self.P = sp.csc_matrix(P)
        self.A = sp.csc_matrix(A)
        self.sigma = sigma
        self.n = P.shape[0]
        self.m = A.shape[0]
        self._lu = None

    def factor(self, rho_vec):
        upper = sp.hstack([self.P + self.sigma * sp.eye(self.n), self.A.T])
        lower = sp.hstack([self.A, -sp.diags(1.0 / rho_vec)])
        M = sp.vstack([upper, lower], format="csc")
        self._lu = spla.splu(M)

    def solve(self, r1, r2):
        out = self._lu.solve(np.concatenate([r1, r2]))
        return out[: self.n], out[self.n:]


def _original_checks(qp, x_orig, y_orig, mi, me):
    """Feasibility and stationarity of the clipped iterate in original units."""
    cs = qp.constraints
    v = np.clip(x_orig, cs.lower, cs.upper)
    eq_res = np.abs(cs.A_eq @ v - cs.b_eq).max() if me else 0.0
    ineq_gap = (cs.A_ineq @ v - cs.b_ineq) if mi else np.zeros(0)
    ineq_viol = max(0.0, ineq_gap.max()) if mi else 0.0

    lam_ineq = np.maximum(y_orig[:mi], 0.0)
    lam_eq = y_orig[mi:mi + me]
    lam_bnd = y_orig[mi + me:]
    grad = 2.0 * (qp.Q @ v) + qp.c
    if mi:
        grad = grad + cs.A_ineq.T @ lam_ineq
    if me:
        grad = grad + cs.A_eq.T @ lam_eq
    grad = grad + lam_bnd
    station = np.abs(grad).max()
    return v, max(eq_res, ineq_viol), station


def solve(qp, settings=None):
    """Run the splitting scheme on a QuadraticProgram, then try to refine."""
    settings = settings or SolverSettings()
    P, q, A, l, u, mi, me = _stack_problem(qp)
    n = qp.n_vars
    m = A.shape[0]
    c_inf = 1.0 + np.abs(qp.c).max(initial=0.0)

    Pb, qb, Ab, d_sc, e_sc = _ruiz_equilibrate(P, q, A, settings.scaling_iters)
    lb = e_sc * l
    ub = e_sc * u

    eq_rows = np.isfinite(lb) & (lb == ub)
    rho0 = settings.rho
    rho_vec = np.where(eq_rows, settings.rho_eq_scale * rho0, rho0)

    kkt = _KKT(Pb, Ab, settings.sigma)
    kkt.factor(rho_vec)

    x = np.zeros(n)
    z = np.clip(np.zeros(m), lb, ub)
    y = np.zeros(m)
    y_prev = y.copy()

    alpha = settings.over_relax
    trace = []
    status = MAX_ITER
    it = 0
    best = None
    stall_ref = np.inf
    stall_count = 0

    for it in range(1, settings.max_iter + 1):
        r1 = settings.sigma * x - qb
        r2 = z - y / rho_vec
        xt, nu = kkt.solve(r1, r2)
        zt = z + (nu - y) / rho_vec
        x = alpha * xt + (1 - alpha) * x
        z_prev = z
        z_arg = alpha * zt + (1 - alpha) * z_prev + y / rho_vec
        z = np.clip(z_arg, lb, ub)
        y = y + rho_vec * (alpha * zt + (1 - alpha) * z_prev - z)

        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            status = NUMERICAL_FAILURE
            break

        if it % settings.check_interval == 0 or it == settings.max_iter:
            x_orig = d_sc * x
            y_orig = e_sc * y
            v, feas, station = _original_checks(qp, x_orig, y_orig, mi, me)
            r_prim = np.abs(Ab @ x - z).max(initial=0.0)
            r_dual = np.abs(Pb @ x + qb + Ab.T @ y).max(initial=0.0)
            trace.append((it, float(feas), float(station)))
            metric = max(feas, station / c_inf)
            if best is None or metric < best[0]:
                best = (metric, v, y_orig, feas, station)
            if feas <= settings.tol_feas and station <= settings.tol_kkt * c_inf:
                status = OPTIMAL
                break

            # When the residuals stop shrinking (the step-size adaptation can
            # settle into a cycle) further sweeps are wasted; the refinement
            # stage recovers the exact solution from a good-enough iterate.
            if metric < 0.5 * stall_ref:
                stall_ref = metric
                stall_count = 0
            else:
                stall_count += 1
                if stall_count >= settings.stall_checks:
                    break

            dy = y - y_prev
            y_prev = y.copy()
            dy_inf = np.abs(dy).max(initial=0.0)
            if dy_inf > 0 and np.abs(Ab.T @ dy).max(initial=0.0) <= settings.eps_pinf * dy_inf:
                pos = np.maximum(dy, 0.0)
                neg = np.minimum(dy, 0.0)
                if not np.any((~np.isfinite(lb)) & (neg < -settings.eps_pinf * dy_inf)):
                    support = ub @ pos + np.where(np.isfinite(lb), lb, 0.0) @ neg
                    if support <= -settings.eps_pinf * dy_inf:
                        status = INFEASIBLE
                        break

            if settings.adaptive_rho:
                denom_p = max(np.abs(Ab @ x).max(initial=0.0),
                              np.abs(z).max(initial=0.0), 1e-12)
                denom_d = max(np.abs(Pb @ x).max(initial=0.0),
                              np.abs(Ab.T @ y).max(initial=0.0),
                              np.abs(qb).max(initial=0.0), 1e-12)
                ratio = np.sqrt((r_prim / denom_p) / max(r_dual / denom_d, 1e-12))
                new_rho0 = np.clip(rho0 * ratio, 1e-6, 1e6)
                if new_rho0 / rho0 > 5 or rho0 / new_rho0 > 5:
                    rho0 = float(new_rho0)
                    rho_vec = np.where(eq_rows, settings.rho_eq_scale * rho0, rho0)
                    kkt.factor(rho_vec)

    if best is None:
        x_orig = d_sc * x
        y_orig = e_sc * y
        v, feas, station = _original_checks(qp, x_orig, y_orig, mi, me)
        best = (max(feas, station / c_inf), v, y_orig, feas, station)

    _, v, y_orig, feas, station = best
    if settings.polish and status in (OPTIMAL, MAX_ITER):
        refined = _active_set_refine(qp, v, y_orig, mi, me, settings)
        if refined is not None:
            v2, y2, feas2, station2 = refined
            if max(feas2, station2 / c_inf) <= max(feas, station / c_inf):
                v, y_orig, feas, station = v2, y2, feas2, station2
                if feas <= settings.tol_feas and station <= settings.tol_kkt * c_inf:
                    status = OPTIMAL

    return Solution(
        v=v,
        objective=qp.objective(v),
        primal_residual=float(feas),
        dual_residual=float(station),
        iterations=it,
        status=status,
        diagnostics={
            "residual_trace": trace,
            "rho_final": float(rho0),
            "seed": settings.seed,
            "scaled": True,
        },
    )


# ---------------------------------------------------------------------------
# Active-set refinement

def _eqp_solve(qp, act_rows, act_vals):
    """Minimize the objective subject to the active rows holding with equality.

    Nullspace method on a dense pivoted QR: degenerate vertices stack
    redundant rows, so the row space is split off at the numerical rank and
    the objective is minimized over the remaining directions. Any solve
    error then lives only where the Hessian is nearly flat, so the gradient
    residual of the result stays sharp. Returns (v, multipliers), or None
    when the active rows are inconsistent.
    """
    n = qp.n_vars
    H = 2.0 * qp.Q
    if not act_rows:
        v = sla.solve(H, -qp.c, assume_a="pos")
        return v, np.zeros(0)
    A = sp.vstack(act_rows, format="csc").toarray()
    b = np.asarray(act_vals, dtype=float)
    v_p, *_ = np.linalg.lstsq(A, b, rcond=None)
    if np.abs(A @ v_p - b).max(initial=0.0) > 1e-8:
        return None
    Qf, Rf, _ = sla.qr(A.T, mode="full", pivoting=True)
    diag = np.abs(np.diag(Rf))
    rank_tol = max(A.shape) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    r = int(np.count_nonzero(diag > rank_tol))
    if r < n:
        Z = Qf[:, r:]
        M_r = Z.T @ H @ Z
        rhs = -Z.T @ (H @ v_p + qp.c)
        try:
            w = sla.solve(M_r, rhs, assume_a="pos")
        except np.linalg.LinAlgError:
            w = np.linalg.lstsq(M_r, rhs, rcond=None)[0]
        v = v_p + Z @ w
    else:
        v = v_p
    grad = H @ v + qp.c
    lam = np.linalg.lstsq(A.T, -grad, rcond=None)[0]
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(lam))):
        return None
    return v, lam


def _signed_multipliers(qp, v, rows, tags, fixed, mi, me, act_tol):
    """Refit the multipliers of a fixed point by sign-bounded least squares.

    Serves two repairs at once. On a degenerate working set the equality
    solve spreads multiplier mass over dependent rows arbitrarily, which
    inflates the stationarity measure even when v is optimal. And a
    constraint can sit exactly at its boundary without ever having entered
    the working set (nothing was violated, so the exchange loop never saw
    it), yet carry the multiplier the certificate needs. So the fit gets a
    column for every constraint active at v, working set or not, with the
    sign bounds of a valid KKT point.
    """
    cs = qp.constraints
    have = set(tags)
    rows = list(rows)
    tags = list(tags)
    if mi:
        slack = cs.b_ineq - cs.A_ineq @ v
        for i in np.nonzero(slack <= act_tol)[0]:
            if ("ineq", int(i)) not in have:
                rows.append(cs.A_ineq.getrow(int(i)))
                tags.append(("ineq", int(i)))
    eye = sp.eye(v.size, format="csr")
    near_lo = v - cs.lower <= act_tol
    near_hi = cs.upper - v <= act_tol
    for j in np.nonzero(near_lo)[0]:
        if ("lo", int(j)) not in have:
            rows.append(eye.getrow(int(j)))
            tags.append(("lo", int(j)))
    for j in np.nonzero(near_hi & ~near_lo)[0]:
        if ("hi", int(j)) not in have and ("lo", int(j)) not in have:
            rows.append(eye.getrow(int(j)))
            tags.append(("hi", int(j)))

    g0 = 2.0 * (qp.Q @ v) + qp.c
    B = sp.vstack(rows, format="csc").T.toarray()
    lb = np.empty(len(tags))
    ub = np.empty(len(tags))
    for t, (kind, idx) in enumerate(tags):
        if kind == "eq" or (kind == "lo" and idx in fixed):
            lb[t], ub[t] = -np.inf, np.inf
        elif kind == "lo":
            lb[t], ub[t] = -np.inf, 0.0
        else:                          # ineq and hi push against the gradient
            lb[t], ub[t] = 0.0, np.inf
    try:
        fit = lsq_linear(B, -g0, bounds=(lb, ub), tol=1e-12)
    except (ValueError, np.linalg.LinAlgError):
        return None
    y_new = np.zeros(mi + me + v.size)
    for (kind, idx), lam_v in zip(tags, fit.x):
        if kind == "eq":
            y_new[mi + idx] = lam_v
        elif kind == "ineq":
            y_new[idx] = lam_v
        else:
            y_new[mi + me + idx] = lam_v
    return y_new


def _active_set_refine(qp, v, y_orig, mi, me, settings):
    """Polish the splitting solution on its guessed active set.

    The working set starts from the duals/slacks of the splitting iterate and
    an add/drop exchange loop runs until the KKT conditions hold exactly (or
    an iteration cap / repeated working set stops it). One constraint moves
    per round, worst violation first, so the loop cost stays proportional to
    how wrong the initial guess was rather than to the problem size.
    Returns (v, y, feasibility, stationarity) in original units, or None.
    """
    cs = qp.constraints
    n = qp.n_vars
    act_tol = max(settings.tol_feas, 1e-8)

    ineq_rows = [cs.A_ineq.getrow(i) for i in range(mi)]
    slack = cs.b_ineq - cs.A_ineq @ v if mi else np.zeros(0)
    active_ineq = set(np.nonzero(
        (slack <= act_tol) | (y_orig[:mi] > act_tol))[0].tolist())
    lam_bnd = y_orig[mi + me:]
    active_lo = set(np.nonzero(
        (v - cs.lower <= act_tol) & (lam_bnd <= act_tol))[0].tolist())
    active_hi = set(np.nonzero(
        (cs.upper - v <= act_tol) & (lam_bnd >= -act_tol))[0].tolist())
    active_hi -= active_lo
    # fixed variables (lower == upper) must stay pinned
    fixed = np.nonzero(cs.upper - cs.lower <= 0)[0]
    active_lo |= set(fixed.tolist())
    active_hi -= set(fixed.tolist())

    rounds = 200
    seen = set()
    result = None
    last = None
    for _ in range(rounds):
        key = (frozenset(active_ineq), frozenset(active_lo), frozenset(active_hi))
        if key in seen:
            break
        seen.add(key)
        rows, vals, tags = [], [], []
        for i in range(me):
            rows.append(cs.A_eq.getrow(i))
            vals.append(cs.b_eq[i])
            tags.append(("eq", i))
        for i in sorted(active_ineq):
            rows.append(ineq_rows[i])
            vals.append(cs.b_ineq[i])
            tags.append(("ineq", i))
        eye = sp.eye(n, format="csr")
        for j in sorted(active_lo):
            rows.append(eye.getrow(j))
            vals.append(cs.lower[j])
            tags.append(("lo", j))
        for j in sorted(active_hi):
            rows.append(eye.getrow(j))
            vals.append(cs.upper[j])
            tags.append(("hi", j))

        out = _eqp_solve(qp, rows, vals)
        if out is None:
            break
        v_new, lam = out
        lam_by_tag = dict(zip(tags, lam))

        viol_ineq = (cs.A_ineq @ v_new - cs.b_ineq) if mi else np.zeros(0)
        viol_lo = cs.lower - v_new
        viol_hi = v_new - cs.upper
        worst_add = None
        for i in np.nonzero(viol_ineq > act_tol)[0]:
            if i not in active_ineq:
                cand = ("ineq", int(i), float(viol_ineq[i]))
                if worst_add is None or cand[2] > worst_add[2]:
                    worst_add = cand
        for j in np.nonzero(viol_lo > act_tol)[0]:
            if j not in active_lo:
                cand = ("lo", int(j), float(viol_lo[j]))
                if worst_add is None or cand[2] > worst_add[2]:
                    worst_add = cand
        for j in np.nonzero(viol_hi > act_tol)[0]:
            if j not in active_hi:
                cand = ("hi", int(j), float(viol_hi[j]))
                if worst_add is None or cand[2] > worst_add[2]:
                    worst_add = cand

        worst_drop = None
        for tag, lam_v in lam_by_tag.items():
            kind, idx = tag
            if kind == "ineq" and lam_v < -act_tol:
                cand = (tag, float(-lam_v))
            elif kind == "hi" and lam_v < -act_tol and idx not in fixed:
                cand = (tag, float(-lam_v))
            elif kind == "lo" and lam_v > act_tol and idx not in fixed:
                cand = (tag, float(lam_v))
            else:
                continue
            if worst_drop is None or cand[1] > worst_drop[1]:
                worst_drop = cand

        y_new = np.zeros(mi + me + n)
        for (kind, idx), lam_v in lam_by_tag.items():
            if kind == "eq":
                y_new[mi + idx] = lam_v
            elif kind == "ineq":
                y_new[idx] = lam_v
            else:
                y_new[mi + me + idx] = lam_v
        v_cand, feas, station = _original_checks(qp, v_new, y_new, mi, me)
        last = (v_cand, y_new, feas, station, rows, tags)
        if result is None or max(feas, station) < max(result[2], result[3]):
            result = last

        if worst_add is None and worst_drop is None:
            break
        if worst_add is not None:
            kind, idx, _ = worst_add
            {"ineq": active_ineq, "lo": active_lo, "hi": active_hi}[kind].add(idx)
        elif worst_drop is not None:
            (kind, idx), _ = worst_drop
            {"ineq": active_ineq, "lo": active_lo, "hi": active_hi}[kind].discard(idx)

    # Certify the final working set's point as well as the best-metric one:
    # at a clean exit the last point solves its equality QP exactly, so its
    # refitted certificate is sharp even when an earlier round happened to
    # post a lower raw metric with noisier multipliers.
    fixed_set = set(fixed.tolist())
    out = None
    for cand in ({id(result): result, id(last): last}.values()):
        if cand is None:
            continue
        v_c, y_c, feas_c, station_c, rows_c, tags_c = cand
        if station_c > settings.tol_kkt:
            y_alt = _signed_multipliers(qp, v_c, rows_c, tags_c,
                                        fixed_set, mi, me, act_tol)
            if y_alt is not None:
                v2, feas2, station2 = _original_checks(qp, v_c, y_alt, mi, me)
                if max(feas2, station2) < max(feas_c, station_c):
                    v_c, y_c, feas_c, station_c = v2, y_alt, feas2, station2
        if out is None or max(feas_c, station_c) < max(out[2], out[3]):
            out = (v_c, y_c, feas_c, station_c)
    return out
