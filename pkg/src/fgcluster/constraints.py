"""Linear constraint system coupling masks and box selection.

The integer program's box-local indicators x_i are related to the global
superpixel vector y by binary projection matrices (x_i = P_i y); that
equality is substituted analytically, so the constraint system below is
over the stacked variable v = (y; z) only:

  (a) per box i:   gamma |S_i| z_i <= sum_{j in S_i} y_j <= eta |S_i| z_i
  (b) per superpixel j covered by c_j >= 1 boxes:
                   c_j y_j <= sum over boxes containing j of z_i
  (c) per uncovered superpixel: y_j = 0
  (d) per frame:   sum over the frame's boxes of z_i = 1
  (e) bounds 0 <= v <= 1 (the relaxed boolean constraints)

Row order is deterministic: box rows by frame then box index (lower bound
row before upper), then covered-superpixel rows, then the equality rows
(uncovered superpixels, then per-frame sums).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


@dataclass
class VarLayout:
    """Maps (frame, superpixel) and (frame, box) to positions in v = (y; z)."""

    n_sp: int                      # total superpixels N
    m_box: int                     # total boxes M
    sp_offsets: np.ndarray         # per frame start into y
    box_offsets: np.ndarray        # per frame start into z

    @property
    def n_vars(self):
        return self.n_sp + self.m_box

    def y_index(self, f, j):
        return int(self.sp_offsets[f]) + j

    def z_index(self, f, i):
        return self.n_sp + int(self.box_offsets[f]) + i

    def split(self, v):
        return v[: self.n_sp], v[self.n_sp:]


@dataclass
class ConstraintSet:
    A_ineq: sp.csr_matrix
    b_ineq: np.ndarray
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    layout: VarLayout
    ineq_labels: list = field(default_factory=list)
    eq_labels: list = field(default_factory=list)


@dataclass
class FeasibilityReport:
    max_violation: float
    violations: list               # (label, amount) pairs, worst first
    tol: float

    @property
    def ok(self):
        return self.max_violation <= self.tol


def build_projection(frame, box_i):
    """Binary |S_i| x n_sp selector: row r picks superpixel S_i[r]."""
    members = frame.memberships[box_i]
    P = np.zeros((len(members), frame.n_sp))
    P[np.arange(len(members)), members] = 1.0
    return P


def coverage_counts(frame):
    """c_j = number of the frame's boxes containing superpixel j."""
    c = np.zeros(frame.n_sp, dtype=int)
    for members in frame.memberships:
        c[members] += 1
    return c


def build_constraints(instance, gamma=None, eta=None):
    """Assemble the full sparse constraint system for an instance."""
    hyper = instance.hyper
    gamma = hyper.gamma if gamma is None else gamma
    eta = hyper.eta if eta is None else eta
    if not (0.0 <= gamma <= eta <= 1.0):
        raise ValueError("need 0 <= gamma <= eta <= 1")

    layout = VarLayout(
        n_sp=instance.n_sp_total,
        m_box=instance.m_box_total,
        sp_offsets=instance.sp_offsets[:-1],
        box_offsets=instance.box_offsets[:-1],
    )
    nv = layout.n_vars

    rows_i, cols_i, vals_i = [], [], []
    b_ineq, ineq_labels = [], []
    rows_e, cols_e, vals_e = [], [], []
    b_eq, eq_labels = [], []

    def add(rows, cols, vals, r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    r = 0
    for f, frame in enumerate(instance.frames):
        for i, members in enumerate(frame.memberships):
            size = len(members)
            zi = layout.z_index(f, i)
            # gamma |S_i| z_i - sum y <= 0
            add(rows_i, cols_i, vals_i, r, zi, gamma * size)
            for j in members:
                add(rows_i, cols_i, vals_i, r, layout.y_index(f, int(j)), -1.0)
            b_ineq.append(0.0)
            ineq_labels.append(("box_lo", f, i))
            r += 1
            # sum y - eta |S_i| z_i <= 0
            add(rows_i, cols_i, vals_i, r, zi, -eta * size)
            for j in members:
                add(rows_i, cols_i, vals_i, r, layout.y_index(f, int(j)), 1.0)
            b_ineq.append(0.0)
            ineq_labels.append(("box_hi", f, i))
            r += 1

    uncovered = []
    for f, frame in enumerate(instance.frames):
        c = coverage_counts(frame)
        for j in range(frame.n_sp):
            if c[j] == 0:
                uncovered.append((f, j))
                continue
            # c_j y_j - sum of covering z <= 0
            add(rows_i, cols_i, vals_i, r, layout.y_index(f, j), float(c[j]))
            for i, members in enumerate(frame.memberships):
                if j in members:
                    add(rows_i, cols_i, vals_i, r, layout.z_index(f, i), -1.0)
            b_ineq.append(0.0)
            ineq_labels.append(("cover", f, j))
            r += 1

    re = 0
    for f, j in uncovered:
        add(rows_e, cols_e, vals_e, re, layout.y_index(f, j), 1.0)
        b_eq.append(0.0)
        eq_labels.append(("uncovered", f, j))
        re += 1
    for f, frame in enumerate(instance.frames):
        for i in range(frame.m_box):
            add(rows_e, cols_e, vals_e, re, layout.z_index(f, i), 1.0)
        b_eq.append(1.0)
        eq_labels.append(("frame_sum", f, None))
        re += 1

    A_ineq = sp.csr_matrix(
        (vals_i, (rows_i, cols_i)), shape=(len(b_ineq), nv))
    A_eq = sp.csr_matrix(
        (vals_e, (rows_e, cols_e)), shape=(len(b_eq), nv))
    return ConstraintSet(
        A_ineq=A_ineq, b_ineq=np.asarray(b_ineq),
        A_eq=A_eq, b_eq=np.asarray(b_eq),
        lower=np.zeros(nv), upper=np.ones(nv),
        layout=layout, ineq_labels=ineq_labels, eq_labels=eq_labels,
    )


def _label_text(label):
    kind, f, i = label
    if kind == "box_lo":
        return "frame %d box %d lower" % (f, i)
    if kind == "box_hi":
        return "frame %d box %d upper" % (f, i)
    if kind == "cover":
        return "frame %d superpixel %d coverage" % (f, i)
    if kind == "uncovered":
        return "frame %d superpixel %d uncovered" % (f, i)
    return "frame %d box sum" % f


def check_feasible(v, cs, tol=1e-6):
    """Report every constraint row violated beyond tol, worst first."""
    v = np.asarray(v, dtype=float)
    if v.shape != (cs.layout.n_vars,):
        raise ValueError("v has size %d, layout needs %d"
                         % (v.size, cs.layout.n_vars))
    entries = []
    slack_i = cs.A_ineq @ v - cs.b_ineq
    for k, s in enumerate(slack_i):
        if s > 0:
            entries.append((_label_text(cs.ineq_labels[k]), float(s)))
    resid_e = np.abs(cs.A_eq @ v - cs.b_eq)
    for k, s in enumerate(resid_e):
        if s > 0:
            entries.append((_label_text(cs.eq_labels[k]), float(s)))
    for j in range(v.size):
        gap = max(cs.lower[j] - v[j], v[j] - cs.upper[j])
        if gap > 0:
            entries.append(("bound on variable %d" % j, float(gap)))
    entries.sort(key=lambda e: -e[1])
    worst = entries[0][1] if entries else 0.0
    return FeasibilityReport(
        max_violation=worst,
        violations=[e for e in entries if e[1] > tol],
        tol=tol,
    )


def feasible_point(instance, cs, interior=False):
    """A point satisfying every constraint for any valid instance.

    Spreads z uniformly over each frame's boxes and gives every covered
    superpixel y = gamma / m_f, which meets the per-box lower bound with
    equality. interior=True uses (gamma + eta) / 2 instead of gamma, strictly
    inside the box rows whenever gamma < eta.
    """
    hyper = instance.hyper
    level = 0.5 * (hyper.gamma + hyper.eta) if interior else hyper.gamma
    v = np.zeros(cs.layout.n_vars)
    for f, frame in enumerate(instance.frames):
        c = coverage_counts(frame)
        for j in range(frame.n_sp):
            if c[j] > 0:
                v[cs.layout.y_index(f, j)] = level / frame.m_box
        for i in range(frame.m_box):
            v[cs.layout.z_index(f, i)] = 1.0 / frame.m_box
    return v


# ---------------------------------------------------------------------------
# Plain-text dump for inspection and the toy golden test.

def _coef(x):
    return "%g" % x


def _term(coef, name):
    if abs(coef - 1.0) < 1e-12:
        return name
    return "%s%s" % (_coef(coef), name)


def dump_constraints(instance, cs):
    """Human-readable rendering of the whole system, deterministic row order."""
    layout = cs.layout
    lines = []

    def yname(f, j):
        return "y_%d" % (layout.y_index(f, j) + 1)

    def zname(f, i):
        return "z_%d" % (layout.z_index(f, i) - layout.n_sp + 1)

    lines.append("variables: %d superpixel (y_1..y_%d), %d box (z_1..z_%d)"
                 % (layout.n_sp, layout.n_sp, layout.m_box, layout.m_box))
    lines.append("[boxes]")
    for f, frame in enumerate(instance.frames):
        for i, members in enumerate(frame.memberships):
            size = len(members)
            lo = None
            hi = None
            for label, (kind, lf, li) in enumerate(cs.ineq_labels):
                if lf == f and li == i:
                    if kind == "box_lo":
                        lo = cs.A_ineq[label]
                    elif kind == "box_hi":
                        hi = cs.A_ineq[label]
            gamma_c = lo[0, layout.z_index(f, i)]
            eta_c = -hi[0, layout.z_index(f, i)]
            ysum = " + ".join(yname(f, int(j)) for j in sorted(members))
            lines.append("%s <= %s <= %s" % (
                _term(gamma_c, zname(f, i)), ysum, _term(eta_c, zname(f, i))))
    lines.append("[superpixels]")
    for f, frame in enumerate(instance.frames):
        c = coverage_counts(frame)
        for j in range(frame.n_sp):
            if c[j] == 0:
                continue
            zsum = " + ".join(
                zname(f, i) for i, m in enumerate(frame.memberships) if j in m)
            lines.append("%s <= %s" % (_term(float(c[j]), yname(f, j)), zsum))
    lines.append("[background]")
    for kind, f, j in cs.eq_labels:
        if kind == "uncovered":
            lines.append("%s = 0" % yname(f, j))
    lines.append("[frames]")
    for f, frame in enumerate(instance.frames):
        zsum = " + ".join(zname(f, i) for i in range(frame.m_box))
        lines.append("%s = 1" % zsum)
    lines.append("[bounds]")
    lines.append("0 <= v <= 1")
    lines.append("[projections]")
    for f, frame in enumerate(instance.frames):
        for i in range(frame.m_box):
            P = build_projection(frame, i)
            lines.append("P_%d =" % (layout.box_offsets[f] + i + 1))
            for row in P.astype(int):
                lines.append(" ".join(str(x) for x in row))
    return "\n".join(lines) + "\n"
