"""Constraint assembly, feasibility checks, and the worked example dump."""

import numpy as np
import pytest

from fgcluster.constraints import (
    build_constraints,
    build_projection,
    check_feasible,
    coverage_counts,
    dump_constraints,
    feasible_point,
)
from fgcluster.qp import build_qp

TOY_DUMP = """\
variables: 5 superpixel (y_1..y_5), 2 box (z_1..z_2)
[boxes]
0.9z_1 <= y_1 + y_3 + y_4 <= 2.1z_1
0.9z_2 <= y_1 + y_2 + y_4 <= 2.1z_2
[superpixels]
2y_1 <= z_1 + z_2
y_2 <= z_2
y_3 <= z_1
2y_4 <= z_1 + z_2
[background]
y_5 = 0
[frames]
z_1 + z_2 = 1
[bounds]
0 <= v <= 1
[projections]
P_1 =
1 0 0 0 0
0 0 1 0 0
0 0 0 1 0
P_2 =
1 0 0 0 0
0 1 0 0 0
0 0 0 1 0
"""


def test_layout_indices(toy):
    cs = build_constraints(toy)
    layout = cs.layout
    assert layout.n_sp == 5 and layout.m_box == 2
    assert layout.y_index(0, 2) == 2
    assert layout.z_index(0, 0) == 5
    assert layout.z_index(0, 1) == 6
    v = np.arange(7.0)
    y, z = layout.split(v)
    np.testing.assert_array_equal(y, [0, 1, 2, 3, 4])
    np.testing.assert_array_equal(z, [5, 6])


def test_projection_selects_box_members(toy):
    P = build_projection(toy.frames[0], 0)
    np.testing.assert_array_equal(
        P, [[1, 0, 0, 0, 0], [0, 0, 1, 0, 0], [0, 0, 0, 1, 0]])


def test_coverage_counts(toy):
    np.testing.assert_array_equal(
        coverage_counts(toy.frames[0]), [2, 1, 1, 2, 0])


def test_toy_dump_golden_text(toy):
    cs = build_constraints(toy)
    assert dump_constraints(toy, cs) == TOY_DUMP


def test_row_order_and_labels(toy):
    cs = build_constraints(toy)
    assert cs.ineq_labels == [
        ("box_lo", 0, 0), ("box_hi", 0, 0),
        ("box_lo", 0, 1), ("box_hi", 0, 1),
        ("cover", 0, 0), ("cover", 0, 1), ("cover", 0, 2), ("cover", 0, 3),
    ]
    assert cs.eq_labels == [("uncovered", 0, 4), ("frame_sum", 0, None)]
    assert cs.A_ineq.shape == (8, 7)
    assert cs.A_eq.shape == (2, 7)


def test_toy_quota_rows_scale_with_box_size(toy):
    # Both boxes have three members, so the z coefficients are
    # gamma * 3 = 0.9 and -eta * 3 = -2.1.
    cs = build_constraints(toy)
    A = cs.A_ineq.toarray()
    assert A[0, 5] == pytest.approx(0.9)
    assert A[1, 5] == pytest.approx(-2.1)
    np.testing.assert_array_equal(A[0, :5], [-1, 0, -1, -1, 0])


def test_bounds_are_unit_box(toy):
    cs = build_constraints(toy)
    np.testing.assert_array_equal(cs.lower, np.zeros(7))
    np.testing.assert_array_equal(cs.upper, np.ones(7))


def test_gamma_eta_overrides(toy):
    cs = build_constraints(toy, gamma=0.5, eta=0.8)
    A = cs.A_ineq.toarray()
    assert A[0, 5] == pytest.approx(1.5)
    assert A[1, 5] == pytest.approx(-2.4)
    with pytest.raises(ValueError):
        build_constraints(toy, gamma=0.9, eta=0.2)


def test_feasible_point_is_feasible(toy, small_instance):
    for inst in (toy, small_instance):
        cs = build_constraints(inst)
        v = feasible_point(inst, cs)
        rep = check_feasible(v, cs, tol=1e-9)
        assert rep.ok, rep.violations[:3]
        v_int = feasible_point(inst, cs, interior=True)
        assert check_feasible(v_int, cs, tol=1e-9).ok


def test_check_feasible_reports_worst_first(toy):
    cs = build_constraints(toy)
    v = np.zeros(7)
    v[:5] = 1.0                    # all superpixels on, no box selected
    rep = check_feasible(v, cs, tol=1e-6)
    assert not rep.ok
    assert rep.max_violation > 0.5
    amounts = [a for _, a in rep.violations]
    assert amounts == sorted(amounts, reverse=True)
    assert rep.violations[0][1] == rep.max_violation


def test_integer_solution_is_feasible(toy):
    v = np.array([0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0])
    cs = build_constraints(toy)
    assert check_feasible(v, cs, tol=0.0).max_violation <= 0.0


def test_synthetic_constraint_counts(small_instance):
    cs = build_constraints(small_instance)
    n_boxes = small_instance.m_box_total
    covered = sum(
        int(np.count_nonzero(coverage_counts(f))) for f in small_instance.frames)
    uncovered = small_instance.n_sp_total - covered
    assert cs.A_ineq.shape[0] == 2 * n_boxes + covered
    assert cs.A_eq.shape[0] == uncovered + small_instance.n_frames
