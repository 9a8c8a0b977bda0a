import itertools
import math

import numpy as np
import pytest

from equiscreen.contours import trace_iso_merit
from equiscreen.exceptions import ContourEscape
from equiscreen.probes import _build_lp, knife_edge_diagnostic, probe_contour_classes, probe_single_instrument


# ---------------------------------------------------------------------------
# contour tracing
# ---------------------------------------------------------------------------


def test_trace_stays_on_the_level_set(s1):
    tr = trace_iso_merit(s1.merit, s1.space, 2.0)
    resid = np.abs(s1.merit(tr.points[:, 0], tr.points[:, 1]) - 2.0)
    assert resid.max() <= 1e-10
    assert np.allclose(tr.slopes, -1.0, atol=1e-12)
    # endpoints on the rectangle boundary
    first, last = tr.points[0], tr.points[-1]
    assert first[0] == pytest.approx(0.0, abs=1e-9) or first[1] == pytest.approx(2.0, abs=1e-9)
    assert last[0] == pytest.approx(1.0, abs=1e-9) or last[1] == pytest.approx(1.0, abs=1e-9)


def test_trace_product_merit_slopes(s1_product):
    tr = trace_iso_merit(s1_product.merit, s1_product.space, 3.0)
    resid = np.abs(s1_product.merit(tr.points[:, 0], tr.points[:, 1]) - 3.0)
    assert resid.max() <= 1e-10
    assert np.allclose(tr.slopes, -tr.points[:, 1], atol=1e-10)


def test_trace_outside_range_escapes(s1):
    with pytest.raises(ContourEscape):
        trace_iso_merit(s1.merit, s1.space, 5.0)


# ---------------------------------------------------------------------------
# knife-edge diagnostic
# ---------------------------------------------------------------------------


def test_dispersion_of_the_weighted_sum_merit(s1):
    d = knife_edge_diagnostic(s1, 2.0)
    assert d == pytest.approx(1.0 - 2.0 / math.e, abs=1e-9)


def test_dispersion_of_the_aligned_merit(s1_product):
    assert knife_edge_diagnostic(s1_product, 3.0) <= 1e-8


def test_dispersion_is_invariant_to_merit_relabeling(s1):
    doubled = s1.with_overrides({"merit.a": "2.0", "merit.b": "2.0"})
    assert knife_edge_diagnostic(doubled, 4.0) == pytest.approx(
        knife_edge_diagnostic(s1, 2.0), abs=1e-12
    )


def test_nonlinear_dispersion_needs_levels(s1):
    # the linear ratio ignores levels entirely
    assert knife_edge_diagnostic(s1, 2.0, x=0.3, q=1.0) == pytest.approx(
        knife_edge_diagnostic(s1, 2.0), abs=1e-12
    )
    with pytest.raises(ValueError):
        knife_edge_diagnostic(s1, 5.0)


# ---------------------------------------------------------------------------
# the LP probe
# ---------------------------------------------------------------------------


def test_payments_probe_finds_no_screening(s1):
    grid = s1.grid(6, 6)
    for coupling in ("merit", "exact"):
        result = probe_single_instrument(s1, grid, "payments", n_classes=5, coupling=coupling)
        assert result.max_equitable_spread <= 1e-6
        assert result.feasibility_slack >= -1e-9


def test_dropping_equity_reenables_screening(s1):
    result = probe_single_instrument(s1, s1.grid(6, 6), "payments", coupling="none")
    assert result.max_equitable_spread >= 0.5


def test_ordeal_probe_dichotomy(s1, s1_product):
    off_edge = probe_contour_classes(s1, "ordeals")
    assert off_edge.max_equitable_spread <= 1e-6
    assert off_edge.feasibility_slack >= -1e-9
    on_edge = probe_contour_classes(s1_product, "ordeals")
    assert on_edge.max_equitable_spread >= 0.99


def test_contour_probe_rejects_payments_too(s1):
    assert probe_contour_classes(s1, "payments").max_equitable_spread <= 1e-6


def test_diagnostic_and_probe_agree_on_the_knife_edge(s1_product):
    lo, hi = s1_product.merit_range()
    assert knife_edge_diagnostic(s1_product, 0.5 * (lo + hi)) <= 1e-10
    assert probe_contour_classes(s1_product, "ordeals").max_equitable_spread >= 0.99


def test_probe_grid_cap(s1):
    with pytest.raises(ValueError, match="capped"):
        probe_single_instrument(s1, s1.grid(41, 41), "payments")


def _vertex_enumeration_max_spread(beta, cost, classes, instrument, pair):
    """Independent oracle: enumerate basic feasible points of the LP."""
    m = int(classes.max()) + 1
    A, b, bounds = _build_lp(beta, cost, classes, m, instrument)
    rows = [(np.array(r), float(v)) for r, v in zip(A, b)]
    nv = 2 * m
    for j, (lo, hi) in enumerate(bounds):
        e = np.zeros(nv)
        e[j] = 1.0
        if lo is not None:
            rows.append((-e, -lo))
        if hi is not None:
            rows.append((e, hi))
    A_all = np.array([r for r, _ in rows])
    b_all = np.array([v for _, v in rows])
    best = 0.0
    for combo in itertools.combinations(range(len(rows)), nv):
        M = A_all[list(combo)]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        v = np.linalg.solve(M, b_all[list(combo)])
        if np.all(A_all @ v <= b_all + 1e-9):
            best = max(best, v[pair[0]] - v[pair[1]])
    return best


def test_probe_reproduced_by_vertex_enumeration(s1):
    # a deliberately tiny instance: 2x2 grid, 2 exact merit classes
    grid = s1.grid(2, 2)
    nodes = grid.nodes()
    eta = s1.merit(nodes[:, 0], nodes[:, 1])
    beta = nodes[:, 1]
    cost = s1.linear.z(nodes[:, 0])
    edges = np.array([eta.min(), 0.5 * (eta.min() + eta.max()), eta.max() + 1e-9])
    classes = np.searchsorted(edges, eta, side="right") - 1
    result = probe_single_instrument(s1, grid, "ordeals", n_classes=2, coupling="merit")
    oracle = max(
        _vertex_enumeration_max_spread(beta, cost, classes, "ordeals", pair)
        for pair in ((0, 1), (1, 0))
    )
    assert result.max_equitable_spread == pytest.approx(oracle, abs=1e-8)


def test_two_point_menu_diagnostic_on_the_knife_edge(s1_product):
    from equiscreen.probes import two_point_menu_diagnostic

    # on the aligned merit, the menu {(1, eta*), (0, 0)} makes every type on
    # the contour exactly indifferent
    eta_star = 3.0
    gap = two_point_menu_diagnostic(s1_product, eta_star, (1.0, 0.0), (eta_star, 0.0))
    assert gap <= 1e-10
    # a mistuned ordeal breaks the indifference
    assert two_point_menu_diagnostic(s1_product, eta_star, (1.0, 0.0), (eta_star + 0.5, 0.0)) > 0.05


def test_two_point_menu_has_no_solution_off_the_knife_edge(s1):
    from equiscreen.probes import two_point_menu_diagnostic

    gaps = [
        two_point_menu_diagnostic(s1, 2.0, (1.0, 0.0), (q, 0.0))
        for q in np.linspace(0.5, 4.0, 15)
    ]
    assert min(gaps) > 0.05
