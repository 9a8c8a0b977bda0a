"""Exhaustive single-instrument probes on small grids.

``probe_single_instrument`` asks, by linear programming, how much allocation
spread any equitable mechanism can generate on a finite grid when screening
with one instrument only.  Equity enters as coupling: all nodes in a merit
class share one (x, t) menu entry.  Every node must prefer its class's entry
to every other class's (incentive compatibility) and to leaving
(participation).  Spread maximization over a class pair is linear, so the
exact maximum is the best value over ordered pairs.

``knife_edge_diagnostic`` measures how far the merit function is from the
single direction in which pure-ordeal screening stays equitable: it traces
an iso-merit contour and reports the relative dispersion of the marginal
good/ordeal substitution rate along it (zero exactly in the knife-edge
case).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .contours import trace_iso_merit
from .exceptions import SolverFailure
from .scenario import Grid, Scenario

_PROBE_GRID_CAP = 144


@dataclass(frozen=True)
class ProbeResult:
    max_equitable_spread: float
    instrument: str
    n_classes: int
    certificate: dict
    feasibility_slack: float
    n_lps: int
    layout: str = "grid"

    def describe(self) -> dict:
        return {
            "check": "single_instrument_probe",
            "instrument": self.instrument,
            "value": self.max_equitable_spread,
            "n_classes": self.n_classes,
            "layout": self.layout,
            "n_lps": self.n_lps,
            "feasibility_slack": self.feasibility_slack,
            "certificate": self.certificate,
        }


def _merit_classes(eta: np.ndarray, n_classes: int) -> np.ndarray:
    edges = np.linspace(eta.min(), eta.max(), n_classes + 1)
    which = np.clip(np.searchsorted(edges, eta, side="right") - 1, 0, n_classes - 1)
    # drop empty classes, renumber densely
    present = np.unique(which)
    remap = {int(c): i for i, c in enumerate(present)}
    return np.array([remap[int(c)] for c in which])


def _exact_classes(eta: np.ndarray, rel_tol: float = 1e-9) -> np.ndarray:
    """Group nodes whose merit values coincide (up to rounding noise)."""
    span = max(1.0, float(eta.max() - eta.min()))
    order = np.argsort(eta, kind="stable")
    labels = np.empty(eta.size, dtype=int)
    current = 0
    labels[order[0]] = 0
    for prev, here in zip(order[:-1], order[1:]):
        if eta[here] - eta[prev] > rel_tol * span:
            current += 1
        labels[here] = current
    return labels


def _build_lp(beta, cost, classes, n_classes, instrument):
    """Inequality system A v <= b over v = (x_1..x_M, t_1..t_M)."""
    n = beta.size
    rows = []
    rhs = []

    def row(x_coeff: dict, t_coeff: dict):
        r = np.zeros(2 * n_classes)
        for m, c in x_coeff.items():
            r[m] += c
        for m, c in t_coeff.items():
            r[n_classes + m] += c
        rows.append(r)
        rhs.append(0.0)

    for i in range(n):
        m = int(classes[i])
        # participation: -(beta x_m - cost t_m) <= 0
        row({m: -beta[i]}, {m: cost[i]})
        for mp in range(n_classes):
            if mp == m:
                continue
            # no gain from taking class mp's entry
            row({mp: beta[i], m: -beta[i]}, {mp: -cost[i], m: cost[i]})

    bounds = [(0.0, 1.0)] * n_classes
    t_lo = 0.0 if instrument == "ordeals" else None
    bounds += [(t_lo, None)] * n_classes
    return np.array(rows), np.array(rhs), bounds


def probe_single_instrument(
    scenario: Scenario,
    grid: Grid,
    instrument: str,
    n_classes: int = 5,
    coupling: str = "merit",
) -> ProbeResult:
    """Exact maximum allocation spread over coupled single-instrument menus.

    ``coupling="exact"`` pools nodes of (numerically) equal merit: the
    faithful restriction of the equity constraint to the grid.
    ``coupling="merit"`` pools nodes into n_classes uniform merit bins;
    binning imposes extra ties across nearby-but-unequal merits and, when
    the bin edges happen to separate the instrument tastes, can also leave
    room the continuum does not have, so it is a coarse diagnostic rather
    than the equity constraint itself.  ``coupling="none"`` gives every node
    its own menu entry, dropping equity while keeping all incentive
    constraints -- the mutation that shows the probe detects screening when
    it is feasible.

    The grid must stay small (the scan is exhaustive); pairs are tried in
    descending taste-gap order with an early exit at the spread ceiling 1.
    """
    if instrument not in ("payments", "ordeals"):
        raise ValueError(f"instrument must be 'payments' or 'ordeals', got {instrument!r}")
    if grid.n_nodes > _PROBE_GRID_CAP:
        raise ValueError(f"probe grids are capped at {_PROBE_GRID_CAP} nodes (use --set grid.n_alpha=6)")
    spec = scenario.linear
    if spec is None:
        raise ValueError("the probe is formulated for linear utility specifications")

    nodes = grid.nodes()
    alpha, beta = nodes[:, 0], nodes[:, 1]
    eta = scenario.merit(alpha, beta)
    cost = spec.w(alpha) if instrument == "payments" else spec.z(alpha)

    if coupling == "merit":
        classes = _merit_classes(eta, n_classes)
    elif coupling == "exact":
        classes = _exact_classes(eta)
    elif coupling == "none":
        classes = np.arange(len(nodes))
    else:
        raise ValueError(f"coupling must be 'merit', 'exact', or 'none', got {coupling!r}")
    m_count = int(classes.max()) + 1

    return _solve_spread(beta, cost, classes, instrument, layout="grid")


def probe_contour_classes(
    scenario: Scenario,
    instrument: str,
    n_levels: int = 6,
    n_per_level: int = 6,
    center: float | None = None,
    spacing: float | None = None,
) -> ProbeResult:
    """The single-instrument probe with iso-merit contour classes.

    Rectangular grids cannot witness the pure-ordeal impossibility: near the
    rectangle's corners their equal-merit classes degenerate to one or two
    nodes, and a cut separating such a class is genuinely incentive
    compatible on the finite node set.  This variant instead samples each
    class along one iso-merit contour -- exactly equal merit with the full
    sweep of instrument tastes -- and spaces consecutive contours closely
    enough that their taste ranges interlock.  That is the discrete skeleton
    of the continuum argument: off the knife edge the interlocked chain
    forces one allocation for all classes, while on it each contour carries
    a single taste and posted-ordeal screening separates them.
    """
    if instrument not in ("payments", "ordeals"):
        raise ValueError(f"instrument must be 'payments' or 'ordeals', got {instrument!r}")
    if n_levels * n_per_level > _PROBE_GRID_CAP:
        raise ValueError(f"probe node sets are capped at {_PROBE_GRID_CAP}")
    spec = scenario.linear
    if spec is None:
        raise ValueError("the probe is formulated for linear utility specifications")
    lo, hi = scenario.merit_range()
    span = hi - lo
    center = 0.5 * (lo + hi) if center is None else center
    spacing = 0.02 * span if spacing is None else spacing
    levels = center + spacing * (np.arange(n_levels) - (n_levels - 1) / 2.0)
    if not (lo < levels[0] and levels[-1] < hi):
        raise ValueError("contour levels leave the merit range; shrink spacing or move the center")

    beta_parts, cost_parts, class_parts = [], [], []
    for m, level in enumerate(levels):
        pts = trace_iso_merit(scenario.merit, scenario.space, float(level)).subsample(n_per_level)
        beta_parts.append(pts[:, 1])
        cost = spec.w(pts[:, 0]) if instrument == "payments" else spec.z(pts[:, 0])
        cost_parts.append(cost)
        class_parts.append(np.full(len(pts), m))
    beta = np.concatenate(beta_parts)
    cost = np.concatenate(cost_parts)
    classes = np.concatenate(class_parts)
    return _solve_spread(beta, cost, classes, instrument, layout="contours")


def _solve_spread(beta, cost, classes, instrument, layout) -> ProbeResult:
    m_count = int(classes.max()) + 1
    A, b, bounds = _build_lp(beta, cost, classes, m_count, instrument)

    # taste per class guides the pair order so feasible screening exits early
    taste = beta / cost
    class_taste = np.array([taste[classes == m].mean() for m in range(m_count)])
    pairs = [(a_, b_) for a_ in range(m_count) for b_ in range(m_count) if a_ != b_]
    pairs.sort(key=lambda ab: class_taste[ab[1]] - class_taste[ab[0]])

    best = 0.0
    best_cert = {"pair": None, "x": [0.0] * m_count, "t": [0.0] * m_count}
    slack = np.inf
    n_lps = 0
    for a_, b_ in pairs:
        c = np.zeros(2 * m_count)
        c[a_] = -1.0
        c[b_] = 1.0
        res = linprog(c, A_ub=A, b_ub=b, bounds=bounds, method="highs")
        n_lps += 1
        if res.status != 0:
            raise SolverFailure(f"LP solver status {res.status}: {res.message}")
        val = -float(res.fun)
        if val > best or best_cert["pair"] is None:
            best = val
            v = res.x
            best_cert = {
                "pair": [int(a_), int(b_)],
                "x": [float(t) for t in v[:m_count]],
                "t": [float(t) for t in v[m_count:]],
            }
            slack = float(np.min(b - A @ v)) if len(b) else np.inf
        if best >= 1.0 - 1e-12:
            break

    if best_cert["pair"] is not None and slack < -1e-9:
        raise SolverFailure(f"LP certificate violates a constraint by {slack}")
    return ProbeResult(
        max_equitable_spread=best,
        instrument=instrument,
        n_classes=m_count,
        certificate=best_cert,
        feasibility_slack=slack,
        n_lps=n_lps,
        layout=layout,
    )


def knife_edge_diagnostic(
    scenario: Scenario,
    eta_star: float,
    x: float | None = None,
    q: float | None = None,
    n_samples: int = 64,
) -> float:
    """Relative dispersion of the good/ordeal substitution rate along an
    iso-merit contour: (max r - min r) / max r.

    For linear specifications the rate is beta/z(alpha), independent of the
    levels; nonlinear specifications evaluate the marginal rate
    v_x(beta, x) / z_q(alpha, q) at the supplied levels.  Zero dispersion is
    the knife edge at which pure-ordeal screening can pool exactly the
    iso-merit set.
    """
    lo, hi = scenario.merit_range()
    if not lo < eta_star < hi:
        raise ValueError(f"merit level {eta_star} outside the open range ({lo}, {hi})")
    trace = trace_iso_merit(scenario.merit, scenario.space, eta_star)
    pts = trace.subsample(n_samples)
    a, b = pts[:, 0], pts[:, 1]
    if scenario.nonlinear is not None and x is not None and q is not None:
        nl = scenario.nonlinear
        r = nl.v.d_level(b, float(x)) / nl.z.d_level(a, float(q))
    elif scenario.linear is not None:
        r = b / scenario.linear.z(a)
    else:
        raise ValueError("nonlinear diagnostics need explicit (x, q) levels")
    r_max = float(np.max(r))
    return float((r_max - np.min(r)) / r_max)


def two_point_menu_diagnostic(
    scenario: Scenario,
    eta_star: float,
    x_pair: tuple[float, float],
    q_pair: tuple[float, float],
    n_samples: int = 64,
) -> float:
    """Worst gap in the two-offer indifference condition along a contour.

    A discontinuous pure-ordeal schedule can pool an iso-merit set only if
    every type on it is exactly indifferent between the two offers
    (x_a, q_a) and (x_b, q_b).  This returns max |[v(beta, x_a) - z(alpha,
    q_a)] - [v(beta, x_b) - z(alpha, q_b)]| over contour samples: zero means
    the declared menu realizes the jump case, anything else quantifies how
    far the menu is from it.  The search over all menus is unbounded and is
    deliberately not attempted; callers declare the menu.
    """
    lo, hi = scenario.merit_range()
    if not lo < eta_star < hi:
        raise ValueError(f"merit level {eta_star} outside the open range ({lo}, {hi})")
    nl = scenario.nonlinear_spec()
    trace = trace_iso_merit(scenario.merit, scenario.space, eta_star)
    pts = trace.subsample(n_samples)
    a, b = pts[:, 0], pts[:, 1]
    x_a, x_b = map(float, x_pair)
    q_a, q_b = map(float, q_pair)
    gap = (nl.v(b, x_a) - nl.z(a, q_a)) - (nl.v(b, x_b) - nl.z(a, q_b))
    return float(np.max(np.abs(gap)))
