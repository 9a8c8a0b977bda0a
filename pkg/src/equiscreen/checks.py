"""Brute-force and structural verification of mechanisms.

Everything here is an exhaustive or randomized *measurement*: incentive
gains over all ordered grid-node pairs, participation at every node,
allocation spread along iso-merit sets, allocation monotonicity along the
merit sort, and midpoint/subgradient trials for the convexity certificate
of constructed threshold mechanisms.

Grid scans certify only grid deviations; mechanisms built by this package
additionally carry the grid-free subgradient certificate, which
``check_convexity`` probes at random taste points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contours import trace_iso_merit
from .exceptions import NotEquitable
from .mechanisms import Bundle, MechanismBase
from .scenario import Grid, LinearUtilitySpec, NonlinearUtilitySpec

_GOLDEN = 0.6180339887498949


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def _witness_pair(grid, i, j):
    ai, bi = grid.node(i)
    aj, bj = grid.node(j)
    return {
        "source_index": int(i),
        "source_type": [ai, bi],
        "target_index": int(j),
        "target_type": [aj, bj],
    }


@dataclass(frozen=True)
class ICReport:
    max_gain: float
    witness: dict | None
    n_pairs: int
    tolerance: float
    # grid scans certify grid deviations only; mechanisms built by this
    # package additionally carry the grid-free subgradient certificate
    scope: str = "grid-certified only"

    @property
    def passed(self) -> bool:
        return self.max_gain <= self.tolerance

    def describe(self) -> dict:
        return {
            "check": "ic",
            "pass": self.passed,
            "value": self.max_gain,
            "tolerance": self.tolerance,
            "n_pairs": self.n_pairs,
            "scope": self.scope,
            "witness": self.witness,
        }


@dataclass(frozen=True)
class IRReport:
    min_utility: float
    witness: dict | None
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.min_utility >= -self.tolerance

    def describe(self) -> dict:
        return {
            "check": "ir",
            "pass": self.passed,
            "value": self.min_utility,
            "tolerance": self.tolerance,
            "witness": self.witness,
        }


@dataclass(frozen=True)
class EquityReport:
    max_spread: float
    bins: int
    exact: bool
    witness: dict | None
    tolerance: float = 0.0

    @property
    def passed(self) -> bool:
        return self.max_spread <= self.tolerance

    def describe(self) -> dict:
        return {
            "check": "equity",
            "pass": self.passed,
            "value": self.max_spread,
            "tolerance": self.tolerance,
            "exact": self.exact,
            "bins": self.bins,
            "witness": self.witness,
        }


@dataclass(frozen=True)
class MonotonicityReport:
    max_violation: float
    witness: dict | None
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance

    def describe(self) -> dict:
        return {
            "check": "merit_monotone",
            "pass": self.passed,
            "value": self.max_violation,
            "tolerance": self.tolerance,
            "witness": self.witness,
        }


@dataclass(frozen=True)
class ConvexityReport:
    midpoint_defect: float
    subgradient_defect: float
    n_trials: int
    seed: int
    tolerance: float
    midpoint_witness: dict | None
    subgradient_witness: dict | None

    @property
    def passed(self) -> bool:
        return (
            self.midpoint_defect <= self.tolerance
            and self.subgradient_defect <= self.tolerance
        )

    def describe(self) -> dict:
        return {
            "check": "convexity",
            "pass": self.passed,
            "value": max(self.midpoint_defect, self.subgradient_defect),
            "tolerance": self.tolerance,
            "midpoint_defect": self.midpoint_defect,
            "subgradient_defect": self.subgradient_defect,
            "n_trials": self.n_trials,
            "seed": self.seed,
            "witness": {
                "midpoint": self.midpoint_witness,
                "subgradient": self.subgradient_witness,
            },
        }


# ---------------------------------------------------------------------------
# utility matrices (rank-one structure keeps the n^2 scan cheap)
# ---------------------------------------------------------------------------


def _utility_factors(spec, alpha, beta, bundle: Bundle):
    """Terms (type_factor, bundle_factor, sign) with U = sum s * outer(a, b)."""
    if isinstance(spec, LinearUtilitySpec):
        return [
            (beta, bundle.x, 1.0),
            (spec.w(alpha), bundle.p, -1.0),
            (spec.z(alpha), bundle.q, -1.0),
        ]
    if isinstance(spec, NonlinearUtilitySpec):
        return [
            (spec.v.scale(beta), spec.v.curve(bundle.x), 1.0),
            (spec.w.scale(alpha), spec.w.curve(bundle.p), -1.0),
            (spec.z.scale(alpha), spec.z.curve(bundle.q), -1.0),
        ]
    raise TypeError(f"unknown utility spec {type(spec)!r}")


def check_ic(mech: MechanismBase, grid: Grid, tol: float | None = None,
             restrict: str | None = None, chunk: int = 1024) -> ICReport:
    """Largest utility gain from taking another grid node's bundle.

    Scans every ordered node pair (diagonal excluded); ``restrict =
    "same_alpha"`` keeps only deviations within a wealth slice, the relevant
    set when wealth is observable.  Ties break to the lowest row-major pair
    index, so the witness is deterministic.
    """
    sc = mech.scenario_
    tol = sc.tolerances.ic if tol is None else tol
    nodes = grid.nodes()
    alpha, beta = nodes[:, 0], nodes[:, 1]
    bundle = mech.bundle(nodes)
    factors = _utility_factors(sc.utility, alpha, beta, bundle)
    u_own = sum(s * tv * bv for tv, bv, s in factors)

    n = len(nodes)
    best_gain = -np.inf
    best_pair = (0, 0)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        gains = sum(
            s * np.outer(tv[start:stop], bv) for tv, bv, s in factors
        ) - u_own[start:stop, None]
        rows = np.arange(start, stop)
        gains[rows - start, rows] = -np.inf
        if restrict == "same_alpha":
            mask = alpha[start:stop, None] != alpha[None, :]
            gains[mask] = -np.inf
        k = int(np.argmax(gains))
        gain = float(gains.flat[k])
        if gain > best_gain:
            best_gain = gain
            best_pair = (start + k // n, k % n)

    n_pairs = n * (n - 1) if restrict is None else int(
        sum((alpha == a).sum() - 1 for a in alpha)
    )
    witness = _witness_pair(grid, *best_pair) if np.isfinite(best_gain) else None
    scope = (
        "grid scan; mechanism carries a grid-free subgradient certificate"
        if hasattr(mech, "taste_gradient") or hasattr(mech, "mechanisms_")
        else "grid-certified only"
    )
    return ICReport(max_gain=float(best_gain), witness=witness, n_pairs=n_pairs,
                    tolerance=tol, scope=scope)


def check_ir(mech: MechanismBase, grid: Grid, tol: float | None = None) -> IRReport:
    """Smallest utility at a node's own bundle (participation)."""
    sc = mech.scenario_
    tol = sc.tolerances.ir if tol is None else tol
    nodes = grid.nodes()
    u_own = mech.utility_at_own(nodes)
    k = int(np.argmin(u_own))
    a, b = grid.node(k)
    return IRReport(
        min_utility=float(u_own[k]),
        witness={"index": k, "type": [a, b], "utility": float(u_own[k])},
        tolerance=tol,
    )


def _equity_levels(mech, lo, hi, n_levels):
    """Low-discrepancy merit levels, nudged off known allocation jumps."""
    span = hi - lo
    levels = lo + span * ((0.5 + _GOLDEN * np.arange(1, n_levels + 1)) % 1.0)
    jumps = np.asarray(mech.jump_levels(), dtype=float)
    if jumps.size:
        for _ in range(4):
            near = np.abs(levels[:, None] - jumps[None, :]).min(axis=1) < 1e-8 * max(1.0, span)
            if not near.any():
                break
            levels[near] += 1e-6 * span
    return np.sort(levels)


def check_equity(mech: MechanismBase, grid: Grid, n_bins: int | None = None,
                 points_per_contour: int = 48) -> EquityReport:
    """Largest allocation spread among equally deserving types.

    Merit-measurable mechanisms get the exact mode: iso-merit contours are
    traced through the closed rectangle and the assigned allocation is
    compared along each (levels are low-discrepancy and nudged away from the
    mechanism's own jump merits, where root-tolerance noise in the contour
    would masquerade as inequity).  Other mechanisms are binned by node
    merit and the within-bin spread reported.
    """
    sc = mech.scenario_
    n_bins = sc.tolerances.equity_bins if n_bins is None else n_bins
    merit = sc.merit
    lo, hi = sc.merit_range()

    if mech.merit_measurable:
        n_levels = max(8, n_bins)
        worst = 0.0
        witness = None
        for level in _equity_levels(mech, lo, hi, n_levels):
            trace = trace_iso_merit(merit, sc.space, float(level))
            pts = trace.subsample(points_per_contour)
            x = mech.predict(pts)
            spread = float(x.max() - x.min())
            if spread > worst:
                worst = spread
                witness = {
                    "level": float(level),
                    "type_low": [float(v) for v in pts[int(np.argmin(x))]],
                    "type_high": [float(v) for v in pts[int(np.argmax(x))]],
                }
        return EquityReport(max_spread=worst, bins=n_levels, exact=True, witness=witness)

    nodes = grid.nodes()
    eta = merit(nodes[:, 0], nodes[:, 1])
    x = mech.predict(nodes)
    edges = np.linspace(lo, hi, n_bins + 1)
    which = np.clip(np.searchsorted(edges, eta, side="right") - 1, 0, n_bins - 1)
    worst = 0.0
    witness = None
    for b in range(n_bins):
        sel = which == b
        if sel.sum() < 2:
            continue
        xs = x[sel]
        spread = float(xs.max() - xs.min())
        if spread > worst:
            worst = spread
            idx = np.flatnonzero(sel)
            witness = {
                "bin": int(b),
                "eta_range": [float(edges[b]), float(edges[b + 1])],
                "index_low": int(idx[int(np.argmin(xs))]),
                "index_high": int(idx[int(np.argmax(xs))]),
            }
    return EquityReport(max_spread=worst, bins=n_bins, exact=False, witness=witness)


def check_merit_monotone(mech: MechanismBase, grid: Grid, tol: float | None = None,
                         equity_tol: float = 1e-9) -> MonotonicityReport:
    """Allocation must be weakly increasing along the merit sort.

    Requires an (approximately) equitable mechanism; otherwise the merit
    sort is not even well defined for the allocation and NotEquitable is
    raised.
    """
    sc = mech.scenario_
    tol = sc.tolerances.monotone if tol is None else tol
    eq = check_equity(mech, grid)
    if eq.max_spread > equity_tol:
        raise NotEquitable(
            f"merit monotonicity presumes equity; spread {eq.max_spread} > {equity_tol}"
        )
    nodes = grid.nodes()
    eta = sc.merit(nodes[:, 0], nodes[:, 1])
    x = mech.predict(nodes)
    order = np.argsort(eta, kind="stable")
    xs = x[order]
    running = np.maximum.accumulate(xs)
    viol = running - xs
    k = int(np.argmax(viol))
    witness = None
    if viol[k] > 0:
        j_prev = int(np.argmax(xs[: k + 1]))
        witness = _witness_pair(grid, int(order[j_prev]), int(order[k]))
    return MonotonicityReport(max_violation=float(viol[k]), witness=witness, tolerance=tol)


def check_convexity(mech, n_trials: int = 100_000, seed: int = 0,
                    tol: float = 1e-9) -> ConvexityReport:
    """Midpoint and subgradient trials for a threshold mechanism's value.

    Draws random taste pairs in the mechanism's bounding rectangle and
    checks (a) midpoint convexity of V and (b) the subgradient inequality
    with the mechanism's own (x, q) field.  Both must hold for the schedule
    to be incentive compatible off the grid.
    """
    rng = np.random.default_rng(seed)
    r = mech.rectangle_
    def draw(n):
        k = rng.uniform(r.kappa_lo, r.kappa_hi, size=n)
        l = rng.uniform(r.lam_lo, r.lam_hi, size=n)
        return k, l

    ka, la = draw(n_trials)
    kb, lb = draw(n_trials)

    v_a = mech.taste_value(ka, la)
    v_b = mech.taste_value(kb, lb)
    v_mid = mech.taste_value(0.5 * (ka + kb), 0.5 * (la + lb))
    mid_defect = v_mid - 0.5 * (v_a + v_b)
    i = int(np.argmax(mid_defect))
    mid_witness = {
        "a": [float(ka[i]), float(la[i])],
        "b": [float(kb[i]), float(lb[i])],
        "defect": float(mid_defect[i]),
    }

    x_a, q_a = mech.taste_gradient(ka, la)
    sub_defect = v_a + x_a * (kb - ka) + q_a * (lb - la) - v_b
    j = int(np.argmax(sub_defect))
    sub_witness = {
        "at": [float(ka[j]), float(la[j])],
        "to": [float(kb[j]), float(lb[j])],
        "defect": float(sub_defect[j]),
    }

    return ConvexityReport(
        midpoint_defect=float(mid_defect[i]),
        subgradient_defect=float(sub_defect[j]),
        n_trials=n_trials,
        seed=seed,
        tolerance=tol,
        midpoint_witness=mid_witness,
        subgradient_witness=sub_witness,
    )
