"""Equity-violation scoring and the payments-vs-ordeals comparison.

The violation measure is angular: at each type, look for directions along
which the allocation is locally constant, and score the angle (directions
identified with their opposites, so distances are taken modulo pi) between
the best such direction and the iso-merit tangent.  The score of a whole
allocation is its worst local violation; a type with no direction of
constancy scores infinity.

For screening with payments alone, every direction of constancy slopes
upward while iso-merit tangents slope downward, which yields a closed-form
lower bound on the global violation.  For screening with ordeals alone the
constancy directions slope downward; when iso-merit curves are flatter than
the uniform slope bound on those directions, a one-offer ordeal mechanism
scores strictly below the payment bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contours import trace_iso_merit
from .exceptions import DegenerateJump
from .scenario import Grid, NonlinearUtilitySpec, Scenario, TypeSpace
from .single_instrument import OneStepOrdealMechanism

_DEG = math.pi / 180.0


# ---------------------------------------------------------------------------
# angles
# ---------------------------------------------------------------------------


def angle(m):
    """Angle in [0, pi] between the horizontal axis and a line of slope m.

    arctan(m) for m >= 0, arctan(m) + pi for m < 0; vertical lines
    (m = +-inf) map to pi/2.
    """
    m = np.asarray(m, dtype=float)
    out = np.where(m >= 0, np.arctan(m), np.arctan(m) + np.pi)
    out = np.where(np.isinf(m), np.pi / 2.0, out)
    return float(out) if out.ndim == 0 else out


def angle_distance(a, b):
    """Distance between line angles, modulo pi (a line equals its reverse)."""
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    out = np.minimum(d, np.pi - d)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# substitution-rate slopes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JumpData:
    """One-sided limits of allocation and burden levels at a discontinuity."""

    x: float
    x_plus: float
    q: float
    q_plus: float

    def __post_init__(self):
        if not (self.x_plus > self.x and self.q_plus > self.q):
            raise DegenerateJump("jump data needs x_plus > x and q_plus > q")


def iso_slopes(nl: NonlinearUtilitySpec, type_point, levels, instrument: str = "ordeals"):
    """Slope of the constancy-candidate curve through a type.

    ``levels = (x, q)`` gives the smooth (marginal-rate) slope; a
    :class:`JumpData` gives the discrete-jump slope.  ``instrument``
    selects the burden side: ordeals use z (slopes negative), payments use
    w with the burden levels in the q slots (slopes positive).

    Returns (slope, kind) with kind in {"mrs", "diff"}.
    """
    alpha, beta = map(float, type_point)
    burden = nl.z if instrument == "ordeals" else nl.w
    if isinstance(levels, JumpData):
        dv = nl.v(beta, levels.x_plus) - nl.v(beta, levels.x)
        dz = burden(alpha, levels.q_plus) - burden(alpha, levels.q)
        dza = burden.scale.d1(alpha) * (burden.curve(levels.q_plus) - burden.curve(levels.q))
        dvb = nl.v.scale.d1(beta) * (nl.v.curve(levels.x_plus) - nl.v.curve(levels.x))
        return float((dv / dz) * (dza / dvb)), "diff"
    x, q = map(float, levels)
    s = (nl.v.d_level(beta, x) / burden.d_level(alpha, q)) * (
        burden.d_theta_level(alpha, q) / nl.v.d_theta_level(beta, x)
    )
    return float(s), "mrs"


@dataclass(frozen=True)
class SlopeBound:
    """Uniform upper bound (closest to zero) on ordeal-screening slopes."""

    m: float
    pre_safety: float
    safety: float
    n_samples: int

    def describe(self) -> dict:
        return {
            "m": self.m,
            "pre_safety": self.pre_safety,
            "safety": self.safety,
            "n_samples": self.n_samples,
        }


def slope_bound_M(nl: NonlinearUtilitySpec, space: TypeSpace, q_bar: float | None = None,
                  n_samples: int = 2048, seed: int = 0, safety: float = 0.05) -> SlopeBound:
    """Bound every ordeal-screening constancy slope away from zero.

    Scans both slope kinds over a deterministic closed-rectangle sweep and a
    seeded sample of types and level pairs (x < x_plus in [0,1], q < q_plus
    in [0, q_bar]).  All slopes are negative; the bound shades the largest
    toward zero by the safety factor and every sampled slope stays strictly
    below it.
    """
    q_bar = nl.q_bar if q_bar is None else q_bar
    rng = np.random.default_rng(seed)
    a_grid = np.linspace(space.alpha_lo, space.alpha_hi, 65)
    b_grid = np.linspace(space.beta_lo, space.beta_hi, 65)
    aa, bb = np.meshgrid(a_grid, b_grid, indexing="ij")
    aa, bb = aa.ravel(), bb.ravel()

    def mrs(alpha, beta, x, q):
        return (nl.v.d_level(beta, x) / nl.z.d_level(alpha, q)) * (
            nl.z.d_theta_level(alpha, q) / nl.v.d_theta_level(beta, x)
        )

    worst = float(np.max(mrs(aa, bb, np.full_like(aa, 0.5), np.full_like(aa, 0.5 * q_bar))))

    alpha = rng.uniform(space.alpha_lo, space.alpha_hi, n_samples)
    beta = rng.uniform(space.beta_lo, space.beta_hi, n_samples)
    x_lo = rng.uniform(0.0, 1.0, n_samples)
    x_hi = x_lo + rng.uniform(0.0, 1.0, n_samples) * (1.0 - x_lo)
    q_lo = rng.uniform(0.0, q_bar, n_samples)
    q_hi = q_lo + rng.uniform(0.0, 1.0, n_samples) * (q_bar - q_lo)
    ok = (x_hi > x_lo) & (q_hi > q_lo)
    worst = max(worst, float(np.max(mrs(alpha, beta, x_lo, q_lo))))
    dv = nl.v(beta[ok], x_hi[ok]) - nl.v(beta[ok], x_lo[ok])
    dz = nl.z(alpha[ok], q_hi[ok]) - nl.z(alpha[ok], q_lo[ok])
    dza = nl.z.scale.d1(alpha[ok]) * (nl.z.curve(q_hi[ok]) - nl.z.curve(q_lo[ok]))
    dvb = nl.v.scale.d1(beta[ok]) * (nl.v.curve(x_hi[ok]) - nl.v.curve(x_lo[ok]))
    worst = max(worst, float(np.max((dv / dz) * (dza / dvb))))

    return SlopeBound(m=(1.0 - safety) * worst, pre_safety=worst, safety=safety,
                      n_samples=n_samples)


def payment_lower_bound(merit, space: TypeSpace, grid: Grid) -> float:
    """Floor under the global violation of any non-constant payment screen.

    Payment screens pool types along upward-sloping curves only, so at the
    type where screening actually separates, the violation is at least the
    gap between a vertical line and the iso-merit tangent; minimizing over
    the grid makes the floor location-free.
    """
    nodes = grid.nodes()
    slopes = merit.iso_slope(nodes[:, 0], nodes[:, 1])
    return float(np.min(np.abs(np.pi / 2.0 - angle(slopes))))


# ---------------------------------------------------------------------------
# allocation fields and local violations
# ---------------------------------------------------------------------------


class AllocationField:
    """Grid-sampled allocation with central-difference gradients."""

    def __init__(self, grid: Grid, x):
        self.grid = grid
        self.x = np.asarray(x, dtype=float).reshape(grid.n_alpha, grid.n_beta)
        self.grad_alpha = np.full_like(self.x, np.nan)
        self.grad_beta = np.full_like(self.x, np.nan)
        self.grad_alpha[1:-1, :] = (self.x[2:, :] - self.x[:-2, :]) / (2.0 * grid.step_alpha)
        self.grad_beta[:, 1:-1] = (self.x[:, 2:] - self.x[:, :-2]) / (2.0 * grid.step_beta)

    @staticmethod
    def from_mechanism(mech, grid: Grid) -> "AllocationField":
        return AllocationField(grid, mech.predict(grid.nodes()))

    def x_range(self) -> float:
        return float(self.x.max() - self.x.min())


_DIRECTIONS = np.arange(180) * _DEG  # 1-degree sweep of line angles in [0, pi)


def _local_violations(field: AllocationField, merit, space: TypeSpace, tau: float):
    """(n_alpha-2, n_beta-2) local violations at interior nodes (inf = no
    direction of constancy)."""
    g = field.grid
    ai = np.arange(1, g.n_alpha - 1)
    bi = np.arange(1, g.n_beta - 1)
    aa, bb = np.meshgrid(g.alpha[ai], g.beta[bi], indexing="ij")
    gx = field.grad_alpha[1:-1, 1:-1].ravel()
    gy = field.grad_beta[1:-1, 1:-1].ravel()
    iso = angle(merit.iso_slope(aa.ravel(), bb.ravel()))

    scale = field.x_range() / space.diameter
    thresh = tau * scale
    # candidate directions: the 1-degree sweep plus each node's exact
    # iso-merit direction
    cand = np.concatenate([np.broadcast_to(_DIRECTIONS, (gx.size, 180)), iso[:, None]], axis=1)
    deriv = np.abs(gx[:, None] * np.cos(cand) + gy[:, None] * np.sin(cand))
    flat = deriv <= thresh
    dist = angle_distance(cand, iso[:, None])
    dist = np.where(flat, dist, np.inf)
    local = dist.min(axis=1)
    local = np.where(flat.any(axis=1), local, np.inf)
    return local.reshape(len(ai), len(bi))


def local_violation(field: AllocationField, merit, space: TypeSpace, point, tau: float = 0.02) -> float:
    """Local violation at the interior grid node nearest to ``point``."""
    g = field.grid
    i = int(np.clip(np.argmin(np.abs(g.alpha - point[0])), 1, g.n_alpha - 2))
    j = int(np.clip(np.argmin(np.abs(g.beta - point[1])), 1, g.n_beta - 2))
    return float(_local_violations(field, merit, space, tau)[i - 1, j - 1])


@dataclass(frozen=True)
class ViolationReport:
    global_value: float
    witness: dict | None
    method: str
    tau: float
    locals_interior: np.ndarray | None = None
    payment_bound: float | None = None
    slope_bound: SlopeBound | None = None

    @property
    def passed(self) -> bool:  # a report, not a test: present for uniformity
        return True

    def describe(self) -> dict:
        d = {
            "check": "equity_violation",
            "value": None if math.isinf(self.global_value) else self.global_value,
            "infinite": bool(math.isinf(self.global_value)),
            "method": self.method,
            "tau": self.tau,
            "witness": self.witness,
        }
        if self.payment_bound is not None:
            d["payment_lower_bound"] = self.payment_bound
        if self.slope_bound is not None:
            d["slope_bound"] = self.slope_bound.describe()
        return d


def global_violation(mech, grid: Grid, tau: float = 0.02) -> ViolationReport:
    """Worst local equity violation of a mechanism's allocation.

    Closed-form mechanisms contribute their discontinuity curves
    analytically (tangent of the traced curve against the iso-merit
    tangent); finite differences are meaningless across a jump, so interior
    nodes whose difference stencil straddles one are left to the curve
    terms.  Smooth or grid-sampled allocations are scored from the gradient
    field alone.
    """
    sc = mech.scenario_
    merit, space = sc.merit, sc.space
    worst = 0.0
    witness = None

    curves = []
    lo, hi = sc.merit_range()
    for level in np.asarray(mech.jump_levels(), dtype=float):
        if lo < level < hi:
            tr = trace_iso_merit(merit, space, float(level))
            curves.append((tr.points, tr.slopes, f"iso-merit jump at {level}"))
    if hasattr(mech, "jump_curve"):
        pts, slopes = mech.jump_curve()
        if len(pts):
            curves.append((pts, slopes, "offer-boundary jump"))

    for pts, slopes, label in curves:
        iso = angle(merit.iso_slope(pts[:, 0], pts[:, 1]))
        viol = angle_distance(angle(slopes), iso)
        k = int(np.argmax(viol))
        if viol[k] > worst:
            worst = float(viol[k])
            witness = {"kind": label, "type": [float(pts[k, 0]), float(pts[k, 1])],
                       "value": float(viol[k])}

    field = AllocationField.from_mechanism(mech, grid)
    locals_interior = _local_violations(field, merit, space, tau)
    if curves:
        # mask stencils that straddle a discontinuity
        x = field.x
        const = (
            (x[1:-1, 1:-1] == x[2:, 1:-1])
            & (x[1:-1, 1:-1] == x[:-2, 1:-1])
            & (x[1:-1, 1:-1] == x[1:-1, 2:])
            & (x[1:-1, 1:-1] == x[1:-1, :-2])
        )
        locals_interior = np.where(const, locals_interior, 0.0)
        method = "closed_form"
    else:
        method = "gradient_field"

    finite = locals_interior[np.isfinite(locals_interior)]
    if locals_interior.size and not np.isfinite(locals_interior).all():
        worst = math.inf
        bad = np.argwhere(~np.isfinite(locals_interior))[0]
        g = field.grid
        witness = {"kind": "no direction of constancy",
                   "type": [float(g.alpha[bad[0] + 1]), float(g.beta[bad[1] + 1])]}
    elif finite.size and float(finite.max()) > worst:
        k = int(np.argmax(locals_interior))
        i, j = divmod(k, locals_interior.shape[1])
        g = field.grid
        worst = float(finite.max())
        witness = {"kind": "interior node", "type": [float(g.alpha[i + 1]), float(g.beta[j + 1])],
                   "value": worst}

    return ViolationReport(global_value=worst, witness=witness, method=method, tau=tau,
                           locals_interior=locals_interior)


# ---------------------------------------------------------------------------
# the instrument comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonReport:
    applicable: bool
    reason: str
    slope_bound: SlopeBound
    payment_bound: float | None = None
    ordeal_violation: float | None = None
    verdict: bool | None = None
    mechanism: dict | None = None

    def describe(self) -> dict:
        return {
            "check": "instrument_comparison",
            "applicable": self.applicable,
            "reason": self.reason,
            "slope_bound": self.slope_bound.describe(),
            "payment_lower_bound": self.payment_bound,
            "ordeal_violation": self.ordeal_violation,
            "verdict": self.verdict,
            "mechanism": self.mechanism,
        }


def compare_instruments(scenario: Scenario, anchor, x_take: float,
                        grid: Grid | None = None, tau: float = 0.02,
                        seed: int = 0) -> ComparisonReport:
    """Score a one-offer ordeal mechanism against the payment floor.

    Applicable only when every iso-merit tangent on the grid is flatter
    than the uniform ordeal-slope bound; then the offer boundary's angular
    violation stays below the floor that every non-constant payment screen
    must exceed, and the verdict reports that strict comparison.
    """
    grid = scenario.grid() if grid is None else grid
    nl = scenario.nonlinear_spec()
    sb = slope_bound_M(nl, scenario.space, seed=seed)
    nodes = grid.nodes()
    iso = scenario.merit.iso_slope(nodes[:, 0], nodes[:, 1])
    if not np.all(iso > sb.m):
        k = int(np.argmin(iso - sb.m))
        return ComparisonReport(
            applicable=False,
            reason=(
                f"iso-merit slope {float(iso[k]):.6g} at type "
                f"({nodes[k,0]:.6g}, {nodes[k,1]:.6g}) is not flatter than the "
                f"ordeal slope bound {sb.m:.6g}"
            ),
            slope_bound=sb,
        )

    mech = OneStepOrdealMechanism(anchor=anchor, x_take=x_take).fit(scenario)
    report = global_violation(mech, grid, tau=tau)
    bound = payment_lower_bound(scenario.merit, scenario.space, grid)
    l_q = report.global_value
    return ComparisonReport(
        applicable=True,
        reason="iso-merit tangents are flatter than every ordeal-screening slope",
        slope_bound=sb,
        payment_bound=bound,
        ordeal_violation=l_q,
        verdict=bool(l_q < bound),
        mechanism=mech.describe(),
    )
