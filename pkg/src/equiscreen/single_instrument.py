"""Mechanisms that screen with a single instrument.

Three constructions live here:

* :class:`ConditionalMechanism` -- wealth observable.  The allocation is
  implemented separately within every wealth slice as a one-dimensional
  menu in the good-need coordinate, with transfers from the envelope
  formula (zero rent at the bottom of the slice), then denominated in the
  chosen instrument.
* :class:`KnifeEdgeOrdealMechanism` -- a posted ordeal, feasible only when
  the merit function is an increasing transform of the ordeal taste
  beta/z(alpha); then "serve whoever accepts the posted ordeal" is
  equitable and exactly incentive compatible.
* :class:`OneStepOrdealMechanism` -- one take-it-or-leave-it (x, q) offer
  whose acceptance boundary is the indifference curve through an anchor
  type; the workhorse of the instrument comparison.

:class:`PaymentScreenMechanism` (payments only, no ordeals) rounds out the
set for diagnostics: any increasing schedule of the good-vs-money taste
kappa with envelope payments is incentive compatible, and necessarily
inequitable once non-constant.
"""

from __future__ import annotations

import numpy as np

from .allocations import IncreasingAllocation
from .exceptions import NotKnifeEdge, OrdealCapExceeded
from .mechanisms import Bundle, MechanismBase
from .probes import knife_edge_diagnostic
from .reparam import bounding_rectangle
from .scenario import Scenario
from .validation import check_types, require_fitted


def envelope_integral(table: IncreasingAllocation, s_lo: float, s) -> np.ndarray:
    """integral_{s_lo}^{s} g for a monotone table, exactly.

    Midpoint sums on the constant cells of step tables, trapezoids on the
    linear pieces of continuous tables.
    """
    s = np.asarray(s, dtype=float)
    hi = float(s.max())
    cuts = table.eta_knots[(table.eta_knots > s_lo) & (table.eta_knots < hi)]
    edges = np.unique(np.concatenate([[s_lo, hi], cuts, s.ravel()]))
    mids = 0.5 * (edges[1:] + edges[:-1])
    widths = np.diff(edges)
    if table.kind == "step":
        seg = table(mids) * widths
    else:
        seg = 0.5 * (table(edges[1:]) + table(edges[:-1])) * widths
    cumulative = np.concatenate([[0.0], np.cumsum(seg)])
    return cumulative[np.searchsorted(edges, s)]


def envelope_transfer(table: IncreasingAllocation, s_lo: float, s, levels=None) -> np.ndarray:
    """Transfers t(s) = s*g(s) - integral_{s_lo}^{s} g for a monotone table.

    The induced menu is incentive compatible along s with zero rent at s_lo.
    ``levels`` overrides the g(s) factor: callers that computed the assigned
    level through another (mathematically equal) expression pass it here so
    the charged transfer and the assigned level can never disagree at a
    floating-point tie.
    """
    s = np.asarray(s, dtype=float)
    g = table(s) if levels is None else np.asarray(levels, dtype=float)
    return s * g - envelope_integral(table, s_lo, s)


class ConditionalMechanism(MechanismBase):
    """Observable wealth: per-slice envelope menus in the chosen instrument.

    Parameters
    ----------
    allocation : IncreasingAllocation
        Target share as a function of merit.
    instrument : {"payments", "ordeals"}
        Which instrument denominates the slice transfers.

    Incentive constraints hold within each wealth slice by the envelope
    construction (deviations across slices are moot when wealth is
    observed); equity is exact because the allocation is evaluated through
    merit alone.
    """

    merit_measurable = True

    def __init__(self, allocation: IncreasingAllocation, instrument: str = "payments"):
        self.allocation = allocation
        self.instrument = instrument

    def fit(self, scenario: Scenario):
        if self.instrument not in ("payments", "ordeals"):
            raise ValueError(f"instrument must be 'payments' or 'ordeals', got {self.instrument!r}")
        if scenario.linear is None:
            raise ValueError("conditional menus need a linear utility specification")
        self.scenario_ = scenario
        return self

    def _beta_table(self, alpha: float) -> IncreasingAllocation:
        # merit is affine in the good-need coordinate for the built-in
        # families, so mapping the knots keeps the table kind exact
        merit = self.scenario_.merit
        knots = merit.beta_at(alpha, self.allocation.eta_knots)
        lo = merit.beta_at(alpha, self.allocation.eta_lo)
        hi = merit.beta_at(alpha, self.allocation.eta_hi)
        return IncreasingAllocation(
            self.allocation.kind, np.atleast_1d(knots), self.allocation.values,
            float(lo), float(hi), base=self.allocation.base,
        )

    def transfer_at(self, alpha: float, betas, levels=None) -> np.ndarray:
        """Slice transfer t(beta) (instrument-free burden units)."""
        require_fitted(self)
        table = self._beta_table(alpha)
        return envelope_transfer(table, self.scenario_.space.beta_lo, betas, levels=levels)

    def predict(self, T) -> np.ndarray:
        require_fitted(self)
        T = check_types(T)
        return self.allocation(self.scenario_.merit(T[:, 0], T[:, 1]))

    def bundle(self, T) -> Bundle:
        require_fitted(self)
        T = check_types(T)
        alpha, beta = T[:, 0], T[:, 1]
        x = self.predict(T)
        t = np.empty_like(x)
        for a in np.unique(alpha):
            sel = alpha == a
            # charge the level actually assigned (merit path): the two level
            # expressions agree except at floating-point threshold ties
            t[sel] = self.transfer_at(float(a), beta[sel], levels=x[sel])
        zero = np.zeros_like(x)
        spec = self.scenario_.linear
        if self.instrument == "payments":
            return Bundle(x=x, p=t / spec.w(alpha), q=zero)
        return Bundle(x=x, p=zero, q=t / spec.z(alpha))

    def jump_levels(self) -> np.ndarray:
        return self.allocation.jump_levels()

    def describe(self) -> dict:
        return {
            "mechanism": "conditional",
            "instrument": self.instrument,
            "allocation": self.allocation.describe(),
        }


class KnifeEdgeOrdealMechanism(MechanismBase):
    """Posted ordeal q* with no payments: take (1, q*) or walk away.

    Scaled by z(alpha), utility from a pure-ordeal bundle is k*x - q with
    k = beta/z(alpha), so every type simply compares its k against q* and
    the assignment "serve exactly {k >= q*}" is its own best response.
    That set is a merit set only when merit is an increasing transform of
    k; fit validates this with the knife-edge diagnostic and refuses
    otherwise.
    """

    merit_measurable = True

    def __init__(self, q_star: float, dispersion_tol: float = 1e-8):
        self.q_star = q_star
        self.dispersion_tol = dispersion_tol

    def fit(self, scenario: Scenario):
        if not self.q_star > 0:
            raise ValueError("posted ordeal must be positive")
        if scenario.linear is None:
            raise ValueError("the posted-ordeal construction needs a linear utility specification")
        if scenario.q_bar is not None and self.q_star > scenario.q_bar:
            raise OrdealCapExceeded(
                f"posted ordeal {self.q_star} exceeds the declared cap {scenario.q_bar}"
            )
        lo, hi = scenario.merit_range()
        disp = max(
            knife_edge_diagnostic(scenario, lo + f * (hi - lo))
            for f in (0.25, 0.5, 0.75)
        )
        if disp > self.dispersion_tol:
            raise NotKnifeEdge(
                f"ordeal-taste dispersion {disp:.3e} along iso-merit sets exceeds "
                f"{self.dispersion_tol}; merit is not a transform of beta/z(alpha)"
            )
        self.scenario_ = scenario
        self.dispersion_ = disp
        spec = scenario.linear
        sp = scenario.space
        corners = sp.corners()
        k = corners[:, 1] / spec.z(corners[:, 0])
        self.k_range_ = (float(k.min()), float(k.max()))
        alpha_mid = 0.5 * (sp.alpha_lo + sp.alpha_hi)
        if self.k_range_[0] <= self.q_star <= self.k_range_[1]:
            self.jump_level_ = float(
                scenario.merit(alpha_mid, self.q_star * spec.z(alpha_mid))
            )
        else:
            self.jump_level_ = None
        return self

    def bundle(self, T) -> Bundle:
        require_fitted(self)
        T = check_types(T)
        spec = self.scenario_.linear
        k = T[:, 1] / spec.z(T[:, 0])
        x = (k >= self.q_star).astype(float)
        return Bundle(x=x, p=np.zeros_like(x), q=self.q_star * x)

    def jump_levels(self) -> np.ndarray:
        require_fitted(self)
        return np.array([] if self.jump_level_ is None else [self.jump_level_])

    def describe(self) -> dict:
        require_fitted(self)
        return {
            "mechanism": "knife_edge_ordeal",
            "q_star": self.q_star,
            "dispersion": self.dispersion_,
            "k_range": list(self.k_range_),
        }


class OneStepOrdealMechanism(MechanismBase):
    """One (x, q) offer, free to refuse, anchored at an indifferent type.

    The ordeal solves v(beta_b, x_take) = z(alpha_b, q) so the anchor is
    exactly indifferent; everyone weakly above the indifference curve takes
    the offer, everyone strictly below refuses.  Incentive compatibility is
    immediate (each type picks its preferred menu item) and participation
    holds with the refusal option worth zero.
    """

    merit_measurable = False

    def __init__(self, anchor: tuple[float, float], x_take: float):
        self.anchor = anchor
        self.x_take = x_take

    def fit(self, scenario: Scenario):
        if not 0 < self.x_take <= 1:
            raise ValueError("the offered share must lie in (0, 1]")
        nl = scenario.nonlinear_spec()
        a_b, b_b = map(float, self.anchor)
        if not scenario.space.contains(a_b, b_b, closed=True):
            raise ValueError("anchor type must lie in the type rectangle")
        value = float(nl.v(b_b, self.x_take))
        q_b = float(nl.z.level_at(a_b, value))
        if q_b > nl.q_bar:
            raise OrdealCapExceeded(
                f"offer needs ordeal {q_b:.6g} above the cap {nl.q_bar}; lower x_take"
            )
        self.scenario_ = scenario
        self.nl_ = nl
        self.q_take_ = q_b
        return self

    def bundle(self, T) -> Bundle:
        require_fitted(self)
        T = check_types(T)
        take = self.nl_.v(T[:, 1], self.x_take) - self.nl_.z(T[:, 0], self.q_take_) >= 0
        x = take.astype(float)
        return Bundle(x=self.x_take * x, p=np.zeros_like(x), q=self.q_take_ * x)

    def boundary_beta(self, alpha):
        """The good-need level on the acceptance boundary at given wealths."""
        require_fitted(self)
        rhs = self.nl_.z(alpha, self.q_take_) / float(self.nl_.v.curve(self.x_take))
        return self.nl_.v.scale.inverse(rhs)

    def jump_slope(self, alpha, beta):
        """Tangent slope of the acceptance boundary (the discrete-jump
        substitution rate between the offer and refusal)."""
        require_fitted(self)
        nl = self.nl_
        return (nl.v.scale(beta) * nl.z.scale.d1(alpha)) / (
            nl.z.scale(alpha) * nl.v.scale.d1(beta)
        )

    def jump_curve(self, n: int = 512, inset: float = 1e-9):
        """(points, slopes) samples of the acceptance boundary inside the
        open rectangle (exact boundary points are excluded)."""
        require_fitted(self)
        sp = self.scenario_.space
        nl = self.nl_
        g_x = float(nl.v.curve(self.x_take))
        # alpha where the boundary hits the beta edges (boundary_beta falls in alpha)
        a_at_bhi = float(nl.z.scale.inverse(nl.v.scale(sp.beta_hi) * g_x / float(nl.z.curve(self.q_take_))))
        a_at_blo = float(nl.z.scale.inverse(nl.v.scale(sp.beta_lo) * g_x / float(nl.z.curve(self.q_take_))))
        lo = max(sp.alpha_lo + inset, min(a_at_bhi, a_at_blo))
        hi = min(sp.alpha_hi - inset, max(a_at_bhi, a_at_blo))
        if not lo < hi:
            return np.empty((0, 2)), np.empty(0)
        alphas = np.linspace(lo, hi, n)
        betas = self.boundary_beta(alphas)
        keep = (betas > sp.beta_lo + inset) & (betas < sp.beta_hi - inset)
        pts = np.column_stack([alphas[keep], betas[keep]])
        return pts, np.asarray(self.jump_slope(pts[:, 0], pts[:, 1]))

    def describe(self) -> dict:
        require_fitted(self)
        return {
            "mechanism": "one_step_ordeal",
            "anchor": [float(self.anchor[0]), float(self.anchor[1])],
            "x_take": self.x_take,
            "q_take": self.q_take_,
        }


class PaymentScreenMechanism(MechanismBase):
    """Payments only: an increasing schedule of the good-vs-money taste.

    Any weakly increasing x(kappa) with the envelope payment p(kappa) =
    kappa*x(kappa) - integral x is incentive compatible in the scaled
    utility kappa*x - p and has zero rent at the bottom taste.  Used as the
    canonical inequitable-but-implementable foil in fairness diagnostics.
    """

    merit_measurable = False

    def __init__(self, schedule: IncreasingAllocation):
        self.schedule = schedule

    def fit(self, scenario: Scenario):
        if scenario.linear is None:
            raise ValueError("payment screens need a linear utility specification")
        self.scenario_ = scenario
        self.rectangle_ = bounding_rectangle(scenario.linear, scenario.space)
        return self

    def bundle(self, T) -> Bundle:
        require_fitted(self)
        T = check_types(T)
        spec = self.scenario_.linear
        kappa = T[:, 1] / spec.w(T[:, 0])
        x = self.schedule(kappa)
        p = envelope_transfer(self.schedule, self.rectangle_.kappa_lo, kappa)
        return Bundle(x=x, p=p, q=np.zeros_like(x))

    def describe(self) -> dict:
        return {"mechanism": "payment_screen", "schedule": self.schedule.describe()}
