"""Mechanism builders: threshold mechanisms and their mixtures.

A mechanism assigns each type a bundle (x, p, q): allocation share, payment,
ordeal.  Builders follow the estimator protocol -- construct with
hyperparameters, ``fit(scenario)``, then ``predict`` allocations or
``bundle`` full menus at arrays of types -- so they compose with standard
model-selection tooling via ``get_params``/``set_params``.

The threshold construction works in taste space.  With tastes kappa =
beta/w(alpha) and lam = -z(alpha)/w(alpha), scaled utility is kappa*x +
lam*q - p, so a bundle schedule is incentive compatible exactly when it is
a subgradient field of a convex scaled indirect utility V(kappa, lam).  For
a merit threshold at level t with curve k(lam) (the kappa attaining t), the
construction uses

    q(kappa, lam) = psi - zeta*lam_hi + zeta*lam - k'(lam) * [above]
    V(kappa, lam) = max(0, kappa - k(lam)) + zeta*lam^2/2
                    + lam*(psi - zeta*lam_hi)

which is convex once zeta dominates the curve's second derivative, and the
ordeal stays positive once psi covers the slope bound plus the zeta ramp.
Payments follow from V by the taxation principle, shifted by a constant so
indirect utility is nonnegative (constant shifts leave subgradients, hence
incentives, untouched).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .allocations import IncreasingAllocation, StepComponent, decompose_increasing
from .exceptions import BadThreshold, NotMonotone
from .reparam import (
    CurvatureBounds,
    ReparamRectangle,
    bounding_rectangle,
    build_threshold_curve,
    curvature_bounds,
    lam_of_alpha,
)
from .scenario import Scenario
from .validation import check_types, require_fitted

ZETA_FLOOR = 1e-6


@dataclass(frozen=True)
class Bundle:
    """Arrays of allocations, payments, and ordeals at a set of types."""

    x: np.ndarray
    p: np.ndarray
    q: np.ndarray

    def as_tuple(self):
        return self.x, self.p, self.q


def choose_constants(bounds: CurvatureBounds, rectangle: ReparamRectangle, margin: float = 0.25):
    """Ordeal-rule constants (psi, zeta) with numerical headroom.

    zeta must strictly dominate the curvature bound M2 for convexity and psi
    must cover M1 plus the zeta ramp for ordeal positivity; the margin and
    the +1 turn those strict inequalities into comfortable ones.
    """
    if not margin > 0:
        raise ValueError("the headroom margin must be positive (zeta must exceed the curvature bound strictly)")
    zeta = max(bounds.m2, ZETA_FLOOR) * (1.0 + margin)
    psi = bounds.m1 + zeta * rectangle.lam_span + 1.0
    return psi, zeta


class MechanismBase(BaseEstimator):
    """Shared surface for fitted mechanisms."""

    merit_measurable: bool = False

    def bundle(self, T) -> Bundle:
        raise NotImplementedError

    def predict(self, T) -> np.ndarray:
        """Allocation share at each (alpha, beta) row of T."""
        return self.bundle(T).x

    def jump_levels(self) -> np.ndarray:
        """Merit values at which the allocation jumps (closed forms only)."""
        return np.array([])

    def utility_at_own(self, T) -> np.ndarray:
        """Utility of each type at its assigned bundle."""
        T = check_types(T)
        b = self.bundle(T)
        return self.scenario_.utility.utility(T[:, 0], T[:, 1], b.x, b.p, b.q)


class ThresholdMechanism(MechanismBase):
    """Serve exactly the types with merit above a target level.

    Parameters
    ----------
    eta_star : float
        Merit threshold; must lie in the scenario's merit range (closure).
    side : {"low", "high"}
        Allocation at merit exactly eta_star: "low" gives 0, "high" gives 1.
    margin : float
        Headroom multiplier passed to :func:`choose_constants`.
    constants : (psi, zeta) or None
        Explicit ordeal constants; bypasses choose_constants when given.
    curve_samples : int
        Threshold-curve table size.
    curve_mode : {"auto", "interp"}
        Curve evaluation backend (closed-form when available, else table).

    Fitted attributes: ``scenario_``, ``rectangle_``, ``curve_``,
    ``bounds_``, ``psi_``, ``zeta_``, ``payment_shift_``.
    """

    merit_measurable = True

    def __init__(self, eta_star: float, side: str = "low", margin: float = 0.25,
                 constants=None, curve_samples: int = 201, curve_mode: str = "auto"):
        self.eta_star = eta_star
        self.side = side
        self.margin = margin
        self.constants = constants
        self.curve_samples = curve_samples
        self.curve_mode = curve_mode

    def fit(self, scenario: Scenario, rectangle: ReparamRectangle | None = None):
        if self.side not in ("low", "high"):
            raise ValueError(f"side must be 'low' or 'high', got {self.side!r}")
        lo, hi = scenario.merit_range()
        if not lo <= self.eta_star <= hi:
            raise BadThreshold(
                f"threshold {self.eta_star} outside the merit range [{lo}, {hi}]"
            )
        spec = scenario.linear
        if spec is None:
            raise BadThreshold("the threshold construction needs a linear utility specification")
        self.scenario_ = scenario
        self.rectangle_ = rectangle or bounding_rectangle(spec, scenario.space)
        lam_range = (self.rectangle_.lam_lo, self.rectangle_.lam_hi)
        self.bounds_ = curvature_bounds(spec, scenario.merit, self.eta_star, lam_range)
        if self.constants is not None:
            self.psi_, self.zeta_ = map(float, self.constants)
        else:
            self.psi_, self.zeta_ = choose_constants(self.bounds_, self.rectangle_, self.margin)
        self.curve_ = build_threshold_curve(
            spec, scenario.merit, self.eta_star, lam_range, self.curve_samples, self.curve_mode
        )
        self.payment_shift_ = -self._raw_value_min()
        return self

    # -- taste-space surface (exact subgradient pairs) ------------------------

    def _q_of(self, lam, above):
        base = self.psi_ - self.zeta_ * self.rectangle_.lam_hi + self.zeta_ * lam
        return base - self.curve_.dkappa_at(lam) * above

    def _above_taste(self, kappa, lam):
        ks = self.curve_.kappa_at(lam)
        if self.side == "low":
            return np.asarray(kappa) > ks
        return np.asarray(kappa) >= ks

    def taste_value(self, kappa, lam, shifted: bool = True):
        """Scaled indirect utility V at taste coordinates."""
        require_fitted(self)
        kappa = np.asarray(kappa, dtype=float)
        lam = np.asarray(lam, dtype=float)
        v = (
            np.maximum(0.0, kappa - self.curve_.kappa_at(lam))
            + 0.5 * self.zeta_ * lam**2
            + lam * (self.psi_ - self.zeta_ * self.rectangle_.lam_hi)
        )
        return v + self.payment_shift_ if shifted else v

    def taste_gradient(self, kappa, lam):
        """The (x, q) subgradient of V at taste coordinates."""
        require_fitted(self)
        above = self._above_taste(kappa, lam)
        x = above.astype(float)
        return x, self._q_of(np.asarray(lam, dtype=float), x)

    def _raw_value_min(self) -> float:
        # V is increasing in kappa (slope 0 or 1) and, with choose_constants
        # headroom, strictly increasing in lam (slope = q > 0), so the corner
        # is the minimizer; a dense scan guards custom constants.
        r = self.rectangle_
        lam_scan = np.linspace(r.lam_lo, r.lam_hi, 513)
        vals = self.taste_value(np.full_like(lam_scan, r.kappa_lo), lam_scan, shifted=False)
        return float(min(vals.min(), self.taste_value(r.kappa_lo, r.lam_lo, shifted=False)))

    # -- type-space surface ----------------------------------------------------

    def _bundle_from_tastes(self, eta, kappa, lam) -> Bundle:
        # allocation decided by merit directly: equity is exact by construction
        if self.side == "low":
            x = (eta > self.eta_star).astype(float)
        else:
            x = (eta >= self.eta_star).astype(float)
        q = self._q_of(lam, x)
        v_eff = self.taste_value(kappa, lam, shifted=True)
        p = kappa * x + lam * q - v_eff
        return Bundle(x=x, p=p, q=q)

    def bundle(self, T) -> Bundle:
        require_fitted(self)
        T = check_types(T)
        alpha, beta = T[:, 0], T[:, 1]
        spec = self.scenario_.linear
        w = spec.w(alpha)
        eta = self.scenario_.merit(alpha, beta)
        return self._bundle_from_tastes(eta, beta / w, lam_of_alpha(spec, alpha))

    def indirect_utility(self, T) -> np.ndarray:
        """Scaled indirect utility at types (nonnegative after the shift)."""
        require_fitted(self)
        T = check_types(T)
        spec = self.scenario_.linear
        w = spec.w(T[:, 0])
        return self.taste_value(T[:, 1] / w, lam_of_alpha(spec, T[:, 0]))

    def jump_levels(self) -> np.ndarray:
        return np.array([self.eta_star])

    def describe(self) -> dict:
        require_fitted(self)
        return {
            "mechanism": "threshold",
            "eta_star": self.eta_star,
            "side": self.side,
            "psi": self.psi_,
            "zeta": self.zeta_,
            "payment_shift": self.payment_shift_,
            "bounds": self.bounds_.describe(),
            "rectangle": self.rectangle_.describe(),
        }


class MixtureMechanism(MechanismBase):
    """Implement any weakly increasing merit allocation as a threshold mixture.

    The target table decomposes into weighted thresholds
    (:func:`allocations.decompose_increasing`); each rides a fitted
    :class:`ThresholdMechanism` and the assigned bundle is the weighted
    average, with any residual weight on the null bundle.  Incentive and
    participation constraints average through, so the mixture inherits the
    components' certificates; the aggregate allocation equals the step
    reconstruction of the target exactly.

    Components use side="high" so right-continuous step targets are
    reproduced exactly at their jump merits.
    """

    merit_measurable = True

    def __init__(self, allocation: IncreasingAllocation, n_steps: int = 100,
                 margin: float = 0.25, curve_samples: int = 201, curve_mode: str = "auto"):
        self.allocation = allocation
        self.n_steps = n_steps
        self.margin = margin
        self.curve_samples = curve_samples
        self.curve_mode = curve_mode

    def fit(self, scenario: Scenario):
        spec = scenario.linear
        if spec is None:
            raise BadThreshold("the mixture construction needs a linear utility specification")
        self.scenario_ = scenario
        self.rectangle_ = bounding_rectangle(spec, scenario.space)
        self.components_: list[StepComponent] = decompose_increasing(self.allocation, self.n_steps)
        total = sum(c.weight for c in self.components_)
        etas = [c.eta_star for c in self.components_ if not c.allocate_to_all]
        if total > 1.0 + 1e-12 or any(b <= a for a, b in zip(etas, etas[1:])):
            raise NotMonotone("decomposition produced an invalid weight/threshold ladder")
        self.mechanisms_: list[ThresholdMechanism | None] = []
        for comp in self.components_:
            if comp.allocate_to_all:
                # constant full allocation at zero price: trivially IC, and IR
                # because the good-vs-money taste is positive
                self.mechanisms_.append(None)
                continue
            m = ThresholdMechanism(
                eta_star=comp.eta_star, side="high", margin=self.margin,
                curve_samples=self.curve_samples, curve_mode=self.curve_mode,
            ).fit(scenario, rectangle=self.rectangle_)
            self.mechanisms_.append(m)
        return self

    def bundle(self, T) -> Bundle:
        require_fitted(self)
        T = check_types(T)
        alpha, beta = T[:, 0], T[:, 1]
        spec = self.scenario_.linear
        w = spec.w(alpha)
        eta = self.scenario_.merit(alpha, beta)
        kappa, lam = beta / w, lam_of_alpha(spec, alpha)
        x = np.zeros_like(alpha)
        p = np.zeros_like(alpha)
        q = np.zeros_like(alpha)
        for comp, mech in zip(self.components_, self.mechanisms_):
            if mech is None:
                x += comp.weight
                continue
            b = mech._bundle_from_tastes(eta, kappa, lam)
            x += comp.weight * b.x
            p += comp.weight * b.p
            q += comp.weight * b.q
        return Bundle(x=x, p=p, q=q)

    def jump_levels(self) -> np.ndarray:
        require_fitted(self)
        return np.array([c.eta_star for c in self.components_ if not c.allocate_to_all])

    def target_allocation(self, eta) -> np.ndarray:
        """The step reconstruction the mixture realizes, as a function of merit."""
        require_fitted(self)
        from .allocations import reconstruct_step

        return reconstruct_step(self.components_, eta)

    def describe(self) -> dict:
        require_fitted(self)
        return {
            "mechanism": "mixture",
            "n_steps": self.n_steps,
            "n_components": len(self.components_),
            "weights": [c.weight for c in self.components_],
            "thresholds": [c.eta_star for c in self.components_],
            "allocation": self.allocation.describe(),
        }


class GridMechanism(MechanismBase):
    """A mechanism given by arrays over a grid (no closed form).

    Evaluation is only defined at the grid's own nodes; asking for other
    points is an error rather than an interpolation.
    """

    def __init__(self, scenario, grid, x, p, q, merit_measurable: bool = False,
                 jump_levels=()):
        self.scenario_ = scenario
        self.grid_ = grid
        self.x_ = np.asarray(x, dtype=float).ravel()
        self.p_ = np.asarray(p, dtype=float).ravel()
        self.q_ = np.asarray(q, dtype=float).ravel()
        self.merit_measurable = merit_measurable
        self._jumps = np.asarray(jump_levels, dtype=float)
        n = grid.n_nodes
        if not (self.x_.size == self.p_.size == self.q_.size == n):
            raise ValueError("field arrays must match the grid's node count")

    def fit(self, scenario=None):
        return self

    def _indices_for(self, T) -> np.ndarray:
        g = self.grid_
        ia = np.rint((T[:, 0] - g.alpha[0]) / g.step_alpha).astype(int) if g.n_alpha > 1 else np.zeros(len(T), int)
        ib = np.rint((T[:, 1] - g.beta[0]) / g.step_beta).astype(int) if g.n_beta > 1 else np.zeros(len(T), int)
        ok = (ia >= 0) & (ia < g.n_alpha) & (ib >= 0) & (ib < g.n_beta)
        if not ok.all():
            raise ValueError("grid mechanism evaluated off its grid")
        close_a = np.abs(g.alpha[ia] - T[:, 0]) <= 1e-9 * max(1.0, abs(g.alpha[-1]))
        close_b = np.abs(g.beta[ib] - T[:, 1]) <= 1e-9 * max(1.0, abs(g.beta[-1]))
        if not (close_a & close_b).all():
            raise ValueError("grid mechanism evaluated off its grid")
        return ia * g.n_beta + ib

    def bundle(self, T) -> Bundle:
        T = check_types(T)
        idx = self._indices_for(T)
        return Bundle(x=self.x_[idx], p=self.p_[idx], q=self.q_[idx])

    def jump_levels(self) -> np.ndarray:
        return self._jumps
