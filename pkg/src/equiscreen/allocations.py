"""Weakly increasing allocation targets and their step decompositions.

An :class:`IncreasingAllocation` is the designer's target share of the good
as a function of merit.  Any such target splits into a nonnegative
combination of merit thresholds (a base "serve everyone" weight plus one
weight per jump of a right-continuous step approximation); mixtures of
threshold mechanisms then implement the target because incentive and
participation constraints are linear in the bundle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NotMonotone

_WEIGHT_FLOOR = 1e-15


@dataclass(frozen=True)
class IncreasingAllocation:
    """Monotone map from merit into [0, 1], as a step or piecewise-linear table.

    ``step`` tables are right-continuous: the value at a knot is the new
    level, and ``base`` is the level before the first knot.  ``linear``
    tables interpolate between knots and extend constantly outside them.
    The table's own merit domain is [eta_lo, eta_hi].
    """

    kind: str
    eta_knots: np.ndarray
    values: np.ndarray
    eta_lo: float
    eta_hi: float
    base: float = 0.0

    def __post_init__(self):
        knots = np.asarray(self.eta_knots, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "eta_knots", knots)
        object.__setattr__(self, "values", vals)
        if self.kind not in ("step", "linear"):
            raise NotMonotone(f"unknown allocation table kind {self.kind!r}")
        if knots.ndim != 1 or knots.size != vals.size or knots.size == 0:
            raise NotMonotone("allocation table needs matching 1-d knot and value arrays")
        if np.any(np.diff(knots) <= 0):
            raise NotMonotone("allocation knots must be strictly increasing")
        levels = np.concatenate([[self.base], vals]) if self.kind == "step" else vals
        if np.any(np.diff(levels) < 0):
            raise NotMonotone("allocation values must be weakly increasing")
        if levels.min() < 0 or levels.max() > 1:
            raise NotMonotone("allocation values must lie in [0, 1]")
        if not self.eta_lo < self.eta_hi:
            raise NotMonotone("allocation domain must be a nonempty interval")

    # -- constructors --------------------------------------------------------

    @staticmethod
    def constant(level: float, eta_range: tuple[float, float]) -> "IncreasingAllocation":
        lo, hi = eta_range
        return IncreasingAllocation("step", np.array([lo]), np.array([level]), lo, hi, base=level)

    @staticmethod
    def threshold(eta0: float, eta_range: tuple[float, float]) -> "IncreasingAllocation":
        """The indicator 1{eta >= eta0}."""
        lo, hi = eta_range
        return IncreasingAllocation("step", np.array([eta0]), np.array([1.0]), lo, hi, base=0.0)

    @staticmethod
    def ramp(eta_range: tuple[float, float]) -> "IncreasingAllocation":
        """Linear from 0 at the bottom of the range to 1 at the top."""
        lo, hi = eta_range
        return IncreasingAllocation("linear", np.array([lo, hi]), np.array([0.0, 1.0]), lo, hi)

    @staticmethod
    def piecewise_linear(eta_knots, values, eta_range=None) -> "IncreasingAllocation":
        knots = np.asarray(eta_knots, dtype=float)
        rng = eta_range or (float(knots[0]), float(knots[-1]))
        return IncreasingAllocation("linear", knots, np.asarray(values, dtype=float), rng[0], rng[1])

    @staticmethod
    def step_table(eta_knots, values, eta_range, base: float = 0.0) -> "IncreasingAllocation":
        return IncreasingAllocation("step", np.asarray(eta_knots, dtype=float),
                                    np.asarray(values, dtype=float), eta_range[0], eta_range[1], base=base)

    # -- evaluation -----------------------------------------------------------

    def __call__(self, eta):
        eta = np.asarray(eta, dtype=float)
        if self.kind == "linear":
            return np.interp(eta, self.eta_knots, self.values)
        idx = np.searchsorted(self.eta_knots, eta, side="right")
        levels = np.concatenate([[self.base], self.values])
        return levels[idx]

    def jump_levels(self) -> np.ndarray:
        """Merit values where the table jumps (empty for continuous tables)."""
        if self.kind != "step":
            return np.array([])
        levels = np.concatenate([[self.base], self.values])
        return self.eta_knots[np.diff(levels) > 0]

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "eta_knots": [float(v) for v in self.eta_knots],
            "values": [float(v) for v in self.values],
            "eta_lo": self.eta_lo,
            "eta_hi": self.eta_hi,
            "base": self.base,
        }


@dataclass(frozen=True)
class StepComponent:
    weight: float
    eta_star: float
    allocate_to_all: bool = False


def decompose_increasing(xhat: IncreasingAllocation, n_steps: int) -> list[StepComponent]:
    """Split a monotone allocation into weighted merit thresholds.

    Thresholds sit at n_steps uniform merit quantiles of the table's domain,
    joined with the table's own jump locations so step targets reproduce
    exactly.  Weights are right-limit increments; the value at the bottom of
    the domain rides on a serve-everyone component.  The right-continuous
    step reconstruction

        x(eta) = base_weight + sum_i weight_i * 1{eta >= eta_i}

    matches the target at every threshold and is within the largest
    single-cell oscillation of it in sup norm.
    """
    if n_steps < 1:
        raise ValueError("need at least one quantile step")
    lo, hi = xhat.eta_lo, xhat.eta_hi
    quantiles = lo + (hi - lo) * np.arange(1, n_steps + 1) / n_steps
    jumps = xhat.jump_levels()
    jumps = jumps[(jumps > lo) & (jumps <= hi)]
    cuts = np.unique(np.concatenate([quantiles, jumps]))

    components: list[StepComponent] = []
    base = float(xhat(lo))
    if base > _WEIGHT_FLOOR:
        components.append(StepComponent(weight=base, eta_star=lo, allocate_to_all=True))
    prev = float(xhat(lo))
    for cut in cuts:
        here = float(xhat(cut))
        weight = here - prev
        if weight > _WEIGHT_FLOOR:
            components.append(StepComponent(weight=weight, eta_star=float(cut)))
        prev = here
    return components


def reconstruct_step(components: list[StepComponent], eta) -> np.ndarray:
    """Evaluate the step reconstruction implied by a decomposition."""
    eta = np.asarray(eta, dtype=float)
    out = np.zeros_like(eta)
    for comp in components:
        if comp.allocate_to_all:
            out += comp.weight
        else:
            out += comp.weight * (eta >= comp.eta_star)
    return out
