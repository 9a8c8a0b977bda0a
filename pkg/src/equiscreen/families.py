"""Closed-form parametric function families.

Every burden weight, merit function, and nonlinear utility component in a
scenario is drawn from one of the families below.  Each family carries
analytic first and second derivatives (and an inverse where the math needs
one), so downstream curvature bounds never rest on numerical
differentiation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import MalformedScenario

_INF = float("inf")


# ---------------------------------------------------------------------------
# scalar families g(t): used for money weight w(alpha), ordeal weight
# z(alpha), and the type-scale factors of separable bivariate utilities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalarFamily:
    """One-dimensional parametric function with analytic derivatives.

    kind:
        ``exp``     g(t) = a * exp(b t),   a > 0, b != 0, positive on all reals
        ``power``   g(t) = a * t**b,       a > 0, b != 0, positive on t > 0
        ``affine``  g(t) = a + b t,        b != 0, positive on its half-line
    """

    kind: str
    a: float
    b: float

    def __post_init__(self):
        if self.kind not in ("exp", "power", "affine"):
            raise MalformedScenario(f"unknown scalar family kind {self.kind!r}")
        if self.kind in ("exp", "power") and not self.a > 0:
            raise MalformedScenario(f"{self.kind} family needs a > 0, got a={self.a}")
        if self.b == 0:
            raise MalformedScenario(f"{self.kind} family needs b != 0 (constant functions carry no screening power)")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "exp":
            return self.a * np.exp(self.b * t)
        if self.kind == "power":
            return self.a * np.power(t, self.b)
        return self.a + self.b * t

    def d1(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "exp":
            return self.a * self.b * np.exp(self.b * t)
        if self.kind == "power":
            return self.a * self.b * np.power(t, self.b - 1.0)
        return np.full_like(t, self.b)

    def d2(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "exp":
            return self.a * self.b * self.b * np.exp(self.b * t)
        if self.kind == "power":
            return self.a * self.b * (self.b - 1.0) * np.power(t, self.b - 2.0)
        return np.zeros_like(t)

    def inverse(self, y):
        """Solve g(t) = y in closed form (y must be in the range of g)."""
        y = np.asarray(y, dtype=float)
        if self.kind == "exp":
            return np.log(y / self.a) / self.b
        if self.kind == "power":
            return np.power(y / self.a, 1.0 / self.b)
        return (y - self.a) / self.b

    def natural_domain(self) -> tuple[float, float]:
        """Open interval on which the family is defined and strictly positive."""
        if self.kind == "exp":
            return (-_INF, _INF)
        if self.kind == "power":
            return (0.0, _INF)
        root = -self.a / self.b
        return (root, _INF) if self.b > 0 else (-_INF, root)

    def increasing(self) -> bool:
        return self.b > 0

    def describe(self) -> dict:
        return {"kind": self.kind, "a": self.a, "b": self.b}


def scalar_family(kind: str, a: float, b: float) -> ScalarFamily:
    return ScalarFamily(kind, float(a), float(b))


# ---------------------------------------------------------------------------
# merit families eta(alpha, beta)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeritFunction:
    """Deservingness score over types, increasing in both coordinates.

    kind:
        ``weighted_sum``  eta = a*alpha + b*beta            (a, b > 0)
        ``product``       eta = beta * exp(c*alpha)         (c > 0, stored in a)

    Both are defined on the whole plane; their partial derivatives are
    strictly positive wherever beta > 0, with closed-form lower bounds on any
    bounded rectangle.
    """

    kind: str
    a: float
    b: float = 0.0

    def __post_init__(self):
        if self.kind == "weighted_sum":
            if not (self.a > 0 and self.b > 0):
                raise MalformedScenario("weighted_sum merit needs a, b > 0")
        elif self.kind == "product":
            if not self.a > 0:
                raise MalformedScenario("product merit needs c > 0")
        else:
            raise MalformedScenario(f"unknown merit family kind {self.kind!r}")

    # -- evaluation ---------------------------------------------------------

    def __call__(self, alpha, beta):
        alpha = np.asarray(alpha, dtype=float)
        beta = np.asarray(beta, dtype=float)
        if self.kind == "weighted_sum":
            return self.a * alpha + self.b * beta
        return beta * np.exp(self.a * alpha)

    def d_alpha(self, alpha, beta):
        alpha = np.asarray(alpha, dtype=float)
        beta = np.asarray(beta, dtype=float)
        if self.kind == "weighted_sum":
            return np.broadcast_to(self.a, np.broadcast_shapes(alpha.shape, beta.shape)).copy()
        return self.a * beta * np.exp(self.a * alpha)

    def d_beta(self, alpha, beta):
        alpha = np.asarray(alpha, dtype=float)
        beta = np.asarray(beta, dtype=float)
        if self.kind == "weighted_sum":
            return np.broadcast_to(self.b, np.broadcast_shapes(alpha.shape, beta.shape)).copy()
        return np.exp(self.a * alpha) * np.ones_like(beta)

    def d2_alpha_alpha(self, alpha, beta):
        alpha = np.asarray(alpha, dtype=float)
        beta = np.asarray(beta, dtype=float)
        if self.kind == "weighted_sum":
            return np.zeros(np.broadcast_shapes(alpha.shape, beta.shape))
        return self.a * self.a * beta * np.exp(self.a * alpha)

    def d2_alpha_beta(self, alpha, beta):
        alpha = np.asarray(alpha, dtype=float)
        beta = np.asarray(beta, dtype=float)
        if self.kind == "weighted_sum":
            return np.zeros(np.broadcast_shapes(alpha.shape, beta.shape))
        return self.a * np.exp(self.a * alpha) * np.ones_like(beta)

    def d2_beta_beta(self, alpha, beta):
        alpha = np.asarray(alpha, dtype=float)
        beta = np.asarray(beta, dtype=float)
        return np.zeros(np.broadcast_shapes(alpha.shape, beta.shape))

    # -- structure ----------------------------------------------------------

    def beta_at(self, alpha, level):
        """beta solving eta(alpha, beta) = level, in closed form."""
        alpha = np.asarray(alpha, dtype=float)
        if self.kind == "weighted_sum":
            return (level - self.a * alpha) / self.b
        return level * np.exp(-self.a * alpha)

    def iso_slope(self, alpha, beta):
        """Slope d(beta)/d(alpha) of the level curve through (alpha, beta)."""
        return -self.d_alpha(alpha, beta) / self.d_beta(alpha, beta)

    def range_on(self, space) -> tuple[float, float]:
        """Merit range over a type rectangle (exact: both families are
        monotone in each coordinate, so the extremes sit at corners)."""
        lo = float(self(space.alpha_lo, space.beta_lo))
        hi = float(self(space.alpha_hi, space.beta_hi))
        return lo, hi

    def gradient_lower_bounds(self, space) -> tuple[float, float]:
        """Analytic lower bounds for (eta_alpha, eta_beta) on the closed
        rectangle; used by the standing-assumption validator."""
        if self.kind == "weighted_sum":
            return self.a, self.b
        return (
            self.a * space.beta_lo * math.exp(self.a * space.alpha_lo),
            math.exp(self.a * space.alpha_lo),
        )

    def describe(self) -> dict:
        d = {"family": self.kind, "a": self.a}
        if self.kind == "weighted_sum":
            d["b"] = self.b
        return d


def merit_function(kind: str, **params) -> MeritFunction:
    if kind == "weighted_sum":
        return MeritFunction("weighted_sum", float(params["a"]), float(params["b"]))
    if kind == "product":
        return MeritFunction("product", float(params.get("c", params.get("a", 1.0))))
    raise MalformedScenario(f"unknown merit family kind {kind!r}")


# ---------------------------------------------------------------------------
# instrument curvature g(t) with g(0) = 0: the level part of separable
# bivariate utilities v(beta, x) = phi(beta) * g(x), etc.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CurveFamily:
    """Strictly increasing level response with g(0) = 0.

    kind:
        ``linear``  g(t) = t
        ``power``   g(t) = t**c with c >= 1 (so g is C^2 at 0)
        ``expm1``   g(t) = (exp(c t) - 1) / c, c > 0
    """

    kind: str
    c: float = 1.0

    def __post_init__(self):
        if self.kind == "power":
            if not self.c >= 1.0:
                raise MalformedScenario("power curve needs c >= 1 for smoothness at 0")
        elif self.kind == "expm1":
            if not self.c > 0:
                raise MalformedScenario("expm1 curve needs c > 0")
        elif self.kind != "linear":
            raise MalformedScenario(f"unknown curve family kind {self.kind!r}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "linear":
            return t.copy()
        if self.kind == "power":
            return np.power(t, self.c)
        return np.expm1(self.c * t) / self.c

    def d1(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "linear":
            return np.ones_like(t)
        if self.kind == "power":
            return self.c * np.power(t, self.c - 1.0)
        return np.exp(self.c * t)

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == "linear":
            return y.copy()
        if self.kind == "power":
            return np.power(y, 1.0 / self.c)
        return np.log1p(self.c * y) / self.c

    def describe(self) -> dict:
        return {"kind": self.kind, "c": self.c}


@dataclass(frozen=True)
class SeparableUtility:
    """Bivariate burden/benefit term scale(theta) * curve(level).

    The separable form keeps all single-crossing signs a matter of the
    scale factor's monotonicity: the cross partial is scale'(theta) *
    curve'(level), so it inherits the sign of scale'.
    """

    scale: ScalarFamily
    curve: CurveFamily

    def __call__(self, theta, level):
        return self.scale(theta) * self.curve(level)

    def d_level(self, theta, level):
        return self.scale(theta) * self.curve.d1(level)

    def d_theta(self, theta, level):
        return self.scale.d1(theta) * self.curve(level)

    def d_theta_level(self, theta, level):
        return self.scale.d1(theta) * self.curve.d1(level)

    def level_at(self, theta, value):
        """Solve scale(theta) * curve(level) = value for the level."""
        return self.curve.inverse(np.asarray(value, dtype=float) / self.scale(theta))

    def describe(self) -> dict:
        return {"scale": self.scale.describe(), "curve": self.curve.describe()}
