"""Taste-space reparametrization and the threshold curve.

Types (alpha, beta) map to tastes (kappa, lam):

    kappa = beta / w(alpha)        good-vs-money taste
    lam   = -z(alpha) / w(alpha)   ordeal-vs-money taste (always negative)

Utility scaled by 1/w(alpha) becomes kappa*x + lam*q - p, linear in tastes,
which is what makes the subgradient construction work.  The map is injective
because w' > 0 and z' < 0 force lam to be strictly increasing in alpha.

For a target merit level, ``kappa_star`` gives the taste kappa at which a
type with ordeal taste lam sits exactly on the level; its first two
derivatives along lam feed the curvature bounds that size the constructed
ordeal rule.  All derivatives are implicit-function chains through the
families' analytic derivatives -- no numerical differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .exceptions import NoConvergence, OutOfImage
from .families import MeritFunction
from .scenario import LinearUtilitySpec, TypeSpace

_BRACKET_CAP = 200


# ---------------------------------------------------------------------------
# the (kappa, lam) map and its inverse wealth coordinate
# ---------------------------------------------------------------------------


def to_kl(spec: LinearUtilitySpec, alpha, beta):
    """Map types to tastes (kappa, lam)."""
    w = spec.w(alpha)
    return np.asarray(beta, dtype=float) / w, -spec.z(alpha) / w


def lam_of_alpha(spec: LinearUtilitySpec, alpha):
    return -spec.z(alpha) / spec.w(alpha)


def dlam_dalpha(spec: LinearUtilitySpec, alpha):
    w, z = spec.w(alpha), spec.z(alpha)
    return (z * spec.w.d1(alpha) - spec.z.d1(alpha) * w) / w**2


def d2lam_dalpha2(spec: LinearUtilitySpec, alpha):
    w, z = spec.w(alpha), spec.z(alpha)
    w1, z1 = spec.w.d1(alpha), spec.z.d1(alpha)
    w2, z2 = spec.w.d2(alpha), spec.z.d2(alpha)
    return (z * w2 - z2 * w) / w**2 - 2.0 * w1 * (z * w1 - z1 * w) / w**3


def _closed_inverse(spec: LinearUtilitySpec, lam):
    """Closed-form alpha for same-kind family pairs, else None."""
    w, z = spec.w, spec.z
    if w.kind != z.kind:
        return None
    lam = np.asarray(lam, dtype=float)
    if w.kind == "exp":
        # lam = -(az/aw) exp((bz-bw) alpha)
        return np.log(-lam * w.a / z.a) / (z.b - w.b)
    if w.kind == "power":
        return np.power(-lam * w.a / z.a, 1.0 / (z.b - w.b))
    # affine: lam (aw + bw a) = -(az + bz a)
    return -(lam * w.a + z.a) / (lam * w.b + z.b)


def alpha_of_lambda(spec: LinearUtilitySpec, lam, tol: float = 1e-12):
    """Invert the ordeal/money taste: the alpha with -z(alpha)/w(alpha) = lam.

    Uses the family pair's closed form when one exists, otherwise bracketed
    root finding with geometric bracket expansion over the shared positivity
    domain.  Raises OutOfImage for nonnegative lam or when no bracket is
    found before the expansion cap.
    """
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lam_arr >= 0):
        raise OutOfImage(f"ordeal/money taste must be negative, got {lam_arr[lam_arr >= 0][0]}")

    closed = _closed_inverse(spec, lam_arr)
    if closed is not None:
        out = closed
    else:
        out = np.array([_invert_one(spec, float(v), tol) for v in lam_arr])

    resid = np.abs(lam_of_alpha(spec, out) - lam_arr)
    if np.any(resid > tol * np.maximum(1.0, np.abs(lam_arr))):
        raise NoConvergence("taste inversion residual above tolerance")
    return out if np.ndim(lam) else float(out[0])


def _invert_one(spec: LinearUtilitySpec, lam: float, tol: float) -> float:
    lo_dom = max(spec.w.natural_domain()[0], spec.z.natural_domain()[0])
    hi_dom = min(spec.w.natural_domain()[1], spec.z.natural_domain()[1])

    def h(a):
        return float(lam_of_alpha(spec, a)) - lam

    # lam_of_alpha is strictly increasing; expand a bracket geometrically
    # toward the open domain ends.
    mid = 0.0
    if not (lo_dom < mid < hi_dom):
        lo_f = lo_dom if np.isfinite(lo_dom) else -1.0
        hi_f = hi_dom if np.isfinite(hi_dom) else 1.0
        mid = 0.5 * (lo_f + hi_f)
    lo = hi = mid
    step = 1.0
    for _ in range(_BRACKET_CAP):
        if h(lo) <= 0 <= h(hi):
            return brentq(h, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)
        if h(lo) > 0:
            lo = (lo - step) if not np.isfinite(lo_dom) else lo_dom + (lo - lo_dom) / 2.0
        if h(hi) < 0:
            hi = (hi + step) if not np.isfinite(hi_dom) else hi_dom - (hi_dom - hi) / 2.0
        step *= 2.0
    raise OutOfImage(f"no wealth level attains taste {lam} (bracket expansion exhausted)")


def merit_kl(spec: LinearUtilitySpec, merit: MeritFunction, kappa, lam):
    """Merit expressed in taste coordinates."""
    alpha = alpha_of_lambda(spec, lam)
    return merit(alpha, np.asarray(kappa, dtype=float) * spec.w(alpha))


# ---------------------------------------------------------------------------
# the threshold curve kappa*(lam) and its derivatives
# ---------------------------------------------------------------------------


def kappa_star(spec, merit, eta_star: float, lam, method: str = "auto"):
    """The taste kappa at which merit equals ``eta_star`` for ordeal taste lam.

    ``auto`` solves through the merit family's closed form; ``bisect`` uses
    bracketed root finding on the taste-space merit (kept as an independent
    cross-check path).  Residual tolerance 1e-10 either way.
    """
    alpha = alpha_of_lambda(spec, lam)
    w = spec.w(alpha)
    if method == "auto":
        out = merit.beta_at(alpha, eta_star) / w
    elif method == "bisect":
        out = _kappa_star_bracketed(merit, eta_star, np.atleast_1d(alpha), np.atleast_1d(w))
        if np.ndim(lam) == 0:
            out = float(out[0])
    else:
        raise ValueError(f"unknown method {method!r}")
    resid = np.abs(merit(alpha, np.asarray(out) * w) - eta_star)
    if np.any(resid > 1e-10 * np.maximum(1.0, abs(eta_star))):
        raise NoConvergence("threshold taste residual above 1e-10")
    return out


def _kappa_star_bracketed(merit, eta_star, alphas, ws):
    out = np.empty_like(alphas)
    for i, (a, w) in enumerate(zip(alphas, ws)):
        def g(k):
            return float(merit(a, k * w)) - eta_star

        lo, hi = 0.0, 1.0
        for _ in range(_BRACKET_CAP):
            if g(lo) <= 0 <= g(hi):
                break
            if g(lo) > 0:
                lo = lo * 2.0 - 1.0
            if g(hi) < 0:
                hi = hi * 2.0 + 1.0
        else:
            raise NoConvergence("no bracket for the threshold taste (merit family malformed?)")
        out[i] = brentq(g, lo, hi, xtol=1e-14, rtol=8.9e-16, maxiter=200)
    return out


def _curve_derivs_at_alpha(spec, merit, eta_star: float, alpha):
    """(kappa*, dkappa*/dlam, d2kappa*/dlam2, lam) at wealth coordinates.

    Implicit differentiation of  merit(alpha(lam), kappa*w(alpha(lam))) =
    eta_star through the analytic family derivatives.
    """
    alpha = np.asarray(alpha, dtype=float)
    w = spec.w(alpha)
    w1 = spec.w.d1(alpha)
    w2 = spec.w.d2(alpha)
    lam = lam_of_alpha(spec, alpha)
    lam1 = dlam_dalpha(spec, alpha)
    lam2 = d2lam_dalpha2(spec, alpha)
    f1 = 1.0 / lam1                 # d alpha / d lam
    f2 = -lam2 / lam1**3

    beta = merit.beta_at(alpha, eta_star)
    kap = beta / w

    ea = merit.d_alpha(alpha, beta)
    eb = merit.d_beta(alpha, beta)
    eaa = merit.d2_alpha_alpha(alpha, beta)
    eab = merit.d2_alpha_beta(alpha, beta)
    ebb = merit.d2_beta_beta(alpha, beta)

    # taste-space merit partials at (kappa, lam)
    g_k = eb * w
    g_l = f1 * (ea + kap * w1 * eb)
    g_kk = ebb * w * w
    g_kl = f1 * ((eab + ebb * kap * w1) * w + eb * w1)
    g_ll = f2 * (ea + kap * w1 * eb) + f1 * f1 * (
        eaa + 2.0 * kap * w1 * eab + kap * kap * w1 * w1 * ebb + kap * w2 * eb
    )

    d1 = -g_l / g_k
    d2 = -((g_ll + g_kl * d1) * g_k - g_l * (g_kl + g_kk * d1)) / g_k**2
    return kap, d1, d2, lam


@dataclass(frozen=True)
class CurvatureBounds:
    """Safety-inflated maxima of |kappa*'| and |kappa*''| over a lam range."""

    m1: float
    m2: float
    raw_m1: float
    raw_m2: float
    safety: float
    n_samples: int

    def describe(self) -> dict:
        return {
            "m1": self.m1,
            "m2": self.m2,
            "raw_m1": self.raw_m1,
            "raw_m2": self.raw_m2,
            "safety": self.safety,
            "n_samples": self.n_samples,
        }


def curvature_bounds(
    spec,
    merit,
    eta_star: float,
    lam_range: tuple[float, float],
    n_samples: int = 1001,
    safety: float = 1.25,
) -> CurvatureBounds:
    """Bounds M1 >= max|kappa*'| and M2 >= max|kappa*''| over the lam range.

    Sampling is uniform in the wealth coordinate (whose image sweeps the lam
    range monotonically, endpoints included); the safety factor absorbs the
    gap between a sampled maximum and the true one.
    """
    if n_samples < 101:
        raise ValueError("curvature bounds need at least 101 samples")
    lam_lo, lam_hi = lam_range
    a_lo = alpha_of_lambda(spec, lam_lo)
    a_hi = alpha_of_lambda(spec, lam_hi)
    alphas = np.linspace(a_lo, a_hi, n_samples)
    _, d1, d2, _ = _curve_derivs_at_alpha(spec, merit, eta_star, alphas)
    raw1 = float(np.max(np.abs(d1)))
    raw2 = float(np.max(np.abs(d2)))
    return CurvatureBounds(
        m1=safety * raw1,
        m2=safety * raw2,
        raw_m1=raw1,
        raw_m2=raw2,
        safety=safety,
        n_samples=n_samples,
    )


@dataclass(frozen=True)
class ThresholdCurve:
    """Sampled threshold curve with consistent evaluation backends.

    ``closed`` mode evaluates kappa* and its lam-derivatives exactly at any
    lam through the families' closed forms; ``interp`` mode evaluates through
    a monotone cubic built on the sample table and uses the interpolant's own
    derivative, so that a mechanism built on it stays an exact gradient pair.
    """

    eta_star: float
    lam: np.ndarray
    kappa: np.ndarray
    dkappa: np.ndarray
    d2kappa: np.ndarray
    mode: str
    _spec: LinearUtilitySpec | None = None
    _merit: MeritFunction | None = None
    _pchip: PchipInterpolator | None = None
    _pchip_d1: PchipInterpolator | None = None
    _pchip_d2: PchipInterpolator | None = None

    def kappa_at(self, lam):
        if self.mode == "closed":
            alpha = alpha_of_lambda(self._spec, lam)
            return self._merit.beta_at(alpha, self.eta_star) / self._spec.w(alpha)
        return self._pchip(lam)

    def dkappa_at(self, lam):
        if self.mode == "closed":
            alpha = alpha_of_lambda(self._spec, lam)
            _, d1, _, _ = _curve_derivs_at_alpha(self._spec, self._merit, self.eta_star, alpha)
            return d1
        return self._pchip_d1(lam)

    def d2kappa_at(self, lam):
        if self.mode == "closed":
            alpha = alpha_of_lambda(self._spec, lam)
            _, _, d2, _ = _curve_derivs_at_alpha(self._spec, self._merit, self.eta_star, alpha)
            return d2
        return self._pchip_d2(lam)

    def table(self) -> np.ndarray:
        """(n, 4) array of (lam, kappa*, kappa*', kappa*'')."""
        return np.column_stack([self.lam, self.kappa, self.dkappa, self.d2kappa])


def build_threshold_curve(
    spec,
    merit,
    eta_star: float,
    lam_range: tuple[float, float],
    n: int = 201,
    mode: str = "auto",
) -> ThresholdCurve:
    """Sample the threshold curve over a lam range.

    mode ``auto`` prefers closed-form evaluation (available whenever the
    wealth inversion has a closed form); ``interp`` forces the monotone-cubic
    table representation.
    """
    if n < 101:
        raise ValueError("threshold curves need at least 101 samples")
    lam_lo, lam_hi = lam_range

    def sample(n_knots):
        # uniform in lam so interpolation error is spread evenly
        lam = np.linspace(lam_lo, lam_hi, n_knots)
        alphas = np.atleast_1d(alpha_of_lambda(spec, lam))
        return _curve_derivs_at_alpha(spec, merit, eta_star, alphas)

    kap, d1, d2, lam = sample(n)
    resid = np.abs(merit_kl(spec, merit, kap, lam) - eta_star)
    if np.any(resid > 1e-10 * max(1.0, abs(eta_star))):
        raise NoConvergence("threshold curve sample violates the level equation")

    use_closed = _closed_inverse(spec, np.array([lam_lo])) is not None and mode != "interp"
    if use_closed:
        return ThresholdCurve(eta_star, lam, kap, d1, d2, "closed", _spec=spec, _merit=merit)

    # the table is the evaluation backend: refine until the measured
    # off-knot level residual clears the consistency budget
    n_cur = max(n, 201)
    for _ in range(8):
        kap, d1, d2, lam = sample(n_cur)
        pchip = PchipInterpolator(lam, kap, extrapolate=True)
        mids = 0.5 * (lam[1:] + lam[:-1])
        off = np.abs(merit_kl(spec, merit, pchip(mids), mids) - eta_star)
        if float(off.max()) <= 1e-9 * max(1.0, abs(eta_star)) or n_cur >= 6401:
            break
        n_cur = 2 * n_cur - 1
    pd1 = pchip.derivative()
    return ThresholdCurve(
        eta_star, lam, kap, d1, d2, "interp",
        _pchip=pchip, _pchip_d1=pd1, _pchip_d2=pd1.derivative(),
    )


# ---------------------------------------------------------------------------
# bounding rectangle in taste space
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReparamRectangle:
    """Closed taste rectangle containing the image of the type rectangle."""

    kappa_lo: float
    kappa_hi: float
    lam_lo: float
    lam_hi: float

    def __post_init__(self):
        if not self.lam_hi < 0:
            raise OutOfImage("taste rectangle must sit strictly below lam = 0")

    @property
    def lam_span(self) -> float:
        return self.lam_hi - self.lam_lo

    def contains(self, kappa, lam) -> np.ndarray:
        kappa = np.asarray(kappa, dtype=float)
        lam = np.asarray(lam, dtype=float)
        return (
            (kappa >= self.kappa_lo)
            & (kappa <= self.kappa_hi)
            & (lam >= self.lam_lo)
            & (lam <= self.lam_hi)
        )

    def describe(self) -> dict:
        return {
            "kappa_lo": self.kappa_lo,
            "kappa_hi": self.kappa_hi,
            "lam_lo": self.lam_lo,
            "lam_hi": self.lam_hi,
        }


def bounding_rectangle(
    spec: LinearUtilitySpec, space: TypeSpace, n_boundary: int = 256, padding: float = 1e-9
) -> ReparamRectangle:
    """Taste-space hull of a dense boundary sample, slightly padded so the
    image of every interior point is strictly inside."""
    pts = space.boundary_sample(n_boundary)
    kappa, lam = to_kl(spec, pts[:, 0], pts[:, 1])
    return ReparamRectangle(
        kappa_lo=float(kappa.min() - padding),
        kappa_hi=float(kappa.max() + padding),
        lam_lo=float(lam.min() - padding),
        lam_hi=float(lam.max() + padding),
    )
