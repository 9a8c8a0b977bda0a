"""Iso-merit contour tracing over the type rectangle.

Merit is strictly increasing in both coordinates, so a level curve enters
the closed rectangle on its top or left edge and leaves on the bottom or
right edge, falling from northwest to southeast.  The tracer marches along
the tangent and corrects each step back onto the level set along the merit
gradient, to a root tolerance of 1e-10.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .exceptions import ContourEscape


@dataclass(frozen=True)
class ContourTrace:
    level: float
    points: np.ndarray   # (n, 2) alpha, beta; endpoints on the rectangle boundary
    slopes: np.ndarray   # d(beta)/d(alpha) along the curve = -eta_a/eta_b
    clipped: bool        # True when the trace was cut at the boundary (always, on a rectangle)

    def subsample(self, n: int) -> np.ndarray:
        idx = np.unique(np.linspace(0, len(self.points) - 1, n).round().astype(int))
        return self.points[idx]


def _edge_crossings(merit, space, level):
    """Boundary points where merit equals the level, as (alpha, beta) pairs."""
    a0, a1 = space.alpha_lo, space.alpha_hi
    b0, b1 = space.beta_lo, space.beta_hi
    crossings = []

    def scan(fixed_is_alpha, fixed, lo, hi):
        if fixed_is_alpha:
            f = lambda t: float(merit(fixed, t)) - level
        else:
            f = lambda t: float(merit(t, fixed)) - level
        flo, fhi = f(lo), f(hi)
        if flo == 0.0:
            crossings.append((fixed, lo) if fixed_is_alpha else (lo, fixed))
        elif fhi == 0.0:
            crossings.append((fixed, hi) if fixed_is_alpha else (hi, fixed))
        elif flo * fhi < 0:
            t = brentq(f, lo, hi, xtol=1e-14, rtol=8.9e-16)
            crossings.append((fixed, t) if fixed_is_alpha else (t, fixed))

    scan(True, a0, b0, b1)   # left edge
    scan(True, a1, b0, b1)   # right edge
    scan(False, b0, a0, a1)  # bottom edge
    scan(False, b1, a0, a1)  # top edge
    # dedupe corner hits
    uniq = []
    for c in crossings:
        if not any(abs(c[0] - u[0]) < 1e-12 and abs(c[1] - u[1]) < 1e-12 for u in uniq):
            uniq.append(c)
    return uniq


def trace_iso_merit(merit, space, level: float, n_steps: int = 1000, tol: float = 1e-10) -> ContourTrace:
    """March the merit level curve across the closed rectangle.

    Steps have length diameter/n_steps; each predictor step is corrected
    back onto the level set along the merit gradient until the residual is
    within ``tol``.  Raises ContourEscape when the level does not intersect
    the rectangle at all.
    """
    crossings = _edge_crossings(merit, space, level)
    if len(crossings) < 2:
        raise ContourEscape(f"merit level {level} does not cross the rectangle")
    # start at the most northwesterly crossing and march toward the other
    crossings.sort(key=lambda c: (c[0], -c[1]))
    start = np.array(crossings[0], dtype=float)
    goal = np.array(crossings[-1], dtype=float)

    h = space.diameter / n_steps
    pts = [start.copy()]
    point = start.copy()
    for _ in range(4 * n_steps):
        ga = float(merit.d_alpha(point[0], point[1]))
        gb = float(merit.d_beta(point[0], point[1]))
        norm = np.hypot(ga, gb)
        tangent = np.array([gb, -ga]) / norm  # heads southeast: d_alpha, d_beta > 0
        cand = point + h * tangent
        cand = _correct(merit, cand, level, tol)
        if not _inside(space, cand):
            # the arc of a strictly decreasing curve leaves through the other
            # edge crossing, which is already known exactly
            if np.hypot(*(goal - point)) > 1e-14:
                pts.append(goal)
            break
        pts.append(cand)
        point = cand
        if np.hypot(*(goal - point)) <= h:
            if np.hypot(*(goal - point)) > 1e-14:
                pts.append(goal)
            break
    points = np.array(pts)
    slopes = -(merit.d_alpha(points[:, 0], points[:, 1]) / merit.d_beta(points[:, 0], points[:, 1]))
    return ContourTrace(level=level, points=points, slopes=np.asarray(slopes), clipped=True)


def _correct(merit, point, level, tol):
    """Project back onto the level set along the merit gradient."""
    p = point.copy()
    for _ in range(50):
        resid = float(merit(p[0], p[1])) - level
        if abs(resid) <= tol:
            return p
        ga = float(merit.d_alpha(p[0], p[1]))
        gb = float(merit.d_beta(p[0], p[1]))
        norm2 = ga * ga + gb * gb
        p = p - resid * np.array([ga, gb]) / norm2
    raise ContourEscape("contour correction failed to converge")


def _inside(space, p, slack: float = 0.0):
    return (
        space.alpha_lo - slack <= p[0] <= space.alpha_hi + slack
        and space.beta_lo - slack <= p[1] <= space.beta_hi + slack
    )
