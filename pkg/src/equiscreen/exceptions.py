"""Exception hierarchy for the equiscreen package."""


class EquiscreenError(Exception):
    """Base class for all package errors."""


class MalformedScenario(EquiscreenError):
    """A scenario parameter lies outside its admissible set, or a scenario
    file cannot be parsed."""


class OutOfImage(EquiscreenError):
    """A requested ordeal/money taste value is not attained by any wealth
    level (bracket expansion failed)."""


class NoConvergence(EquiscreenError):
    """An iterative solve exhausted its iteration cap."""


class BadThreshold(EquiscreenError):
    """A threshold merit level lies outside the scenario's merit range."""


class NotMonotone(EquiscreenError):
    """An allocation table that must be weakly increasing is not."""


class NotKnifeEdge(EquiscreenError):
    """The merit function is not aligned with the ordeal-taste ratio, so a
    posted-ordeal mechanism cannot be equitable."""


class OrdealCapExceeded(EquiscreenError):
    """The ordeal required by a construction exceeds the declared cap."""


class NotEquitable(EquiscreenError):
    """A check that presumes an equitable mechanism received one that is not."""


class SolverFailure(EquiscreenError):
    """The LP solver reported a numerical breakdown."""


class DegenerateJump(EquiscreenError):
    """Jump data with coincident one-sided limits cannot define a slope."""


class ContourEscape(EquiscreenError):
    """An iso-merit contour left the tracing rectangle where it was expected
    to stay inside.  Tracing clips rather than fails; this error is raised
    only when no part of the contour intersects the rectangle."""
