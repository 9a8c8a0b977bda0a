"""equiscreen: a numerical laboratory for equitable screening mechanisms.

Construct mechanisms that allocate a good under an equal-merit/equal-share
constraint (threshold mechanisms and their mixtures, posted ordeals,
observable-wealth menus), verify them by brute force (incentive
compatibility, participation, equity, monotonicity, convexity
certificates), probe single-instrument impossibility by linear
programming, and score equity violations with an angular fairness metric.
"""

__version__ = "0.1.0"

from .allocations import IncreasingAllocation, decompose_increasing
from .checks import (
    check_convexity,
    check_equity,
    check_ic,
    check_ir,
    check_merit_monotone,
)
from .exceptions import (
    BadThreshold,
    ContourEscape,
    DegenerateJump,
    EquiscreenError,
    MalformedScenario,
    NoConvergence,
    NotEquitable,
    NotKnifeEdge,
    NotMonotone,
    OrdealCapExceeded,
    OutOfImage,
    SolverFailure,
)
from .fairness import (
    AllocationField,
    ComparisonReport,
    JumpData,
    ViolationReport,
    angle,
    angle_distance,
    compare_instruments,
    global_violation,
    iso_slopes,
    local_violation,
    payment_lower_bound,
    slope_bound_M,
)
from .families import CurveFamily, MeritFunction, ScalarFamily, SeparableUtility, merit_function, scalar_family
from .mechanisms import Bundle, GridMechanism, MixtureMechanism, ThresholdMechanism, choose_constants
from .probes import (
    ProbeResult,
    knife_edge_diagnostic,
    probe_contour_classes,
    probe_single_instrument,
    two_point_menu_diagnostic,
)
from .reparam import (
    CurvatureBounds,
    ReparamRectangle,
    ThresholdCurve,
    alpha_of_lambda,
    bounding_rectangle,
    build_threshold_curve,
    curvature_bounds,
    kappa_star,
    merit_kl,
    to_kl,
)
from .scenario import (
    Grid,
    LinearUtilitySpec,
    NonlinearUtilitySpec,
    Scenario,
    Tolerances,
    TypeSpace,
    ValidationReport,
    canonical_scenario,
    eval_utility,
    make_grid,
    scenario_from_file,
    scenario_from_text,
    scenario_to_text,
    validate_scenario,
)
from .single_instrument import (
    ConditionalMechanism,
    KnifeEdgeOrdealMechanism,
    OneStepOrdealMechanism,
    PaymentScreenMechanism,
)

__all__ = [name for name in dir() if not name.startswith("_")]
