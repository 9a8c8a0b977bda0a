"""Economic primitives: type space, utility specifications, merit, grids.

A :class:`Scenario` bundles everything a construction or a check needs: the
open type rectangle, a linear (and optionally nonlinear) utility
specification, the merit function, grid settings, and tolerances.  Scenarios
live in sectioned key=value text files; see ``scenario_from_text`` for the
exact keys.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import MalformedScenario
from .families import (
    CurveFamily,
    MeritFunction,
    ScalarFamily,
    SeparableUtility,
    merit_function,
    scalar_family,
)


# ---------------------------------------------------------------------------
# type space and grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TypeSpace:
    """Open rectangle of types (alpha, beta): need for money x need for good."""

    alpha_lo: float
    alpha_hi: float
    beta_lo: float
    beta_hi: float

    def __post_init__(self):
        if not self.alpha_lo < self.alpha_hi:
            raise MalformedScenario("type space needs alpha_lo < alpha_hi")
        if not 0 < self.beta_lo < self.beta_hi:
            raise MalformedScenario("type space needs 0 < beta_lo < beta_hi")

    @property
    def diameter(self) -> float:
        return math.hypot(self.alpha_hi - self.alpha_lo, self.beta_hi - self.beta_lo)

    def corners(self) -> np.ndarray:
        return np.array(
            [
                [self.alpha_lo, self.beta_lo],
                [self.alpha_lo, self.beta_hi],
                [self.alpha_hi, self.beta_lo],
                [self.alpha_hi, self.beta_hi],
            ]
        )

    def contains(self, alpha, beta, closed: bool = False) -> np.ndarray:
        alpha = np.asarray(alpha, dtype=float)
        beta = np.asarray(beta, dtype=float)
        if closed:
            return (
                (alpha >= self.alpha_lo)
                & (alpha <= self.alpha_hi)
                & (beta >= self.beta_lo)
                & (beta <= self.beta_hi)
            )
        return (
            (alpha > self.alpha_lo)
            & (alpha < self.alpha_hi)
            & (beta > self.beta_lo)
            & (beta < self.beta_hi)
        )

    def boundary_sample(self, n_per_edge: int = 128) -> np.ndarray:
        """Dense closed-boundary sample, corners included once per edge."""
        ta = np.linspace(self.alpha_lo, self.alpha_hi, n_per_edge)
        tb = np.linspace(self.beta_lo, self.beta_hi, n_per_edge)
        edges = [
            np.column_stack([ta, np.full_like(ta, self.beta_lo)]),
            np.column_stack([ta, np.full_like(ta, self.beta_hi)]),
            np.column_stack([np.full_like(tb, self.alpha_lo), tb]),
            np.column_stack([np.full_like(tb, self.alpha_hi), tb]),
        ]
        return np.vstack(edges)

    def describe(self) -> dict:
        return {
            "alpha_lo": self.alpha_lo,
            "alpha_hi": self.alpha_hi,
            "beta_lo": self.beta_lo,
            "beta_hi": self.beta_hi,
        }


@dataclass(frozen=True)
class Grid:
    """Uniform grid inset half a step from the open rectangle's boundary.

    Nodes are ordered alpha-major (row-major): node k = (alpha[k // n_beta],
    beta[k % n_beta]).  Because the rectangle is open, boundary values are
    never sampled.
    """

    alpha: np.ndarray
    beta: np.ndarray

    @property
    def n_alpha(self) -> int:
        return self.alpha.size

    @property
    def n_beta(self) -> int:
        return self.beta.size

    @property
    def n_nodes(self) -> int:
        return self.alpha.size * self.beta.size

    @property
    def step_alpha(self) -> float:
        return float(self.alpha[1] - self.alpha[0]) if self.n_alpha > 1 else 0.0

    @property
    def step_beta(self) -> float:
        return float(self.beta[1] - self.beta[0]) if self.n_beta > 1 else 0.0

    def nodes(self) -> np.ndarray:
        """(n_nodes, 2) array of (alpha, beta) pairs in node order."""
        aa, bb = np.meshgrid(self.alpha, self.beta, indexing="ij")
        return np.column_stack([aa.ravel(), bb.ravel()])

    def node(self, k: int) -> tuple[float, float]:
        return float(self.alpha[k // self.n_beta]), float(self.beta[k % self.n_beta])


def make_grid(space: TypeSpace, n_alpha: int, n_beta: int) -> Grid:
    """Uniform inset grid with deterministic alpha-major node ordering."""
    if n_alpha < 2 or n_beta < 2:
        raise MalformedScenario("grids need at least 2 nodes per axis")
    da = (space.alpha_hi - space.alpha_lo) / n_alpha
    db = (space.beta_hi - space.beta_lo) / n_beta
    alpha = space.alpha_lo + da * (np.arange(n_alpha) + 0.5)
    beta = space.beta_lo + db * (np.arange(n_beta) + 0.5)
    return Grid(alpha=alpha, beta=beta)


# ---------------------------------------------------------------------------
# utility specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearUtilitySpec:
    """Utility beta*x - w(alpha)*p - z(alpha)*q.

    w is the money-burden weight (increasing: payments hurt the poor more),
    z the ordeal-burden weight (decreasing: ordeals hurt the rich more).
    """

    w: ScalarFamily
    z: ScalarFamily

    def utility(self, alpha, beta, x, p, q):
        return (
            np.asarray(beta, dtype=float) * x
            - self.w(alpha) * p
            - self.z(alpha) * q
        )

    def as_nonlinear(self, q_bar: float) -> "NonlinearUtilitySpec":
        """Exact lift into the separable nonlinear form."""
        return NonlinearUtilitySpec(
            v=SeparableUtility(scalar_family("affine", 0.0, 1.0), CurveFamily("linear")),
            w=SeparableUtility(self.w, CurveFamily("linear")),
            z=SeparableUtility(self.z, CurveFamily("linear")),
            q_bar=q_bar,
        )

    def describe(self) -> dict:
        return {"kind": "linear", "w": self.w.describe(), "z": self.z.describe()}


@dataclass(frozen=True)
class NonlinearUtilitySpec:
    """Utility v(beta, x) - w(alpha, p) - z(alpha, q), separable components.

    Single-crossing signs (v_bx > 0, w_ap > 0, z_aq < 0) come from the scale
    factors' monotonicity; all components vanish at level 0 exactly.
    """

    v: SeparableUtility
    w: SeparableUtility
    z: SeparableUtility
    q_bar: float

    def __post_init__(self):
        if not self.q_bar > 0:
            raise MalformedScenario("ordeal cap q_bar must be positive")

    def utility(self, alpha, beta, x, p, q):
        return self.v(beta, x) - self.w(alpha, p) - self.z(alpha, q)

    def describe(self) -> dict:
        return {
            "kind": "nonlinear",
            "v": self.v.describe(),
            "w": self.w.describe(),
            "z": self.z.describe(),
            "q_bar": self.q_bar,
        }


def eval_utility(spec, type_point, bundle) -> float:
    """Utility of one type at one (x, p, q) bundle under either spec kind."""
    alpha, beta = type_point
    x, p, q = bundle
    return float(spec.utility(alpha, beta, x, p, q))


# ---------------------------------------------------------------------------
# scenario container
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Tolerances:
    ic: float = 1e-8
    ir: float = 1e-9
    monotone: float = 1e-9
    equity_bins: int = 12

    def describe(self) -> dict:
        return {
            "ic": self.ic,
            "ir": self.ir,
            "monotone": self.monotone,
            "equity_bins": self.equity_bins,
        }


@dataclass(frozen=True)
class Scenario:
    """A full problem instance."""

    space: TypeSpace
    merit: MeritFunction
    linear: LinearUtilitySpec | None = None
    nonlinear: NonlinearUtilitySpec | None = None
    q_bar: float | None = None
    n_alpha: int = 41
    n_beta: int = 41
    tolerances: Tolerances = field(default_factory=Tolerances)
    name: str = "scenario"

    def __post_init__(self):
        if self.linear is None and self.nonlinear is None:
            raise MalformedScenario("scenario declares neither a linear nor a nonlinear utility")

    @property
    def utility(self):
        """The utility specification checks evaluate against."""
        return self.linear if self.linear is not None else self.nonlinear

    def nonlinear_spec(self) -> NonlinearUtilitySpec:
        """The declared nonlinear spec, or the linear one lifted (requires
        an ordeal cap, since the bounded-ordeal results need one)."""
        if self.nonlinear is not None:
            return self.nonlinear
        if self.q_bar is None:
            raise MalformedScenario("lifting a linear spec needs an ordeal cap: set q_bar in [utility]")
        return self.linear.as_nonlinear(self.q_bar)

    def grid(self, n_alpha: int | None = None, n_beta: int | None = None) -> Grid:
        return make_grid(self.space, n_alpha or self.n_alpha, n_beta or self.n_beta)

    def merit_range(self) -> tuple[float, float]:
        return self.merit.range_on(self.space)

    def describe(self) -> dict:
        d = {
            "name": self.name,
            "domain": self.space.describe(),
            "utility": self.utility.describe(),
            "merit": self.merit.describe(),
            "grid": {"n_alpha": self.n_alpha, "n_beta": self.n_beta},
            "tolerances": self.tolerances.describe(),
        }
        if self.q_bar is not None and self.nonlinear is None:
            d["utility"]["q_bar"] = self.q_bar
        return d

    def canonical_text(self) -> str:
        return scenario_to_text(self)

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()

    def with_overrides(self, overrides: dict[str, str]) -> "Scenario":
        """Apply ``section.key=value`` overrides by re-parsing the canonical
        text with the relevant entries replaced."""
        if not overrides:
            return self
        parser = _parser()
        parser.read_string(self.canonical_text())
        for dotted, value in overrides.items():
            if "." not in dotted:
                raise MalformedScenario(f"override {dotted!r} must look like section.key=value")
            section, key = dotted.split(".", 1)
            if not parser.has_section(section):
                parser.add_section(section)
            parser.set(section, key, value)
        out = io.StringIO()
        parser.write(out)
        return scenario_from_text(out.getvalue(), name=self.name)


# ---------------------------------------------------------------------------
# scenario text format
# ---------------------------------------------------------------------------

def _parser() -> configparser.ConfigParser:
    p = configparser.ConfigParser(inline_comment_prefixes=("#",))
    p.optionxform = str  # keys are case-sensitive
    return p


def _get(section, key, cast, where, default=None):
    if key not in section:
        if default is not None:
            return default
        raise MalformedScenario(f"missing key {key!r} in section [{where}]")
    raw = section[key]
    try:
        return cast(raw)
    except ValueError as exc:
        raise MalformedScenario(f"bad value for {where}.{key}: {raw!r}") from exc


def _scalar_from(section, prefix, where) -> ScalarFamily:
    kind = _get(section, f"{prefix}_family", str, where)
    a = _get(section, f"{prefix}_a", float, where)
    b = _get(section, f"{prefix}_b", float, where)
    return scalar_family(kind, a, b)


def _curve_from(section, prefix, where) -> CurveFamily:
    kind = _get(section, f"{prefix}_curve", str, where, default="linear")
    c = _get(section, f"{prefix}_curve_c", float, where, default=1.0)
    return CurveFamily(kind, c)


def scenario_from_text(text: str, name: str = "scenario") -> Scenario:
    """Parse the sectioned key=value scenario format.

    Sections and keys::

        [domain]      alpha_lo, alpha_hi, beta_lo, beta_hi
        [utility]     kind = linear | nonlinear
                      linear:    w_family, w_a, w_b, z_family, z_a, z_b
                                 q_bar (optional ordeal cap)
                      nonlinear: v_scale_family/_a/_b, v_curve, v_curve_c,
                                 w_scale_*, z_scale_* (same pattern), q_bar
        [merit]       family = weighted_sum (a, b) | product (c)
        [grid]        n_alpha, n_beta
        [tolerances]  ic, ir, monotone, equity_bins   (all optional)

    Syntax errors cite line numbers; missing or malformed keys cite the
    section and key.
    """
    parser = _parser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise MalformedScenario(f"scenario parse error: {exc}") from exc

    for required in ("domain", "utility", "merit"):
        if not parser.has_section(required):
            raise MalformedScenario(f"missing section [{required}]")

    dom = parser["domain"]
    space = TypeSpace(
        _get(dom, "alpha_lo", float, "domain"),
        _get(dom, "alpha_hi", float, "domain"),
        _get(dom, "beta_lo", float, "domain"),
        _get(dom, "beta_hi", float, "domain"),
    )

    util = parser["utility"]
    kind = _get(util, "kind", str, "utility")
    linear = nonlinear = None
    q_bar = _get(util, "q_bar", float, "utility", default=math.nan)
    q_bar = None if math.isnan(q_bar) else q_bar
    if kind == "linear":
        linear = LinearUtilitySpec(
            w=_scalar_from(util, "w", "utility"),
            z=_scalar_from(util, "z", "utility"),
        )
    elif kind == "nonlinear":
        if q_bar is None:
            raise MalformedScenario("nonlinear utility requires q_bar in [utility]")
        nonlinear = NonlinearUtilitySpec(
            v=SeparableUtility(_scalar_from(util, "v_scale", "utility"), _curve_from(util, "v", "utility")),
            w=SeparableUtility(_scalar_from(util, "w_scale", "utility"), _curve_from(util, "w", "utility")),
            z=SeparableUtility(_scalar_from(util, "z_scale", "utility"), _curve_from(util, "z", "utility")),
            q_bar=q_bar,
        )
    else:
        raise MalformedScenario(f"utility.kind must be linear or nonlinear, got {kind!r}")

    mer = parser["merit"]
    family = _get(mer, "family", str, "merit")
    if family == "weighted_sum":
        merit = merit_function("weighted_sum", a=_get(mer, "a", float, "merit"), b=_get(mer, "b", float, "merit"))
    elif family == "product":
        merit = merit_function("product", c=_get(mer, "c", float, "merit"))
    else:
        raise MalformedScenario(f"unknown merit family {family!r}")

    n_alpha, n_beta = 41, 41
    if parser.has_section("grid"):
        n_alpha = _get(parser["grid"], "n_alpha", int, "grid", default=41)
        n_beta = _get(parser["grid"], "n_beta", int, "grid", default=41)

    tol = Tolerances()
    if parser.has_section("tolerances"):
        t = parser["tolerances"]
        tol = Tolerances(
            ic=_get(t, "ic", float, "tolerances", default=tol.ic),
            ir=_get(t, "ir", float, "tolerances", default=tol.ir),
            monotone=_get(t, "monotone", float, "tolerances", default=tol.monotone),
            equity_bins=_get(t, "equity_bins", int, "tolerances", default=tol.equity_bins),
        )

    return Scenario(
        space=space,
        merit=merit,
        linear=linear,
        nonlinear=nonlinear,
        q_bar=q_bar,
        n_alpha=n_alpha,
        n_beta=n_beta,
        tolerances=tol,
        name=name,
    )


def scenario_from_file(path, name: str | None = None) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    import os

    return scenario_from_text(text, name=name or os.path.splitext(os.path.basename(path))[0])


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def scenario_to_text(sc: Scenario) -> str:
    """Canonical round-trippable dump of a scenario."""
    lines = ["[domain]"]
    for k, v in sc.space.describe().items():
        lines.append(f"{k} = {_fmt(v)}")
    lines.append("")
    lines.append("[utility]")
    if sc.linear is not None:
        lines.append("kind = linear")
        for role in ("w", "z"):
            fam = getattr(sc.linear, role)
            lines.append(f"{role}_family = {fam.kind}")
            lines.append(f"{role}_a = {_fmt(fam.a)}")
            lines.append(f"{role}_b = {_fmt(fam.b)}")
        if sc.q_bar is not None:
            lines.append(f"q_bar = {_fmt(sc.q_bar)}")
    else:
        lines.append("kind = nonlinear")
        for role in ("v", "w", "z"):
            comp = getattr(sc.nonlinear, role)
            lines.append(f"{role}_scale_family = {comp.scale.kind}")
            lines.append(f"{role}_scale_a = {_fmt(comp.scale.a)}")
            lines.append(f"{role}_scale_b = {_fmt(comp.scale.b)}")
            lines.append(f"{role}_curve = {comp.curve.kind}")
            lines.append(f"{role}_curve_c = {_fmt(comp.curve.c)}")
        lines.append(f"q_bar = {_fmt(sc.nonlinear.q_bar)}")
    lines.append("")
    lines.append("[merit]")
    md = sc.merit.describe()
    lines.append(f"family = {md['family']}")
    if md["family"] == "weighted_sum":
        lines.append(f"a = {_fmt(md['a'])}")
        lines.append(f"b = {_fmt(md['b'])}")
    else:
        lines.append(f"c = {_fmt(md['a'])}")
    lines.append("")
    lines.append("[grid]")
    lines.append(f"n_alpha = {sc.n_alpha}")
    lines.append(f"n_beta = {sc.n_beta}")
    lines.append("")
    lines.append("[tolerances]")
    for k, v in sc.tolerances.describe().items():
        lines.append(f"{k} = {_fmt(v)}")
    lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# standing-assumption validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    witness: dict | None = None

    def describe(self) -> dict:
        d = {"name": self.name, "pass": self.passed, "detail": self.detail}
        if self.witness is not None:
            d["witness"] = self.witness
        return d


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[CheckResult, ...]
    merit_range: tuple[float, float]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def describe(self) -> dict:
        return {
            "pass": self.passed,
            "merit_range": list(self.merit_range),
            "checks": [c.describe() for c in self.checks],
        }


def _sample_rectangle(space: TypeSpace, n: int = 33):
    a = np.linspace(space.alpha_lo, space.alpha_hi, n)
    b = np.linspace(space.beta_lo, space.beta_hi, n)
    aa, bb = np.meshgrid(a, b, indexing="ij")
    return aa.ravel(), bb.ravel()


def _sign_check(name, values, alphas, betas, want_positive, detail):
    bad = values <= 0 if want_positive else values >= 0
    if not bad.any():
        return CheckResult(name, True, detail)
    k = int(np.argmax(bad))
    witness = {"alpha": float(alphas[k]), "beta": float(betas[k]), "value": float(values[k])}
    return CheckResult(name, False, detail + " (violated)", witness)


def validate_scenario(scenario: Scenario, n_sample: int = 33) -> ValidationReport:
    """Check the standing assumptions on a closed-rectangle sample.

    Positivity and monotonicity of the burden weights, strict positivity of
    the merit gradient (with its analytic rectangle lower bound), the
    surjectivity of the ordeal/money taste ratio onto the negative reals,
    and -- for nonlinear specs -- the single-crossing signs and the exact
    vanishing of all components at level zero.
    """
    sp = scenario.space
    alphas, betas = _sample_rectangle(sp, n_sample)
    checks: list[CheckResult] = []

    if scenario.linear is not None:
        lin = scenario.linear
        for fam, role, lo_a, hi_a in (
            (lin.w, "w", sp.alpha_lo, sp.alpha_hi),
            (lin.z, "z", sp.alpha_lo, sp.alpha_hi),
        ):
            dom = fam.natural_domain()
            inside = dom[0] < lo_a and hi_a < dom[1]
            checks.append(
                CheckResult(
                    f"{role} positive on domain",
                    bool(inside),
                    f"rectangle alpha-range within the {fam.kind} family's positivity domain "
                    f"({dom[0]}, {dom[1]})",
                    None if inside else {"alpha_lo": lo_a, "alpha_hi": hi_a},
                )
            )
        a_line = np.linspace(sp.alpha_lo, sp.alpha_hi, n_sample * n_sample)
        checks.append(_sign_check("w' > 0", lin.w.d1(a_line), a_line, a_line, True, "money burden rises with need for money"))
        checks.append(_sign_check("z' < 0", lin.z.d1(a_line), a_line, a_line, False, "ordeal burden falls with need for money"))
        # Taste-ratio surjectivity: -z/w is strictly decreasing in its
        # natural domain and sweeps all of (0, inf) there, so the ordeal/money
        # taste -z/w attains every negative value.  With the rectangle inside
        # both positivity domains this holds for every admissible family pair.
        dom_ok = all(c.passed for c in checks if c.name.endswith("positive on domain"))
        mono_ok = checks[-2].passed and checks[-1].passed
        checks.append(
            CheckResult(
                "taste ratio spans the negative reals",
                bool(dom_ok and mono_ok),
                "z/w is strictly decreasing with limits (inf, 0) at the ends of the families' "
                "shared positivity domain; the inverse wealth map is defined for every negative taste",
            )
        )

    if scenario.nonlinear is not None:
        nl = scenario.nonlinear
        levels = np.linspace(1e-3, 1.0, 7)
        q_levels = levels * nl.q_bar
        p_levels = levels * 3.0
        for comp, role, theta, lvls, cross_positive in (
            (nl.v, "v", betas, levels, True),
            (nl.w, "w", alphas, p_levels, True),
            (nl.z, "z", alphas, q_levels, False),
        ):
            th = np.repeat(theta[:: max(1, theta.size // 64)], lvls.size)
            lv = np.tile(lvls, th.size // lvls.size)
            d_level = comp.d_level(th, lv)
            checks.append(_sign_check(f"{role}_level > 0", d_level, th, lv, True, f"{role} strictly increasing in its level"))
            cross = comp.d_theta_level(th, lv)
            checks.append(
                _sign_check(
                    f"{role} cross-partial sign",
                    cross if cross_positive else -cross,
                    th,
                    lv,
                    True,
                    f"single crossing: {role}'s marginal level burden is monotone in the type",
                )
            )
            at_zero = np.max(np.abs(comp(th, np.zeros_like(th))))
            checks.append(
                CheckResult(
                    f"{role}(., 0) = 0",
                    bool(at_zero == 0.0),
                    f"{role} vanishes exactly at level zero (max |value| = {at_zero})",
                )
            )

    g_lo_a, g_lo_b = scenario.merit.gradient_lower_bounds(sp)
    checks.append(
        CheckResult(
            "merit gradient bounded below",
            bool(g_lo_a > 0 and g_lo_b > 0),
            f"analytic lower bounds on the rectangle: d_alpha >= {g_lo_a}, d_beta >= {g_lo_b}",
        )
    )
    checks.append(_sign_check("eta_alpha > 0", scenario.merit.d_alpha(alphas, betas), alphas, betas, True, "merit increases with need for money"))
    checks.append(_sign_check("eta_beta > 0", scenario.merit.d_beta(alphas, betas), alphas, betas, True, "merit increases with need for the good"))

    if scenario.q_bar is not None:
        checks.append(CheckResult("q_bar > 0", scenario.q_bar > 0, f"ordeal cap {scenario.q_bar}"))

    return ValidationReport(checks=tuple(checks), merit_range=scenario.merit.range_on(sp))


# ---------------------------------------------------------------------------
# canonical scenarios used across tests and docs
# ---------------------------------------------------------------------------


def canonical_scenario(name: str = "s1") -> Scenario:
    """Built-in scenarios: exp/exp burden weights on (0,1) x (1,2).

    ``s1``          weighted-sum merit alpha + beta
    ``s1_product``  product merit beta * exp(alpha) (aligned with beta/z)
    ``s1_flat``     weighted-sum merit alpha + 2*beta, ordeal cap 5
    """
    space = TypeSpace(0.0, 1.0, 1.0, 2.0)
    lin = LinearUtilitySpec(w=scalar_family("exp", 1.0, 1.0), z=scalar_family("exp", 1.0, -1.0))
    if name == "s1":
        return Scenario(space=space, merit=merit_function("weighted_sum", a=1.0, b=1.0), linear=lin, q_bar=5.0, name="s1")
    if name == "s1_product":
        return Scenario(space=space, merit=merit_function("product", c=1.0), linear=lin, q_bar=5.0, name="s1_product")
    if name == "s1_flat":
        return Scenario(space=space, merit=merit_function("weighted_sum", a=1.0, b=2.0), linear=lin, q_bar=5.0, name="s1_flat")
    raise MalformedScenario(f"unknown canonical scenario {name!r}")
