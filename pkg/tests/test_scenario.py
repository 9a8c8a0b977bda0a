import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from equiscreen.exceptions import MalformedScenario
from equiscreen.families import merit_function, scalar_family
from equiscreen.scenario import (
    LinearUtilitySpec,
    Scenario,
    TypeSpace,
    eval_utility,
    make_grid,
    scenario_from_text,
    scenario_to_text,
    validate_scenario,
)


def test_eval_utility_examples(s1):
    spec = s1.linear
    assert eval_utility(spec, (0.0, 1.0), (0.0, 0.0, 0.0)) == 0.0
    assert eval_utility(spec, (0.0, 1.0), (1.0, 0.5, 0.25)) == pytest.approx(0.25, abs=1e-15)
    expected = 2.0 - math.e - math.exp(-1.0)
    assert eval_utility(spec, (1.0, 2.0), (1.0, 1.0, 1.0)) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(
    c=st.floats(0.0, 1.0),
    alpha=st.floats(0.0, 1.0),
    beta=st.floats(1.0, 2.0),
    b1=st.tuples(st.floats(0, 1), st.floats(-2, 2), st.floats(0, 3)),
    b2=st.tuples(st.floats(0, 1), st.floats(-2, 2), st.floats(0, 3)),
)
def test_linear_utility_is_affine_in_the_bundle(c, alpha, beta, b1, b2):
    spec = LinearUtilitySpec(w=scalar_family("exp", 1.0, 1.0), z=scalar_family("exp", 1.0, -1.0))
    mix = tuple(c * u + (1 - c) * v for u, v in zip(b1, b2))
    lhs = eval_utility(spec, (alpha, beta), mix)
    rhs = c * eval_utility(spec, (alpha, beta), b1) + (1 - c) * eval_utility(spec, (alpha, beta), b2)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_make_grid_inset_nodes(s1):
    g = make_grid(s1.space, 3, 3)
    assert g.n_nodes == 9
    assert np.allclose(g.alpha, [1 / 6, 1 / 2, 5 / 6])
    g2 = make_grid(s1.space, 2, 2)
    assert np.allclose(g2.alpha, [0.25, 0.75])
    assert np.allclose(g2.beta, [1.25, 1.75])
    with pytest.raises(MalformedScenario):
        make_grid(s1.space, 1, 3)


def test_grid_ordering_is_alpha_major(s1):
    g = make_grid(s1.space, 3, 4)
    nodes = g.nodes()
    k = 1 * 4 + 2
    assert nodes[k, 0] == g.alpha[1] and nodes[k, 1] == g.beta[2]
    assert g.node(k) == (g.alpha[1], g.beta[2])


def test_type_space_invariants():
    with pytest.raises(MalformedScenario):
        TypeSpace(1.0, 0.0, 1.0, 2.0)
    with pytest.raises(MalformedScenario):
        TypeSpace(0.0, 1.0, -1.0, 2.0)
    with pytest.raises(MalformedScenario):
        TypeSpace(0.0, 1.0, 2.0, 1.0)


def test_validate_canonical_scenario(s1):
    report = validate_scenario(s1)
    assert report.passed
    assert report.merit_range == (1.0, 3.0)


def test_validate_flags_wrong_ordeal_slope(s1):
    bad = Scenario(
        space=s1.space,
        merit=s1.merit,
        linear=LinearUtilitySpec(w=scalar_family("exp", 1.0, 1.0), z=scalar_family("exp", 1.0, 1.0)),
        name="bad_z",
    )
    report = validate_scenario(bad)
    failing = {c.name for c in report.failures()}
    assert "z' < 0" in failing
    witness = next(c.witness for c in report.failures() if c.name == "z' < 0")
    assert witness is not None


def test_decreasing_merit_is_rejected_at_construction():
    # eta = alpha - beta would violate the positive-gradient requirement;
    # the family itself refuses the parameters
    with pytest.raises(MalformedScenario):
        merit_function("weighted_sum", a=1.0, b=-1.0)


def test_merit_range_is_exact_at_corners(s1_flat):
    lo, hi = s1_flat.merit_range()
    assert lo == 0.0 + 2.0 * 1.0 and hi == 1.0 + 2.0 * 2.0


def test_scenario_text_round_trip(s1):
    text = scenario_to_text(s1)
    sc = scenario_from_text(text, name=s1.name)
    assert scenario_to_text(sc) == text
    assert sc.sha256() == s1.sha256()


def test_scenario_parse_errors_cite_location():
    with pytest.raises(MalformedScenario, match="line"):
        scenario_from_text("[domain]\nalpha_lo 0.0\n")
    with pytest.raises(MalformedScenario, match=r"beta_hi.*\[domain\]|\[domain\].*beta_hi"):
        scenario_from_text("[domain]\nalpha_lo = 0.0\nalpha_hi = 1.0\nbeta_lo = 1.0\n[utility]\n[merit]\n")
    with pytest.raises(MalformedScenario, match="utility"):
        scenario_from_text(
            "[domain]\nalpha_lo = 0\nalpha_hi = 1\nbeta_lo = 1\nbeta_hi = 2\n"
        )


def test_scenario_overrides(s1):
    sc = s1.with_overrides({"grid.n_alpha": "6", "merit.b": "2.0"})
    assert sc.n_alpha == 6
    assert sc.merit.b == 2.0
    assert sc.sha256() != s1.sha256()
    with pytest.raises(MalformedScenario):
        s1.with_overrides({"n_alpha": "6"})


def test_nonlinear_scenario_round_trip():
    text = """
[domain]
alpha_lo = 0.0
alpha_hi = 1.0
beta_lo = 1.0
beta_hi = 2.0

[utility]
kind = nonlinear
v_scale_family = affine
v_scale_a = 0.0
v_scale_b = 1.0
v_curve = expm1
v_curve_c = 1.0
w_scale_family = exp
w_scale_a = 1.0
w_scale_b = 1.0
w_curve = linear
w_curve_c = 1.0
z_scale_family = exp
z_scale_a = 1.0
z_scale_b = -1.0
z_curve = expm1
z_curve_c = 0.5
q_bar = 5.0

[merit]
family = weighted_sum
a = 1.0
b = 2.0
"""
    sc = scenario_from_text(text)
    assert sc.nonlinear is not None
    assert validate_scenario(sc).passed
    again = scenario_from_text(scenario_to_text(sc))
    assert scenario_to_text(again) == scenario_to_text(sc)


def test_lift_requires_ordeal_cap(s1):
    sc = Scenario(space=s1.space, merit=s1.merit, linear=s1.linear, q_bar=None)
    with pytest.raises(MalformedScenario, match="q_bar"):
        sc.nonlinear_spec()
    lifted = s1.nonlinear_spec()
    a, b = 0.3, 1.7
    for x, p, q in [(0.5, 0.2, 1.0), (1.0, -1.0, 0.0)]:
        assert lifted.utility(a, b, x, p, q) == pytest.approx(
            s1.linear.utility(a, b, x, p, q), abs=1e-14
        )
