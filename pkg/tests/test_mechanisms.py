import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.exceptions import NotFittedError

from equiscreen.allocations import IncreasingAllocation, decompose_increasing, reconstruct_step
from equiscreen.checks import check_ic, check_ir
from equiscreen.exceptions import BadThreshold, NotMonotone
from equiscreen.mechanisms import GridMechanism, MixtureMechanism, ThresholdMechanism, choose_constants
from equiscreen.reparam import CurvatureBounds, ReparamRectangle


# ---------------------------------------------------------------------------
# constants
# ---------------------------------------------------------------------------


def test_choose_constants_affine_case():
    bounds = CurvatureBounds(m1=0.0, m2=0.0, raw_m1=0.0, raw_m2=0.0, safety=1.25, n_samples=101)
    rect = ReparamRectangle(0.0, 1.0, -1.0, -0.1)
    psi, zeta = choose_constants(bounds, rect, margin=0.25)
    assert zeta == pytest.approx(1.25e-6, rel=1e-12)
    assert psi == pytest.approx(1.0 + zeta * 0.9, rel=1e-12)


def test_choose_constants_s1_values(s1):
    th = ThresholdMechanism(eta_star=2.0).fit(s1)
    assert th.bounds_.m1 == pytest.approx(3.3979, abs=2e-3)
    assert th.bounds_.m2 == pytest.approx(6.2767, abs=2e-3)
    assert th.zeta_ == pytest.approx(7.846, abs=5e-3)
    assert th.psi_ == pytest.approx(11.18, abs=5e-3)
    assert th.zeta_ > th.bounds_.m2
    assert th.psi_ >= th.bounds_.m1 + th.zeta_ * th.rectangle_.lam_span


# ---------------------------------------------------------------------------
# threshold mechanisms
# ---------------------------------------------------------------------------


def test_ordeal_and_value_displays(s1):
    # psi=5, zeta=2, lam_hi=-0.1, lam=-1 below the threshold
    th = ThresholdMechanism(eta_star=2.0, constants=(5.0, 2.0)).fit(s1)
    lam_hi = th.rectangle_.lam_hi
    q_below = th._q_of(np.array([-1.0]), np.array([0.0]))[0]
    assert q_below == pytest.approx(5.0 - 2.0 * lam_hi + 2.0 * (-1.0), abs=1e-12)
    v = th.taste_value(0.0, -1.0, shifted=False)
    kappa_term = max(0.0, 0.0 - float(th.curve_.kappa_at(-1.0)))
    assert v == pytest.approx(kappa_term + 2.0 * 0.5 + (-1.0) * (5.0 - 2.0 * lam_hi), abs=1e-12)
    # the display values of the build contract, at lam_hi = -0.1 exactly
    assert 5.0 - 2.0 * (-0.1) + 2.0 * (-1.0) == pytest.approx(3.2)
    assert 2.0 * 0.5 + (-1.0) * (5.0 + 0.2) == pytest.approx(-4.2)


def test_threshold_allocation_sides(s1):
    for side, at_level in (("low", 0.0), ("high", 1.0)):
        th = ThresholdMechanism(eta_star=2.0, side=side).fit(s1)
        T = np.array([[0.5, 1.6], [0.5, 1.4], [0.5, 1.5]])  # eta = 2.1, 1.9, 2.0
        x = th.predict(T)
        assert x[0] == 1.0 and x[1] == 0.0
        assert x[2] == at_level


def test_threshold_rejects_levels_outside_range(s1):
    with pytest.raises(BadThreshold):
        ThresholdMechanism(eta_star=5.0).fit(s1)
    with pytest.raises(BadThreshold):
        ThresholdMechanism(eta_star=0.5).fit(s1)


def test_unfitted_access_raises(s1):
    th = ThresholdMechanism(eta_star=2.0)
    with pytest.raises(NotFittedError):
        th.predict(np.array([[0.5, 1.5]]))


def test_get_params_round_trip(s1):
    th = ThresholdMechanism(eta_star=2.0, side="high", margin=0.5)
    params = th.get_params()
    assert params["eta_star"] == 2.0 and params["side"] == "high"
    clone = ThresholdMechanism(**params).fit(s1)
    assert clone.side == "high"


def test_ordeal_rule_nonnegative(s1, rng):
    th = ThresholdMechanism(eta_star=2.0).fit(s1)
    r = th.rectangle_
    k = rng.uniform(r.kappa_lo, r.kappa_hi, 20_000)
    l = rng.uniform(r.lam_lo, r.lam_hi, 20_000)
    _, q = th.taste_gradient(k, l)
    assert q.min() >= 0.0


def test_subgradient_certificate(s1, rng):
    th = ThresholdMechanism(eta_star=2.0).fit(s1)
    r = th.rectangle_
    n = 20_000
    ka, la = rng.uniform(r.kappa_lo, r.kappa_hi, n), rng.uniform(r.lam_lo, r.lam_hi, n)
    kb, lb = rng.uniform(r.kappa_lo, r.kappa_hi, n), rng.uniform(r.lam_lo, r.lam_hi, n)
    x, q = th.taste_gradient(ka, la)
    lhs = th.taste_value(kb, lb)
    rhs = th.taste_value(ka, la) + x * (kb - ka) + q * (lb - la)
    assert float(np.min(lhs - rhs)) >= -1e-9


def test_equity_is_exact_on_iso_merit_pairs(s1, rng):
    th = ThresholdMechanism(eta_star=2.0).fit(s1)
    levels = rng.uniform(1.05, 2.95, 1000)
    a1 = rng.uniform(0.0, 1.0, 1000)
    a2 = rng.uniform(0.0, 1.0, 1000)
    b1 = s1.merit.beta_at(a1, levels)
    b2 = s1.merit.beta_at(a2, levels)
    x1 = th.predict(np.column_stack([a1, b1]))
    x2 = th.predict(np.column_stack([a2, b2]))
    assert np.array_equal(x1, x2)


def test_participation_shift(s1):
    th = ThresholdMechanism(eta_star=2.0).fit(s1)
    grid = s1.grid(31, 31)
    v = th.indirect_utility(grid.nodes())
    assert v.min() >= -1e-12
    r = th.rectangle_
    assert th.taste_value(r.kappa_lo, r.lam_lo) == pytest.approx(0.0, abs=1e-12)


def test_interp_curve_mode_still_certifies(s1, rng):
    th = ThresholdMechanism(eta_star=2.0, curve_mode="interp").fit(s1)
    grid = s1.grid(21, 21)
    assert check_ic(th, grid).max_gain <= 1e-8
    assert check_ir(th, grid).min_utility >= -1e-9


# ---------------------------------------------------------------------------
# allocation tables and decompositions
# ---------------------------------------------------------------------------


def test_decompose_constant_table():
    table = IncreasingAllocation.constant(0.4, (1.0, 3.0))
    comps = decompose_increasing(table, 5)
    assert len(comps) == 1
    assert comps[0].allocate_to_all and comps[0].weight == pytest.approx(0.4)


def test_decompose_single_threshold():
    table = IncreasingAllocation.threshold(2.0, (1.0, 3.0))
    comps = decompose_increasing(table, 1)
    assert len(comps) == 1
    assert comps[0].eta_star == 2.0 and comps[0].weight == pytest.approx(1.0)


def test_decompose_ramp_quantiles():
    table = IncreasingAllocation.piecewise_linear([1.0, 3.0], [0.0, 1.0])
    comps = decompose_increasing(table, 4)
    assert [c.eta_star for c in comps] == [1.5, 2.0, 2.5, 3.0]
    assert all(c.weight == pytest.approx(0.25) for c in comps)
    eta = np.linspace(1.0, 3.0, 4001)
    err = np.max(np.abs(reconstruct_step(comps, eta) - table(eta)))
    assert err <= 0.25 + 1e-12


def test_decompose_rejects_non_monotone():
    with pytest.raises(NotMonotone):
        IncreasingAllocation.piecewise_linear([1.0, 2.0, 3.0], [0.0, 0.7, 0.4])
    with pytest.raises(NotMonotone):
        IncreasingAllocation.piecewise_linear([1.0, 3.0], [0.0, 1.2])


@settings(max_examples=100, deadline=None)
@given(values=st.lists(st.floats(0.0, 1.0), min_size=2, max_size=8), n=st.integers(1, 40))
def test_decompose_reconstruction_error_bound(values, n):
    vals = np.sort(np.asarray(values))
    knots = np.linspace(1.0, 3.0, len(vals))
    table = IncreasingAllocation.piecewise_linear(knots, vals)
    comps = decompose_increasing(table, n)
    cuts = np.concatenate([[1.0], 1.0 + 2.0 * np.arange(1, n + 1) / n])
    max_step = max(
        float(table(hi) - table(lo)) for lo, hi in zip(cuts[:-1], cuts[1:])
    )
    eta = np.linspace(1.0, 3.0, 2001)
    err = float(np.max(np.abs(reconstruct_step(comps, eta) - table(eta))))
    assert err <= max_step + 1e-12
    total = sum(c.weight for c in comps)
    assert total == pytest.approx(float(table(3.0)), abs=1e-12)


def test_step_table_evaluation_is_right_continuous():
    table = IncreasingAllocation.step_table([1.5, 2.5], [0.3, 1.0], (1.0, 3.0))
    eta = np.array([1.4, 1.5, 2.4999, 2.5, 3.0])
    assert np.allclose(table(eta), [0.0, 0.3, 0.3, 1.0, 1.0])
    assert list(table.jump_levels()) == [1.5, 2.5]


# ---------------------------------------------------------------------------
# mixtures
# ---------------------------------------------------------------------------


def test_mixture_of_one_threshold_equals_the_threshold(s1):
    table = IncreasingAllocation.threshold(2.0, (1.0, 3.0))
    mix = MixtureMechanism(table, n_steps=1).fit(s1)
    single = ThresholdMechanism(eta_star=2.0, side="high").fit(s1)
    T = s1.grid(13, 13).nodes()
    bm, bt = mix.bundle(T), single.bundle(T)
    assert np.allclose(bm.x, bt.x, atol=0) and np.allclose(bm.p, bt.p, atol=1e-12)
    assert np.allclose(bm.q, bt.q, atol=1e-12)


def test_mixture_of_nothing_is_the_null_mechanism(s1):
    mix = MixtureMechanism(IncreasingAllocation.constant(0.0, (1.0, 3.0)), n_steps=3).fit(s1)
    b = mix.bundle(s1.grid(7, 7).nodes())
    assert not b.x.any() and not b.p.any() and not b.q.any()


def test_mixture_tracks_the_target(s1):
    table = IncreasingAllocation.piecewise_linear([1.0, 3.0], [0.0, 1.0])
    mix = MixtureMechanism(table, n_steps=100).fit(s1)
    nodes = s1.grid(101, 101).nodes()
    eta = s1.merit(nodes[:, 0], nodes[:, 1])
    assert np.max(np.abs(mix.predict(nodes) - table(eta))) <= 0.01 + 1e-12
    assert np.array_equal(mix.predict(nodes), mix.target_allocation(eta))


def test_mixture_ic_no_worse_than_components(s1):
    table = IncreasingAllocation.piecewise_linear([1.0, 3.0], [0.1, 0.9])
    mix = MixtureMechanism(table, n_steps=7).fit(s1)
    grid = s1.grid(9, 9)
    worst_component = max(
        check_ic(m, grid).max_gain for m in mix.mechanisms_ if m is not None
    )
    assert check_ic(mix, grid).max_gain <= max(worst_component, 0.0) + 1e-12


# ---------------------------------------------------------------------------
# grid-backed mechanisms
# ---------------------------------------------------------------------------


def test_grid_mechanism_rejects_off_grid_points(s1):
    grid = s1.grid(5, 5)
    n = grid.n_nodes
    gm = GridMechanism(s1, grid, np.zeros(n), np.zeros(n), np.zeros(n))
    with pytest.raises(ValueError):
        gm.bundle(np.array([[0.123, 1.456]]))
    b = gm.bundle(grid.nodes())
    assert b.x.shape == (n,)
