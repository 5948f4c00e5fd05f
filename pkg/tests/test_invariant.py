import pytest

from manyq.distributions import Erlang, Exponential, PiecewiseLinearCdf, Uniform
from manyq.fluid import EquilibriumInitial, FluidInput, solve_fluid
from manyq.invariant import compute_B_lambda, invariant_manifold, verify_fixed_point

FLAT = PiecewiseLinearCdf(((0.0, 0.0), (1.0, 0.5), (2.0, 0.5), (3.0, 1.0)))


def test_exponential_patience_closed_form():
    # strictly increasing Gr: unique point x* = 1 + (lam - 1)/gamma
    for lam, gamma in ((2.0, 1.0), (1.5, 0.5), (3.0, 2.0)):
        b_l, b_r = compute_B_lambda(lam, Exponential(gamma))
        x_star = 1.0 + (lam - 1.0) / gamma
        assert b_l == pytest.approx(x_star, abs=1e-8)
        assert b_r == pytest.approx(x_star, abs=1e-8)


def test_critical_load_is_singleton_at_one():
    b_l, b_r = compute_B_lambda(1.0, Uniform(0.0, 2.0))
    assert b_l == pytest.approx(1.0, abs=1e-8)
    assert b_r == pytest.approx(1.0, abs=1e-8)


def test_flat_patience_gives_interval():
    # Gr has a flat stretch at level 1/2 = (lam-1)/lam for lam = 2
    b_l, b_r = compute_B_lambda(2.0, FLAT)
    assert b_l == pytest.approx(2.5, abs=1e-6)
    assert b_r == pytest.approx(3.5, abs=1e-6)


def test_compute_requires_critical_or_above():
    with pytest.raises(ValueError):
        compute_B_lambda(0.9, Exponential(1.0))


def test_manifold_subcritical():
    out = invariant_manifold(0.5, Erlang(2, 2.0), Exponential(1.0))
    assert out["regime"] == "subcritical"
    assert out["unique"] and out["x_star"] == pytest.approx(0.5)
    assert out["nu_mass"] == pytest.approx(0.5)
    assert out["eta_mass"] == pytest.approx(0.5)


def test_manifold_supercritical_unique_and_not():
    out = invariant_manifold(2.0, Exponential(1.0), Exponential(1.0))
    assert out["regime"] == "supercritical"
    assert out["unique"] and out["x_star"] == pytest.approx(2.0, abs=1e-8)
    assert out["nu_mass"] == pytest.approx(1.0)
    assert out["eta_mass"] == pytest.approx(2.0)

    out = invariant_manifold(2.0, Exponential(1.0), FLAT)
    assert not out["unique"]
    assert out["x_star"] is None
    assert out["b_r"] - out["b_l"] == pytest.approx(1.0, abs=1e-5)


def test_manifold_without_abandonment():
    out = invariant_manifold(0.5, Exponential(1.0), None)
    assert out["unique"] and out["x_star"] == pytest.approx(0.5)
    assert out["eta_mass"] == float("inf")
    for lam in (1.0, 2.0):
        with pytest.raises(ValueError):
            invariant_manifold(lam, Exponential(1.0), None)


def test_fixed_point_has_no_drift():
    for lam in (0.5, 2.0):
        x_star = lam if lam < 1 else 1.0 + (lam - 1.0)
        out = verify_fixed_point(lam, Exponential(1.0), Exponential(1.0), x_star, horizon=10.0)
        assert out["x_defect"] <= 1e-2
        assert out["nu_defect"] <= 1e-2
        assert out["eta_defect"] <= 1e-8
    # at rest the reneging rate balances the surplus inflow
    out = verify_fixed_point(2.0, Exponential(1.0), Exponential(1.0), 2.0, horizon=5.0)
    assert out["reneging_rate_end"] == pytest.approx(1.0, abs=1e-2)


def test_perturbed_state_drifts():
    # x = 2.4 is not in B(2) for exp(1) patience (x* = 2), so X drifts away
    out = verify_fixed_point(2.0, Exponential(1.0), Exponential(1.0), 2.4, horizon=10.0)
    assert out["x_defect"] > 0.05


def test_reneging_rate_matches_surplus_anywhere_in_interval():
    # flat-patience interval: the fluid rests at both endpoints and midpoint
    srv, lam = Exponential(1.0), 2.0
    for x in (2.5, 3.0, 3.5):
        inp = FluidInput(
            x, EquilibriumInitial(srv, 1.0), EquilibriumInitial(FLAT, lam), lam, srv, FLAT
        )
        sol = solve_fluid(inp, 5.0, 1e-3)
        assert abs(sol.X[-1] - x) <= 1e-2
        rate = (sol.R[-1] - sol.R[-1001]) / (1000 * sol.dt)
        assert rate == pytest.approx(lam - 1.0, abs=1e-2)
