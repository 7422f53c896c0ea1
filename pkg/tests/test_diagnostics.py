import math
from dataclasses import replace

import numpy as np
import pytest

from debyescreen import (
    DomainError,
    RadialField,
    RadialGrid,
    SolverConfig,
    check_charge_neutrality,
    check_comparison,
    check_pointwise_bounds,
    fit_decay_rate,
    phi_sigma,
    poisson_weak_residual,
    solve,
)
from debyescreen.diagnostics import Bump, default_bumps
from debyescreen.solver import a_priori_bound


@pytest.mark.parametrize("sigma", [0.25, 1.0, 4.0])
def test_fitter_is_exact_on_the_kernel(sigma):
    grid = RadialGrid.for_sigma(sigma)
    rate, r2 = fit_decay_rate(RadialField(grid, 3.0 * phi_sigma(sigma, grid.r)), sigma)
    assert rate == pytest.approx(math.sqrt(sigma), abs=1e-10)
    assert r2 == pytest.approx(1.0, abs=1e-12)


def test_fitter_rejects_nonpositive_window():
    grid = RadialGrid.for_sigma(1.0, n=400)
    vals = phi_sigma(1.0, grid.r)
    vals[grid.r > 8] = 0.0
    with pytest.raises(DomainError):
        fit_decay_rate(RadialField(grid, vals), 1.0)


def test_fit_window_must_lie_on_grid():
    grid = RadialGrid.for_sigma(1.0, n=400)
    with pytest.raises(DomainError):
        fit_decay_rate(RadialField(grid, phi_sigma(1.0, grid.r)), 1.0, window=(5.0, 40.0))


def test_debye_length_at_higher_temperature(solved):
    assert solved("maxwellian", 1.0, T=4.0).fitted_decay_rate == pytest.approx(0.5, rel=0.02)


@pytest.mark.parametrize("name", ["maxwellian", "power_law"])
def test_bounds_pass_for_unit_charge(solved, name):
    rep = check_pointwise_bounds(solved(name, 1.0))
    assert rep.passed, rep.failed()
    names = [r["name"] for r in rep.records]
    assert names == ["Q_lower", "R_a_priori", "R_exponential", "Q_exponential", "rho_screening"]
    assert set(rep.constants) == {"C_R", "C_Q", "c_Q", "C_rho"}


def test_corrupted_node_fails_a_priori_check(solved):
    res = solved("maxwellian", 1.0)
    # R sits far below the a priori bound, so lift one node 10% above it
    i = 700
    bad = res.R.values.copy()
    bad[i] = 1.1 * a_priori_bound(res.sigma, res.theta, res.grid.r[i])
    broken = replace(res, R=RadialField(res.grid, bad))
    rep = check_pointwise_bounds(broken)
    record = next(r for r in rep.records if r["name"] == "R_a_priori")
    assert not record["pass"]
    assert record["location_r"] == res.grid.r[i]


def test_zero_charge_bounds_are_tight(maxwellian):
    res = solve(maxwellian, SolverConfig(theta=0.0, n=300))
    rep = check_pointwise_bounds(res)
    assert rep.passed
    assert all(r["max_violation"] == 0.0 for r in rep.records)
    assert check_charge_neutrality(res) == 0.0


def test_charge_neutrality_and_refinement(maxwellian, solved):
    coarse = check_charge_neutrality(solved("maxwellian", 1.0))
    fine = check_charge_neutrality(solved("maxwellian", 1.0, n=3999))
    assert coarse <= 1e-3
    assert coarse / fine >= 3.0


def test_poisson_residual_on_default_bumps(solved):
    out = poisson_weak_residual(solved("maxwellian", 1.0))
    assert len(out["per_test_function"]) == 6
    assert out["per_test_function"][0]["support"][0] == 0.0
    assert out["max_residual"] <= 1e-6


def test_poisson_residual_refinement(solved):
    coarse = poisson_weak_residual(solved("maxwellian", 1.0))["max_residual"]
    fine = poisson_weak_residual(solved("maxwellian", 1.0, n=3999))["max_residual"]
    assert coarse / fine >= 3.0


def test_far_field_bump_sees_nothing(solved):
    out = poisson_weak_residual(solved("maxwellian", 1.0), [Bump(24.0, 28.0)])
    rec = out["per_test_function"][0]
    # the unit charge sets the scale of both sides
    assert abs(rec["lhs"]) < 1e-8 and abs(rec["rhs"]) < 1e-8


def test_bump_beyond_grid_is_rejected(solved):
    with pytest.raises(DomainError):
        poisson_weak_residual(solved("maxwellian", 1.0), [Bump(20.0, 40.0)])


def test_bump_derivatives_match_differences():
    bump = Bump(1.0, 3.0)
    r = np.linspace(1.1, 2.9, 7)
    h = 1e-5
    psi, d1, d2 = bump.derivatives(r)
    np.testing.assert_allclose(d1, (bump(r + h) - bump(r - h)) / (2 * h), rtol=1e-6, atol=1e-9)
    np.testing.assert_allclose(d2, (bump(r + h) - 2 * psi + bump(r - h)) / h**2, rtol=1e-4, atol=1e-6)
    assert bump(1.0) == 0.0 and bump(2.0) == 1.0


def test_default_bumps_are_dyadic():
    bumps = default_bumps(1.0)
    assert bumps[0].contains_origin
    for left, right in zip(bumps[1:], bumps[2:]):
        assert right.a == left.b and right.b == 2 * left.b


def test_comparison_for_unit_and_small_charge(maxwellian):
    rep = check_comparison(maxwellian, [1.0, 0.1])
    unit, small = rep["checks"]
    assert unit["max_violation"] == 0.0
    assert small["pass"]
    assert small["min_gap_interior"] > 0.0
