import numpy as np
import pytest

from debyescreen import (
    GridTooSmallError,
    InvalidParameterError,
    NonConvergenceError,
    RadialField,
    RadialGrid,
    SolverConfig,
    check_uniqueness,
    phi_sigma,
    solve,
    solve_homotopy,
)
from debyescreen.solver import a_priori_bound, fixed_point_residual, picard_step, prepare

# regression baselines on the default grid (n=2000, [1e-4, 30] screening lengths)
MAXWELL_THETA1 = {"R_at_1": 0.0005067790119182795, "Q0": 795.7017612029376, "rate": 0.9999991662806061}
POWER_LAW_THETA1 = {"R_at_1": 0.0016159209886741136, "Q0": 974.5379013058592, "rate": 1.2247416427153885}


@pytest.fixture(scope="module")
def prepared(maxwellian):
    return prepare(maxwellian, SolverConfig(theta=1.0))


def test_zero_charge_is_homogeneous(maxwellian):
    res = solve(maxwellian, SolverConfig(theta=0.0, n=200))
    assert np.all(res.R.values == 0) and np.all(res.Q.values == 0)
    assert np.all(res.rho.values == 1.0)


def test_first_picard_step_is_positive(prepared):
    response, grid = prepared
    R1 = picard_step(response, 1.0, RadialField(grid, np.zeros(grid.n)))
    assert np.all(R1.values >= 0) and np.max(R1.values) > 0


def test_picard_iterates_increase(prepared):
    response, grid = prepared
    R = RadialField(grid, np.zeros(grid.n))
    bound = a_priori_bound(response.sigma, 1.0, grid.r) + 1e-10
    for _ in range(6):
        nxt = picard_step(response, 1.0, R)
        assert np.all(nxt.values >= R.values - 1e-15)
        assert np.all(nxt.values <= bound)
        R = nxt


def test_fixed_point_is_invariant(solved):
    res = solved("maxwellian", 1.0)
    nxt = picard_step(res.response, 1.0, res.R)
    scale = 1.0 + np.max(np.abs(res.R.values))
    assert np.max(np.abs(nxt.values - res.R.values)) / scale <= res.config.tol
    assert fixed_point_residual(res.response, 1.0, res.R) <= res.config.tol


def test_damped_step_interpolates(prepared):
    response, grid = prepared
    R0 = RadialField(grid, np.zeros(grid.n))
    full = picard_step(response, 1.0, R0).values
    half = picard_step(response, 1.0, R0, omega=0.5).values
    np.testing.assert_allclose(half, 0.5 * full, rtol=1e-15)


@pytest.mark.parametrize("name", ["maxwellian", "power_law"])
def test_result_invariants(solved, name):
    res = solved(name, 1.0)
    point = res.theta * phi_sigma(res.sigma, res.grid.r)
    np.testing.assert_allclose(res.Q.values, res.R.values + point, rtol=1e-14)
    assert np.all(res.R.values >= 0)
    assert np.all(res.Q.values > 0)
    np.testing.assert_array_equal(res.rho.values, res.response.g(res.Q.values))
    assert res.final_residual <= res.config.tol
    assert res.monotone_flag


@pytest.mark.parametrize("name, baseline", [("maxwellian", MAXWELL_THETA1), ("power_law", POWER_LAW_THETA1)])
def test_regression_baselines(solved, name, baseline):
    res = solved(name, 1.0)
    assert res.R.smooth(1.0 / np.sqrt(res.sigma)) == pytest.approx(baseline["R_at_1"], rel=1e-8)
    assert res.Q.values[0] == pytest.approx(baseline["Q0"], rel=1e-10)
    assert res.fitted_decay_rate == pytest.approx(baseline["rate"], rel=1e-8)


def test_small_charge_decay_rate(solved):
    assert solved("maxwellian", 0.1).fitted_decay_rate == pytest.approx(1.0, rel=0.02)


def test_residual_contracts_for_unit_charge(solved):
    hist = np.asarray(solved("maxwellian", 1.0).residual_history)
    tail = hist[len(hist) // 10 :]
    assert np.all(np.diff(tail) <= 0)


def test_homotopy_path_respects_bound(maxwellian):
    cfg = SolverConfig(theta=2.0, continuation_steps=4)
    path = solve_homotopy(maxwellian, cfg, keep_path=True)
    assert [p.lam for p in path] == [0.25, 0.5, 0.75, 1.0]
    for p in path:
        bound = a_priori_bound(p.sigma, 2.0, p.grid.r) + 1e-10
        assert np.all(p.R.values <= bound)
        assert np.all(p.R.values >= 0)


def test_homotopy_agrees_with_direct_solve(maxwellian, solved):
    direct = solved("maxwellian", 1.0)
    via = solve_homotopy(maxwellian, SolverConfig(theta=1.0, continuation_steps=4))
    assert np.max(np.abs(via.R.values - direct.R.values)) <= 10 * direct.config.tol * (1 + np.max(direct.R.values))


def test_lambda_steps_dispatches_to_homotopy(maxwellian):
    res = solve(maxwellian, SolverConfig(theta=0.5, continuation="lambda_steps", continuation_steps=2, n=400))
    assert res.lam == 1.0 and res.final_residual <= 1e-10


def test_uniqueness_maxwellian(maxwellian):
    rep = check_uniqueness(maxwellian, SolverConfig(theta=1.0))
    assert rep["complete"] and rep["pass"]
    assert rep["max_distance"] <= 100 * 1e-10


@pytest.mark.slow
def test_uniqueness_power_law(power_law):
    rep = check_uniqueness(power_law, SolverConfig(theta=5.0))
    assert rep["complete"] and rep["pass"]


def test_uniqueness_zero_charge(maxwellian):
    rep = check_uniqueness(maxwellian, SolverConfig(theta=0.0, n=200))
    assert rep["max_distance"] == 0.0


def test_iteration_budget_raises_with_history(maxwellian):
    with pytest.raises(NonConvergenceError) as info:
        solve(maxwellian, SolverConfig(theta=1.0, max_iter=2, n=400))
    # the starting residual plus one entry per iteration
    assert len(info.value.residual_history) == 3
    assert info.value.achieved == info.value.residual_history[-1] > 1e-10


@pytest.mark.parametrize(
    "kwargs",
    [{"theta": -1.0}, {"theta": 1.0, "damping": 0.0}, {"theta": 1.0, "r_max_mult": 5.0}, {"theta": 1.0, "continuation": "newton"}],
)
def test_config_validation(kwargs):
    with pytest.raises(InvalidParameterError):
        SolverConfig(**kwargs)


def test_short_grid_is_rejected(maxwellian):
    cfg = SolverConfig(theta=1.0, n=200)
    response, _ = prepare(maxwellian, cfg)
    short = RadialGrid.log_spaced(200, 1e-4, 3.0)
    with pytest.raises(GridTooSmallError):
        solve(maxwellian, cfg, response=response, grid=short)
