import numpy as np
import pytest

from debyescreen import DomainError, InvalidParameterError, RadialField, RadialGrid


def test_log_spacing_and_ends():
    grid = RadialGrid.log_spaced(101, 1e-3, 10.0)
    assert grid.r_min == 1e-3 and grid.r_max == 10.0
    assert np.all(np.diff(grid.r) > 0)
    np.testing.assert_allclose(np.diff(np.log(grid.r)), grid.h, rtol=1e-10)


def test_trapezoid_weights_integrate_constants():
    grid = RadialGrid.log_spaced(500, 1e-4, 30.0)
    assert np.all(grid.weights > 0)
    assert grid.weights.sum() == pytest.approx(grid.r_max - grid.r_min, abs=1e-12)


def test_volume_integral_of_gaussian():
    grid = RadialGrid.log_spaced(4000, 1e-5, 12.0)
    # 4 pi int r^2 exp(-r^2) dr = pi^(3/2)
    assert grid.integrate_volume(np.exp(-grid.r**2)) == pytest.approx(np.pi**1.5, rel=1e-5)


def test_for_sigma_scales_with_screening_length():
    grid = RadialGrid.for_sigma(4.0, n=100)
    assert grid.r_min == pytest.approx(0.5e-4)
    assert grid.r_max == pytest.approx(15.0)


def test_refined_halves_log_step():
    grid = RadialGrid.log_spaced(101, 1e-3, 10.0)
    fine = grid.refined()
    assert fine.n == 201
    assert fine.h == pytest.approx(grid.h / 2)
    np.testing.assert_allclose(fine.r[::2], grid.r, rtol=1e-13)


@pytest.mark.parametrize("args", [(2, 1e-3, 1.0), (10, 0.0, 1.0), (10, 2.0, 1.0), (10, 1e-3, float("inf"))])
def test_invalid_grids(args):
    with pytest.raises(InvalidParameterError):
        RadialGrid.log_spaced(*args)


def test_arrays_are_read_only():
    grid = RadialGrid.log_spaced(10, 1e-2, 1.0)
    with pytest.raises(ValueError):
        grid.r[0] = 5.0
    field = RadialField(grid, np.ones(10))
    with pytest.raises(ValueError):
        field.values[0] = 2.0


def test_field_interpolation_reproduces_nodes():
    grid = RadialGrid.log_spaced(64, 1e-2, 10.0)
    vals = np.exp(-grid.r) / grid.r
    field = RadialField(grid, vals)
    np.testing.assert_allclose(field(grid.r), vals, rtol=1e-14)
    np.testing.assert_allclose(field.smooth(grid.r), vals, rtol=1e-13)


def test_field_tail_model():
    grid = RadialGrid.log_spaced(64, 1e-2, 10.0)
    field = RadialField(grid, np.exp(-grid.r) / grid.r, tail_rate=1.0)
    assert field(20.0) == pytest.approx(np.exp(-20.0) / 20.0, rel=1e-12)
    with pytest.raises(DomainError):
        field.with_tail(None)(20.0)
    with pytest.raises(DomainError):
        field(1e-3)
    with pytest.raises(DomainError):
        field.smooth(20.0)


def test_smooth_derivative_accuracy():
    grid = RadialGrid.log_spaced(2000, 1e-3, 20.0)
    field = RadialField(grid, np.exp(-grid.r))
    r = np.linspace(0.01, 10, 50)
    np.testing.assert_allclose(field.smooth_derivative(r), -np.exp(-r), rtol=1e-6)


def test_field_validation():
    grid = RadialGrid.log_spaced(10, 1e-2, 1.0)
    with pytest.raises(InvalidParameterError):
        RadialField(grid, np.ones(9))
    with pytest.raises(InvalidParameterError):
        RadialField(grid, np.full(10, np.nan))
