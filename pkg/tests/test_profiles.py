import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from debyescreen import (
    DomainError,
    InvalidParameterError,
    eval_dF,
    eval_F,
    load_tabulated,
    make_maxwellian,
    make_power_law,
    make_tabulated,
    validate_profile,
)
from debyescreen.profiles import _mass_integral, profile_from_spec

MAXWELL_F0 = 0.0634936359342409697857633049346  # (2 pi)^(-3/2)
POWER_LAW_A = 0.143289792062689065716473534883  # sqrt(2) / pi^2 for s=1, p=3


def test_maxwellian_value_at_origin():
    assert eval_F(make_maxwellian(1.0), 0.0) == pytest.approx(MAXWELL_F0, rel=1e-15)


def test_maxwellian_closed_form_and_derivative():
    prof = make_maxwellian(1.0)
    assert eval_F(prof, 1.0) == pytest.approx(MAXWELL_F0 * math.exp(-1.0), rel=1e-15)
    assert eval_dF(prof, 1.0) == pytest.approx(-MAXWELL_F0 * math.exp(-1.0), rel=1e-15)


@pytest.mark.parametrize("T", [0.25, 1.0, 4.0])
def test_maxwellian_unit_mass(T):
    assert _mass_integral(make_maxwellian(T).F) == pytest.approx(1.0, abs=1e-10)


def test_maxwellian_decays_monotonically():
    prof = make_maxwellian(1.0)
    r = np.linspace(0, 60, 601)
    F = prof.F(r)
    assert np.all(np.diff(F) < 0)
    assert F[-1] < 1e-26


@pytest.mark.parametrize("T", [0.0, -1.0, float("nan"), float("inf")])
def test_maxwellian_rejects_bad_temperature(T):
    with pytest.raises(InvalidParameterError):
        make_maxwellian(T)


def test_power_law_normalization_matches_closed_form():
    prof = make_power_law(1.0, 3.0)
    assert prof.normalization == pytest.approx(POWER_LAW_A, rel=1e-10)
    assert eval_F(prof, 0.0) == pytest.approx(prof.normalization, rel=1e-15)


def test_power_law_rejects_slow_decay():
    with pytest.raises(InvalidParameterError):
        make_power_law(1.0, 2.5)
    with pytest.raises(InvalidParameterError):
        make_power_law(0.0, 3.0)


def test_power_law_derivative_negative():
    prof = make_power_law(1.0, 3.0)
    r = np.logspace(-6, 6, 300)
    assert np.all(eval_dF(prof, r) < 0)


@pytest.mark.parametrize("maker", [lambda: make_maxwellian(1.0), lambda: make_power_law(1.0, 3.0), lambda: make_power_law(2.0, 4.5)])
def test_validation_passes_for_builtin_families(maker):
    report = validate_profile(maker())
    assert report.passed, report.failed()
    names = {c["name"] for c in report.checks}
    assert {"nonnegative", "penrose", "algebraic_decay", "normalization", "derivative_consistency"} <= names


def test_tabulated_increasing_segment_fails_penrose():
    r = np.linspace(0, 20, 41)
    F = np.exp(-r)
    F[10] = F[8]  # a bump: F rises between nodes 9 and 10
    report = validate_profile(make_tabulated(r, F))
    assert "penrose" in report.failed()


def test_tabulated_reproduces_samples_and_is_normalised():
    r = np.linspace(0, 40, 401)
    samples = 2.0 * np.exp(-r)
    prof = make_tabulated(r, samples)
    np.testing.assert_allclose(prof.F(r[::20]), prof.normalization * samples[::20], rtol=1e-14)
    assert _mass_integral(prof.F) == pytest.approx(1.0, abs=1e-10)
    # close to the Maxwellian it samples
    assert prof.F(0.0) == pytest.approx(MAXWELL_F0, rel=1e-4)


def test_tabulated_without_origin_sample_is_flagged():
    r = np.linspace(0.1, 40, 400)
    prof = make_tabulated(r, np.exp(-r))
    report = validate_profile(prof)
    origin = [c for c in report.checks if c["name"] == "origin_sample"][0]
    assert origin["warning"] is True and origin["pass"] is True


def test_load_tabulated_csv(tmp_path):
    r = np.linspace(0, 30, 61)
    path = tmp_path / "f.csv"
    path.write_text("r,F\n" + "\n".join(f"{a!r},{b!r}" for a, b in zip(r.tolist(), np.exp(-r).tolist())) + "\n")
    prof = load_tabulated(path)
    assert prof.kind == "tabulated"
    assert validate_profile(prof).passed
    spec_prof = profile_from_spec({"kind": "tabulated", "path": "f.csv"}, base_dir=tmp_path)
    assert spec_prof.F(1.0) == prof.F(1.0)


def test_load_tabulated_without_numbers(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("r,F\n")
    with pytest.raises(InvalidParameterError):
        load_tabulated(path)


def test_tabulated_rejects_bad_samples():
    with pytest.raises(InvalidParameterError):
        make_tabulated([0.0, 1.0, 1.0], [1.0, 0.5, 0.2])
    with pytest.raises(InvalidParameterError):
        make_tabulated([0.0, 1.0, 2.0], [1.0, -0.5, 0.2])


def test_domain_errors():
    prof = make_maxwellian(1.0)
    with pytest.raises(DomainError):
        eval_F(prof, -1.0)
    with pytest.raises(DomainError):
        eval_dF(prof, 0.0)


@pytest.mark.parametrize("maker", [lambda: make_maxwellian(1.0), lambda: make_power_law(1.0, 3.0)])
def test_decay_constant_bounds_far_values(maker):
    prof = maker()
    r = np.logspace(0, 6, 50)
    assert np.all(prof.F(r) <= prof.decay_constant / (1 + r**2))


@pytest.mark.parametrize("maker", [lambda: make_maxwellian(1.0), lambda: make_power_law(1.0, 3.0)])
def test_central_difference_second_order(maker):
    prof = maker()
    r = np.logspace(-2, 1.5, 50)
    errs = []
    for h in (1e-2, 5e-3):
        hh = h * np.minimum(r, 1.0)
        fd = (prof.F(r + hh) - prof.F(r - hh)) / (2 * hh)
        errs.append(np.max(np.abs(fd - prof.dF(r)) / np.abs(prof.dF(r))))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


@settings(max_examples=40, deadline=None)
@given(
    T=st.floats(0.1, 10.0),
    r1=st.floats(0.0, 50.0),
    r2=st.floats(0.0, 50.0),
)
def test_maxwellian_nonincreasing_pairs(T, r1, r2):
    prof = make_maxwellian(T)
    lo, hi = sorted((r1, r2))
    assert prof.F(lo) >= prof.F(hi) >= 0


@settings(max_examples=25, deadline=None)
@given(s=st.floats(0.2, 5.0), p=st.floats(3.0, 8.0))
def test_power_law_family_is_valid(s, p):
    prof = make_power_law(s, p)
    assert _mass_integral(prof.F) == pytest.approx(1.0, abs=1e-8)
    assert np.all(prof.dF(np.logspace(-4, 4, 60)) < 0)


def test_profile_spec_round_trip():
    prof = make_power_law(1.0, 3.0)
    again = profile_from_spec(prof.to_spec())
    assert again.F(0.3) == prof.F(0.3)
