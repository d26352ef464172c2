"""Tests for CM functions, spectral measures and the CM sign test."""

import math
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate, special

sys.path.insert(0, str(Path(__file__).resolve().parent))

from src.cm_core import (
    CMFunction,
    SpectralMeasure,
    check_bernstein_pair,
    check_cm,
    cm_antiderivative,
    eval_cm,
    eval_cm_report,
    laplace_cm,
    limit_at_zero,
    log_grid,
    mass_status,
    stieltjes_value,
)
from src.errors import ConstructionError, DomainError, ModelValidityError


def test_power_law_closed_forms():
    f = CMFunction.power_law(1.0, 0.5)
    assert eval_cm(f, 1.0) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-14)
    assert laplace_cm(f, 4.0) == pytest.approx(0.5, rel=1e-14)
    assert cm_antiderivative(f, 1.0) == pytest.approx(2 / math.sqrt(math.pi), rel=1e-14)


def test_eval_rejects_non_positive_times():
    f = CMFunction.exponential(1.0)
    with pytest.raises(DomainError):
        eval_cm(f, 0.0)
    with pytest.raises(DomainError):
        eval_cm(f, np.array([1.0, -1.0]))


def test_laplace_needs_right_half_plane():
    with pytest.raises(DomainError):
        laplace_cm(CMFunction.exponential(1.0), -0.5 + 1j)
    # the continuation itself has no domain check
    value = stieltjes_value(CMFunction.exponential(1.0), -0.5 + 1j)
    assert value == pytest.approx(1 / (0.5 + 1j))


def test_atoms_merge_and_drop_zero_weights():
    measure = SpectralMeasure.from_atoms([2.0, 1.0, 2.0, 3.0], [1.0, 0.5, 0.25, 0.0])
    assert list(measure.atom_locations) == [1.0, 2.0]
    assert list(measure.atom_weights) == [0.5, 1.25]
    assert measure.total_mass() == pytest.approx(1.75)


def test_measure_rejects_negative_weights():
    with pytest.raises(ConstructionError):
        SpectralMeasure(atom_locations=[1.0], atom_weights=[-1.0])


def test_measure_backed_exponential_matches_closed_form():
    f = CMFunction.from_measure(SpectralMeasure.from_atoms([2.0], [3.0]))
    t = np.array([0.1, 1.0, 5.0])
    np.testing.assert_allclose(eval_cm(f, t), 3 * np.exp(-2 * t), rtol=1e-14)
    np.testing.assert_allclose(cm_antiderivative(f, t), 1.5 * (1 - np.exp(-2 * t)), rtol=1e-12)
    assert complex(laplace_cm(f, 1.0)).real == pytest.approx(1.0)


def test_antiderivative_orders_agree_with_closed_form():
    f = CMFunction.exponential(1.0)
    t = np.array([0.01, 0.5, 3.0])
    # I^2 e^{-s} = t - 1 + e^{-t}
    np.testing.assert_allclose(cm_antiderivative(f, t, 2), t - 1 + np.exp(-t), rtol=1e-10)
    assert cm_antiderivative(f, 0.0) == 0.0


def test_logarithmic_measure_reproduces_closed_form():
    f = CMFunction.logarithmic(1.0, 1.0, 1.0)
    t = np.array([1e-3, 0.1, 1.0, 10.0])
    from_measure = f.offset + f.measure.laplace(t)
    np.testing.assert_allclose(from_measure, np.log(1 + 1 / t), rtol=1e-6)


def test_logarithmic_offset_is_long_time_value():
    f = CMFunction.logarithmic(1.0, 2.0, 3.0)
    assert f.offset == pytest.approx(2 * math.log(3.0))
    assert eval_cm(f, 1e8) == pytest.approx(f.offset, rel=1e-6)


def test_logarithmic_needs_A_at_least_one():
    with pytest.raises(ConstructionError):
        CMFunction.logarithmic(1.0, 1.0, 0.5)


def test_log_antiderivative_closed_form_matches_measure():
    f = CMFunction.logarithmic(1.0, 1.0, 1.0)
    t = np.array([0.05, 0.5, 2.0])
    closed = cm_antiderivative(f, t)
    via_measure = f.measure.antiderivative(t, 1)
    np.testing.assert_allclose(closed, via_measure, rtol=1e-6)


def test_density_growing_at_zero_is_rejected():
    nodes = np.geomspace(1e-3, 1e3, 61)
    with pytest.raises(ModelValidityError):
        SpectralMeasure.from_density(nodes, nodes**-1.5)


def test_limits_at_zero():
    assert limit_at_zero(CMFunction.power_law(1.0, 0.5)).status == "infinite"
    assert limit_at_zero(CMFunction.logarithmic(1.0, 1.0)).status == "infinite"
    lim = limit_at_zero(CMFunction.sum([CMFunction.exponential(1.0, 0.5), CMFunction.constant(0.25)]))
    assert lim.status == "finite"
    assert lim.value == pytest.approx(0.75)


def test_mass_status_of_log_density_is_infinite():
    status = mass_status(CMFunction.logarithmic(1.0, 1.0).measure)
    assert status.status == "infinite"
    assert status.value is None


def test_mass_status_of_atoms_is_finite():
    status = mass_status(SpectralMeasure.from_atoms([1.0, 10.0], [0.5, 0.5]))
    assert status.status == "finite"
    assert status.value == pytest.approx(1.0)


def test_check_cm_accepts_cm_functions():
    grid = np.geomspace(1e-2, 1e2, 40)
    for f in (CMFunction.exponential(1.0), CMFunction.power_law(1.0, 0.3), CMFunction.logarithmic(1.0, 1.0)):
        report = check_cm(f, grid, order=4)
        assert report.ok, (f.label, report.violations)


def test_check_cm_flags_oscillation():
    report = check_cm(lambda t: np.exp(-t) * (1 + 0.5 * np.sin(5 * t)), np.geomspace(0.1, 10, 50), order=3)
    assert not report.ok
    assert report.first_failure == 1


def test_check_cm_rejects_bad_grid():
    with pytest.raises(DomainError):
        check_cm(CMFunction.exponential(1.0), np.array([1.0, 0.5, 2.0]), order=1)
    with pytest.raises(DomainError):
        check_cm(CMFunction.exponential(1.0), np.geomspace(1, 2, 5), order=0)


def test_bernstein_pair():
    # 1/(x(x+1)) is the transform of 1 - e^{-t}; x^{-1/2} of t^{-1/2}/Gamma(1/2), which decreases
    assert check_bernstein_pair(lambda x: 1 / (x * (x + 1))).ok
    assert check_bernstein_pair(lambda x: np.exp(-np.sqrt(x)) / x).ok
    assert not check_bernstein_pair(CMFunction.power_law(1.0, 0.5)).ok


def test_eval_report_warns_outside_grid_coverage():
    nodes = log_grid(1.0, r_min=1e-2, r_max=1e2, points_per_decade=16)
    f = CMFunction.from_measure(SpectralMeasure.from_density(nodes, nodes**-0.5))
    assert eval_cm_report(f, 1e-3).warning is not None
    assert eval_cm_report(CMFunction.power_law(1.0, 0.5), 1e-3).warning is None


def test_erfc_oracle_value():
    # the closed form used throughout the kernel tests
    assert special.erfc(0.5) == pytest.approx(0.4795001222, rel=1e-9)


def _log_density_function(points_per_decade: int) -> CMFunction:
    nodes = log_grid(1.0, points_per_decade=points_per_decade)
    return CMFunction.from_measure(SpectralMeasure.from_density(nodes, -np.expm1(-nodes) / nodes))


def test_density_grid_refinement_converges():
    coarse, fine = _log_density_function(64), _log_density_function(128)
    t = np.array([1e-3, 0.1, 1.0, 10.0])
    np.testing.assert_allclose(eval_cm(coarse, t), eval_cm(fine, t), rtol=1e-7)
    p = np.array([0.1, 1.0, 10.0])
    np.testing.assert_allclose(laplace_cm(coarse, p), laplace_cm(fine, p), rtol=1e-7)


def _laplace_by_quadrature(f: CMFunction, p: float) -> float:
    def integrand(t: float) -> float:
        return math.exp(-p * t) * float(eval_cm(f, t))
    head, _ = integrate.quad(integrand, 0.0, 1.0, limit=200, epsabs=0.0, epsrel=1e-10)
    tail, _ = integrate.quad(integrand, 1.0, np.inf, limit=200, epsabs=0.0, epsrel=1e-10)
    return head + tail


@pytest.mark.parametrize("p", [0.1, 1.0, 10.0])
def test_laplace_matches_quadrature(p):
    closed = CMFunction.logarithmic(1.0, 1.0, 1.0)
    assert complex(laplace_cm(closed, p)).real == pytest.approx(_laplace_by_quadrature(closed, p), rel=1e-8)
    sampled = _log_density_function(64)
    assert complex(laplace_cm(sampled, p)).real == pytest.approx(_laplace_by_quadrature(sampled, p), rel=1e-6)
