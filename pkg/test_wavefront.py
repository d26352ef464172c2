"""Tests for the wavefront diagnostics and the wavefront report."""

import json
import math
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy import special

sys.path.insert(0, str(Path(__file__).resolve().parent))

from src.cm_core import CMFunction
from src.errors import DomainError, FitError, HypothesisError, UnsupportedOperation
from src.material import make_direct, make_elastic, make_kelvin_chain, make_log_g, make_powerlaw_g, make_zener
from src.wavefront import (
    WavefrontReport,
    asymptotic_phase_ratio,
    build_report,
    g_vs_creep_rate_check,
    hypothesis_check,
    jump_amplitude,
    jump_criterion,
    karamata_ratio,
    local_index,
    regularization_exponent,
    slowly_varying_check,
    transform_gap,
    upper_bound_check,
)

EULER_GAMMA = 0.5772156649015329


@pytest.fixture(scope="module")
def zener():
    return make_zener(1.0, 1.0, 1.0)


@pytest.fixture(scope="module")
def powerlaw():
    return make_powerlaw_g(1.0, 1.0, 0.5)


@pytest.fixture(scope="module")
def log_g():
    return make_log_g(1.0, 1.0, 1.0)


# --- Jump criterion and amplitude ---


def test_jump_criterion(zener, powerlaw, log_g):
    criterion = jump_criterion(zener)
    assert criterion.discontinuous
    assert criterion.g0 == pytest.approx(0.5)
    assert criterion.routes["transform"] == pytest.approx(0.5, abs=1e-6)
    assert jump_criterion(powerlaw).status == "continuous"
    assert jump_criterion(log_g).status == "continuous"
    assert jump_criterion(make_elastic(1.0)).g0 == 0.0


def test_jump_amplitude_zener(zener):
    amplitude = jump_amplitude(zener, 1.0)
    assert amplitude.value == pytest.approx(0.5 * math.exp(-0.5), rel=1e-12)
    assert amplitude.routes["creep_rate"] == pytest.approx(amplitude.value, rel=1e-12)
    assert amplitude.routes["relaxation"] == pytest.approx(amplitude.value, rel=1e-3)
    assert jump_amplitude(zener, 0.0).value == pytest.approx(0.5)


def test_jump_amplitude_elastic():
    amplitude = jump_amplitude(make_elastic(1.0), 2.0)
    assert amplitude.value == pytest.approx(0.5)
    assert amplitude.discrepancy < 1e-6


def test_jump_amplitude_of_direct_model_has_one_route():
    model = make_direct(1.0, CMFunction.exponential(1.0, 0.5))
    amplitude = jump_amplitude(model, 2.0)
    assert amplitude.value == pytest.approx(0.5 * math.exp(-1.0))
    assert amplitude.routes["creep_rate"] is None
    assert amplitude.discrepancy == 0.0


def test_jump_amplitude_needs_discontinuous_wavefront(powerlaw, zener):
    with pytest.raises(UnsupportedOperation):
        jump_amplitude(powerlaw, 1.0)
    with pytest.raises(DomainError):
        jump_amplitude(zener, -1.0)


# --- Asymptotic phase ---


def test_phase_ratio_elastic_is_one():
    trace = asymptotic_phase_ratio(make_elastic(1.0), 1.0, np.array([1e-1, 1e-2]))
    np.testing.assert_allclose(trace.ratio, 1.0, atol=1e-9)


def test_phase_ratio_zener_tends_to_one(zener):
    trace = asymptotic_phase_ratio(zener, 1.0, np.array([1e-1, 1e-2, 1e-3]))
    assert trace.ratio[-1] == pytest.approx(1.0, abs=1e-2)
    distances = np.abs(trace.ratio - 1.0)
    assert distances[-1] < distances[0]


def test_phase_ratio_powerlaw_decays(powerlaw):
    taus = np.array([0.2, 0.1, 0.05, 0.02])
    trace = asymptotic_phase_ratio(powerlaw, 1.0, taus)
    exact = special.erfc(1 / (2 * np.sqrt(taus))) * np.exp(1 / np.sqrt(np.pi * taus))
    for value, expected in zip(trace.ratio, exact):
        assert value == pytest.approx(expected, rel=1e-5, abs=1e-7)
    assert np.all(np.diff(trace.ratio) < 0)


def test_phase_ratio_log_approaches_exp_minus_gamma(log_g):
    trace = asymptotic_phase_ratio(log_g, 1.0, np.array([1e-1, 1e-2, 1e-3]))
    limit = math.exp(-EULER_GAMMA)
    assert trace.ratio[-1] == pytest.approx(limit, rel=0.05)
    assert np.all(np.diff(np.abs(trace.ratio - limit)) < 0)
    assert [tau for tau, _ in trace.pairs()] == [1e-1, 1e-2, 1e-3]


def test_phase_ratio_needs_decreasing_taus(log_g):
    with pytest.raises(DomainError):
        asymptotic_phase_ratio(log_g, 1.0, np.array([1e-3, 1e-2]))
    with pytest.raises(DomainError):
        asymptotic_phase_ratio(log_g, 1.0, np.array([1e-2, -1e-3]))


def test_karamata_ratio_for_log_kernel(log_g):
    assert local_index(log_g, np.array([1e3]), 1.0)[0] == pytest.approx(1.0, abs=0.02)
    trace = karamata_ratio(log_g, 1.0, np.array([1e-2, 1e-3]))
    assert trace.ratio[-1] == pytest.approx(1.0, rel=0.05)


# --- Hypothesis and upper bound ---


def test_hypothesis_check(powerlaw, log_g, zener):
    assert hypothesis_check(powerlaw).passed
    assert hypothesis_check(log_g).passed
    report = hypothesis_check(zener)
    assert not report.passed
    assert report.failing_t is not None
    with pytest.raises(DomainError):
        hypothesis_check(powerlaw, np.array([1.0, 0.5]))


@pytest.mark.parametrize("name", ["powerlaw", "log_g", "elastic"])
def test_upper_bound_holds(name, powerlaw, log_g):
    model = {"powerlaw": powerlaw, "log_g": log_g, "elastic": make_elastic(1.0)}[name]
    check = upper_bound_check(model, np.array([0.5, 1.0, 2.0]))
    assert check.holds, check
    assert check.samples > 0


def test_upper_bound_refuses_single_atom_kernel():
    model = make_direct(1.0, CMFunction.exponential(1.0))
    with pytest.raises(HypothesisError) as info:
        upper_bound_check(model, np.array([1.0]))
    assert info.value.failing_t is not None


# --- Stepwise regularization ---


@pytest.mark.parametrize("r", [1.0, 2.0])
@pytest.mark.parametrize("b", [1.0, 2.0])
def test_regularization_exponent(r, b):
    fit = regularization_exponent(make_log_g(1.0, 1.0, b), r)
    assert fit.expected == r * b
    assert fit.relative_error < 0.1


def test_regularization_needs_log_kernel(powerlaw):
    with pytest.raises(UnsupportedOperation):
        regularization_exponent(powerlaw, 1.0)


def test_regularization_needs_a_decade(log_g):
    with pytest.raises(FitError):
        regularization_exponent(log_g, 1.0, window=(1e-4, 5e-4))


# --- Regular variation and related checks ---


def test_slowly_varying_check(log_g):
    elastic = slowly_varying_check(make_elastic(1.0), (2.0, 10.0), np.array([1e2, 1e4]))
    assert elastic.top_deviation == 0.0
    check = slowly_varying_check(log_g, (2.0,), np.array([1e2, 1e4, 1e6]))
    # l(p) behaves like p^{-r b}
    np.testing.assert_allclose(check.indices[0], -1.0, atol=0.05)
    with pytest.raises(DomainError):
        slowly_varying_check(log_g, (), np.array([1.0]))


def test_g_below_creep_rate_bound(zener):
    check = g_vs_creep_rate_check(zener)
    assert check.max_excess <= 1e-6
    with pytest.raises(UnsupportedOperation):
        g_vs_creep_rate_check(make_powerlaw_g(1.0, 1.0, 0.5))


def test_transform_gap_shrinks(zener):
    gap = np.abs(transform_gap(zener, np.array([1e1, 1e3])))
    assert gap[1] < gap[0]


# --- Report ---


def test_report_zener(zener):
    report = build_report(zener, 1.0)
    assert report.criterion == "discontinuous"
    assert report.jump_amplitude == pytest.approx(0.5 * math.exp(-0.5))
    assert report.bound_check is None
    assert report.bound_note.startswith("not applicable")
    data = json.loads(report.to_json())
    assert data["model"] == "zener(J0=1, J1=1, tau=1, rho=1)"
    assert len(data["phase_ratio_trace"]) == 3
    text = report.to_text()
    assert "wavefront: discontinuous" in text
    assert "via creep_rate" in text


def test_report_log_kernel(log_g):
    report = build_report(log_g, 1.0)
    assert report.g0 == "infinite"
    assert report.jump_amplitude is None
    assert report.bound_check is not None
    assert report.regularization_exponent == pytest.approx(1.0, rel=0.1)
    assert "regularization exponent" in report.to_text()


def test_report_carries_kernel_flags(zener):
    report = build_report(zener, 1.0)
    assert not report.degraded
    assert [flag for _, _, flag in report.phase_ratio_trace] == ["ok", "ok", "ok"]
    assert "status: ok" in report.to_text()
    assert json.loads(report.to_json())["degraded"] is False


def test_flagged_samples_mark_the_report_degraded():
    report = WavefrontReport(
        "kelvin_chain(J0=1)", {"J0": 1.0}, 1.0, "discontinuous", 250.25,
        phase_ratio_trace=[(0.1, 0.99, "ok"), (0.01, -7.3e54, "out-of-range")],
        flagged_samples=1,
    )
    assert report.degraded
    text = report.to_text()
    assert "status: degraded (1 flagged kernel samples)" in text
    assert "[out-of-range]" in text
    data = json.loads(report.to_json())
    assert data["degraded"] is True
    assert data["phase_ratio_trace"][1][2] == "out-of-range"


# --- Stiff chains and far distances ---


@pytest.mark.parametrize("tau_fast", [1e-4, 1e-6])
def test_jump_criterion_routes_agree_on_stiff_chains(tau_fast):
    model = make_kelvin_chain(1.0, [(0.5, tau_fast), (0.5, 1.0)])
    criterion = jump_criterion(model)
    assert criterion.status == "discontinuous", criterion.diagnostics
    assert criterion.routes["transform"] == pytest.approx(criterion.routes["creep_rate"], rel=1e-6)


def test_stiff_chain_phase_ratio_is_unflagged():
    model = make_kelvin_chain(1.0, [(0.5, 1e-3), (0.5, 1.0)])
    trace = asymptotic_phase_ratio(model, 1.0, np.array([0.3, 0.1, 0.056, 0.01]))
    assert trace.flagged == 0
    assert np.all(np.isfinite(trace.ratio))


def test_amplitude_tolerance_scales_with_distance(zener):
    amplitude = jump_amplitude(zener, 100.0)
    assert amplitude.value == pytest.approx(0.5 * math.exp(-50.0), rel=1e-12)
    assert amplitude.tolerance == pytest.approx(1e-3 * 50.0)
    assert amplitude.consistent
    assert jump_amplitude(zener, 1.0).tolerance == pytest.approx(1e-3)
