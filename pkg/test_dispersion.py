"""Tests for kappa, the attenuation kernel g and the dispersion curves."""

import math
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy import special

sys.path.insert(0, str(Path(__file__).resolve().parent))

from src.cm_core import CMFunction, eval_cm, log_grid
from src.dispersion import (
    attenuation_dispersion,
    attenuation_kernel,
    creep_identity_residual,
    extract_density,
    g_at_zero,
    g_of_t,
    initial_attenuation,
    kappa,
    kappa_excess,
    kk_identity_residual,
    wavefront_speed,
)
from src.errors import DomainError, UnsupportedOperation
from src.inversion import BromwichEvaluator, invert_laplace
from src.material import (
    make_elastic,
    make_kelvin_chain,
    make_log_g,
    make_powerlaw_creep,
    make_powerlaw_g,
    make_zener,
)


@pytest.fixture
def zener():
    return make_zener(1.0, 1.0, 1.0)


def test_wavefront_speed():
    assert wavefront_speed(make_zener(4.0, 1.0, 1.0)) == pytest.approx(0.5)
    assert wavefront_speed(make_zener(1.0, 1.0, 1.0, rho=4.0)) == pytest.approx(0.5)
    assert wavefront_speed(make_powerlaw_g(3.0, 1.0, 0.5)) == 3.0


def test_kappa_zener(zener):
    assert kappa(zener, 1.0) == pytest.approx(math.sqrt(1.5), rel=1e-14)
    assert kappa_excess(zener, 1.0) == pytest.approx(math.sqrt(1.5) - 1, rel=1e-12)
    with pytest.raises(DomainError):
        kappa(zener, -1.0 + 0j)
    with pytest.raises(DomainError):
        kappa(zener, 1j)


def test_kappa_excess_has_no_cancellation_at_large_p(zener):
    # p g~(p) -> g(0+) = 1/2 while kappa ~ p
    assert kappa_excess(zener, 1e12).real == pytest.approx(0.5, rel=1e-9)


def test_zener_density_mass_and_kernel(zener):
    measure = extract_density(zener)
    assert measure.rule == "gauss-jacobi"
    assert np.all((measure.nodes > 1) & (measure.nodes < 2))
    assert measure.total_mass() == pytest.approx(0.5, rel=1e-12)
    # g(t) = e^{-t} (I0(t/2) + I1(t/2)) / 2 in exponentially scaled Bessel form
    t = np.array([0.01, 0.5, 2.0, 10.0])
    expected = 0.5 * np.exp(-t) * (special.i0e(t / 2) + special.i1e(t / 2))
    np.testing.assert_allclose(g_of_t(zener, t), expected, rtol=1e-10)


def test_g_at_zero(zener):
    limit = g_at_zero(zener)
    assert limit.status == "finite"
    assert limit.value == pytest.approx(0.5)
    assert g_at_zero(make_powerlaw_g(1.0, 1.0, 0.5)).status == "infinite"
    assert g_at_zero(make_elastic(1.0)).value == 0.0


def test_elastic_kernel_is_zero():
    model = make_elastic(1.0)
    assert extract_density(model).is_empty
    np.testing.assert_array_equal(g_of_t(model, np.array([0.1, 1.0])), 0.0)


def test_g_of_t_direct_is_the_stored_kernel():
    model = make_powerlaw_g(1.0, 1.0, 0.5)
    assert attenuation_kernel(model) is model.direct.g
    assert g_of_t(model, 1.0) == pytest.approx(1 / math.sqrt(math.pi))
    with pytest.raises(DomainError):
        g_of_t(model, 0.0)


@pytest.mark.parametrize(
    "model",
    [
        make_zener(1.0, 1.0, 1.0),
        make_kelvin_chain(1.0, [(0.5, 0.5), (0.5, 2.0)]),
        make_powerlaw_g(1.0, 1.0, 0.5),
        make_log_g(1.0, 1.0, 1.0),
        make_log_g(1.0, 1.0, 2.0, A=2.0),
    ],
    ids=lambda m: m.name,
)
def test_kk_identity(model):
    assert kk_identity_residual(model) < 1e-4


def test_kk_identity_powerlaw_creep():
    assert kk_identity_residual(make_powerlaw_creep(1.0, 0.5, 0.5)) < 1e-3


def test_creep_identity(zener):
    assert creep_identity_residual(zener) < 1e-8
    with pytest.raises(UnsupportedOperation):
        creep_identity_residual(make_powerlaw_g(1.0, 1.0, 0.5))


def test_elastic_curves_are_flat():
    curves = attenuation_dispersion(make_elastic(1.0))
    np.testing.assert_array_equal(curves.attenuation, 0.0)
    np.testing.assert_array_equal(curves.dispersion, 0.0)
    np.testing.assert_allclose(curves.phase_speed, 1.0)


def test_zener_curves(zener):
    omega = np.array([1e-3, 1.0, 1e3])
    curves = attenuation_dispersion(zener, omega)
    assert np.all(curves.attenuation > 0)
    assert np.all(curves.dispersion >= 0)
    # relaxed speed 1/sqrt(rho (J0 + J1)) at low frequency, c0 at high frequency
    assert curves.phase_speed[0] == pytest.approx(1 / math.sqrt(2), rel=1e-5)
    assert curves.phase_speed[-1] == pytest.approx(1.0, rel=1e-5)
    assert curves.attenuation[-1] == pytest.approx(0.5, rel=1e-5)
    assert np.all(np.diff(curves.phase_speed) > 0)


def test_curves_reject_non_positive_frequencies(zener):
    with pytest.raises(DomainError):
        attenuation_dispersion(zener, np.array([0.0, 1.0]))


def test_initial_attenuation_routes(zener):
    finite = initial_attenuation(zener)
    assert finite.status == "finite"
    assert finite.value == pytest.approx(0.5, abs=1e-8)
    assert initial_attenuation(make_powerlaw_g(1.0, 1.0, 0.5)).status == "infinite"
    assert initial_attenuation(make_log_g(1.0, 1.0, 1.0)).status == "infinite"


@pytest.mark.parametrize("tau_fast", [1e-4, 1e-6])
def test_initial_attenuation_on_stiff_chains(tau_fast):
    model = make_kelvin_chain(1.0, [(0.5, tau_fast), (0.5, 1.0)])
    # rho c0 J'(0+) / 2 with c0 = 1
    expected = 0.5 * (0.5 / tau_fast + 0.5)
    extrapolated = initial_attenuation(model)
    assert extrapolated.status == "finite"
    assert extrapolated.value == pytest.approx(expected, rel=1e-6)
    assert g_at_zero(model).value == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize(
    "model",
    [make_zener(1.0, 1.0, 1.0), make_kelvin_chain(1.0, [(0.5, 0.5), (0.5, 2.0)])],
    ids=lambda m: m.name,
)
def test_p_transform_of_g_rises_to_initial_attenuation(model):
    p = np.geomspace(1e-3, 1e6, 91)
    excess = np.real(np.asarray(kappa_excess(model, p)))
    limit = g_at_zero(model).value
    assert np.all(np.diff(excess) >= -1e-12 * limit)
    assert np.max(excess) <= limit * (1 + 1e-12)
    assert excess[-1] == pytest.approx(limit, rel=1e-5)


def test_powerlaw_creep_density_round_trip():
    model = make_powerlaw_creep(1.0, 0.5, 0.5)
    coarse = CMFunction.from_measure(extract_density(model, log_grid(model.scale, points_per_decade=64)))
    fine = CMFunction.from_measure(extract_density(model, log_grid(model.scale, points_per_decade=128)))
    t = np.array([0.01, 0.1, 1.0, 10.0])
    g_coarse = np.asarray(eval_cm(coarse, t))
    np.testing.assert_allclose(g_coarse, eval_cm(fine, t), rtol=1e-6)
    # g from the extracted measure against the inverse transform of p g~(p) / p
    ev = BromwichEvaluator(lambda p: np.asarray(kappa_excess(model, p)) / p, method="talbot")
    np.testing.assert_allclose(g_coarse, invert_laplace(ev, t), rtol=1e-3)
