"""Complex wavenumber, wavefront speed and the attenuation kernel g.

kappa(p) = sqrt(rho) p [p J~(p)]^{1/2} for creep-based models and
kappa(p) = p/c0 + p g~(p) for direct models. The excess kappa - p/c0 = p g~(p)
is what the wavefront kernel needs; it is evaluated without cancellation.
The measure of g is recovered from boundary values on the negative axis.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from src.cm_core import (
    CMFunction,
    LimitStatus,
    SpectralMeasure,
    eval_cm,
    laplace_cm,
    limit_at_zero,
    log_grid,
    stieltjes_value,
)
from src.config import BOUNDARY_EPS, JACOBI_NODES, MASS_TOL
from src.errors import DomainError, ModelValidityError, UnsupportedOperation
from src.material import DirectSpec, MaterialModel, creep_rate_limit

logger = logging.getLogger(__name__)


def wavefront_speed(model: MaterialModel) -> float:
    if model.is_direct:
        return model.direct.c0
    J0 = model.compliance.J0
    if J0 <= 0:
        raise UnsupportedOperation("J0 = 0 gives an infinite wavefront speed")
    return 1.0 / math.sqrt(model.rho * J0)


def kappa_continued(model: MaterialModel, p: np.ndarray | complex) -> np.ndarray | complex:
    """kappa(p) continued to C minus the negative real axis."""
    p_arr = np.asarray(p, dtype=complex)
    if model.is_direct:
        value = p_arr / model.direct.c0 + p_arr * stieltjes_value(model.direct.g, p_arr)
    else:
        value = math.sqrt(model.rho) * p_arr * np.sqrt(model.compliance.p_transform(p_arr))
    return complex(value) if np.ndim(p) == 0 else value


def kappa(model: MaterialModel, p: np.ndarray | complex) -> np.ndarray | complex:
    """kappa(p) for Re p > 0."""
    p_arr = np.asarray(p, dtype=complex)
    if np.any(~(p_arr.real > 0)):
        raise DomainError("kappa needs Re p > 0; use extract_density for boundary values")
    if not model.is_direct:
        pj = np.asarray(model.compliance.p_transform(p_arr))
        if np.any((pj.imag == 0) & (pj.real < 0)):
            raise DomainError("p J~(p) lies on the branch cut; use extract_density for boundary values")
    return kappa_continued(model, p)


def kappa_excess(model: MaterialModel, p: np.ndarray | complex) -> np.ndarray | complex:
    """kappa(p) - p/c0 = p g~(p), continued off the negative real axis."""
    p_arr = np.asarray(p, dtype=complex)
    if model.is_direct:
        value = p_arr * stieltjes_value(model.direct.g, p_arr)
    else:
        J = model.compliance
        rate = stieltjes_value(J.creep_rate, p_arr)
        value = math.sqrt(model.rho) * p_arr * rate / (np.sqrt(J.J0 + rate) + math.sqrt(J.J0))
    return complex(value) if np.ndim(p) == 0 else value


def _rational_creep_atoms(rate: CMFunction) -> tuple[np.ndarray, np.ndarray] | None:
    """(locations, weights) when the creep rate is a finite sum of exponentials."""
    if rate.kind == "exponential":
        return np.array([rate.params["rate"]]), np.array([rate.params["weight"]])
    if rate.kind == "measure" and not rate.measure.has_density and rate.measure.left_tail_mass == 0 \
            and rate.offset == 0:
        return np.asarray(rate.measure.atom_locations), np.asarray(rate.measure.atom_weights)
    if rate.kind == "sum":
        pieces = [_rational_creep_atoms(part) for part in rate.parts]
        if any(piece is None for piece in pieces):
            return None
        merged = SpectralMeasure.from_atoms(
            np.concatenate([p[0] for p in pieces]), np.concatenate([p[1] for p in pieces])
        )
        return np.asarray(merged.atom_locations), np.asarray(merged.atom_weights)
    return None


def _cut_intervals(J0: float, locs: np.ndarray, wts: np.ndarray) -> list[tuple[float, float]]:
    """Intervals (r_k, z_k) where F(r) = J0 + sum_j w_j/(r_j - r) < 0."""
    total = float(wts.sum())
    intervals = []
    for k, r_k in enumerate(locs):
        upper = locs[k + 1] if k + 1 < locs.size else r_k + 2 * total / J0
        is_last = k + 1 == locs.size

        def cleared(r: float, k: int = k, upper: float = upper, is_last: bool = is_last) -> float:
            # F(r) (r - r_k)(upper - r) with both poles cancelled analytically
            left, right = r - locs[k], upper - r
            value = J0 * left * (1.0 if is_last else right)
            for j, (r_j, w_j) in enumerate(zip(locs, wts)):
                if j == k:
                    value -= w_j * (1.0 if is_last else right)
                elif not is_last and j == k + 1:
                    value += w_j * left
                else:
                    value += w_j * left * (1.0 if is_last else right) / (r_j - r)
            return value

        zero = optimize.brentq(cleared, r_k, upper, xtol=1e-15 * upper, rtol=4 * np.finfo(float).eps)
        intervals.append((float(r_k), float(zero)))
    return intervals


def _jacobi_density(model: MaterialModel, locs: np.ndarray, wts: np.ndarray, n: int) -> SpectralMeasure:
    J0 = model.compliance.J0
    x, lam = special.roots_jacobi(n, 0.5, -0.5)
    nodes, density, weights = [], [], []
    for a, b in _cut_intervals(J0, locs, wts):
        half, mid = (b - a) / 2, (b + a) / 2
        r = mid + half * x
        F = J0 + np.sum(wts[None, :] / (locs[None, :] - r[:, None]), axis=1)
        h = math.sqrt(model.rho) / math.pi * np.sqrt(np.maximum(-F, 0.0))
        jacobi_weight = np.sqrt(1 - x) / np.sqrt(1 + x)
        nodes.append(r)
        density.append(h)
        weights.append(half * lam / jacobi_weight)
    return SpectralMeasure(
        nodes=np.concatenate(nodes),
        density=np.concatenate(density),
        quad_weights=np.concatenate(weights),
        rule="gauss-jacobi",
        scale=model.scale,
    )


def _boundary_density(model: MaterialModel, r_grid: np.ndarray, eps: float, offset: float = 0.0) -> np.ndarray:
    """h(r) = Im[(kappa(p) - offset)/p]/pi with p = r exp(-i(pi - eps)), just below the cut."""
    p = r_grid * np.exp(-1j * (math.pi - eps))
    h = np.imag((kappa_continued(model, p) - offset) / p) / math.pi
    floor = MASS_TOL * max(float(np.max(np.abs(h))), 1e-300)
    if np.any(h < -floor):
        worst = int(np.argmin(h))
        raise ModelValidityError(
            f"negative spectral density {h[worst]:.3e} at r={r_grid[worst]:.3e}; "
            "creep compliance is not a Bernstein function"
        )
    return np.maximum(h, 0.0)


def _direct_atoms(g: CMFunction) -> tuple[list[float], list[float], list[CMFunction]]:
    """Split g into atoms and parts whose density comes from boundary values."""
    if g.kind == "exponential":
        return [g.params["rate"]], [g.params["weight"]], []
    if g.kind in ("power-law", "logarithmic"):
        return [], [], [g]
    if g.kind == "constant":
        return [], [], []
    if g.kind == "measure":
        if g.measure.has_density:
            raise UnsupportedOperation("attenuation kernel already carries a sampled density")
        return list(g.measure.atom_locations), list(g.measure.atom_weights), []
    if g.kind == "sum":
        locs, wts, rest = [], [], []
        for part in g.parts:
            l_, w_, r_ = _direct_atoms(part)
            locs += l_
            wts += w_
            rest += r_
        return locs, wts, rest
    raise UnsupportedOperation(f"no spectral density for a {g.kind} attenuation kernel")


def extract_density(
    model: MaterialModel,
    r_grid: np.ndarray | None = None,
    eps: float = BOUNDARY_EPS,
    jacobi_nodes: int = JACOBI_NODES,
) -> SpectralMeasure:
    """Measure nu of g from boundary values of kappa on the negative axis.

    Creep rates that are finite sums of exponentials have cuts on the intervals
    between each pole r_k and the next zero of p J~(p); each cut is integrated
    with Gauss-Jacobi nodes and r_grid is not used. Other models are sampled on
    r_grid (default: the log grid around 1/scale).
    """
    if not model.is_direct:
        atoms = _rational_creep_atoms(model.compliance.creep_rate)
        if atoms is not None:
            locs, wts = atoms
            if locs.size == 0:
                return SpectralMeasure.empty(model.scale)
            return _jacobi_density(model, locs, wts, jacobi_nodes)
    if r_grid is None:
        r_grid = log_grid(model.scale)
    r_grid = np.asarray(r_grid, dtype=float)
    if np.any(r_grid <= 0) or np.any(np.diff(r_grid) <= 0):
        raise DomainError("r_grid must be positive and strictly increasing")
    if model.is_direct:
        locs, wts, smooth = _direct_atoms(model.direct.g)
        if not smooth:
            return SpectralMeasure.from_atoms(locs, wts, scale=model.scale)
        part = MaterialModel(rho=model.rho, direct=DirectSpec(model.direct.c0, CMFunction.sum(smooth)),
                             name=model.name, scale=model.scale)
        density = _boundary_density(part, r_grid, eps, offset=_kernel_offset(part.direct.g))
        return SpectralMeasure.from_density(r_grid, density, scale=model.scale, atoms=(locs, wts))
    density = _boundary_density(model, r_grid, eps)
    return SpectralMeasure.from_density(r_grid, density, scale=model.scale)


def _kernel_offset(g: CMFunction) -> float:
    """g(inf): the point mass of nu at r = 0, carried outside the density."""
    if g.kind == "constant":
        return g.params["value"]
    if g.kind == "sum":
        return sum(_kernel_offset(part) for part in g.parts)
    return g.offset


def attenuation_kernel(model: MaterialModel) -> CMFunction:
    """g as a CM function: the stored kernel or the measure extracted from J."""
    if model.is_direct:
        return model.direct.g
    return CMFunction.from_measure(extract_density(model), label=f"g[{model.label}]")


def g_of_t(model: MaterialModel, t: np.ndarray | float) -> np.ndarray | float:
    t_arr = np.asarray(t, dtype=float)
    if np.any(~(t_arr > 0)):
        raise DomainError("g(t) is evaluated at t > 0")
    return eval_cm(attenuation_kernel(model), t)


@dataclass(frozen=True)
class GZeroLimit:
    """g(0+) by the analytic route."""
    status: LimitStatus
    value: float | None


def g_at_zero(model: MaterialModel) -> GZeroLimit:
    """g(0+): closed form for direct models, rho c0 J'(0+)/2 for creep-based models."""
    if model.is_direct:
        limit = limit_at_zero(model.direct.g)
        return GZeroLimit(limit.status, limit.value)
    limit = creep_rate_limit(model.compliance)
    if limit.status != "finite":
        return GZeroLimit(limit.status, None)
    return GZeroLimit("finite", model.rho * wavefront_speed(model) * limit.value / 2)


@dataclass(frozen=True, eq=False)
class AttenuationDispersion:
    omega: np.ndarray
    attenuation: np.ndarray
    dispersion: np.ndarray
    phase_speed: np.ndarray
    c0: float


def attenuation_dispersion(model: MaterialModel, omega: np.ndarray | None = None) -> AttenuationDispersion:
    """A(w) = Re kappa(-iw), D(w) = w(1/c(w) - 1/c0), c(w) = w/(D + w/c0)."""
    if omega is None:
        omega = np.logspace(-3, 3, 61) / model.scale
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise DomainError("frequencies must be positive")
    c0 = wavefront_speed(model)
    excess = np.asarray(kappa_excess(model, -1j * omega))
    A = excess.real
    D = -excess.imag
    c = omega / (D + omega / c0)
    return AttenuationDispersion(omega, A, D, c, c0)


def _default_p_grid(model: MaterialModel) -> np.ndarray:
    return np.geomspace(1e-2, 1e2, 41) / model.scale


def kk_identity_residuals(model: MaterialModel, p_grid: np.ndarray | None = None) -> np.ndarray:
    """|kappa(p) - p/c0 - p g~(p)| / |kappa(p)| per p, with g~ from the extracted measure."""
    p = np.asarray(_default_p_grid(model) if p_grid is None else p_grid, dtype=float)
    direct = np.asarray(kappa(model, p))
    offset = _kernel_offset(model.direct.g) if model.is_direct else 0.0
    measure = CMFunction.from_measure(extract_density(model), offset=offset)
    via_g = p / wavefront_speed(model) + p * np.asarray(laplace_cm(measure, p))
    return np.abs(direct - via_g) / np.abs(direct)


def kk_identity_residual(model: MaterialModel, p_grid: np.ndarray | None = None) -> float:
    residual = float(np.max(kk_identity_residuals(model, p_grid)))
    logger.debug("KK identity residual for %s: %.3e", model.label, residual)
    return residual


def creep_identity_residuals(model: MaterialModel, p_grid: np.ndarray | None = None) -> np.ndarray:
    """Relative residual of 2 p g~/c0 + p g~^2 = rho p L[J'](p) per p."""
    if model.is_direct:
        raise UnsupportedOperation("the creep identity needs a creep-based model")
    p = np.asarray(_default_p_grid(model) if p_grid is None else p_grid, dtype=float)
    g_tilde = np.real(laplace_cm(CMFunction.from_measure(extract_density(model)), p))
    lhs = 2 * p * g_tilde / wavefront_speed(model) + p * g_tilde**2
    rhs = model.rho * p * np.real(laplace_cm(model.compliance.creep_rate, p))
    scale = np.where(np.abs(rhs) > 0, np.abs(rhs), 1.0)
    return np.abs(lhs - rhs) / scale


def creep_identity_residual(model: MaterialModel, p_grid: np.ndarray | None = None) -> float:
    return float(np.max(creep_identity_residuals(model, p_grid)))


@dataclass(frozen=True)
class InitialAttenuation:
    """g(0+) from p g~(p) at p = 10^k / fast_scale, k = 2, 3, ..."""
    status: LimitStatus
    value: float | None
    sequence: tuple[float, ...]


def initial_attenuation(
    model: MaterialModel, exponents: range = range(2, 7), extra_decades: int = 6
) -> InitialAttenuation:
    """Extrapolate p g~(p) to p -> inf.

    The window starts two decades beyond the fastest rate 1/fast_scale and is
    extended, up to extra_decades, until the last difference is at most half
    the previous one. A sequence that never settles is reported infinite.
    """
    ks = list(exponents)
    if len(ks) < 3:
        raise DomainError("initial attenuation needs at least three decades")

    def excess(k: int) -> float:
        return float(np.real(kappa_excess(model, np.array([10.0**k / model.fast_scale])))[0])

    seq = [excess(k) for k in ks]
    for extra in range(extra_decades + 1):
        if not all(math.isfinite(s) for s in seq):
            return InitialAttenuation("undetermined", None, tuple(seq))
        d_prev, d_last = seq[-2] - seq[-3], seq[-1] - seq[-2]
        if abs(d_last) <= 0.5 * abs(d_prev):
            # differences shrink by ~1/10 per decade; remaining tail is d_last/9
            return InitialAttenuation("finite", seq[-1] + d_last / 9, tuple(seq))
        if extra == extra_decades:
            break
        ks.append(ks[-1] + 1)
        seq.append(excess(ks[-1]))
    logger.debug("p g~(p) did not settle for %s: %s", model.label, seq)
    return InitialAttenuation("infinite", None, tuple(seq))
