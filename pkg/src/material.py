"""Viscoelastic material catalog and the creep/relaxation duality solver.

Models are built either from a creep compliance J (Bernstein function:
J0 plus a CM creep rate) or directly from the wavefront speed c0 and an LICM
attenuation kernel g. Both routes produce an immutable `MaterialModel`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from src.cm_core import (
    CMFunction,
    LimitStatus,
    SpectralMeasure,
    check_cm,
    cm_antiderivative,
    geometric_grid,
    limit_at_zero,
    stieltjes_value,
)
from src.config import DUALITY_SPAN, DUALITY_STEPS, DUALITY_TOL
from src.errors import ConstructionError, DomainError, SolverError, UnsupportedOperation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CreepCompliance:
    """J(t) = J0 + int_0^t J'(s) ds with CM creep rate J'."""
    J0: float
    creep_rate: CMFunction
    closed_form: str | None = None

    def value(self, t: np.ndarray | float) -> np.ndarray | float:
        return self.J0 + cm_antiderivative(self.creep_rate, t, 1)

    def increment(self, t: np.ndarray | float, order: int = 1) -> np.ndarray | float:
        """order-fold integral of J' from 0; order 1 is J(t) - J0."""
        return cm_antiderivative(self.creep_rate, t, order)

    def p_transform(self, p: np.ndarray | complex) -> np.ndarray | complex:
        """p J~(p) = J0 + L[J'](p), continued off the negative real axis."""
        return self.J0 + stieltjes_value(self.creep_rate, p)


@dataclass(frozen=True)
class DirectSpec:
    c0: float
    g: CMFunction


@dataclass(frozen=True, eq=False)
class RelaxationModulus:
    """G samples on a uniform grid from the duality solver."""
    times: np.ndarray
    values: np.ndarray
    G0: float
    dG0: float
    residual: float
    steps: int

    def is_non_increasing(self, slack: float = 1e-12) -> bool:
        return bool(np.all(np.diff(self.values) <= slack * np.max(np.abs(self.values))))


@dataclass(frozen=True)
class MaterialModel:
    rho: float
    compliance: CreepCompliance | None = None
    direct: DirectSpec | None = None
    name: str = ""
    params: dict[str, float] = field(default_factory=dict)
    scale: float = 1.0
    min_scale: float | None = None

    @property
    def fast_scale(self) -> float:
        """Fastest timescale; equals scale for single-timescale models."""
        return self.scale if self.min_scale is None else self.min_scale

    @property
    def is_direct(self) -> bool:
        return self.direct is not None

    @property
    def label(self) -> str:
        args = ", ".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"{self.name}({args})"


def _require_positive(**values: float) -> None:
    for key, value in values.items():
        if not value > 0:
            raise ConstructionError(f"{key} must be > 0, got {value}")


def make_zener(J0: float, J1: float, tau: float, rho: float = 1.0) -> MaterialModel:
    """Standard linear solid: J(t) = J0 + J1 (1 - exp(-t/tau))."""
    _require_positive(J0=J0, tau=tau, rho=rho)
    if J1 < 0:
        raise ConstructionError(f"J1 must be >= 0, got {J1}")
    rate = CMFunction.exponential(1.0 / tau, J1 / tau) if J1 > 0 else CMFunction.zero()
    return MaterialModel(
        rho=rho,
        compliance=CreepCompliance(J0, rate, closed_form="zener"),
        name="zener",
        params={"J0": J0, "J1": J1, "tau": tau, "rho": rho},
        scale=tau,
    )


def make_elastic(J0: float, rho: float = 1.0) -> MaterialModel:
    _require_positive(J0=J0, rho=rho)
    return MaterialModel(
        rho=rho,
        compliance=CreepCompliance(J0, CMFunction.zero(), closed_form="elastic"),
        name="elastic",
        params={"J0": J0, "rho": rho},
    )


def make_kelvin_chain(J0: float, elements: Sequence[tuple[float, float]], rho: float = 1.0) -> MaterialModel:
    """J(t) = J0 + sum_k J_k (1 - exp(-t/tau_k)) for elements (J_k, tau_k)."""
    _require_positive(J0=J0, rho=rho)
    if not elements:
        raise ConstructionError("kelvin chain needs at least one element")
    for J_k, tau_k in elements:
        _require_positive(tau=tau_k)
        if J_k < 0:
            raise ConstructionError(f"element compliance must be >= 0, got {J_k}")
    locations = [1.0 / tau_k for _, tau_k in elements]
    weights = [J_k / tau_k for J_k, tau_k in elements]
    rate = CMFunction.from_measure(SpectralMeasure.from_atoms(locations, weights), label="kelvin creep rate")
    params = {"J0": J0, "rho": rho}
    for k, (J_k, tau_k) in enumerate(elements, start=1):
        params[f"J{k}"] = J_k
        params[f"tau{k}"] = tau_k
    return MaterialModel(
        rho=rho,
        compliance=CreepCompliance(J0, rate, closed_form="kelvin_chain"),
        name="kelvin_chain",
        params=params,
        scale=max(tau_k for _, tau_k in elements),
        min_scale=min(tau_k for _, tau_k in elements),
    )


def make_powerlaw_creep(J0: float, c: float, beta: float, rho: float = 1.0) -> MaterialModel:
    """J'(t) = c t^{-beta}; infinite J'(0+), continuous wavefront."""
    _require_positive(J0=J0, c=c, rho=rho)
    if not 0 < beta < 1:
        raise ConstructionError(f"beta must lie in ]0,1[, got {beta}")
    rate = CMFunction.power_law(c * math.gamma(1 - beta), beta)
    return MaterialModel(
        rho=rho,
        compliance=CreepCompliance(J0, rate, closed_form="powerlaw_creep"),
        name="powerlaw_creep",
        params={"J0": J0, "c": c, "beta": beta, "rho": rho},
    )


def make_direct(c0: float, g: CMFunction, rho: float = 1.0, name: str = "direct",
                params: dict[str, float] | None = None, scale: float = 1.0) -> MaterialModel:
    """(c0, g) model; g must pass the CM sign test to order 4."""
    _require_positive(c0=c0, rho=rho)
    report = check_cm(g, geometric_grid(1e-3 * scale, 1e3 * scale, 61), order=4)
    if not report.ok:
        raise ConstructionError(
            f"attenuation kernel {g.label} fails the CM test at order {report.first_failure} "
            f"(violation {report.max_violation:.3e})"
        )
    return MaterialModel(
        rho=rho,
        direct=DirectSpec(c0, g),
        name=name,
        params=params if params is not None else {"c0": c0, "rho": rho},
        scale=scale,
    )


def make_powerlaw_g(c0: float, a: float, alpha: float, rho: float = 1.0) -> MaterialModel:
    """kappa(p) = p/c0 + a p^alpha."""
    _require_positive(a=a)
    if not 0 < alpha < 1:
        raise ConstructionError(f"alpha must lie in ]0,1[, got {alpha}")
    return make_direct(c0, CMFunction.power_law(a, alpha), rho, name="powerlaw_g",
                       params={"c0": c0, "a": a, "alpha": alpha, "rho": rho})


def make_log_g(c0: float, a: float, b: float, A: float = 1.0, rho: float = 1.0) -> MaterialModel:
    """g(t) = b ln(1/(a t) + A), A >= 1."""
    _require_positive(a=a, b=b)
    if A < 1:
        raise ConstructionError(f"A must be >= 1 for an LICM kernel, got {A}")
    return make_direct(c0, CMFunction.logarithmic(a, b, A, scale=1.0 / a), rho, name="log_g",
                       params={"c0": c0, "a": a, "b": b, "A": A, "rho": rho}, scale=1.0 / a)


def make_composite_g(c0: float, kernels: Sequence[CMFunction], rho: float = 1.0) -> MaterialModel:
    """Sum of attenuation kernels."""
    if not kernels:
        raise ConstructionError("composite model needs at least one kernel")
    params = {"c0": c0, "rho": rho, "kernels": float(len(kernels))}
    return make_direct(c0, CMFunction.sum(kernels), rho, name="composite_g", params=params)


@dataclass(frozen=True)
class CreepRateLimit:
    status: LimitStatus
    value: float | None


def creep_rate_limit(J: CreepCompliance) -> CreepRateLimit:
    """J'(0+): analytic for closed forms, total creep-rate mass for measures."""
    limit = limit_at_zero(J.creep_rate)
    logger.debug("creep rate limit: %s %s", limit.status, limit.value)
    return CreepRateLimit(limit.status, limit.value)


def _product_weights(A1: np.ndarray, A2: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact weights for a piecewise-linear G against a kernel with integrals A1, A2.

    int_{t_{m-1}}^{t_m} G(t_n - s) K(s) ds = beta[m] G_{n-m+1} + alpha[m] G_{n-m}
    where A1 = I^1 K and A2 = I^2 K on the grid. Index 0 is unused.
    """
    beta = np.zeros_like(A1)
    alpha = np.zeros_like(A1)
    beta[1:] = (A2[1:] - A2[:-1]) / h - A1[:-1]
    alpha[1:] = A1[1:] - A1[:-1] - beta[1:]
    return alpha, beta


def _march(J: CreepCompliance, n_steps: int, h: float) -> np.ndarray:
    """Solve J0 G + G * J' = 1 by product integration, G(0) = 1/J0."""
    t = h * np.arange(n_steps + 1)
    A1 = np.asarray(J.increment(t, 1))
    A2 = np.asarray(J.increment(t, 2))
    alpha, beta = _product_weights(A1, A2, h)
    coupled = np.zeros(n_steps + 1)
    coupled[1:n_steps] = alpha[1:n_steps] + beta[2:n_steps + 1]
    G = np.empty(n_steps + 1)
    G[0] = 1.0 / J.J0
    denom = J.J0 + beta[1]
    for n in range(1, n_steps + 1):
        history = np.dot(coupled[1:n], G[n - 1:0:-1]) if n > 1 else 0.0
        G[n] = (1.0 - history - alpha[n] * G[0]) / denom
    return G


def _convolution_residual(J: CreepCompliance, G: np.ndarray, h: float) -> np.ndarray:
    """(G * J)(t_n) - t_n for piecewise-linear G, exact in the J kernel."""
    n = G.size - 1
    t = h * np.arange(n + 1)
    P1 = J.J0 * t + np.asarray(J.increment(t, 2))
    P2 = J.J0 * t**2 / 2 + np.asarray(J.increment(t, 3))
    alpha, beta = _product_weights(P1, P2, h)
    near = np.convolve(alpha, G)[: n + 1]
    shifted = np.zeros(n + 1)
    shifted[:n] = beta[1:]
    far = np.convolve(shifted, G)[: n + 1] - shifted * G[0]
    return near + far - t


def solve_duality(
    J: CreepCompliance,
    grid: np.ndarray | None = None,
    *,
    scale: float = 1.0,
    tol: float = DUALITY_TOL,
) -> RelaxationModulus:
    """Relaxation modulus G with int_0^t G(s) J(t - s) ds = t.

    Marches the differentiated equation with step h and h/2, returns the
    Richardson combination on the coarse grid. The residual of (G * J) - t
    is extrapolated the same way and must stay below tol relative to max(t, h).
    """
    if J.J0 <= 0:
        raise UnsupportedOperation("J0 = 0 makes G singular at 0; the duality solver needs J0 > 0")
    if grid is None:
        grid = np.linspace(0.0, DUALITY_SPAN * scale, DUALITY_STEPS + 1)
    grid = np.asarray(grid, dtype=float)
    if grid.size < 3 or grid[0] != 0:
        raise DomainError("duality grid must start at 0 and hold at least 3 nodes")
    h = grid[1] - grid[0]
    if h <= 0 or not np.allclose(np.diff(grid), h, rtol=1e-9, atol=0):
        raise DomainError("duality grid must be uniform and increasing")
    n_steps = grid.size - 1

    coarse = _march(J, n_steps, h)
    fine = _march(J, 2 * n_steps, h / 2)
    G = (4 * fine[::2] - coarse) / 3
    r_coarse = _convolution_residual(J, coarse, h)
    r_fine = _convolution_residual(J, fine, h / 2)[::2]
    extrapolated = (4 * r_fine - r_coarse) / 3
    residual = float(np.max(np.abs(extrapolated) / np.maximum(grid, h)))
    dG0 = (-3 * G[0] + 4 * G[1] - G[2]) / (2 * h)
    logger.debug("duality: steps=%d h=%.3e residual=%.3e G'(0+)=%.6g", n_steps, h, residual, dG0)
    if residual > tol:
        raise SolverError(f"duality residual {residual:.3e} exceeds tolerance {tol:.1e}", residual=residual)
    if residual > 0.5 * tol:
        logger.warning("duality residual %.3e is within a factor 2 of the tolerance %.1e", residual, tol)
    return RelaxationModulus(grid, G, 1.0 / J.J0, float(dG0), residual, n_steps)

