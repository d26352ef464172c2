"""Numerical inverse Laplace transform and the Green's function built on it.

Two inversion methods share one evaluator:

* fixed Talbot: deformed contour, M nodes, r = 2M/5. Accurate for smooth
  originals and for a step at t = 0.
* de Hoog: accelerated Fourier series on the Bromwich line. Used inside the
  near-wavefront band and ahead of the wavefront, where the contour must not
  leave the right half-plane.

The field is u(t, x) = (2 rho)^-1 [H(tau)/c0 + int_0^tau H(tau - s) df(s)]
with tau = t - |x|/c0 and f the primitive of g.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Literal

import numpy as np

from src.cm_core import cm_antiderivative
from src.config import (
    ACCURACY_FAR,
    ACCURACY_NEAR,
    CONVOLUTION_PANELS,
    DEHOOG_TERMS,
    DEHOOG_TOL,
    NEAR_WAVEFRONT,
    TALBOT_NODES,
)
from src.dispersion import attenuation_kernel, g_at_zero, kappa_excess, wavefront_speed
from src.errors import DomainError
from src.material import MaterialModel

logger = logging.getLogger(__name__)

Transform = Callable[[np.ndarray], np.ndarray]
Method = Literal["auto", "talbot", "fourier"]
Route = Literal["quadrature", "direct"]


@dataclass(frozen=True)
class BromwichEvaluator:
    """Inverse Laplace transform of `transform` (analytic for Re p > 0, vectorized)."""
    transform: Transform
    nodes: int = TALBOT_NODES
    accuracy: float = ACCURACY_FAR
    method: Method = "auto"
    near_band: float = 0.0
    fourier_terms: int = DEHOOG_TERMS
    fourier_tol: float = DEHOOG_TOL
    valid_range: tuple[float, float] = (-math.inf, math.inf)

    def refined(self) -> BromwichEvaluator:
        """Same evaluator with the node count doubled."""
        return replace(self, nodes=2 * self.nodes, fourier_terms=2 * self.fourier_terms)


def talbot(transform: Transform, t: np.ndarray, nodes: int = TALBOT_NODES) -> np.ndarray:
    """Fixed Talbot inversion at each t > 0, vectorized over t and nodes."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    M = nodes
    r = 2.0 * M / 5.0
    theta = np.arange(1, M) * np.pi / M
    cot = 1.0 / np.tan(theta)
    shape = r * theta * (cot + 1j)
    sigma = theta + (theta * cot - 1.0) * cot
    p = np.empty((t.size, M), dtype=complex)
    p[:, 0] = r / t
    p[:, 1:] = shape[None, :] / t[:, None]
    F = np.asarray(transform(p), dtype=complex)
    gamma = np.empty_like(p)
    gamma[:, 0] = 0.5 * np.exp(r) * F[:, 0]
    gamma[:, 1:] = np.exp(t[:, None] * p[:, 1:]) * (1.0 + 1j * sigma[None, :]) * F[:, 1:]
    return r / (M * t) * np.real(gamma.sum(axis=1))


def de_hoog(transform: Transform, t: float, terms: int = DEHOOG_TERMS, tol: float = DEHOOG_TOL) -> float:
    """de Hoog, Knight and Stokes accelerated Fourier inversion at one t > 0."""
    M = terms
    T = 2.0 * t
    gamma = -math.log(tol) / (2.0 * T)
    n_points = 2 * M + 1
    p = gamma + 1j * np.pi * np.arange(n_points) / T
    fp = np.asarray(transform(p), dtype=complex)

    # quotient-difference table; row index is the superscript in the usual q-d notation
    e = np.zeros((n_points, M + 1), dtype=complex)
    q = np.zeros((n_points, M), dtype=complex)
    q[0, 0] = fp[1] / (fp[0] / 2.0)
    q[1:2 * M, 0] = fp[2:2 * M + 1] / fp[1:2 * M]
    for rr in range(1, M + 1):
        mr = 2 * (M - rr)
        e[0:mr, rr] = q[1:mr + 1, rr - 1] - q[0:mr, rr - 1] + e[1:mr + 1, rr - 1]
        if rr != M:
            mq = 2 * (M - rr - 1) + 1
            q[0:mq, rr] = q[1:mq + 1, rr - 1] * e[1:mq + 1, rr] / e[0:mq, rr]

    d = np.zeros(n_points, dtype=complex)
    d[0] = fp[0] / 2.0
    for rr in range(1, M + 1):
        d[2 * rr - 1] = -q[0, rr - 1]
        d[2 * rr] = -e[0, rr]

    z = np.exp(1j * np.pi * t / T)
    A = np.zeros(n_points + 2, dtype=complex)
    B = np.zeros(n_points + 2, dtype=complex)
    A[1] = d[0]
    B[0:2] = 1.0
    for i in range(1, 2 * M):
        A[i + 1] = A[i] + d[i] * A[i - 1] * z
        B[i + 1] = B[i] + d[i] * B[i - 1] * z

    brem = (1.0 + (d[2 * M - 1] - d[2 * M]) * z) / 2.0
    rem = -brem * (1.0 - np.sqrt(1.0 + d[2 * M] * z / brem**2))
    if not np.isfinite(rem):
        rem = 0.0
    A[n_points] = A[2 * M] + rem * A[2 * M - 1]
    B[n_points] = B[2 * M] + rem * B[2 * M - 1]
    return float(math.exp(gamma * t) / T * np.real(A[n_points] / B[n_points]))


def _in_range(values: np.ndarray, valid_range: tuple[float, float]) -> np.ndarray:
    lo, hi = valid_range
    return np.isfinite(values) & (values >= lo) & (values <= hi)


def invert_laplace(ev: BromwichEvaluator, t: np.ndarray | float) -> np.ndarray | float:
    """f(t) for t > 0. In auto mode, t below near_band uses the Fourier method.

    Auto mode also retries every sample outside ev.valid_range with the other
    method and keeps the retry when it lands inside the range.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(~(t_arr > 0)):
        raise DomainError("inverse Laplace transform is evaluated at t > 0")
    if ev.method == "talbot":
        fourier = np.zeros(t_arr.shape, dtype=bool)
    elif ev.method == "fourier":
        fourier = np.ones(t_arr.shape, dtype=bool)
    else:
        fourier = t_arr < ev.near_band
    out = np.empty_like(t_arr)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if np.any(~fourier):
            out[~fourier] = talbot(ev.transform, t_arr[~fourier], ev.nodes)
        for i in np.flatnonzero(fourier):
            out[i] = de_hoog(ev.transform, t_arr[i], ev.fourier_terms, ev.fourier_tol)
        if ev.method == "auto":
            out = _retry_out_of_range(ev, t_arr, out, fourier)
    return float(out[0]) if np.ndim(t) == 0 else out.reshape(np.shape(t))


def _retry_out_of_range(ev: BromwichEvaluator, t: np.ndarray, out: np.ndarray, fourier: np.ndarray) -> np.ndarray:
    # the Talbot contour crosses the cut, where stiff transforms grow like exp(|p| t);
    # an underflowed transform breaks the de Hoog quotient-difference table
    bad = ~_in_range(out, ev.valid_range)
    if not np.any(bad):
        return out
    second = out.copy()
    for i in np.flatnonzero(bad & ~fourier):
        second[i] = de_hoog(ev.transform, t[i], ev.fourier_terms, ev.fourier_tol)
    retry = bad & fourier
    if np.any(retry):
        second[retry] = talbot(ev.transform, t[retry], ev.nodes)
    fixed = bad & _in_range(second, ev.valid_range)
    logger.debug("inversion: %d of %d samples out of range, %d recovered by the other method",
                 int(bad.sum()), t.size, int(fixed.sum()))
    return np.where(fixed, second, out)


def _kernel_transform(model: MaterialModel, r: float) -> Transform:
    def transform(p: np.ndarray) -> np.ndarray:
        return np.exp(-np.asarray(kappa_excess(model, p)) * r) / p
    return transform


def kernel_evaluator(model: MaterialModel, r: float, **options) -> BromwichEvaluator:
    """Evaluator for H(., r): inverse transform of exp(-p g~(p) r)/p."""
    options.setdefault("near_band", NEAR_WAVEFRONT * model.fast_scale)
    options.setdefault("valid_range", (-ACCURACY_NEAR, 1.0 + ACCURACY_NEAR))
    return BromwichEvaluator(_kernel_transform(model, r), **options)


@dataclass(frozen=True, eq=False)
class WavefrontKernel:
    r: float
    tau: np.ndarray
    values: np.ndarray
    flags: tuple[str, ...]
    h0: float | None

    @property
    def ok(self) -> bool:
        return all(flag == "ok" for flag in self.flags)


def _kernel_flags(values: np.ndarray, slack: float) -> tuple[str, ...]:
    flags = []
    for v in values:
        if not np.isfinite(v):
            flags.append("nonfinite")
        elif v < -slack or v > 1 + slack:
            flags.append("out-of-range")
        else:
            flags.append("ok")
    return tuple(flags)


def kernel_at_zero(model: MaterialModel, r: float) -> float | None:
    """H(0+, r) = exp(-g(0+) r), or None when g(0+) is not finite and r > 0."""
    if r == 0:
        return 1.0
    g0 = g_at_zero(model)
    return math.exp(-g0.value * r) if g0.status == "finite" else None


def wavefront_kernel(model: MaterialModel, r: float, tau_grid: np.ndarray, **options) -> WavefrontKernel:
    """H(tau, r) on tau_grid > 0, with per-sample flags."""
    if r < 0:
        raise DomainError(f"distance must be >= 0, got {r}")
    tau = np.asarray(tau_grid, dtype=float).reshape(-1)
    if np.any(~(tau > 0)):
        raise DomainError("wavefront kernel is sampled at tau > 0")
    ev = kernel_evaluator(model, r, **options)
    values = np.asarray(invert_laplace(ev, tau), dtype=float)
    flags = _kernel_flags(values, ACCURACY_NEAR)
    bad = sum(flag != "ok" for flag in flags)
    if bad:
        logger.warning("wavefront kernel r=%g: %d of %d samples flagged", r, bad, tau.size)
    return WavefrontKernel(float(r), tau, values, flags, kernel_at_zero(model, r))


def f_integral(model: MaterialModel, t: np.ndarray | float) -> np.ndarray | float:
    """f(t) = int_0^t g(s) ds."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DomainError("f(t) is defined for t >= 0")
    return cm_antiderivative(attenuation_kernel(model), t, 1)


def _graded_mesh(tau: float, panels: int) -> np.ndarray:
    """Cosine mesh on [0, tau], clustered at both ends."""
    u = np.arange(panels + 1) / panels
    mesh = tau * (1.0 - np.cos(np.pi * u)) / 2.0
    mesh[-1] = tau
    return mesh


@dataclass(frozen=True)
class _Convolutions:
    stieltjes: float  # int_0^tau H(tau - s) df(s)
    plain: float  # int_0^tau f(s) H(tau - s) ds
    kernel: float  # H(tau)


def _convolutions(model: MaterialModel, r: float, tau: float, panels: int) -> _Convolutions:
    """Both convolutions of H with f on nested graded meshes, Richardson-combined."""
    fine = _graded_mesh(tau, 2 * panels)
    lags = tau - fine
    H = np.empty_like(fine)
    interior = lags > 0
    H[interior] = np.asarray(invert_laplace(kernel_evaluator(model, r), lags[interior]))
    h0 = kernel_at_zero(model, r)
    H[~interior] = 0.0 if h0 is None else h0
    g = attenuation_kernel(model)
    f = np.asarray(cm_antiderivative(g, fine, 1))

    def rules(step: int) -> tuple[float, float]:
        s, Hs, fs = fine[::step], H[::step], f[::step]
        mid_H = (Hs[1:] + Hs[:-1]) / 2
        stieltjes = float(np.sum(mid_H * np.diff(fs)))
        plain = float(np.trapezoid(fs * Hs, s))
        return stieltjes, plain

    coarse_s, coarse_p = rules(2)
    fine_s, fine_p = rules(1)
    return _Convolutions((4 * fine_s - coarse_s) / 3, (4 * fine_p - coarse_p) / 3, float(H[0]))


def _check_time(t: float) -> None:
    if not t > 0:
        raise DomainError(f"Green's function is evaluated at t > 0, got {t}")


def _jump_top(model: MaterialModel, r: float) -> float:
    h0 = kernel_at_zero(model, r)
    return 0.0 if h0 is None else h0 / (2 * model.rho * wavefront_speed(model))


def greens_u(model: MaterialModel, t: float, x: float, panels: int = CONVOLUTION_PANELS) -> float:
    """u(t, x) by H and the Stieltjes convolution with f; tau = 0 gives the post-jump limit."""
    _check_time(t)
    c0 = wavefront_speed(model)
    r = abs(x)
    tau = t - r / c0
    if tau < 0:
        return 0.0
    if tau == 0:
        return _jump_top(model, r)
    conv = _convolutions(model, r, tau, panels)
    return (conv.kernel / c0 + conv.stieltjes) / (2 * model.rho)


def _field_transform(model: MaterialModel, r: float, delayed: bool) -> Transform:
    c0 = wavefront_speed(model)
    rho = model.rho

    def transform(p: np.ndarray) -> np.ndarray:
        excess = np.asarray(kappa_excess(model, p))
        value = (p / c0 + excess) / (2 * rho * p**2) * np.exp(-excess * r)
        return value * np.exp(-p * r / c0) if delayed else value
    return transform


def _field_evaluator(model: MaterialModel, r: float) -> BromwichEvaluator:
    # u >= 0 behind the wavefront
    floor = -ACCURACY_NEAR / (2 * model.rho * wavefront_speed(model))
    return BromwichEvaluator(
        _field_transform(model, r, delayed=False),
        near_band=NEAR_WAVEFRONT * model.fast_scale,
        valid_range=(floor, math.inf),
    )


_LIMIT_OFFSETS = np.array([1.0, 2.0, 4.0, 8.0]) * 1e-3


def direct_wavefront_limit(model: MaterialModel, x: float) -> float:
    """u at tau -> 0+ from a quadratic fit of the direct field at tau = (1, 2, 4, 8)e-3 fast_scale."""
    r = abs(x)
    taus = _LIMIT_OFFSETS * model.fast_scale
    ev = _field_evaluator(model, r)
    values = np.asarray(invert_laplace(ev, taus))
    coeffs = np.polyfit(taus, values, 2)
    return float(np.polyval(coeffs, 0.0))


def greens_u_direct(model: MaterialModel, t: float, x: float) -> float:
    """u(t, x) by direct Bromwich inversion of kappa/(2 rho p^2) exp(-kappa |x|)."""
    _check_time(t)
    c0 = wavefront_speed(model)
    r = abs(x)
    tau = t - r / c0
    if tau > 0:
        ev = _field_evaluator(model, r)
        return float(invert_laplace(ev, tau))
    if tau == 0:
        return direct_wavefront_limit(model, x)
    ev = BromwichEvaluator(_field_transform(model, r, delayed=True), method="fourier")
    return float(invert_laplace(ev, t))


@dataclass(frozen=True)
class CorrectionBound:
    """(f * H)(tau) against H(tau) int_0^tau f."""
    tau: float
    convolution: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.convolution <= self.bound * (1 + ACCURACY_NEAR) + ACCURACY_FAR


def correction_bound(model: MaterialModel, r: float, tau: float, panels: int = CONVOLUTION_PANELS) -> CorrectionBound:
    if not tau > 0:
        raise DomainError("correction bound needs tau > 0")
    conv = _convolutions(model, abs(r), tau, panels)
    integral_f = float(cm_antiderivative(attenuation_kernel(model), tau, 2))
    return CorrectionBound(tau, conv.plain, conv.kernel * integral_f)


@dataclass(frozen=True, eq=False)
class GreensField:
    t: np.ndarray
    x: np.ndarray
    tau: np.ndarray
    u: np.ndarray
    flags: tuple[str, ...]
    label: str
    route: Route


def _flag(tau: float, band: float, value: float, floor: float) -> str:
    if not np.isfinite(value):
        return "nonfinite"
    if value < floor:
        return "negative"
    if tau < 0:
        return "ahead"
    if tau == 0:
        return "wavefront"
    return "near" if tau < band else "behind"


def greens_field(
    model: MaterialModel,
    t_grid: np.ndarray,
    x_grid: np.ndarray,
    route: Route = "quadrature",
    threads: int = 1,
) -> GreensField:
    """u on the (t, x) product grid, rows ordered x-major. Points are independent."""
    c0 = wavefront_speed(model)
    tt, xx = np.meshgrid(np.asarray(t_grid, dtype=float), np.asarray(x_grid, dtype=float))
    t_flat, x_flat = tt.ravel(), xx.ravel()
    evaluate = greens_u if route == "quadrature" else greens_u_direct

    def point(i: int) -> float:
        return evaluate(model, float(t_flat[i]), float(x_flat[i]))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            u = np.array(list(executor.map(point, range(t_flat.size))))
    else:
        u = np.array([point(i) for i in range(t_flat.size)])
    tau = t_flat - np.abs(x_flat) / c0
    band = NEAR_WAVEFRONT * model.fast_scale
    floor = -ACCURACY_NEAR / (2 * model.rho * c0)
    flags = tuple(_flag(tk, band, uk, floor) for tk, uk in zip(tau, u))
    logger.info("greens field %s: %d points via %s", model.label, u.size, route)
    return GreensField(t_flat, x_flat, tau, u, flags, model.label, route)


@dataclass(frozen=True)
class WavefrontLocation:
    t: float
    expected: float
    jump: float


def locate_wavefront(model: MaterialModel, x: float, t_grid: np.ndarray) -> WavefrontLocation:
    """Largest increment of the direct field along t_grid."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size < 2 or np.any(np.diff(t_grid) <= 0):
        raise DomainError("t_grid must be strictly increasing with at least two points")
    u = np.array([greens_u_direct(model, float(t), x) for t in t_grid])
    steps = np.diff(u)
    k = int(np.argmax(np.abs(steps)))
    return WavefrontLocation(
        t=float((t_grid[k] + t_grid[k + 1]) / 2),
        expected=abs(x) / wavefront_speed(model),
        jump=float(steps[k]),
    )
