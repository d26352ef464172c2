"""Wavefront diagnostics: jump criterion and amplitude, asymptotic phase, upper bounds,
stepwise regularization and regular-variation checks.

All diagnostics work on H(tau, r), the inverse transform of exp(-p g~(p) r)/p, and on
the attenuation kernel g. None of them compute the unspecified constants of the
asymptotic estimates; checks are stated on ratios and log-slopes instead.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Literal

import numpy as np
from scipy import special

from src.cm_core import eval_cm, geometric_grid
from src.config import (
    BAND_MAX,
    BAND_MIN,
    BOUND_FLOOR,
    BOUND_SLACK,
    FIT_POINTS_PER_DECADE,
    MONOTONE_SLACK,
    ROUTE_TOL,
)
from src.dispersion import (
    attenuation_kernel,
    g_at_zero,
    g_of_t,
    initial_attenuation,
    kappa_excess,
    wavefront_speed,
)
from src.errors import (
    DomainError,
    FitError,
    HypothesisError,
    SolverError,
    UnsupportedOperation,
)
from src.inversion import wavefront_kernel
from src.material import MaterialModel, creep_rate_limit, solve_duality

logger = logging.getLogger(__name__)

JumpStatus = Literal["discontinuous", "continuous", "undetermined"]


@dataclass(frozen=True)
class JumpCriterion:
    """g(0+) < inf iff the wavefront carries a jump."""
    status: JumpStatus
    g0: float | None
    routes: dict[str, float | None] = field(default_factory=dict)
    diagnostics: str = ""

    @property
    def discontinuous(self) -> bool:
        return self.status == "discontinuous"


def _relative_gap(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300) if a != b else 0.0


def jump_criterion(model: MaterialModel) -> JumpCriterion:
    """Classify the wavefront.

    Direct models use the analytic limit of g. Creep-based models combine the
    creep-rate route rho c0 J'(0+)/2 with the p g~(p) extrapolation and report
    "undetermined" when the two disagree.
    """
    analytic = g_at_zero(model)
    if model.is_direct:
        if analytic.status == "finite":
            return JumpCriterion("discontinuous", analytic.value, {"analytic": analytic.value})
        if analytic.status == "infinite":
            return JumpCriterion("continuous", None, {"analytic": None})
        return JumpCriterion("undetermined", None, {"analytic": None}, "kernel mass did not settle")

    extrapolated = initial_attenuation(model)
    routes = {"creep_rate": analytic.value, "transform": extrapolated.value}
    if analytic.status == "finite" and extrapolated.status == "finite":
        gap = _relative_gap(analytic.value, extrapolated.value)
        if gap <= ROUTE_TOL or abs(analytic.value - extrapolated.value) <= ROUTE_TOL * 1e-3:
            return JumpCriterion("discontinuous", analytic.value, routes)
        return JumpCriterion("undetermined", None, routes, f"routes differ by {gap:.3e}")
    if analytic.status == "infinite" and extrapolated.status == "infinite":
        return JumpCriterion("continuous", None, routes)
    diagnostics = (
        f"creep-rate route {analytic.status}, transform route {extrapolated.status} "
        f"(p g~(p) sequence {extrapolated.sequence})"
    )
    logger.warning("jump criterion undetermined for %s: %s", model.label, diagnostics)
    return JumpCriterion("undetermined", None, routes, diagnostics)


@dataclass(frozen=True)
class JumpAmplitude:
    r: float
    value: float
    routes: dict[str, float | None]
    g0: float = 0.0

    @property
    def discrepancy(self) -> float:
        """Largest relative difference between computable routes."""
        values = [v for v in self.routes.values() if v is not None]
        return max((_relative_gap(a, b) for a in values for b in values), default=0.0)

    @property
    def tolerance(self) -> float:
        """ROUTE_TOL on the exponent g0 r; a relative error e in g0 moves exp(-g0 r) by about e g0 r."""
        return ROUTE_TOL * max(1.0, self.g0 * self.r)

    @property
    def consistent(self) -> bool:
        return self.discrepancy <= self.tolerance


def _amplitude(model: MaterialModel, g0: float, r: float) -> float:
    return math.exp(-g0 * r) / (2 * model.rho * wavefront_speed(model))


def jump_amplitude(model: MaterialModel, r: float) -> JumpAmplitude:
    """u(t, x) jump at t = |x|/c0: (2 rho c0)^-1 exp(-g(0+) r), with the J'(0+) and G'(0+) routes."""
    if r < 0:
        raise DomainError(f"distance must be >= 0, got {r}")
    criterion = jump_criterion(model)
    if not criterion.discontinuous:
        raise UnsupportedOperation(f"{model.label}: wavefront is {criterion.status}; no jump amplitude")
    c0 = wavefront_speed(model)
    routes: dict[str, float | None] = {"g0": _amplitude(model, criterion.g0, r), "creep_rate": None, "relaxation": None}
    if not model.is_direct:
        J = model.compliance
        rate0 = creep_rate_limit(J).value
        routes["creep_rate"] = _amplitude(model, rate0 / (2 * J.J0 * c0), r)
        try:
            G = solve_duality(J, scale=model.scale)
            routes["relaxation"] = _amplitude(model, -G.dG0 / (2 * model.rho * c0**3), r)
        except SolverError as exc:
            logger.warning("relaxation route unavailable for %s: %s", model.label, exc)
    return JumpAmplitude(float(r), routes["g0"], routes, float(criterion.g0))


@dataclass(frozen=True, eq=False)
class RatioTrace:
    tau: np.ndarray
    H: np.ndarray
    ratio: np.ndarray
    flags: tuple[str, ...]

    def pairs(self) -> list[tuple[float, float]]:
        return [(float(t), float(v)) for t, v in zip(self.tau, self.ratio)]

    def rows(self) -> list[tuple[float, float, str]]:
        """(tau, ratio, flag) per sample; flag is the kernel flag of H at tau."""
        return [(float(t), float(v), f) for t, v, f in zip(self.tau, self.ratio, self.flags)]

    @property
    def flagged(self) -> int:
        return sum(flag != "ok" for flag in self.flags)


def _check_decreasing(taus: np.ndarray) -> np.ndarray:
    taus = np.asarray(taus, dtype=float).reshape(-1)
    if taus.size == 0 or np.any(taus <= 0):
        raise DomainError("tau values must be positive")
    if np.any(np.diff(taus) >= 0):
        raise DomainError("tau sequence must be strictly decreasing")
    return taus


def asymptotic_phase_ratio(model: MaterialModel, r: float, tau_sequence: np.ndarray) -> RatioTrace:
    """H(tau, r) exp(g(tau) r) along a decreasing tau sequence."""
    taus = _check_decreasing(tau_sequence)
    kernel = wavefront_kernel(model, r, taus)
    g = np.asarray(g_of_t(model, taus), dtype=float)
    ratio = kernel.values * np.exp(g * r)
    return RatioTrace(taus, kernel.values, ratio, kernel.flags)


def _log_l(model: MaterialModel, p: np.ndarray, r: float) -> np.ndarray:
    """ln l(p) = -p g~(p) r for real p."""
    return -np.real(np.asarray(kappa_excess(model, np.asarray(p, dtype=float)))) * r


def local_index(model: MaterialModel, p: np.ndarray, r: float, lam: float = 2.0) -> np.ndarray:
    """Regular-variation index of 1/l at p, by a centered ratio with factor lam."""
    p = np.asarray(p, dtype=float)
    return (_log_l(model, p / lam, r) - _log_l(model, p * lam, r)) / (2 * math.log(lam))


def karamata_ratio(model: MaterialModel, r: float, taus: np.ndarray) -> RatioTrace:
    """H(tau) Gamma(1 + rho) / l(1/tau); tends to 1 for slowly and regularly varying l."""
    taus = _check_decreasing(taus)
    kernel = wavefront_kernel(model, r, taus)
    p = 1.0 / taus
    index = local_index(model, p, r)
    log_ratio = np.log(np.maximum(kernel.values, 1e-300)) + special.gammaln(1 + index) - _log_l(model, p, r)
    return RatioTrace(taus, kernel.values, np.exp(log_ratio), kernel.flags)


@dataclass(frozen=True, eq=False)
class HypothesisReport:
    """-t g'(t) sampled on t; passed when non-increasing within slack."""
    t: np.ndarray
    values: np.ndarray
    passed: bool
    failing_t: float | None


def _band_grid(model: MaterialModel, lo: float = BAND_MIN, hi: float = BAND_MAX) -> np.ndarray:
    decades = math.log10(hi / lo)
    count = max(int(round(decades * FIT_POINTS_PER_DECADE)) + 1, 2)
    return geometric_grid(lo * model.scale, hi * model.scale, count)


def hypothesis_check(model: MaterialModel, t_grid: np.ndarray | None = None, step: float = 1e-3) -> HypothesisReport:
    """Is -t g'(t) non-increasing? Derivative by a centered difference in ln t."""
    t = _band_grid(model) if t_grid is None else np.asarray(t_grid, dtype=float)
    if t.size < 2 or np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise DomainError("hypothesis grid must be positive and strictly increasing")
    g = attenuation_kernel(model)
    up = np.asarray(eval_cm(g, t * math.exp(step)))
    down = np.asarray(eval_cm(g, t * math.exp(-step)))
    values = -(up - down) / (2 * step)
    slack = MONOTONE_SLACK * max(float(np.max(np.abs(values))), 1e-300)
    rises = np.flatnonzero(np.diff(values) > slack)
    failing = float(t[rises[0] + 1]) if rises.size else None
    return HypothesisReport(t, values, failing is None, failing)


@dataclass(frozen=True)
class BoundCheck:
    """Worst relative excess of H over exp(-g(tau) r)."""
    max_violation: float
    worst_r: float
    worst_tau: float
    samples: int
    flagged: int = 0

    @property
    def holds(self) -> bool:
        return self.max_violation <= BOUND_SLACK


def upper_bound_check(model: MaterialModel, r_grid: np.ndarray, tau_grid: np.ndarray | None = None) -> BoundCheck:
    """max over the grid of max(0, H - e^{-g r}) / max(e^{-g r}, floor).

    Requires -t g'(t) non-increasing on tau_grid; otherwise HypothesisError names
    the first tau where it rises. For g = b ln(1/(a t) + A) the bound is
    (1/(a tau) + A)^{-b r}.
    """
    taus = _band_grid(model) if tau_grid is None else np.asarray(tau_grid, dtype=float)
    hypothesis = hypothesis_check(model, taus)
    if not hypothesis.passed:
        raise HypothesisError(
            f"{model.label}: -t g'(t) is not non-increasing (rises at t={hypothesis.failing_t:.3e})",
            failing_t=hypothesis.failing_t,
        )
    g = np.asarray(g_of_t(model, taus), dtype=float)
    worst = (0.0, float("nan"), float("nan"))
    flagged = 0
    for r in np.asarray(r_grid, dtype=float).reshape(-1):
        kernel = wavefront_kernel(model, float(r), taus)
        bound = np.exp(-g * r)
        flagged += sum(flag != "ok" for flag in kernel.flags)
        violation = np.maximum(0.0, kernel.values - bound) / np.maximum(bound, BOUND_FLOOR)
        k = int(np.argmax(violation))
        if violation[k] > worst[0] or np.isnan(worst[1]):
            worst = (float(violation[k]), float(r), float(taus[k]))
    logger.debug("upper bound check %s: violation %.3e at r=%g tau=%g", model.label, *worst)
    return BoundCheck(worst[0], worst[1], worst[2], int(taus.size * np.size(r_grid)), flagged)


@dataclass(frozen=True, eq=False)
class ExponentFit:
    exponent: float
    expected: float
    intercept: float
    tau: np.ndarray
    H: np.ndarray

    @property
    def relative_error(self) -> float:
        return abs(self.exponent - self.expected) / self.expected


def _is_logarithmic(model: MaterialModel) -> bool:
    return model.is_direct and model.direct.g.kind == "logarithmic"


def regularization_exponent(model: MaterialModel, r: float, window: tuple[float, float] | None = None) -> ExponentFit:
    """Least-squares slope of ln H against ln tau; tends to r b for g = b ln(1/(a t) + A)."""
    if not _is_logarithmic(model):
        raise UnsupportedOperation(f"{model.label}: stepwise regularization needs a logarithmic kernel")
    lo, hi = window if window is not None else (1e-4 * model.scale, 1e-3 * model.scale)
    if not 0 < lo < hi or hi / lo < 10 * (1 - 1e-12):
        raise FitError(f"fit window [{lo:g}, {hi:g}] must span at least one decade")
    count = int(round(math.log10(hi / lo) * FIT_POINTS_PER_DECADE)) + 1
    taus = geometric_grid(lo, hi, count)
    kernel = wavefront_kernel(model, r, taus)
    H = kernel.values
    if np.any(~np.isfinite(H)) or np.any(H <= 0):
        raise FitError(f"H underflows or is not finite in the fit window for r={r}")
    slope, intercept = np.polyfit(np.log(taus), np.log(H), 1)
    expected = r * model.direct.g.params["b"]
    logger.info("regularization exponent r=%g: %.4f (expected %.4f)", r, slope, expected)
    return ExponentFit(float(slope), float(expected), float(intercept), taus, H)


@dataclass(frozen=True, eq=False)
class SlowVariation:
    """|l(lam p)/l(p) - 1| and the local index ln(l(lam p)/l(p))/ln lam per lam and p."""
    p: np.ndarray
    lambdas: tuple[float, ...]
    deviations: np.ndarray
    indices: np.ndarray

    @property
    def top_deviation(self) -> float:
        return float(np.max(self.deviations[:, -1]))

    @property
    def decreasing(self) -> bool:
        return bool(np.all(np.diff(self.deviations, axis=1) <= MONOTONE_SLACK))


def slowly_varying_check(
    model: MaterialModel,
    lambda_set: tuple[float, ...] | list[float],
    p_grid: np.ndarray,
    r: float = 1.0,
) -> SlowVariation:
    """Slow variation of l(p) = exp(-p g~(p) r) at the top of p_grid."""
    lambdas = tuple(float(lam) for lam in lambda_set)
    if not lambdas or any(lam <= 0 for lam in lambdas):
        raise DomainError("lambda values must be positive")
    p = np.asarray(p_grid, dtype=float)
    if p.size == 0 or np.any(p <= 0) or np.any(np.diff(p) <= 0):
        raise DomainError("p_grid must be positive and increasing")
    base = _log_l(model, p, r)
    deviations = np.empty((len(lambdas), p.size))
    indices = np.empty_like(deviations)
    for i, lam in enumerate(lambdas):
        log_ratio = _log_l(model, lam * p, r) - base
        deviations[i] = np.abs(np.expm1(log_ratio))
        indices[i] = log_ratio / math.log(lam) if lam != 1 else 0.0
    return SlowVariation(p, lambdas, deviations, indices)


@dataclass(frozen=True, eq=False)
class CreepRateBound:
    t: np.ndarray
    g: np.ndarray
    bound: np.ndarray

    @property
    def max_excess(self) -> float:
        """Signed max of g - rho c0 J'/2."""
        return float(np.max(self.g - self.bound))


def g_vs_creep_rate_check(model: MaterialModel, t_grid: np.ndarray | None = None) -> CreepRateBound:
    """g(t) against rho c0 J'(t)/2 on t_grid."""
    if model.is_direct:
        raise UnsupportedOperation("the creep-rate bound needs a creep-based model")
    t = geometric_grid(1e-2 * model.scale, 10 * model.scale, 31) if t_grid is None else np.asarray(t_grid, dtype=float)
    g = np.asarray(g_of_t(model, t), dtype=float)
    rate = np.asarray(eval_cm(model.compliance.creep_rate, t), dtype=float)
    bound = model.rho * wavefront_speed(model) * rate / 2
    return CreepRateBound(t, g, bound)


def transform_gap(model: MaterialModel, p_grid: np.ndarray) -> np.ndarray:
    """p g~(p) - g(1/p); tends to 0 as p grows when t g'(t) -> 0."""
    p = np.asarray(p_grid, dtype=float)
    if np.any(p <= 0):
        raise DomainError("p_grid must be positive")
    excess = np.real(np.asarray(kappa_excess(model, p)))
    return excess - np.asarray(g_of_t(model, 1.0 / p), dtype=float)


@dataclass
class WavefrontReport:
    """Wavefront summary for one model and distance."""
    model: str
    params: dict[str, float]
    r: float
    criterion: str
    g0: float | str
    jump_amplitude: float | None = None
    amplitude_routes: dict[str, float | None] = field(default_factory=dict)
    route_discrepancy: float | None = None
    bound_check: float | None = None
    bound_note: str = ""
    phase_ratio_trace: list[tuple[float, float, str]] = field(default_factory=list)
    regularization_exponent: float | None = None
    flagged_samples: int = 0

    @property
    def degraded(self) -> bool:
        """Some kernel sample behind this report fell outside [0, 1] or was not finite."""
        return self.flagged_samples > 0

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["phase_ratio_trace"] = [list(row) for row in self.phase_ratio_trace]
        data["degraded"] = self.degraded
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        lines = [
            f"Wavefront report: {self.model}",
            "  parameters: " + ", ".join(f"{k}={v:g}" for k, v in self.params.items()),
            f"  distance r: {self.r:g}",
            f"  wavefront: {self.criterion}",
            f"  status: degraded ({self.flagged_samples} flagged kernel samples)" if self.degraded else "  status: ok",
            f"  g(0+): {self.g0 if isinstance(self.g0, str) else f'{self.g0:.10g}'}",
        ]
        if self.jump_amplitude is not None:
            lines.append(f"  jump amplitude: {self.jump_amplitude:.10g}")
            for name, value in self.amplitude_routes.items():
                shown = "n/a" if value is None else f"{value:.10g}"
                lines.append(f"    via {name}: {shown}")
            lines.append(f"    route discrepancy: {self.route_discrepancy:.3e}")
        if self.bound_check is not None:
            lines.append(f"  upper bound violation: {self.bound_check:.3e}")
        elif self.bound_note:
            lines.append(f"  upper bound: {self.bound_note}")
        if self.phase_ratio_trace:
            lines.append("  phase ratio H exp(g r):")
            lines.extend(
                f"    tau={tau:.3e}  ratio={ratio:.10g}" + ("" if flag == "ok" else f"  [{flag}]")
                for tau, ratio, flag in self.phase_ratio_trace
            )
        if self.regularization_exponent is not None:
            lines.append(f"  regularization exponent: {self.regularization_exponent:.6g}")
        return "\n".join(lines) + "\n"


def build_report(model: MaterialModel, r: float = 1.0, taus: np.ndarray | None = None) -> WavefrontReport:
    criterion = jump_criterion(model)
    g0: float | str = criterion.g0 if criterion.g0 is not None else (
        "infinite" if criterion.status == "continuous" else "undetermined"
    )
    report = WavefrontReport(model.label, dict(model.params), float(r), criterion.status, g0)
    if criterion.discontinuous:
        amplitude = jump_amplitude(model, r)
        report.jump_amplitude = amplitude.value
        report.amplitude_routes = dict(amplitude.routes)
        report.route_discrepancy = amplitude.discrepancy
    try:
        bound = upper_bound_check(model, [r])
        report.bound_check = bound.max_violation
        report.flagged_samples += bound.flagged
    except HypothesisError as exc:
        report.bound_note = f"not applicable ({exc})"
    if r > 0:
        taus = np.array([1e-1, 1e-2, 1e-3]) * model.scale if taus is None else taus
        trace = asymptotic_phase_ratio(model, r, taus)
        report.phase_ratio_trace = trace.rows()
        report.flagged_samples += trace.flagged
    if report.degraded:
        logger.warning("wavefront report %s r=%g: %d flagged kernel samples", model.label, r, report.flagged_samples)
    if _is_logarithmic(model) and r > 0:
        report.regularization_exponent = regularization_exponent(model, r).exponent
    return report
