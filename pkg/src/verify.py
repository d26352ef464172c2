"""Verification suites over the built-in model catalog.

Each check compares a computed quantity with a closed form or an independent
route and records the residual next to its tolerance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from src.cm_core import CMFunction
from src.config import ACCURACY_FAR, BOUND_SLACK
from src.dispersion import kk_identity_residual, wavefront_speed
from src.errors import HypothesisError, ViscoWaveError
from src.inversion import (
    BromwichEvaluator,
    direct_wavefront_limit,
    greens_u,
    invert_laplace,
    wavefront_kernel,
)
from src.material import (
    MaterialModel,
    creep_rate_limit,
    make_direct,
    make_elastic,
    make_log_g,
    make_powerlaw_g,
    make_zener,
    solve_duality,
)
from src.wavefront import (
    asymptotic_phase_ratio,
    g_vs_creep_rate_check,
    jump_amplitude,
    regularization_exponent,
    upper_bound_check,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    residual: float
    tolerance: float
    detail: str = ""


@dataclass
class VerifyReport:
    results: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> list[CheckResult]:
        return [r for r in self.results if not r.passed]

    def to_text(self) -> str:
        lines = []
        for r in self.results:
            mark = "PASS" if r.passed else "FAIL"
            extra = f"  ({r.detail})" if r.detail else ""
            lines.append(f"[{mark}] {r.suite}/{r.name}: residual {r.residual:.3e} <= {r.tolerance:.1e}{extra}")
        n_fail = len(self.failures)
        lines.append(f"{len(self.results) - n_fail}/{len(self.results)} checks passed")
        return "\n".join(lines) + "\n"


def catalog() -> dict[str, MaterialModel]:
    """Reference models: elastic, Zener (1,1,1), power-law g, log g, single-atom g."""
    return {
        "elastic": make_elastic(1.0),
        "zener": make_zener(1.0, 1.0, 1.0),
        "powerlaw_g": make_powerlaw_g(1.0, 1.0, 0.5),
        "log_g": make_log_g(1.0, 1.0, 1.0, 1.0),
        "single_atom": make_direct(
            1.0, CMFunction.exponential(1.0, 1.0), name="single_atom",
            params={"c0": 1.0, "rate": 1.0, "weight": 1.0, "rho": 1.0},
        ),
    }


def _record(report: VerifyReport, suite: str, name: str, residual: float, tolerance: float, detail: str = "") -> None:
    passed = bool(np.isfinite(residual) and residual <= tolerance)
    report.results.append(CheckResult(suite, name, passed, float(residual), tolerance, detail))
    logger.info("verify %s/%s: %.3e (tol %.1e) %s", suite, name, residual, tolerance, "ok" if passed else "FAILED")


def _relative(value: float, exact: float, floor: float = 1e-12) -> float:
    return abs(value - exact) / max(abs(exact), floor)


def check_inversion(report: VerifyReport, tol: float) -> None:
    trio: list[tuple[str, Callable[[np.ndarray], np.ndarray], float]] = [
        ("step", lambda p: 1.0 / p, 1.0),
        ("exponential", lambda p: 1.0 / (p + 1.0), math.exp(-1.0)),
        ("erfc", lambda p: np.exp(-np.sqrt(p)) / p, float(special.erfc(0.5))),
    ]
    for name, transform, exact in trio:
        value = invert_laplace(BromwichEvaluator(transform), 1.0)
        _record(report, "inversion", name, _relative(value, exact), tol)


def check_elastic(report: VerifyReport, models: dict[str, MaterialModel], tol: float) -> None:
    model = models["elastic"]
    c0 = wavefront_speed(model)
    expected = 1.0 / (2 * model.rho * c0)
    behind = max(abs(greens_u(model, t, 1.0) - expected) for t in (1.5, 2.0, 5.0))
    ahead = max(abs(greens_u(model, t, 1.0)) for t in (0.25, 0.5, 0.9))
    _record(report, "elastic", "behind_wavefront", behind, tol)
    _record(report, "elastic", "ahead_of_wavefront", ahead, tol)


def check_jump(report: VerifyReport, models: dict[str, MaterialModel]) -> None:
    model = models["zener"]
    amplitude = jump_amplitude(model, 1.0)
    limit = direct_wavefront_limit(model, 1.0)
    _record(report, "jump", "direct_limit", _relative(limit, amplitude.value), 1e-2,
            f"limit {limit:.6f}, formula {amplitude.value:.6f}")
    _record(report, "jump", "route_agreement", amplitude.discrepancy, amplitude.tolerance)


def check_erfc_kernel(report: VerifyReport, models: dict[str, MaterialModel], tol: float) -> None:
    model = models["powerlaw_g"]
    taus = np.geomspace(1e-3, 10.0, 9)
    worst = 0.0
    for r in (0.5, 1.0, 2.0):
        kernel = wavefront_kernel(model, r, taus)
        exact = special.erfc(r / (2 * np.sqrt(taus)))
        err = np.abs(kernel.values - exact) / np.maximum(exact, 1e-4)
        worst = max(worst, float(np.max(err)))
    _record(report, "kernel", "erfc_closed_form", worst, tol)


def check_phase(report: VerifyReport, models: dict[str, MaterialModel]) -> None:
    taus = np.array([1e-1, 1e-2, 1e-3])
    limits = {
        "powerlaw_g": 0.0,
        "log_g": math.exp(-np.euler_gamma) / math.gamma(2.0),
        "zener": 1.0,
    }
    for name, limit in limits.items():
        trace = asymptotic_phase_ratio(models[name], 1.0, taus)
        distance = np.abs(trace.ratio - limit)
        rising = float(np.max(np.maximum(0.0, np.diff(distance))))
        _record(report, "phase", f"{name}_monotone", rising, ACCURACY_FAR)
        if limit > 0:
            _record(report, "phase", f"{name}_limit", distance[-1] / limit, 0.05, f"ratio {trace.ratio[-1]:.6f}")


def check_bounds(report: VerifyReport, models: dict[str, MaterialModel]) -> None:
    for name in ("powerlaw_g", "log_g", "elastic"):
        bound = upper_bound_check(models[name], [0.5, 1.0, 2.0])
        _record(report, "bound", name, bound.max_violation, BOUND_SLACK)
    try:
        upper_bound_check(models["single_atom"], [1.0])
    except HypothesisError as exc:
        _record(report, "bound", "single_atom_refused", 0.0, BOUND_SLACK, f"refused at t={exc.failing_t:.3e}")
    else:
        _record(report, "bound", "single_atom_refused", math.inf, BOUND_SLACK, "hypothesis not refused")


def check_regularization(report: VerifyReport) -> None:
    for b in (1.0, 2.0):
        model = make_log_g(1.0, 1.0, b, 1.0)
        for r in (1.0, 2.0):
            fit = regularization_exponent(model, r)
            _record(report, "regularization", f"r={r:g},b={b:g}", fit.relative_error, 0.1, f"exponent {fit.exponent:.4f}")


def check_duality(report: VerifyReport, models: dict[str, MaterialModel], tol: float) -> None:
    model = models["zener"]
    J = model.compliance
    G = solve_duality(J, scale=model.scale, tol=tol)
    _record(report, "duality", "convolution_residual", G.residual, tol)
    _record(report, "duality", "initial_product", abs(J.J0 * G.G0 - 1.0), 1e-8)
    rate0 = creep_rate_limit(J).value
    _record(report, "duality", "initial_slopes", abs(rate0 * G.G0 + G.dG0 * J.J0), 1e-3)


def check_kernel_invariants(report: VerifyReport, models: dict[str, MaterialModel]) -> None:
    for name, model in models.items():
        taus = np.geomspace(1e-3, 1e3, 25) * model.scale
        H = wavefront_kernel(model, 1.0, taus).values
        decrease = float(np.max(np.maximum(0.0, -np.diff(H))))
        outside = float(max(0.0, -np.min(H), np.max(H) - 1.0))
        _record(report, "kernel", f"{name}_non_decreasing", decrease, ACCURACY_FAR)
        _record(report, "kernel", f"{name}_range", outside, ACCURACY_FAR)
        if name in ("elastic", "zener", "single_atom"):
            _record(report, "kernel", f"{name}_long_time", abs(1.0 - H[-1]), 1e-4)
        elif name == "powerlaw_g":
            _record(report, "kernel", f"{name}_long_time", abs(H[-1] - special.erfc(1 / (2 * np.sqrt(taus[-1])))), 1e-6)


def check_kk_and_creep(report: VerifyReport, models: dict[str, MaterialModel]) -> None:
    zener = models["zener"]
    _record(report, "dispersion", "kk_identity", kk_identity_residual(zener), 1e-4)
    bound = g_vs_creep_rate_check(zener)
    _record(report, "dispersion", "g_below_creep_rate", max(bound.max_excess, 0.0), 1e-6)


SUITES = (
    "inversion", "elastic", "jump", "kernel", "phase", "bound", "regularization", "duality", "dispersion",
)


def run_verification(tolerance: float | None = None, suites: tuple[str, ...] = SUITES) -> VerifyReport:
    """Run the selected suites; a suite that raises is recorded as one failed check."""
    tol = ACCURACY_FAR if tolerance is None else tolerance
    models = catalog()
    steps: dict[str, Callable[[VerifyReport], None]] = {
        "inversion": lambda rep: check_inversion(rep, tol),
        "elastic": lambda rep: check_elastic(rep, models, tol),
        "jump": lambda rep: check_jump(rep, models),
        "kernel": lambda rep: (check_erfc_kernel(rep, models, tol), check_kernel_invariants(rep, models)),
        "phase": lambda rep: check_phase(rep, models),
        "bound": lambda rep: check_bounds(rep, models),
        "regularization": check_regularization,
        "duality": lambda rep: check_duality(rep, models, tol),
        "dispersion": lambda rep: check_kk_and_creep(rep, models),
    }
    report = VerifyReport()
    for suite in suites:
        try:
            steps[suite](report)
        except ViscoWaveError as exc:
            logger.error("verify suite %s raised: %s", suite, exc)
            report.results.append(CheckResult(suite, "raised", False, math.inf, 0.0, str(exc)))
    return report
