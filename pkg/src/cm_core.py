"""Completely monotone, Bernstein and Stieltjes-type functions via positive measures.

A CM function is stored either as a closed form (power law, exponential,
logarithmic, constant) or as a `SpectralMeasure` of atoms plus a sampled
density. The same measure backs both the time-domain value

    f(t) = a + sum_k w_k exp(-r_k t) + int h(r) exp(-r t) dr

and the Stieltjes form of its Laplace transform

    f~(p) = a/p + sum_k w_k/(p + r_k) + int h(r)/(p + r) dr.

Densities live on a declared abscissa with a declared rule: trapezoid in ln r
for log grids, Gauss-Jacobi for bounded cut intervals.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np
from scipy import special

from src.config import (
    CM_CHECK_THRESHOLD,
    GRID_POINTS_PER_DECADE,
    GRID_R_MAX,
    GRID_R_MIN,
    MASS_TOL,
)
from src.errors import ConstructionError, DomainError, ModelValidityError

logger = logging.getLogger(__name__)

Kind = Literal["measure", "power-law", "exponential", "logarithmic", "constant", "sum"]
Rule = Literal["log-trapezoid", "gauss-jacobi"]
LimitStatus = Literal["finite", "infinite", "undetermined"]

# eval_cm grid coverage: kernel exp(-r t) must have decayed at r_max and be flat at r_min
_DECAY_CUTOFF = 30.0
_FLAT_CUTOFF = 1e-3
# |z| beyond which e^z E1(z) uses its asymptotic series
_EXP1_ASYMPTOTIC = 60.0


def _frozen(values: Sequence[float] | np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


def log_trapezoid_weights(nodes: np.ndarray) -> np.ndarray:
    """Weights w_j with sum_j w_j h(r_j) ~ int h(r) dr, trapezoid in u = ln r."""
    u = np.log(nodes)
    w = np.zeros_like(nodes)
    if nodes.size < 2:
        return w
    du = np.diff(u)
    w[:-1] += du / 2
    w[1:] += du / 2
    return w * nodes


def log_grid(
    scale: float = 1.0,
    r_min: float = GRID_R_MIN,
    r_max: float = GRID_R_MAX,
    points_per_decade: int = GRID_POINTS_PER_DECADE,
) -> np.ndarray:
    """Log-spaced abscissa [r_min, r_max]/scale."""
    decades = math.log10(r_max / r_min)
    count = int(round(decades * points_per_decade)) + 1
    return np.geomspace(r_min / scale, r_max / scale, count)


def geometric_grid(start: float, stop: float, count: int) -> np.ndarray:
    if start <= 0 or stop <= start or count < 2:
        raise DomainError(f"geometric grid needs 0 < start < stop and count >= 2, got ({start}, {stop}, {count})")
    return np.geomspace(start, stop, count)


@dataclass(frozen=True, eq=False)
class SpectralMeasure:
    """Positive Radon measure on ]0, inf[: atoms plus a sampled density.

    Tail corrections extend a log-grid density beyond its edges as power laws
    fitted to the two outermost samples. The left tail is a point mass at its
    centroid; the right tail enters the Stieltjes transform as the constant
    h_end / (-s), its large-r limit.
    """
    atom_locations: np.ndarray = field(default_factory=lambda: _frozen([]))
    atom_weights: np.ndarray = field(default_factory=lambda: _frozen([]))
    nodes: np.ndarray = field(default_factory=lambda: _frozen([]))
    density: np.ndarray = field(default_factory=lambda: _frozen([]))
    quad_weights: np.ndarray = field(default_factory=lambda: _frozen([]))
    rule: Rule = "log-trapezoid"
    scale: float = 1.0
    left_tail_mass: float = 0.0
    left_tail_at: float = 0.0
    right_tail_density: float = 0.0
    right_tail_exponent: float = -1.0

    def __post_init__(self) -> None:
        for name in ("atom_locations", "atom_weights", "nodes", "density", "quad_weights"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        locs, wts = self.atom_locations, self.atom_weights
        if locs.shape != wts.shape:
            raise ConstructionError("atom locations and weights differ in length")
        if self.nodes.shape != self.density.shape or self.nodes.shape != self.quad_weights.shape:
            raise ConstructionError("density nodes, values and quadrature weights differ in length")
        if np.any(locs <= 0) or np.any(self.nodes <= 0):
            raise ConstructionError("measure locations must be strictly positive")
        if np.any(np.diff(locs) <= 0) or np.any(np.diff(self.nodes) <= 0):
            raise ConstructionError("measure locations must be strictly increasing")
        if np.any(wts < 0) or np.any(self.density < 0) or self.left_tail_mass < 0:
            raise ConstructionError("measure weights and density must be non-negative")

    @classmethod
    def empty(cls, scale: float = 1.0) -> SpectralMeasure:
        return cls(scale=scale)

    @classmethod
    def from_atoms(cls, locations: Sequence[float], weights: Sequence[float], scale: float = 1.0) -> SpectralMeasure:
        """Atoms only; zero weights are dropped and repeated locations merged."""
        locs = np.asarray(locations, dtype=float)
        wts = np.asarray(weights, dtype=float)
        keep = wts > 0
        locs, wts = locs[keep], wts[keep]
        uniq, inverse = np.unique(locs, return_inverse=True)
        merged = np.zeros_like(uniq)
        np.add.at(merged, inverse, wts)
        return cls(atom_locations=uniq, atom_weights=merged, scale=scale)

    @classmethod
    def from_density(
        cls,
        nodes: np.ndarray,
        density: np.ndarray,
        scale: float = 1.0,
        atoms: tuple[Sequence[float], Sequence[float]] | None = None,
        tails: bool = True,
    ) -> SpectralMeasure:
        """Density sampled on an increasing positive grid, log-trapezoid rule."""
        nodes = np.asarray(nodes, dtype=float)
        density = np.asarray(density, dtype=float)
        if nodes.size < 2:
            raise ConstructionError("density grid needs at least two nodes")
        left_mass = left_at = right_h = 0.0
        right_s = -1.0
        if tails:
            h0, h1 = density[0], density[1]
            if h0 > 0 and h1 > 0:
                s = math.log(h1 / h0) / math.log(nodes[1] / nodes[0])
                if s <= -1:
                    raise ModelValidityError(f"density grows like r^{s:.3g} at r -> 0; measure not locally finite")
                left_mass = h0 * nodes[0] / (s + 1)
                left_at = nodes[0] * (s + 1) / (s + 2)
            hn, hm = density[-1], density[-2]
            if hn > 0 and hm > 0:
                s = math.log(hn / hm) / math.log(nodes[-1] / nodes[-2])
                if s >= 0:
                    raise ModelValidityError(f"density grows like r^{s:.3g} at r -> inf; int nu(dr)/(1+r) diverges")
                right_h, right_s = float(hn), float(s)
        locs, wts = atoms if atoms is not None else ([], [])
        base = cls.from_atoms(locs, wts, scale=scale)
        return cls(
            atom_locations=base.atom_locations,
            atom_weights=base.atom_weights,
            nodes=nodes,
            density=density,
            quad_weights=log_trapezoid_weights(nodes),
            rule="log-trapezoid",
            scale=scale,
            left_tail_mass=float(left_mass),
            left_tail_at=float(left_at),
            right_tail_density=right_h,
            right_tail_exponent=right_s,
        )

    @property
    def is_empty(self) -> bool:
        return self.atom_weights.size == 0 and not np.any(self.density > 0) and self.left_tail_mass == 0

    @property
    def has_density(self) -> bool:
        return bool(np.any(self.density > 0))

    def _point_masses(self) -> tuple[np.ndarray, np.ndarray]:
        """All quadrature masses as (locations, weights), tails included."""
        locs = [self.atom_locations, self.nodes]
        wts = [self.atom_weights, self.quad_weights * self.density]
        if self.left_tail_mass > 0:
            locs.append(np.array([self.left_tail_at]))
            wts.append(np.array([self.left_tail_mass]))
        return np.concatenate(locs), np.concatenate(wts)

    def laplace(self, t: np.ndarray | float) -> np.ndarray:
        """int exp(-r t) nu(dr); the right tail beyond the grid is not included."""
        locs, wts = self._point_masses()
        t_arr = np.asarray(t, dtype=float)
        return np.exp(-np.multiply.outer(t_arr, locs)) @ wts

    def stieltjes(self, p: np.ndarray | complex) -> np.ndarray:
        """int nu(dr)/(p + r) for complex p off the support."""
        locs, wts = self._point_masses()
        p_arr = np.asarray(p, dtype=complex)
        value = (1.0 / np.add.outer(p_arr, locs)) @ wts
        if self.right_tail_density > 0:
            value = value + self.right_tail_density / (-self.right_tail_exponent)
        return value

    def antiderivative(self, t: np.ndarray | float, order: int) -> np.ndarray:
        """order-fold integral from 0 of the CM function this measure represents."""
        locs, wts = self._point_masses()
        t_arr = np.asarray(t, dtype=float)
        x = np.multiply.outer(t_arr, locs)
        return (_phi(x, order) @ wts) * t_arr**order

    def partial_mass(self, r_cut: float) -> float:
        locs, wts = self._point_masses()
        return float(wts[locs <= r_cut].sum())

    def total_mass(self) -> float:
        mass = float(self._point_masses()[1].sum())
        if self.right_tail_density > 0:
            s = self.right_tail_exponent
            if s >= -1:
                return math.inf
            mass += self.right_tail_density * self.nodes[-1] / (-s - 1)
        return mass

    @property
    def r_min(self) -> float:
        locs, wts = self._point_masses()
        return float(locs[wts > 0].min()) if np.any(wts > 0) else math.inf

    @property
    def r_max(self) -> float:
        if self.right_tail_density > 0:
            return math.inf
        locs, wts = self._point_masses()
        return float(locs[wts > 0].max()) if np.any(wts > 0) else 0.0


def _phi(x: np.ndarray, order: int) -> np.ndarray:
    """phi_k(x) = (e^{-x} - sum_{j<k} (-x)^j/j!) / (-x)^k, so that I^k[e^{-r s}](t) = t^k phi_k(r t)."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 2.0
    xs = x[small]
    series = np.zeros_like(xs)
    term = np.full_like(xs, 1.0 / math.factorial(order))
    for n in range(40):
        series += term
        term = term * (-xs) / (n + 1 + order)
    out[small] = series
    xl = x[~small]
    head = sum((-xl) ** j / math.factorial(j) for j in range(order))
    out[~small] = (np.exp(-xl) - head) / (-xl) ** order
    return out


@dataclass(frozen=True)
class CMFunction:
    """Completely monotone function on t > 0, closed form or measure-backed."""
    kind: Kind
    params: dict[str, float] = field(default_factory=dict)
    measure: SpectralMeasure | None = None
    offset: float = 0.0
    parts: tuple[CMFunction, ...] = ()
    label: str = ""

    @classmethod
    def power_law(cls, a: float, alpha: float) -> CMFunction:
        """a t^{-alpha} / Gamma(1 - alpha); transform a p^{alpha - 1}."""
        if a <= 0 or not 0 < alpha < 1:
            raise ConstructionError(f"power law needs a > 0 and 0 < alpha < 1, got a={a}, alpha={alpha}")
        return cls("power-law", {"a": float(a), "alpha": float(alpha)}, label=f"power-law(a={a}, alpha={alpha})")

    @classmethod
    def exponential(cls, rate: float, weight: float = 1.0) -> CMFunction:
        """weight * exp(-rate t): a single atom."""
        if rate <= 0 or weight < 0:
            raise ConstructionError(f"exponential needs rate > 0 and weight >= 0, got rate={rate}, weight={weight}")
        return cls(
            "exponential",
            {"rate": float(rate), "weight": float(weight)},
            measure=SpectralMeasure.from_atoms([rate], [weight], scale=1.0 / rate),
            label=f"exponential(rate={rate}, weight={weight})",
        )

    @classmethod
    def logarithmic(cls, a: float, b: float, A: float = 1.0, scale: float = 1.0) -> CMFunction:
        """b ln(1/(a t) + A); density b(1 - exp(-r/(aA)))/r plus the constant b ln A."""
        if a <= 0 or b <= 0:
            raise ConstructionError(f"logarithmic kernel needs a, b > 0, got a={a}, b={b}")
        if A < 1:
            raise ConstructionError(f"logarithmic kernel is LICM only for A >= 1, got A={A}")
        nodes = log_grid(scale)
        density = b * -np.expm1(-nodes / (a * A)) / nodes
        return cls(
            "logarithmic",
            {"a": float(a), "b": float(b), "A": float(A)},
            measure=SpectralMeasure.from_density(nodes, density, scale=scale),
            offset=b * math.log(A),
            label=f"logarithmic(a={a}, b={b}, A={A})",
        )

    @classmethod
    def constant(cls, value: float) -> CMFunction:
        if value < 0:
            raise ConstructionError(f"constant CM function must be non-negative, got {value}")
        return cls("constant", {"value": float(value)}, label=f"constant({value})")

    @classmethod
    def from_measure(cls, measure: SpectralMeasure, offset: float = 0.0, label: str = "") -> CMFunction:
        if offset < 0:
            raise ConstructionError("measure offset must be non-negative")
        return cls("measure", measure=measure, offset=float(offset), label=label or "measure")

    @classmethod
    def zero(cls) -> CMFunction:
        return cls.from_measure(SpectralMeasure.empty(), label="zero")

    @classmethod
    def sum(cls, parts: Sequence[CMFunction]) -> CMFunction:
        parts = tuple(parts)
        if not parts:
            return cls.zero()
        if len(parts) == 1:
            return parts[0]
        return cls("sum", parts=parts, label=" + ".join(p.label for p in parts))


@dataclass(frozen=True)
class CMEvaluation:
    value: np.ndarray | float
    warning: str | None = None


def _check_positive_times(t: np.ndarray | float) -> np.ndarray:
    t_arr = np.asarray(t, dtype=float)
    if np.any(~(t_arr > 0)):
        raise DomainError(f"CM functions are evaluated at t > 0, got min t = {np.min(t_arr)}")
    return t_arr


def _scalar_or_array(value: np.ndarray, like: np.ndarray | float) -> np.ndarray | float:
    return float(value) if np.ndim(like) == 0 else value


def _eval(f: CMFunction, t: np.ndarray) -> np.ndarray:
    if f.kind == "power-law":
        a, alpha = f.params["a"], f.params["alpha"]
        return a * t ** (-alpha) / special.gamma(1 - alpha)
    if f.kind == "exponential":
        return f.params["weight"] * np.exp(-f.params["rate"] * t)
    if f.kind == "logarithmic":
        a, b, A = f.params["a"], f.params["b"], f.params["A"]
        return b * np.log(A + 1.0 / (a * t))
    if f.kind == "constant":
        return np.full_like(t, f.params["value"])
    if f.kind == "sum":
        return sum(_eval(part, t) for part in f.parts)
    return f.offset + f.measure.laplace(t)


def eval_cm(f: CMFunction, t: np.ndarray | float) -> np.ndarray | float:
    """f(t) for t > 0."""
    t_arr = _check_positive_times(t)
    return _scalar_or_array(_eval(f, t_arr), t)


def _coverage_warning(f: CMFunction, t: np.ndarray) -> str | None:
    if f.kind == "sum":
        notes = [w for w in (_coverage_warning(p, t) for p in f.parts) if w]
        return "; ".join(notes) or None
    if f.kind != "measure" or f.measure is None or not f.measure.has_density:
        return None
    nodes = f.measure.nodes
    notes = []
    if f.measure.right_tail_density > 0 and np.any(t * nodes[-1] < _DECAY_CUTOFF):
        notes.append(f"t*r_max < {_DECAY_CUTOFF:g} for t >= {np.min(t):.3g}: grid top truncates exp(-rt)")
    if np.any(t * nodes[0] > _FLAT_CUTOFF) and f.measure.left_tail_mass > 0:
        notes.append(f"t*r_min > {_FLAT_CUTOFF:g} for t <= {np.max(t):.3g}: grid bottom under-resolves the slow part")
    return "; ".join(notes) or None


def eval_cm_report(f: CMFunction, t: np.ndarray | float) -> CMEvaluation:
    """eval_cm plus a grid-coverage warning for measure-backed functions."""
    t_arr = _check_positive_times(t)
    warning = _coverage_warning(f, t_arr)
    if warning:
        logger.warning("eval_cm accuracy: %s", warning)
    return CMEvaluation(_scalar_or_array(_eval(f, t_arr), t), warning)


def _exp_e1_plus_log(z: np.ndarray) -> np.ndarray:
    """e^z E1(z) + gamma + ln z, principal branches, asymptotic for large |z|."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    big = np.abs(z) > _EXP1_ASYMPTOTIC
    zs = z[~big]
    out[~big] = np.exp(zs) * special.exp1(zs) + np.euler_gamma + np.log(zs)
    zb = z[big]
    series = np.zeros_like(zb)
    term = 1.0 / zb
    for n in range(30):
        series += term
        term = term * (-(n + 1)) / zb
    out[big] = series + np.euler_gamma + np.log(zb)
    return out


def _stieltjes(f: CMFunction, p: np.ndarray) -> np.ndarray:
    if f.kind == "power-law":
        return f.params["a"] * np.power(p, f.params["alpha"] - 1)
    if f.kind == "exponential":
        return f.params["weight"] / (p + f.params["rate"])
    if f.kind == "logarithmic":
        a, b, A = f.params["a"], f.params["b"], f.params["A"]
        return (b * math.log(A) + b * _exp_e1_plus_log(p / (a * A))) / p
    if f.kind == "constant":
        return f.params["value"] / p
    if f.kind == "sum":
        return sum(_stieltjes(part, p) for part in f.parts)
    value = f.measure.stieltjes(p)
    return value + f.offset / p if f.offset else value


def stieltjes_value(f: CMFunction, p: np.ndarray | complex) -> np.ndarray | complex:
    """Analytic continuation of f~(p) to C minus the negative real axis. No domain check."""
    p_arr = np.asarray(p, dtype=complex)
    value = _stieltjes(f, p_arr)
    return complex(value) if np.ndim(p) == 0 else value


def laplace_cm(f: CMFunction, p: np.ndarray | complex) -> np.ndarray | complex:
    """f~(p) for Re p > 0."""
    p_arr = np.asarray(p, dtype=complex)
    if np.any(~(p_arr.real > 0)):
        raise DomainError("laplace_cm needs Re p > 0; boundary values go through the dispersion module")
    return stieltjes_value(f, p)


def cm_antiderivative(f: CMFunction, t: np.ndarray | float, order: int = 1) -> np.ndarray | float:
    """I^k f(t) = int_0^t (t-s)^{k-1}/(k-1)! f(s) ds for t >= 0."""
    if order < 1:
        raise DomainError(f"antiderivative order must be >= 1, got {order}")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DomainError("antiderivatives are defined for t >= 0")
    value = _antiderivative(f, t_arr, order)
    if not np.all(np.isfinite(value)):
        raise ModelValidityError(f"{f.label or f.kind} is not locally integrable at 0")
    return _scalar_or_array(value, t)


def _antiderivative(f: CMFunction, t: np.ndarray, k: int) -> np.ndarray:
    if f.kind == "power-law":
        a, alpha = f.params["a"], f.params["alpha"]
        return a * t ** (k - alpha) / special.gamma(k + 1 - alpha)
    if f.kind == "constant":
        return f.params["value"] * t**k / math.factorial(k)
    if f.kind == "logarithmic" and k == 1:
        a, b, A = f.params["a"], f.params["b"], f.params["A"]
        with np.errstate(divide="ignore", invalid="ignore"):
            head = np.where(t > 0, t * np.log(A + 1.0 / (a * np.where(t > 0, t, 1.0))), 0.0)
        return b * (head + np.log1p(a * A * t) / (a * A))
    if f.kind == "sum":
        return sum(_antiderivative(part, t, k) for part in f.parts)
    value = f.measure.antiderivative(t, k)
    return value + f.offset * t**k / math.factorial(k) if f.offset else value


@dataclass(frozen=True)
class MassStatus:
    status: LimitStatus
    value: float | None
    increments: tuple[float, ...] = ()


def mass_status(measure: SpectralMeasure, tol: float = MASS_TOL) -> MassStatus:
    """Finite/infinite total mass from the partial masses over the top three grid decades."""
    if not measure.has_density and measure.right_tail_density == 0:
        return MassStatus("finite", measure.total_mass())
    if measure.rule == "gauss-jacobi":
        return MassStatus("finite", measure.total_mass())
    top = measure.nodes[-1]
    cuts = [top / 10**j for j in (3, 2, 1, 0)]
    partial = [measure.partial_mass(c) for c in cuts]
    increments = tuple(float(b - a) for a, b in zip(partial, partial[1:]))
    total = measure.total_mass()
    reference = max(abs(partial[-1]), 1.0)
    logger.debug("mass increments over top decades: %s", increments)
    if all(d <= tol * reference for d in increments) and math.isfinite(total):
        return MassStatus("finite", total, increments)
    if increments[-1] > tol * reference and increments[-1] >= 0.9 * increments[-2]:
        return MassStatus("infinite", None, increments)
    return MassStatus("undetermined", None, increments)


@dataclass(frozen=True)
class ZeroLimit:
    """Limit f(0+)."""
    status: LimitStatus
    value: float | None


def limit_at_zero(f: CMFunction) -> ZeroLimit:
    if f.kind in ("power-law", "logarithmic"):
        return ZeroLimit("infinite", None)
    if f.kind == "exponential":
        return ZeroLimit("finite", f.params["weight"])
    if f.kind == "constant":
        return ZeroLimit("finite", f.params["value"])
    if f.kind == "sum":
        limits = [limit_at_zero(p) for p in f.parts]
        if any(lim.status == "infinite" for lim in limits):
            return ZeroLimit("infinite", None)
        if any(lim.status == "undetermined" for lim in limits):
            return ZeroLimit("undetermined", None)
        return ZeroLimit("finite", sum(lim.value for lim in limits))
    mass = mass_status(f.measure)
    if mass.status != "finite":
        return ZeroLimit(mass.status, None)
    return ZeroLimit("finite", f.offset + mass.value)


@dataclass(frozen=True)
class CMCheckReport:
    """Sign test of divided differences; violations are relative to the local term scale."""
    order: int
    violations: dict[int, float]
    passed: dict[int, bool]
    threshold: float

    @property
    def max_violation(self) -> float:
        return max(self.violations.values())

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    @property
    def first_failure(self) -> int | None:
        failed = [n for n, ok in sorted(self.passed.items()) if not ok]
        return failed[0] if failed else None


Evaluator = Callable[[np.ndarray], np.ndarray]


def _as_evaluator(f: CMFunction | Evaluator) -> Evaluator:
    if isinstance(f, CMFunction):
        return lambda t: np.asarray(eval_cm(f, t), dtype=float)
    return lambda t: np.asarray(f(t), dtype=float)


def check_cm(
    f: CMFunction | Evaluator,
    grid: np.ndarray,
    order: int = 6,
    threshold: float = CM_CHECK_THRESHOLD,
) -> CMCheckReport:
    """Check (-1)^n f[t_i..t_{i+n}] >= 0 for n = 0..order on consecutive windows."""
    grid = np.asarray(grid, dtype=float)
    if order < 1:
        raise DomainError(f"CM check order must be >= 1, got {order}")
    if grid.size < order + 1 or np.any(np.diff(grid) <= 0):
        raise DomainError(f"CM check needs a strictly increasing grid of at least {order + 1} points")
    values = _as_evaluator(f)(grid)
    violations: dict[int, float] = {}
    magnitude = float(np.max(np.abs(values))) or 1.0
    violations[0] = float(np.max(np.maximum(0.0, -values)) / magnitude)
    for n in range(1, order + 1):
        windows = np.lib.stride_tricks.sliding_window_view(grid, n + 1)
        f_windows = np.lib.stride_tricks.sliding_window_view(values, n + 1)
        gaps = windows[:, :, None] - windows[:, None, :]
        idx = np.arange(n + 1)
        gaps[:, idx, idx] = 1.0
        terms = f_windows / np.prod(gaps, axis=2)
        dd = terms.sum(axis=1)
        scale = np.abs(terms).sum(axis=1)
        signed = (-1) ** n * dd
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.where(scale > 0, np.maximum(0.0, -signed) / scale, 0.0)
        violations[n] = float(np.max(rel))
    passed = {n: v <= threshold for n, v in violations.items()}
    report = CMCheckReport(order, violations, passed, threshold)
    logger.debug("check_cm order=%d max violation %.3e", order, report.max_violation)
    return report


def check_bernstein_pair(
    f: CMFunction | Evaluator,
    grid: np.ndarray | None = None,
    order: int = 6,
    threshold: float = CM_CHECK_THRESHOLD,
) -> CMCheckReport:
    """x f(x) is CM iff f is the Laplace transform of a non-negative non-decreasing function."""
    if grid is None:
        grid = geometric_grid(1e-2, 1e2, 48)
    if isinstance(f, CMFunction):
        def base(x: np.ndarray) -> np.ndarray:
            return np.real(stieltjes_value(f, x))
    else:
        base = f
    return check_cm(lambda x: x * np.asarray(base(x), dtype=float), grid, order, threshold)
