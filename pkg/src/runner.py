"""Task execution for the CLI: one model, one task, files written under the output directory."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from src.cm_core import cm_antiderivative, eval_cm
from src.config import DUALITY_STEPS
from src.dispersion import (
    attenuation_dispersion,
    attenuation_kernel,
    creep_identity_residuals,
    kk_identity_residuals,
    wavefront_speed,
)
from src.errors import UnsupportedOperation, VerificationFailure
from src.export import Table, to_json_text, write_table
from src.inversion import greens_field, wavefront_kernel
from src.material import MaterialModel, solve_duality
from src.models import GridSpec, RunConfig, dump_run_config
from src.verify import run_verification
from src.wavefront import WavefrontReport, build_report

logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    task: str
    files: list[Path] = field(default_factory=list)
    rows: int = 0
    flagged: int = 0


def _grid(spec: GridSpec | None, default: np.ndarray) -> np.ndarray:
    return default if spec is None else spec.values()


def _meta(model: MaterialModel, config: RunConfig) -> dict:
    return {
        "model": model.name,
        "params": dict(model.params),
        "units": f"{config.units.time},{config.units.length}",
    }


def _curves(model: MaterialModel, config: RunConfig) -> list[Table]:
    omega = _grid(config.grids.omega, np.logspace(-3, 3, 61) / model.scale)
    curves = attenuation_dispersion(model, omega)
    t = _grid(config.grids.t, np.geomspace(1e-3, 1e2, 61) * model.scale)
    g = attenuation_kernel(model)
    meta = _meta(model, config)
    tables = [
        Table("curves", {
            "omega": curves.omega,
            "attenuation": curves.attenuation,
            "dispersion": curves.dispersion,
            "phase_speed": curves.phase_speed,
        }, meta),
        Table("kernel", {
            "t": t,
            "g": np.asarray(eval_cm(g, t)),
            "f": np.asarray(cm_antiderivative(g, t, 1)),
        }, meta),
    ]
    if config.grids.p is not None:
        tables.append(_identities(model, config.grids.p.values(), meta))
    return tables


def _identities(model: MaterialModel, p: np.ndarray, meta: dict) -> Table:
    """Pointwise residuals of kappa = p/c0 + p g~ and, for creep models, of the creep identity."""
    columns = {"p": p, "kk_residual": kk_identity_residuals(model, p)}
    if not model.is_direct:
        columns["creep_residual"] = creep_identity_residuals(model, p)
    return Table("identities", columns, meta)


def _greens(model: MaterialModel, config: RunConfig) -> list[Table]:
    c0 = wavefront_speed(model)
    t = _grid(config.grids.t, np.linspace(0.25, 4.0, 16) * model.scale)
    x = _grid(config.grids.x, np.array([0.5, 1.0, 2.0]) * c0 * model.scale)
    field_ = greens_field(model, t, x, route=config.task.route, threads=config.output.threads)
    meta = {**_meta(model, config), "route": field_.route}
    return [Table("greens", {
        "t": field_.t, "x": field_.x, "tau": field_.tau, "u": field_.u, "flag": list(field_.flags),
    }, meta)]


def _wavefront_kernel(model: MaterialModel, config: RunConfig) -> Table:
    taus = _grid(config.grids.tau, np.geomspace(1e-4, 1e1, 41) * model.scale)
    distances = list(config.task.r) if config.grids.r is None else [float(r) for r in config.grids.r.values()]
    r_col, tau_col, h_col, flag_col = [], [], [], []
    for r in distances:
        kernel = wavefront_kernel(model, r, taus)
        r_col += [r] * taus.size
        tau_col += list(kernel.tau)
        h_col += list(kernel.values)
        flag_col += list(kernel.flags)
    return Table("wavefront_kernel", {"r": r_col, "tau": tau_col, "H": h_col, "flag": flag_col}, _meta(model, config))


def _phase_ratio(model: MaterialModel, config: RunConfig, reports: list[WavefrontReport]) -> Table:
    r_col, tau_col, ratio_col, flag_col = [], [], [], []
    for report in reports:
        for tau, ratio, flag in report.phase_ratio_trace:
            r_col.append(report.r)
            tau_col.append(tau)
            ratio_col.append(ratio)
            flag_col.append(flag)
    return Table("phase_ratio", {"r": r_col, "tau": tau_col, "ratio": ratio_col, "flag": flag_col},
                 _meta(model, config))


def _duality(model: MaterialModel, config: RunConfig) -> list[Table]:
    if model.is_direct:
        raise UnsupportedOperation("duality needs a creep-based model")
    tol = config.output.tolerance
    # the marching grid is uniform from 0; grids.t only sets its span
    grid = None if config.grids.t is None else np.linspace(0.0, config.grids.t.stop, DUALITY_STEPS + 1)
    kwargs = {"scale": model.scale} if tol is None else {"scale": model.scale, "tol": tol}
    G = solve_duality(model.compliance, grid, **kwargs)
    meta = {**_meta(model, config), "residual": f"{G.residual:.3e}", "dG0": f"{G.dG0:.16e}"}
    return [Table("relaxation", {"t": G.times, "G": G.values}, meta)]


def _count_flagged(table: Table) -> int:
    flags = table.columns.get("flag")
    if flags is None:
        return 0
    return sum(flag not in ("ok", "ahead", "wavefront", "near", "behind") for flag in flags)


def run(config: RunConfig, out_dir: Path | None = None) -> RunResult:
    """Execute config.task; raises ViscoWaveError subclasses on failure."""
    directory = Path(out_dir if out_dir is not None else config.output.directory)
    directory.mkdir(parents=True, exist_ok=True)
    prefix, fmt = config.output.prefix, config.output.format
    task = config.task.kind
    result = RunResult(task)

    echo = directory / f"{prefix}_config.yaml"
    echo.write_text(dump_run_config(config), encoding="utf-8")
    result.files.append(echo)

    if task == "verify":
        report = run_verification(config.output.tolerance)
        text_path = directory / f"{prefix}_verify.txt"
        text_path.write_text(report.to_text(), encoding="utf-8")
        json_path = directory / f"{prefix}_verify.json"
        json_path.write_text(to_json_text([vars(r) for r in report.results]), encoding="utf-8")
        result.files += [text_path, json_path]
        result.rows = len(report.results)
        if not report.passed:
            names = ", ".join(f"{r.suite}/{r.name}" for r in report.failures)
            raise VerificationFailure(f"{len(report.failures)} checks failed: {names}")
        return result

    model = config.build_model()
    logger.info("running %s on %s", task, model.label)
    if task == "curves":
        tables = _curves(model, config)
    elif task == "greens":
        tables = _greens(model, config)
    elif task == "duality":
        tables = _duality(model, config)
    else:
        reports = [build_report(model, r) for r in config.task.r]
        tables = [_wavefront_kernel(model, config), _phase_ratio(model, config, reports)]
        json_path = directory / f"{prefix}_wavefront.json"
        json_path.write_text(to_json_text([rep.to_dict() for rep in reports]), encoding="utf-8")
        text_path = directory / f"{prefix}_wavefront.txt"
        text_path.write_text("".join(rep.to_text() for rep in reports), encoding="utf-8")
        result.files += [json_path, text_path]

    for table in tables:
        result.files.append(write_table(table, directory, prefix, fmt))
        result.rows += table.n_rows
        result.flagged += _count_flagged(table)
    return result
