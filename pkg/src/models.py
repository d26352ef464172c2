"""Run configuration: model, task, grid and output blocks."""

from __future__ import annotations

from pathlib import Path
from typing import Annotated, Any, Literal, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.cm_core import CMFunction
from src.config import CONFIG_DIR
from src.errors import ConfigError, ConstructionError
from src.material import (
    MaterialModel,
    make_composite_g,
    make_direct,
    make_elastic,
    make_kelvin_chain,
    make_log_g,
    make_powerlaw_creep,
    make_powerlaw_g,
    make_zener,
)

Positive = Annotated[float, Field(gt=0)]


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridSpec(_Block):
    """start..stop with count points, linear or logarithmic."""
    start: float
    stop: float
    count: int = Field(ge=1)
    spacing: Literal["lin", "log"] = "lin"

    @model_validator(mode="after")
    def _monotone(self) -> GridSpec:
        if self.count > 1 and not self.stop > self.start:
            raise ValueError("grid must be strictly increasing (stop > start)")
        if self.count == 1 and self.stop != self.start:
            raise ValueError("a single-point grid needs start == stop")
        if self.spacing == "log" and self.start <= 0:
            raise ValueError("log grids need start > 0")
        return self

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)


# --- Model blocks (one per material constructor) ---


class ZenerBlock(_Block):
    kind: Literal["zener"]
    J0: Positive
    J1: float = Field(ge=0)
    tau: Positive
    rho: Positive = 1.0

    def build(self) -> MaterialModel:
        return make_zener(self.J0, self.J1, self.tau, self.rho)


class ElasticBlock(_Block):
    kind: Literal["elastic"]
    J0: Positive
    rho: Positive = 1.0

    def build(self) -> MaterialModel:
        return make_elastic(self.J0, self.rho)


class KelvinElement(_Block):
    J: float = Field(ge=0)
    tau: Positive


class KelvinChainBlock(_Block):
    kind: Literal["kelvin_chain"]
    J0: Positive
    elements: list[KelvinElement] = Field(min_length=1)
    rho: Positive = 1.0

    def build(self) -> MaterialModel:
        return make_kelvin_chain(self.J0, [(e.J, e.tau) for e in self.elements], self.rho)


class PowerlawCreepBlock(_Block):
    kind: Literal["powerlaw_creep"]
    J0: Positive
    c: Positive
    beta: float = Field(gt=0, lt=1)
    rho: Positive = 1.0

    def build(self) -> MaterialModel:
        return make_powerlaw_creep(self.J0, self.c, self.beta, self.rho)


class PowerlawGBlock(_Block):
    kind: Literal["powerlaw_g"]
    c0: Positive
    a: Positive
    alpha: float = Field(gt=0, lt=1)
    rho: Positive = 1.0

    def build(self) -> MaterialModel:
        return make_powerlaw_g(self.c0, self.a, self.alpha, self.rho)


class LogGBlock(_Block):
    kind: Literal["log_g"]
    c0: Positive
    a: Positive
    b: Positive
    A: float = Field(1.0, ge=1)
    rho: Positive = 1.0

    def build(self) -> MaterialModel:
        return make_log_g(self.c0, self.a, self.b, self.A, self.rho)


class ExponentialGBlock(_Block):
    kind: Literal["exponential_g"]
    c0: Positive
    rate: Positive
    weight: float = Field(1.0, ge=0)
    rho: Positive = 1.0

    def build(self) -> MaterialModel:
        return make_direct(
            self.c0,
            CMFunction.exponential(self.rate, self.weight),
            self.rho,
            name="exponential_g",
            params={"c0": self.c0, "rate": self.rate, "weight": self.weight, "rho": self.rho},
            scale=1.0 / self.rate,
        )


class PowerLawKernel(_Block):
    type: Literal["power_law"]
    a: Positive
    alpha: float = Field(gt=0, lt=1)

    def build(self) -> CMFunction:
        return CMFunction.power_law(self.a, self.alpha)


class ExponentialKernel(_Block):
    type: Literal["exponential"]
    rate: Positive
    weight: float = Field(1.0, ge=0)

    def build(self) -> CMFunction:
        return CMFunction.exponential(self.rate, self.weight)


class LogarithmicKernel(_Block):
    type: Literal["logarithmic"]
    a: Positive
    b: Positive
    A: float = Field(1.0, ge=1)

    def build(self) -> CMFunction:
        return CMFunction.logarithmic(self.a, self.b, self.A, scale=1.0 / self.a)


class ConstantKernel(_Block):
    type: Literal["constant"]
    value: float = Field(ge=0)

    def build(self) -> CMFunction:
        return CMFunction.constant(self.value)


KernelSpec = Annotated[
    Union[PowerLawKernel, ExponentialKernel, LogarithmicKernel, ConstantKernel],
    Field(discriminator="type"),
]


class CompositeGBlock(_Block):
    kind: Literal["composite_g"]
    c0: Positive
    kernels: list[KernelSpec] = Field(min_length=1)
    rho: Positive = 1.0

    def build(self) -> MaterialModel:
        return make_composite_g(self.c0, [k.build() for k in self.kernels], self.rho)


ModelBlock = Annotated[
    Union[
        ZenerBlock,
        ElasticBlock,
        KelvinChainBlock,
        PowerlawCreepBlock,
        PowerlawGBlock,
        LogGBlock,
        ExponentialGBlock,
        CompositeGBlock,
    ],
    Field(discriminator="kind"),
]


# --- Task, grids, output ---


class TaskBlock(_Block):
    kind: Literal["curves", "greens", "wavefront", "verify", "duality"]
    route: Literal["quadrature", "direct"] = "quadrature"
    r: list[float] = Field(default_factory=lambda: [1.0])

    @model_validator(mode="after")
    def _distances(self) -> TaskBlock:
        if not self.r or any(v < 0 for v in self.r):
            raise ValueError("r must be a non-empty list of distances >= 0")
        return self


class GridsBlock(_Block):
    t: GridSpec | None = None
    x: GridSpec | None = None
    omega: GridSpec | None = None
    r: GridSpec | None = None
    tau: GridSpec | None = None
    p: GridSpec | None = None


class OutputBlock(_Block):
    directory: str = "out"
    prefix: str = "run"
    format: Literal["csv", "json"] = "csv"
    tolerance: Positive | None = None
    threads: int = Field(1, ge=1)


class UnitsBlock(_Block):
    """Labels only; all computation is in SI."""
    time: str = "s"
    length: str = "m"


class RunConfig(_Block):
    """One model, one task per run."""
    model: ModelBlock
    task: TaskBlock
    grids: GridsBlock = Field(default_factory=GridsBlock)
    output: OutputBlock = Field(default_factory=OutputBlock)
    units: UnitsBlock = Field(default_factory=UnitsBlock)

    def build_model(self) -> MaterialModel:
        return self.model.build()


def _line_of(text: str, loc: tuple[Any, ...]) -> int | None:
    """1-based YAML line of the deepest node along loc that exists."""
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return None
    line = None
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            match = next((v for k, v in node.value if k.value == str(key)), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            match = node.value[key]
        else:
            match = None
        if match is None:
            break
        node = match
        line = node.start_mark.line + 1
    return line


def parse_run_config(text: str, source: str = "<string>") -> RunConfig:
    """Validate YAML text into a RunConfig; every failure is a ConfigError."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"{source}: invalid YAML: {exc}", line=line) from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    try:
        config = RunConfig.model_validate(raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        path = ".".join(str(part) for part in first["loc"])
        raise ConfigError(f"{source}: {path}: {first['msg']}", path=path, line=_line_of(text, first["loc"])) from exc
    try:
        config.build_model()
    except ConstructionError as exc:
        raise ConfigError(f"{source}: model: {exc}", path="model", line=_line_of(text, ("model",))) from exc
    return config


def load_run_config(path: str | Path) -> RunConfig:
    """Read a YAML run file; a bare name that does not exist is looked up in configs/."""
    path = Path(path)
    if not path.exists() and (CONFIG_DIR / path.name).exists():
        path = CONFIG_DIR / path.name
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_run_config(text, str(path))


def dump_run_config(config: RunConfig) -> str:
    """YAML that parses back to an equal RunConfig."""
    return yaml.safe_dump(config.model_dump(mode="json"), sort_keys=False)
