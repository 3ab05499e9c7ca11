"""Run configuration: JSON in, validated objects out.

Unknown keys anywhere are rejected, and every module precondition that can be
checked without computing is checked here.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .flow import FlowConfig
from .grid import Grid, make_grid
from .nonlin import AssumptionConstants, NonlinearitySpec, SamplingPlan, default_constants, spec_from_dict
from .reporting import digest

__all__ = ["FORMAT_VERSION", "ConfigError", "Params", "RunConfig", "load_config", "parse_config"]

FORMAT_VERSION = 1
TOP_KEYS = {"format_version", "grid", "nonlinearity", "constants", "flow", "params", "plan", "output_dir"}


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


@dataclass(frozen=True)
class Params:
    """Command-specific parameters; each command reads the ones it needs."""

    c: float | None = None
    c_values: tuple | None = None
    functional: str = "J"
    fractions: tuple = (0.3, 0.5, 0.7)
    lambdas: tuple | None = None
    radii: tuple | None = None
    delta: float | None = None
    bound: float | None = None
    tol: float = 1e-8
    max_points: int = 2**22
    solve: bool = True

    def __post_init__(self):
        for name in ("c_values", "fractions", "lambdas", "radii"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, tuple(float(x) for x in v))
        if self.functional not in ("J", "Jinf"):
            raise ConfigError(f"functional must be 'J' or 'Jinf', got {self.functional!r}")
        if self.c is not None and not self.c > 0:
            raise ConfigError(f"mass parameter c must be positive, got {self.c}")
        if self.c_values is not None:
            if not self.c_values:
                raise ConfigError("c_values must be nonempty")
            if any(not c > 0 for c in self.c_values):
                raise ConfigError("c_values must be positive")
            if list(self.c_values) != sorted(self.c_values):
                raise ConfigError("c_values must be sorted ascending")
        if any(not 0 < f < 1 for f in self.fractions) or not self.fractions:
            raise ConfigError("fractions must lie strictly between 0 and 1")
        if self.radii is not None and (not self.radii or any(not r > 0 for r in self.radii)):
            raise ConfigError("radii must be positive")
        if self.lambdas is not None and (not self.lambdas or any(not x > 0 for x in self.lambdas)):
            raise ConfigError("dilation factors must be positive")
        if self.max_points < 4:
            raise ConfigError("max_points must be at least 4")

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items()}


@dataclass(frozen=True)
class RunConfig:
    grid: Grid
    spec: NonlinearitySpec
    flow: FlowConfig = field(default_factory=FlowConfig)
    params: Params = field(default_factory=Params)
    constants: AssumptionConstants | None = None
    plan: SamplingPlan | None = None
    output_dir: str = "vecmin-out"
    format_version: int = FORMAT_VERSION

    def constants_or_default(self) -> AssumptionConstants:
        return self.constants if self.constants is not None else default_constants(self.spec, self.grid.dim)

    def plan_or_default(self) -> SamplingPlan:
        return self.plan if self.plan is not None else SamplingPlan(dim=self.grid.dim, seed=self.flow.seed)

    def with_overrides(self, seed: int | None = None, threads: int | None = None) -> RunConfig:
        flow, plan = self.flow, self.plan
        if seed is not None:
            flow = replace(flow, seed=seed)
            plan = replace(plan, seed=seed) if plan is not None else None
        if threads is not None:
            flow = replace(flow, threads=threads)
        return replace(self, flow=flow, plan=plan)

    def to_dict(self) -> dict:
        d = {
            "format_version": self.format_version,
            "grid": self.grid.to_dict(),
            "nonlinearity": self.spec.to_dict(),
            "flow": asdict(self.flow),
            "params": self.params.to_dict(),
            "output_dir": self.output_dir,
        }
        if self.constants is not None:
            d["constants"] = self.constants.to_dict()
        if self.plan is not None:
            d["plan"] = {**asdict(self.plan), "thetas": list(self.plan.thetas)}
        return d

    def digest(self) -> str:
        """Hash of everything that can change a number (not paths or thread count)."""
        d = self.to_dict()
        d.pop("output_dir")
        d["flow"].pop("threads")
        return digest(d)


def _build(cls, d, what):
    if not isinstance(d, dict):
        raise ConfigError(f"{what} must be a JSON object")
    names = {f.name for f in fields(cls)}
    unknown = set(d) - names
    if unknown:
        raise ConfigError(f"unknown keys in {what}: {sorted(unknown)}")
    try:
        return cls(**d)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {what}: {exc}") from exc


def parse_config(d: dict) -> RunConfig:
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(d) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    version = d.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ConfigError(f"unsupported format_version {version}")
    for key in ("grid", "nonlinearity"):
        if key not in d:
            raise ConfigError(f"missing required section {key!r}")

    g = d["grid"]
    if not isinstance(g, dict) or set(g) != {"N", "M", "L"}:
        raise ConfigError("grid must have exactly the keys N, M, L")
    if not all(isinstance(g[k], int) and not isinstance(g[k], bool) for k in ("N", "M")):
        raise ConfigError("grid N and M must be integers")
    try:
        grid = make_grid(g["N"], g["M"], float(g["L"]))
        spec = spec_from_dict(d["nonlinearity"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    flow = _build(FlowConfig, d.get("flow", {}), "flow")
    params = _build(Params, d.get("params", {}), "params")
    constants = None
    if "constants" in d:
        try:
            constants = AssumptionConstants.from_dict(d["constants"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid constants: {exc}") from exc
    plan = None
    if "plan" in d:
        plan = _build(SamplingPlan, d["plan"], "plan")
        if plan.dim != grid.dim:
            raise ConfigError(f"plan dim {plan.dim} does not match grid N {grid.dim}")
    out = d.get("output_dir", "vecmin-out")
    if not isinstance(out, str) or not out:
        raise ConfigError("output_dir must be a nonempty string")
    return RunConfig(grid, spec, flow, params, constants, plan, out, version)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(d)
