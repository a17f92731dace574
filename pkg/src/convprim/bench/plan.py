"""Experiment plans: one swept hyperparameter, the rest fixed."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from ..errors import ConfigurationError
from ..layer import GROUPED, KIND_ALIASES, KINDS, LayerSpec

SWEEPABLE = ("groups", "kernel", "input_width", "in_channels", "out_channels")
_SWEEP_ALIASES = {"filters": "out_channels", "width": "input_width", **{k: k for k in SWEEPABLE}}

# decs used by the bench: accumulator >> 8 on every primitive
DEFAULT_DECS = {"dec_input": 0, "dec_weight": 0, "dec_output": -8}


@dataclass(frozen=True)
class ExperimentPlan:
    experiment_id: int
    swept_parameter: str
    sweep_values: tuple[int, ...]
    fixed: dict = field(hash=False)  # the non-swept entries of SWEEPABLE plus decs

    def __post_init__(self):
        param = _SWEEP_ALIASES.get(self.swept_parameter)
        if param is None:
            raise ConfigurationError(f"cannot sweep {self.swept_parameter!r}")
        object.__setattr__(self, "swept_parameter", param)
        object.__setattr__(self, "sweep_values", tuple(int(v) for v in self.sweep_values))
        fixed = {**DEFAULT_DECS, **{_SWEEP_ALIASES.get(k, k): int(v) for k, v in self.fixed.items()}}
        missing = [p for p in SWEEPABLE if p != param and p not in fixed]
        if missing:
            raise ConfigurationError(f"plan {self.experiment_id} does not fix {missing}")
        fixed.pop(param, None)
        object.__setattr__(self, "fixed", fixed)

    def point(self, value: int) -> dict:
        """All hyperparameters at one sweep value (groups as planned, not as used)."""
        return {**self.fixed, self.swept_parameter: int(value)}

    def spec_at(self, value: int, primitive: str) -> LayerSpec:
        """Raises ConfigurationError when the point is invalid for the primitive."""
        p = self.point(value)
        kind = KIND_ALIASES.get(primitive)
        if kind is None:
            raise ConfigurationError(f"unknown primitive {primitive!r}")
        return LayerSpec(
            kind,
            input_width=p["input_width"],
            in_channels=p["in_channels"],
            out_channels=p["out_channels"],
            kernel=p["kernel"],
            groups=p["groups"] if kind == GROUPED else 1,
            dec_input=p["dec_input"],
            dec_weight=p["dec_weight"],
            dec_output=p["dec_output"],
        )


def _plan(experiment_id, swept, values, groups, kernel, width, cin, cout) -> ExperimentPlan:
    fixed = dict(groups=groups, kernel=kernel, input_width=width, in_channels=cin,
                 out_channels=cout)
    fixed = {k: v for k, v in fixed.items() if v is not None}
    return ExperimentPlan(experiment_id, swept, tuple(values), fixed)


# grid ranges; intermediate sweep points are our choice
GRID = {
    1: _plan(1, "groups", [1, 2, 4, 8, 16, 32], None, 3, 10, 128, 64),
    2: _plan(2, "kernel", [1, 3, 5, 7, 9, 11], 2, None, 32, 16, 16),
    3: _plan(3, "input_width", range(8, 33, 4), 2, 3, None, 16, 16),
    4: _plan(4, "in_channels", range(4, 33, 4), 2, 3, 32, None, 16),
    5: _plan(5, "out_channels", range(4, 33, 4), 2, 3, 32, 16, None),
}


@dataclass
class SweepConfig:
    plans: list[ExperimentPlan]
    primitives: list[str] = field(default_factory=lambda: list(KINDS))
    paths: list[str] = field(default_factory=lambda: ["ref", "fast"])
    repeats: int = 50
    seed: int = 0


def _plan_from_mapping(d: dict) -> ExperimentPlan:
    sweep = d.get("sweep")
    if not isinstance(sweep, dict) or "parameter" not in sweep or "values" not in sweep:
        raise ConfigurationError("plan needs a sweep block with 'parameter' and 'values'")
    exp = d.get("experiment")
    if exp is None:
        raise ConfigurationError("plan needs an 'experiment' id")
    if exp in GRID and not any(k in d for k in SWEEPABLE + ("filters",)):
        base = dict(GRID[exp].fixed)
    else:
        base = {}
    for key in SWEEPABLE + ("filters",) + tuple(DEFAULT_DECS):
        if key in d:
            base[key] = d[key]
    return ExperimentPlan(int(exp), sweep["parameter"], sweep["values"], base)


def load_plan(path) -> SweepConfig:
    """Read a YAML plan file: one plan at top level, or a ``plans`` list sharing top-level defaults."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as e:
        raise ConfigurationError(f"{path}: not valid YAML: {e}") from e
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}: expected a mapping at top level")
    shared = {k: v for k, v in doc.items() if k not in ("plans", "primitives", "paths",
                                                        "repeats", "seed")}
    if "plans" in doc:
        plans = [_plan_from_mapping({**shared, **p}) for p in doc["plans"]]
    else:
        plans = [_plan_from_mapping(doc)]
    cfg = SweepConfig(plans)
    if "primitives" in doc:
        cfg.primitives = [str(p) for p in doc["primitives"]]
    if "paths" in doc:
        cfg.paths = [str(p) for p in doc["paths"]]
    cfg.repeats = int(doc.get("repeats", cfg.repeats))
    cfg.seed = int(doc.get("seed", cfg.seed))
    return cfg


def grid_config(repeats: int = 50, seed: int = 0, paths: Optional[list[str]] = None) -> SweepConfig:
    return SweepConfig(list(GRID.values()), repeats=repeats, seed=seed,
                       paths=paths or ["ref", "fast"])
