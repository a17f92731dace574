"""Latency measurement, CSV I/O and least-squares regression over bench records."""
from __future__ import annotations

import csv
import io
import logging
import statistics
import time
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from ..cases import random_case
from ..costmodel import cost
from ..counters import OpCounters, new_counter_array
from ..errors import ConfigurationError, InsufficientDataError, UnsupportedPathError
from ..fastpath import run_fast
from ..instrument import FAST, has_fast_path, normalize_path
from ..layer import KIND_ALIASES, LayerSpec
from ..reference import run_reference
from .plan import ExperimentPlan, SweepConfig

log = logging.getLogger(__name__)

DEFAULT_REPEATS = 50


@dataclass
class BenchRecord:
    experiment: int
    primitive: str
    path: str
    groups: int  # as planned; only grouped convolution uses it
    kernel: int
    input_width: int
    in_channels: int
    out_channels: int
    dec_input: int
    dec_weight: int
    dec_output: int
    seed: int
    repeats: int
    macs_theoretical: int
    params: int
    latency_mean_ns: float
    latency_std_ns: float
    mul_count: int
    add_sub_count: int
    abs_count: int
    loads: int
    stores: int

    @property
    def latency_mean(self) -> float:
        return self.latency_mean_ns * 1e-9

    @property
    def latency_std(self) -> float:
        return self.latency_std_ns * 1e-9

    @property
    def counters(self) -> OpCounters:
        return OpCounters(self.mul_count, self.add_sub_count, self.abs_count, self.loads,
                          self.stores)

    def non_timing(self) -> tuple:
        return tuple(getattr(self, f.name) for f in fields(self)
                     if not f.name.startswith("latency_"))


CSV_COLUMNS = tuple(f.name for f in fields(BenchRecord))
_FLOAT_COLUMNS = {"latency_mean_ns", "latency_std_ns"}
_STR_COLUMNS = {"primitive", "path"}


def time_call(fn, repeats: int) -> tuple[float, float]:
    """Mean and population std of ``repeats`` timed calls, in ns."""
    samples = []
    for _ in range(repeats):
        start = time.perf_counter_ns()
        fn()
        samples.append(time.perf_counter_ns() - start)
    return statistics.fmean(samples), statistics.pstdev(samples)


def measure(spec: LayerSpec, path: str, repeats: int = DEFAULT_REPEATS, seed: int = 0,
            experiment: int = 0, planned_groups: Optional[int] = None) -> BenchRecord:
    path = normalize_path(path)
    if path == FAST and not has_fast_path(spec):
        raise UnsupportedPathError(f"{spec.kind} convolution has no fast path")
    if repeats < 1:
        raise ConfigurationError("repeats must be >= 1")
    kernel_fn = run_fast if path == FAST else run_reference
    x, w = random_case(spec, seed)

    # warm-up doubles as the counted run (also triggers JIT compilation)
    counters = new_counter_array()
    kernel_fn(spec, x, w, counters)
    c = OpCounters.from_array(counters)

    mean_ns, std_ns = time_call(lambda: kernel_fn(spec, x, w), repeats)
    report = cost(spec)
    return BenchRecord(
        experiment=experiment,
        primitive=spec.kind,
        path=path,
        groups=spec.groups if planned_groups is None else planned_groups,
        kernel=spec.kernel,
        input_width=spec.input_width,
        in_channels=spec.in_channels,
        out_channels=spec.out_channels,
        dec_input=spec.dec_input,
        dec_weight=spec.dec_weight,
        dec_output=spec.dec_output,
        seed=seed,
        repeats=repeats,
        macs_theoretical=report.macs,
        params=report.params,
        latency_mean_ns=mean_ns,
        latency_std_ns=std_ns,
        mul_count=c.mul,
        add_sub_count=c.add_sub,
        abs_count=c.abs_ops,
        loads=c.loads,
        stores=c.stores,
    )


def run_experiment(plan: ExperimentPlan, primitive: str, path: str,
                   repeats: int = DEFAULT_REPEATS, seed: int = 0) -> list[BenchRecord]:
    """One record per valid sweep point; invalid points are logged and skipped."""
    kind = KIND_ALIASES.get(primitive)
    if kind is None:
        raise ConfigurationError(f"unknown primitive {primitive!r}")
    records = []
    for value in plan.sweep_values:
        try:
            spec = plan.spec_at(value, kind)
        except ConfigurationError as e:
            log.warning("experiment %d: skipping %s=%d for %s: %s",
                        plan.experiment_id, plan.swept_parameter, value, kind, e)
            continue
        records.append(measure(spec, path, repeats, seed, plan.experiment_id,
                               plan.point(value)["groups"]))
    return records


def run_sweep(cfg: SweepConfig) -> list[BenchRecord]:
    """Every plan x primitive x path; add convolution only runs on the reference path."""
    records = []
    for plan in cfg.plans:
        for primitive in cfg.primitives:
            for path in cfg.paths:
                kind = KIND_ALIASES.get(primitive)
                if normalize_path(path) == FAST and kind is not None and kind == "add":
                    continue
                records.extend(run_experiment(plan, primitive, path, cfg.repeats, cfg.seed))
    return records


# -- regression -------------------------------------------------------------------

_AXES = {
    "macs": "macs_theoretical",
    "macs_theoretical": "macs_theoretical",
    "latency": "latency_mean",
    "latency_mean": "latency_mean",
}


@dataclass(frozen=True)
class RegressionResult:
    slope: float
    intercept: float
    r2: float
    x_name: str
    y_name: str
    n: int


def ols(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares line; r2 = 1 - SS_res/SS_tot, taken as 0 when y is constant."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.size < 3:
        raise InsufficientDataError(f"regression needs at least 3 points, got {x.size}")
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    if sxx == 0:
        raise InsufficientDataError("regression needs at least two distinct x values")
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    ss_tot = float(np.sum((y - ym) ** 2))
    if ss_tot == 0:
        return slope, intercept, 0.0
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    return slope, intercept, 1.0 - ss_res / ss_tot


def regress(records: Iterable[BenchRecord], x: str = "macs", y: str = "latency") -> RegressionResult:
    try:
        x_attr, y_attr = _AXES[x], _AXES[y]
    except KeyError as e:
        raise ConfigurationError(f"unknown regression axis {e.args[0]!r}") from None
    records = list(records)
    xs = [getattr(r, x_attr) for r in records]
    ys = [getattr(r, y_attr) for r in records]
    slope, intercept, r2 = ols(xs, ys)
    return RegressionResult(slope, intercept, r2, x_attr, y_attr, len(records))


# -- CSV --------------------------------------------------------------------------


def _format(name: str, value) -> str:
    if name in _FLOAT_COLUMNS:
        return repr(float(value))  # shortest round-trip form, always '.' decimal
    return str(value)


def write_csv(records: Iterable[BenchRecord], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow([_format(name, getattr(r, name)) for name in CSV_COLUMNS])


def emit_csv(records: Iterable[BenchRecord], destination) -> None:
    """Write to a path, or to an open text stream."""
    if hasattr(destination, "write"):
        write_csv(records, destination)
        return
    path = Path(destination)
    try:
        with path.open("w", newline="") as f:
            write_csv(records, f)
    except OSError as e:
        raise OSError(e.errno, f"cannot write bench CSV {path}: {e.strerror}") from e


def _parse_row(row: dict) -> BenchRecord:
    values = {}
    for name in CSV_COLUMNS:
        raw = row[name]
        if name in _STR_COLUMNS:
            values[name] = raw
        elif name in _FLOAT_COLUMNS:
            values[name] = float(raw)
        else:
            values[name] = int(raw)
    return BenchRecord(**values)


def parse_csv(text: str) -> list[BenchRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        return []
    if tuple(reader.fieldnames) != CSV_COLUMNS:
        raise ConfigurationError(f"unexpected CSV header {reader.fieldnames}")
    try:
        return [_parse_row(row) for row in reader]
    except (KeyError, ValueError) as e:
        raise ConfigurationError(f"malformed bench CSV row: {e}") from e


def read_csv(source) -> list[BenchRecord]:
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as e:
        raise OSError(e.errno, f"cannot read bench CSV {path}: {e.strerror}") from e
    return parse_csv(text)
