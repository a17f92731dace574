from .harness import (
    CSV_COLUMNS,
    BenchRecord,
    RegressionResult,
    emit_csv,
    measure,
    parse_csv,
    read_csv,
    regress,
    run_experiment,
    run_sweep,
)
from .plan import GRID, ExperimentPlan, SweepConfig, load_plan, grid_config

__all__ = [
    "CSV_COLUMNS", "BenchRecord", "RegressionResult", "emit_csv", "measure", "parse_csv",
    "read_csv", "regress", "run_experiment", "run_sweep", "GRID", "ExperimentPlan",
    "SweepConfig", "load_plan", "grid_config",
]
