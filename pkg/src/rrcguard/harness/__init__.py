"""Classification, aggregation, sweeps and the named experiment suites."""

from .metrics import (
    Classification,
    IncompleteTrace,
    RunOutcome,
    SummaryTable,
    aggregate,
    classify_run,
    depletion_time,
)
from .suites import SUITES, Check, SuiteResult
from .sweep import SweepCell, apply_cell, expand_grid, rows_to_csv, run_outcomes, sweep, write_csv

__all__ = [
    "Check", "Classification", "IncompleteTrace", "RunOutcome", "SUITES", "SuiteResult",
    "SummaryTable", "SweepCell", "aggregate", "apply_cell", "classify_run", "depletion_time",
    "expand_grid", "rows_to_csv", "run_outcomes", "sweep", "write_csv",
]
