"""Benchmark harness: experiment plans, ablations and the command-line interface."""

from .ablation import ABLATIONS, AblationReport, run_ablation, verdict
from .plan import ExperimentPlan, SolverEntry
from .runner import CSV_FIELDS, ResultRow, read_csv, run_plan
from .suite import SUITE_IDS, suite_paths

__all__ = [
    "ABLATIONS", "AblationReport", "CSV_FIELDS", "ExperimentPlan", "ResultRow", "SUITE_IDS",
    "SolverEntry", "read_csv", "run_ablation", "run_plan", "suite_paths", "verdict",
]
