"""Experiment orchestration, aggregation and reporting."""

from .metrics import (AggregationError, MissingCellError, aggregate, ci_half_width, mean_ranks, pooled_rmse,
                      rank_table, rmse_per_horizon, spearman)
from .report import (SCHEMA_VERSION, ReportError, emit_predictions, emit_report, from_dict, load_report,
                     to_dict, to_json)
from .runner import (DATASETS, REAL_DATASETS, CellSummary, EmbedConfig, ExperimentReport, HorizonMetrics,
                     RunResult, UnknownDatasetError, derive_seed, load_series, prepare, rank_models,
                     run_experiment, summarize, worker_count)

__all__ = [name for name in dir() if not name.startswith("_")]
