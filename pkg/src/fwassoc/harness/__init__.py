"""Episode orchestration, Monte-Carlo aggregation and result export."""
from .bench import bench_instance, bench_solver, random_problem
from .config import EpisodeConfig, config_from_dict, load_config
from .episode import EpisodeResult, Trace, make_trace, run_episode, simulate_rates
from .export import (
    SCHEMA_VERSION,
    export_results,
    load_schema,
    read_slots_csv,
    read_summary_json,
)
from .montecarlo import MonteCarloResult, RunSummary, monte_carlo, percentile_gain, summarize
from .training import simulated_dataset, train_forecaster

__all__ = [
    "bench_instance",
    "bench_solver",
    "random_problem",
    "EpisodeConfig",
    "config_from_dict",
    "load_config",
    "EpisodeResult",
    "Trace",
    "make_trace",
    "run_episode",
    "simulate_rates",
    "SCHEMA_VERSION",
    "export_results",
    "load_schema",
    "read_slots_csv",
    "read_summary_json",
    "MonteCarloResult",
    "RunSummary",
    "monte_carlo",
    "percentile_gain",
    "summarize",
    "simulated_dataset",
    "train_forecaster",
]
