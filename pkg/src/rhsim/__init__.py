"""rhsim: command-level DRAM timing simulation and RowHammer-tracker library.

Trackers (dapper-s, dapper-h, para, hydra, comet, abacus, null) share one
interface; workloads cover benign synthetic traffic and tailored performance
attacks; the engine keeps an exact ground-truth hammer oracle; `analysis`
holds the closed-form attack/defense arithmetic.
"""

from .geometry import (ExperimentConfig, Geometry, RowAddress, TimingParams,
                       flatten, unflatten, load_config, serialize_config,
                       make_config, desk_preset)
from .engine import Engine, SimReport, build_tracker, run_experiment, slowdown
from .workloads import build_workload

__all__ = [
    "ExperimentConfig", "Geometry", "RowAddress", "TimingParams",
    "flatten", "unflatten", "load_config", "serialize_config", "make_config",
    "desk_preset", "Engine", "SimReport", "build_tracker", "run_experiment",
    "slowdown", "build_workload",
]

__version__ = "0.1.0"
