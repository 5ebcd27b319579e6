"""Path simulation, counting processes and Monte Carlo estimators."""

from .counting import CountingStats, counting_stats
from .estimators import (
    EmpiricalComparison,
    EmpiricalTransition,
    MartingaleResidualReport,
    PairResidual,
    compare_empirical,
    empirical_transition,
    martingale_residual_test,
)
from .rng import path_rng
from .simulation import PathSampler, SimulationPath, simulate, simulate_batch

__all__ = [
    "path_rng",
    "SimulationPath",
    "PathSampler",
    "simulate",
    "simulate_batch",
    "CountingStats",
    "counting_stats",
    "PairResidual",
    "MartingaleResidualReport",
    "martingale_residual_test",
    "EmpiricalTransition",
    "empirical_transition",
    "EmpiricalComparison",
    "compare_empirical",
]
