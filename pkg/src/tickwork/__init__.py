"""Tick statistics of quantum clocks fueled by unread measurements."""
from .estimators import ClockSimulator, TickStatisticsPredictor
from .exceptions import (
    ConfigError,
    ConvergenceError,
    ImpossibleEventError,
    NoTicksError,
    NonUniqueSteadyStateError,
    NumericalError,
    StateInvariantError,
    StepTooLargeError,
    TickworkError,
)
from .ldt import count_moments, mandel_q, steady_state, summarize, theta
from .models import ThreeLevelAthermal, ThreeLevelHybrid, TwoLevelAthermal, model_from_dict
from .trajectory import SimulationPlan, run_ensemble, run_trajectory

__version__ = "0.1.0"

__all__ = [
    "ClockSimulator",
    "TickStatisticsPredictor",
    "ConfigError",
    "ConvergenceError",
    "ImpossibleEventError",
    "NoTicksError",
    "NonUniqueSteadyStateError",
    "NumericalError",
    "StateInvariantError",
    "StepTooLargeError",
    "TickworkError",
    "count_moments",
    "mandel_q",
    "steady_state",
    "summarize",
    "theta",
    "ThreeLevelAthermal",
    "ThreeLevelHybrid",
    "TwoLevelAthermal",
    "model_from_dict",
    "SimulationPlan",
    "run_ensemble",
    "run_trajectory",
]
