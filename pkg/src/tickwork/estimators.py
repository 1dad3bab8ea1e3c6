"""scikit-learn style wrappers around the spectral predictions and the simulator."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_model, check_times
from .exceptions import NoTicksError
from .ldt import summarize
from .stats import count_stats, mandel_q_estimate
from .trajectory import SimulationPlan, run_ensemble

__all__ = ["TickStatisticsPredictor", "ClockSimulator", "WINDOW_COLUMNS", "window_table"]

WINDOW_COLUMNS = ("window_t", "mean_N", "var_N", "se_mean", "se_var", "q_hat", "se_q")


class TickStatisticsPredictor(BaseEstimator):
    """Asymptotic tick-count statistics of a clock model.

    Parameters
    ----------
    model : ClockModel
        Two-level, three-level or hybrid clock.

    Attributes
    ----------
    steady_ : ndarray of shape (d, d)
    gamma_tick_ : float
    mean_rate_, variance_rate_ : float
        ``-theta'(0)`` and ``theta''(0)``.
    mandel_q_ : float
    """

    def __init__(self, model=None):
        self.model = model

    def fit(self, X=None, y=None):
        summary = summarize(check_model(self.model))
        self.summary_ = summary
        self.steady_ = summary.steady
        self.gamma_tick_ = summary.gamma_tick
        self.mean_rate_ = summary.mean_rate
        self.variance_rate_ = summary.variance_rate
        self.mandel_q_ = summary.mandel_q
        return self

    def predict(self, times):
        """Mean and variance of N(t), shape (n_times, 2)."""
        check_is_fitted(self, "mean_rate_")
        t = check_times(times)
        return np.column_stack([self.mean_rate_ * t, self.variance_rate_ * t])


class ClockSimulator(TransformerMixin, BaseEstimator):
    """Monte-Carlo tick ensembles; ``transform`` maps window end times to count statistics.

    The output columns are ``WINDOW_COLUMNS``. ``q_hat`` and ``se_q`` are NaN
    in windows without ticks.
    """

    def __init__(self, model=None, dt=1e-3, n_steps=1000, n_traj=100, seed=0,
                 initial_state="steady", workers=1):
        self.model = model
        self.dt = dt
        self.n_steps = n_steps
        self.n_traj = n_traj
        self.seed = seed
        self.initial_state = initial_state
        self.workers = workers

    def fit(self, X=None, y=None):
        plan = SimulationPlan(dt=self.dt, n_steps=int(self.n_steps), n_traj=int(self.n_traj),
                              seed=int(self.seed), initial_state=self.initial_state)
        self.ensemble_ = run_ensemble(check_model(self.model), plan, workers=int(self.workers))
        self.horizon_ = plan.horizon
        return self

    def transform(self, X):
        check_is_fitted(self, "ensemble_")
        windows = check_times(X, self.horizon_)
        return window_table(count_stats(self.ensemble_, windows))


def window_table(stats) -> np.ndarray:
    """Stack window statistics into rows ordered as ``WINDOW_COLUMNS``."""
    rows = []
    for i, t in enumerate(stats.window_end_times):
        try:
            q, se_q = mandel_q_estimate(stats, i)
        except NoTicksError:
            q, se_q = float("nan"), float("nan")
        rows.append([t, stats.mean_counts[i], stats.var_counts[i], stats.se_mean[i],
                     stats.se_var[i], q, se_q])
    return np.array(rows, dtype=float).reshape(-1, len(WINDOW_COLUMNS))
