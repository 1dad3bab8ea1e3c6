"""Estimators on simulated tick ensembles."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import NoTicksError, TickworkError

__all__ = [
    "CountWindowStats",
    "count_stats",
    "moment_stats",
    "mandel_q_estimate",
    "PerStepReport",
    "per_step_moments",
    "within_se",
]


@dataclass(frozen=True)
class CountWindowStats:
    window_end_times: np.ndarray
    mean_counts: np.ndarray
    var_counts: np.ndarray
    se_mean: np.ndarray
    se_var: np.ndarray
    n_traj: int


def moment_stats(samples: np.ndarray):
    """Mean, unbiased variance and their standard errors along axis 0.

    SE(var) uses ``sqrt((m4 - (n-3)/(n-1) s^4) / n)`` with the sample fourth
    central moment ``m4``; it is approximate for small n.
    """
    x = np.asarray(samples, dtype=float)
    n = x.shape[0]
    if n == 0:
        raise TickworkError("empty ensemble")
    mean = x.mean(axis=0)
    if n == 1:
        zero = np.zeros_like(mean)
        return mean, zero, zero, zero
    dev = x - mean
    var = (dev**2).sum(axis=0) / (n - 1)
    m4 = (dev**4).mean(axis=0)
    se_mean = np.sqrt(var / n)
    se_var = np.sqrt(np.maximum(m4 - (n - 3) / (n - 1) * var**2, 0.0) / n)
    return mean, var, se_mean, se_var


def count_stats(ensemble, windows) -> CountWindowStats:
    """Moments of N(t) across trajectories for each window end time t."""
    windows = np.atleast_1d(np.asarray(windows, dtype=float))
    if ensemble.n_traj == 0:
        raise TickworkError("empty ensemble")
    horizon = ensemble.n_steps * ensemble.dt
    if np.any(windows <= 0) or np.any(windows > horizon * (1 + 1e-12)):
        raise ValueError(f"windows must lie in (0, {horizon}]")
    counts = ensemble.counts_at(windows)
    mean, var, se_m, se_v = moment_stats(counts)
    return CountWindowStats(windows, mean, var, se_m, se_v, ensemble.n_traj)


def mandel_q_estimate(stats: CountWindowStats, window_index: int = -1):
    """``(q_hat, se_q)`` with ``q_hat = var / mean - 1`` and a delta-method error.

    The mean-variance covariance is ignored.
    """
    mean = float(stats.mean_counts[window_index])
    var = float(stats.var_counts[window_index])
    if mean <= 0.0:
        raise NoTicksError("zero mean count in window")
    se_m = float(stats.se_mean[window_index])
    se_v = float(stats.se_var[window_index])
    q = var / mean - 1.0
    se_q = math.sqrt((se_v / mean) ** 2 + (var * se_m / mean**2) ** 2)
    return q, se_q


def within_se(estimate, target, se, k: float = 3.0) -> bool:
    return bool(np.all(np.abs(np.asarray(estimate) - np.asarray(target)) <= k * np.asarray(se)))


@dataclass(frozen=True)
class PerStepReport:
    mean: float
    variance: float
    se_mean: float
    se_variance: float
    expected: float
    mean_ok: bool
    variance_ok: bool
    n_samples: int

    @property
    def passed(self) -> bool:
        return self.mean_ok and self.variance_ok


def per_step_moments(ensemble, steady_population: float, epsilon_w: float,
                     k: float = 3.0) -> PerStepReport:
    """Pooled mean and variance of dN per step, compared with ``eps_w * P``.

    Standard errors come from per-trajectory averages, which keeps them
    valid when ticks within one trajectory are correlated.
    """
    n_traj = ensemble.n_traj
    if n_traj == 0:
        raise TickworkError("empty ensemble")
    n_steps = ensemble.n_steps
    per_traj = np.array([r.count for r in ensemble.records], dtype=float) / n_steps
    mean = float(per_traj.mean())
    # dN^2 = dN, so the pooled variance is fixed by the pooled mean
    total = n_traj * n_steps
    variance = mean * (1.0 - mean) * total / (total - 1) if total > 1 else 0.0
    if n_traj > 1:
        se_mean = float(per_traj.std(ddof=1) / math.sqrt(n_traj))
    else:
        se_mean = math.sqrt(mean * (1 - mean) / n_steps)
    se_var = abs(1.0 - 2.0 * mean) * se_mean
    expected = epsilon_w * steady_population
    if expected == 0.0 and mean == 0.0:
        return PerStepReport(0.0, 0.0, 0.0, 0.0, 0.0, True, True, total)
    mean_ok = abs(mean - expected) <= k * se_mean
    var_ok = abs(variance - expected) <= k * se_var
    return PerStepReport(mean, variance, se_mean, se_var, expected, mean_ok, var_ok, total)
