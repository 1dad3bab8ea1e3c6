import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tickwork.exceptions import NoTicksError, TickworkError
from tickwork.stats import (
    CountWindowStats,
    count_stats,
    mandel_q_estimate,
    moment_stats,
    per_step_moments,
    within_se,
)
from tickwork.trajectory import EnsembleResult, TickRecord


def bernoulli_ensemble(p, n_traj, n_steps, seed=0):
    rng = np.random.default_rng(seed)
    dn = rng.random((n_traj, n_steps)) < p
    records = [TickRecord(np.flatnonzero(row), n_steps, 1e-3) for row in dn]
    return EnsembleResult(records, seed, 1e-3, n_steps)


@given(arrays(np.float64, (20, 3), elements=st.floats(-100, 100, allow_nan=False)))
def test_moment_stats_matches_numpy(x):
    mean, var, se_m, se_v = moment_stats(x)
    assert np.allclose(mean, x.mean(axis=0))
    assert np.allclose(var, x.var(axis=0, ddof=1))
    assert np.allclose(se_m, np.sqrt(x.var(axis=0, ddof=1) / 20))
    assert np.all(se_v >= 0)


def test_se_var_for_normal_samples():
    rng = np.random.default_rng(3)
    x = rng.normal(0, 2.0, size=(200000, 1))
    _, var, _, se_v = moment_stats(x)
    # normal: SE(var) ~ sigma^2 sqrt(2 / n)
    assert se_v[0] == pytest.approx(4.0 * math.sqrt(2 / 200000), rel=0.02)


def test_moment_stats_edge_cases():
    with pytest.raises(TickworkError):
        moment_stats(np.zeros((0, 2)))
    mean, var, se_m, se_v = moment_stats(np.array([[3.0]]))
    assert mean[0] == 3.0 and var[0] == 0.0 and se_m[0] == 0.0


def test_count_stats_windows():
    ens = bernoulli_ensemble(0.01, 200, 1000)
    st_ = count_stats(ens, [0.5, 1.0])
    assert np.all(np.diff(st_.mean_counts) >= 0)
    assert st_.n_traj == 200
    with pytest.raises(ValueError):
        count_stats(ens, [1.5])
    with pytest.raises(ValueError):
        count_stats(ens, [0.0])


def test_mandel_q_poisson_like():
    ens = bernoulli_ensemble(0.001, 4000, 1000)
    q, se = mandel_q_estimate(count_stats(ens, [1.0]))
    # Bernoulli counts have Q = -p
    assert abs(q + 0.001) <= 3 * se


def test_mandel_q_no_ticks():
    zeros = np.zeros(1)
    stats = CountWindowStats(np.ones(1), zeros, zeros, zeros, zeros, 10)
    with pytest.raises(NoTicksError):
        mandel_q_estimate(stats)


def test_within_se():
    assert within_se(1.0, 1.2, 0.1)
    assert not within_se(1.0, 1.4, 0.1)
    assert within_se([1.0, 2.0], [1.0, 2.25], [0.1, 0.1])


@pytest.mark.parametrize("p", [0.002, 0.01])
def test_per_step_estimator_consistency(p):
    rep = per_step_moments(bernoulli_ensemble(p, 1000, 2000), steady_population=p / 0.5,
                           epsilon_w=0.5)
    assert rep.passed
    assert rep.expected == pytest.approx(p)
    assert rep.variance == pytest.approx(rep.mean * (1 - rep.mean), rel=1e-3)


def test_per_step_se_shrinks_like_root_two():
    small = per_step_moments(bernoulli_ensemble(0.01, 2000, 500, seed=1), 0.01, 1.0)
    large = per_step_moments(bernoulli_ensemble(0.01, 4000, 500, seed=2), 0.01, 1.0)
    assert small.se_mean / large.se_mean == pytest.approx(math.sqrt(2), rel=0.1)


def test_per_step_detects_wrong_rate():
    rep = per_step_moments(bernoulli_ensemble(0.012, 1000, 2000), 0.01, 1.0)
    assert not rep.mean_ok


def test_per_step_no_ticks_expected():
    rep = per_step_moments(bernoulli_ensemble(0.0, 10, 100), 0.0, 0.1)
    assert rep.passed and rep.mean == 0.0


def test_per_step_empty():
    with pytest.raises(TickworkError):
        per_step_moments(SimpleNamespace(n_traj=0, n_steps=10, records=[]), 0.1, 0.1)
