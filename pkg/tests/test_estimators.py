import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from tickwork import ClockSimulator, TickStatisticsPredictor
from tickwork._validation import check_times
from tickwork.exceptions import ConfigError
from tickwork.models import ThreeLevelAthermal, TwoLevelAthermal


def test_predictor_predicts_linear_moments():
    est = TickStatisticsPredictor(TwoLevelAthermal(1.0, 1.0, 6.0)).fit()
    out = est.predict([1.0, 2.0])
    assert out.shape == (2, 2)
    assert np.allclose(out[0], [1.2, 0.912], atol=1e-8)
    assert np.allclose(out[1], 2 * out[0])
    assert est.mandel_q_ == pytest.approx(-0.24, abs=1e-8)
    assert est.steady_.shape == (2, 2)


def test_predictor_params_and_clone():
    est = TickStatisticsPredictor(ThreeLevelAthermal())
    assert est.get_params() == {"model": ThreeLevelAthermal()}
    other = clone(est).set_params(model=TwoLevelAthermal())
    assert isinstance(other.model, TwoLevelAthermal)


def test_predictor_requires_fit_and_model():
    with pytest.raises(NotFittedError):
        TickStatisticsPredictor(TwoLevelAthermal()).predict([1.0])
    with pytest.raises(ConfigError):
        TickStatisticsPredictor("two_level").fit()


def test_simulator_transform_columns():
    sim = ClockSimulator(TwoLevelAthermal(), dt=1e-2, n_steps=100, n_traj=50, seed=3).fit()
    table = sim.transform([0.5, 1.0])
    assert table.shape == (2, 7)
    assert table[1, 0] == 1.0
    assert table[1, 1] >= table[0, 1]
    with pytest.raises(ValueError):
        sim.transform([2.0])
    again = clone(sim).fit().transform([0.5, 1.0])
    assert np.array_equal(table, again, equal_nan=True)


def test_simulator_no_ticks_gives_nan_q():
    sim = ClockSimulator(ThreeLevelAthermal(gamma_m=0.0), dt=1e-2, n_steps=50, n_traj=5,
                         initial_state="ground").fit()
    assert np.isnan(sim.transform([0.5])[0, 5])


@pytest.mark.parametrize("bad", [[-1.0], [[1.0, 2.0]], [np.nan]])
def test_check_times_rejects(bad):
    with pytest.raises(ValueError):
        check_times(bad)


def test_check_times_shapes():
    assert check_times(1.5).tolist() == [1.5]
    assert check_times([[1.0], [2.0]]).tolist() == [1.0, 2.0]
