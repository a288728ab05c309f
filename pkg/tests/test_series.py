import numpy as np
import pytest

from core.exceptions import AlignmentError, DomainError, SampleTooSmallError
from core.series import MIN_T, PredictiveDataset, TimeSeries, align_predictive, demean


def test_alignment_pairs_y_with_lagged_x():
    y = TimeSeries(np.arange(30.0), label="y")
    x = TimeSeries(np.arange(30.0) * 10, label="x")
    data = align_predictive(y, x)
    assert data.T == 29
    np.testing.assert_array_equal(data.y, np.arange(1.0, 30.0))
    np.testing.assert_array_equal(data.x_lag, np.arange(0.0, 29.0) * 10)
    np.testing.assert_array_equal(data.x_level, np.arange(1.0, 30.0) * 10)


def test_predictor_path_reinterleaves(dataset):
    path = dataset.predictor_path()
    assert path.size == dataset.T + 1
    np.testing.assert_array_equal(path[:-1], dataset.x_lag)
    np.testing.assert_array_equal(path[1:], dataset.x_level)


def test_design_has_intercept(dataset):
    X = dataset.design()
    assert X.shape == (dataset.T, 2)
    np.testing.assert_array_equal(X[:, 0], 1.0)


def test_length_mismatch():
    with pytest.raises(AlignmentError):
        align_predictive(TimeSeries(np.ones(30)), TimeSeries(np.ones(31)))


def test_period_mismatch():
    with pytest.raises(AlignmentError):
        align_predictive(TimeSeries(np.ones(30), period=192601), TimeSeries(np.ones(30), period=192602))


def test_floor_enforced():
    with pytest.raises(SampleTooSmallError):
        align_predictive(TimeSeries(np.ones(MIN_T)), TimeSeries(np.arange(MIN_T, dtype=float)))
    data = align_predictive(TimeSeries(np.ones(5)), TimeSeries(np.arange(5.0)), enforce_floor=False)
    assert data.T == 4


def test_non_finite_rejected():
    with pytest.raises(DomainError):
        TimeSeries(np.array([1.0, np.nan, 2.0]))


def test_values_are_read_only():
    s = TimeSeries(np.arange(5.0))
    with pytest.raises(ValueError):
        s.values[0] = 3.0


def test_broken_lag_structure():
    with pytest.raises(AlignmentError):
        PredictiveDataset(y=np.ones(3), x_lag=np.array([0.0, 1.0, 2.0]), x_level=np.array([5.0, 2.0, 3.0]),
                          enforce_floor=False)


def test_scaled_copy(dataset):
    scaled = dataset.scaled(y_scale=2.0, y_shift=1.0, x_scale=3.0)
    np.testing.assert_allclose(scaled.y, 2.0 * dataset.y + 1.0)
    np.testing.assert_allclose(scaled.x_lag, 3.0 * dataset.x_lag)


def test_demean():
    np.testing.assert_allclose(demean([1.0, 2.0, 3.0]), [-1.0, 0.0, 1.0])
    with pytest.raises(DomainError):
        demean([])
