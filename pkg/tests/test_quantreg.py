import itertools

import numpy as np
import pytest
from scipy.stats import norm

from core import streams
from core.exceptions import DomainError, RankDeficiencyError
from core.quantreg import (
    check_loss,
    density_at_zero,
    frisch_newton,
    psi_score,
    silverman_bandwidth,
    solve_qr,
    standard_t,
)
from core.series import PredictiveDataset


def vertex_oracle(X, y, tau):
    """Best objective over all lines through two observations"""
    best = np.inf
    for i, j in itertools.combinations(range(y.size), 2):
        A = X[[i, j]]
        if abs(np.linalg.det(A)) < 1e-12:
            continue
        coef = np.linalg.solve(A, y[[i, j]])
        best = min(best, float(np.sum(check_loss(y - X @ coef, tau))))
    return best


def random_instance(k, T):
    rng = streams.stream(7, 77, k)
    x = rng.standard_normal(T)
    y = 0.5 + x + rng.standard_t(3, T)
    return np.column_stack([np.ones(T), x]), y


def test_check_loss():
    assert check_loss(2.0, 0.3) == pytest.approx(0.6)
    assert check_loss(-2.0, 0.3) == pytest.approx(1.4)
    np.testing.assert_allclose(check_loss(np.array([0.0, 1.0, -1.0]), 0.5), [0.0, 0.5, 0.5])
    with pytest.raises(DomainError):
        check_loss(1.0, 1.0)


def test_psi_maps_exact_zero_to_tau():
    np.testing.assert_allclose(psi_score(np.array([-1.0, 0.0, 2.0]), 0.25), [-0.75, 0.25, 0.25])


@pytest.mark.parametrize("k", range(20))
def test_solver_matches_vertex_oracle(k):
    T = 15 + k
    tau = (0.1, 0.3, 0.5, 0.7, 0.9)[k % 5]
    X, y = random_instance(k, T)
    coef, _ = frisch_newton(X, y, tau)
    ours = float(np.sum(check_loss(y - X @ coef, tau)))
    oracle = vertex_oracle(X, y, tau)
    assert ours == pytest.approx(oracle, rel=1e-8, abs=1e-10)


@pytest.mark.slow
def test_solver_oracle_sweep():
    for k in range(500):
        rng = streams.stream(8, 88, k)
        T = int(rng.integers(5, 51))
        tau = float(rng.choice([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]))
        X, y = random_instance(1000 + k, T)
        coef, _ = frisch_newton(X, y, tau)
        ours = float(np.sum(check_loss(y - X @ coef, tau)))
        assert ours == pytest.approx(vertex_oracle(X, y, tau), rel=1e-8, abs=1e-10)


def test_median_recovers_line():
    rng = streams.stream(3, 33)
    T = 2000
    x = rng.standard_normal(T + 1)
    y = 1.0 + 2.0 * x[:-1] + rng.standard_normal(T)
    data = PredictiveDataset(y=y, x_lag=x[:-1], x_level=x[1:])
    fit = solve_qr(data, 0.5)
    assert fit.gamma0 == pytest.approx(1.0, abs=0.1)
    assert fit.gamma1 == pytest.approx(2.0, abs=0.1)
    assert fit.T == T
    assert np.isfinite(fit.objective)


def test_scale_equivariance(dataset):
    fit = solve_qr(dataset, 0.3)
    scaled = solve_qr(dataset.scaled(y_scale=3.0), 0.3)
    assert scaled.gamma1 == pytest.approx(3.0 * fit.gamma1, rel=1e-5, abs=1e-7)


def test_psi_and_residuals_are_read_only(dataset):
    fit = solve_qr(dataset, 0.5)
    with pytest.raises(ValueError):
        fit.psi[0] = 0.0


def test_constant_predictor_is_rank_deficient():
    data = PredictiveDataset(y=np.arange(30.0), x_lag=np.ones(30), x_level=np.ones(30))
    with pytest.raises(RankDeficiencyError):
        solve_qr(data, 0.5)


def test_silverman_bandwidth_formula():
    res = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    sd = np.std(res, ddof=1)
    iqr = np.percentile(res, 75) - np.percentile(res, 25)
    assert silverman_bandwidth(res) == pytest.approx(0.9 * min(sd, iqr / 1.34) * 5 ** -0.2)


def test_density_at_zero_of_standard_normal(rng):
    res = rng.standard_normal(20_000)
    h = silverman_bandwidth(res)
    assert density_at_zero(res, h) == pytest.approx(norm.pdf(0.0), abs=0.01)
    with pytest.raises(DomainError):
        density_at_zero(res, 0.0)


def test_standard_t_is_finite(dataset):
    fit = solve_qr(dataset, 0.5)
    assert np.isfinite(standard_t(fit, dataset))


def test_location_equivariance(dataset):
    fit = solve_qr(dataset, 0.3)
    shifted = solve_qr(dataset.scaled(y_shift=2.5), 0.3)
    assert shifted.gamma0 == pytest.approx(fit.gamma0 + 2.5, rel=1e-5, abs=1e-7)
    assert shifted.gamma1 == pytest.approx(fit.gamma1, rel=1e-5, abs=1e-7)


def test_regressor_scaling_equivariance(dataset):
    fit = solve_qr(dataset, 0.7)
    scaled = solve_qr(dataset.scaled(x_scale=4.0), 0.7)
    assert scaled.gamma1 == pytest.approx(fit.gamma1 / 4.0, rel=1e-5, abs=1e-7)
    assert scaled.gamma0 == pytest.approx(fit.gamma0, rel=1e-5, abs=1e-7)


@pytest.mark.parametrize("tau", [0.2, 0.5, 0.8])
def test_solution_satisfies_subgradient_condition(tau):
    X, y = random_instance(3, 40)
    coef, _ = frisch_newton(X, y, tau)
    res = y - X @ coef
    p = X.shape[1]
    basis = np.argsort(np.abs(res))[:p]
    free = np.setdiff1d(np.arange(y.size), basis)
    g = X[free].T @ (tau - (res[free] < 0))
    # weights on the interpolated observations must lie in [tau - 1, tau]
    v = np.linalg.solve(X[basis].T, -g)
    assert np.all(v >= tau - 1 - 1e-6)
    assert np.all(v <= tau + 1e-6)


def test_even_sample_median_takes_midpoint():
    coef, _ = frisch_newton(np.ones((4, 1)), np.array([1.0, 2.0, 3.0, 4.0]), 0.5)
    np.testing.assert_allclose(coef, [2.5], atol=1e-6)


def test_bandwidth_falls_back_when_iqr_is_zero(caplog):
    res = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0])
    with caplog.at_level("WARNING", logger="core.quantreg"):
        h = silverman_bandwidth(res)
    assert h == pytest.approx(0.9 * np.std(res, ddof=1) * 7 ** -0.2)
    assert "IQR" in caplog.text
