from dataclasses import replace

import numpy as np
import pytest
from scipy.stats import kstest, norm

from core.exceptions import DegenerateSEError, DomainError
from core.fmtest import (
    BONFERRONI_ONLY,
    INTERSECTION,
    T_ONLY,
    FmPoint,
    TailDecision,
    bonferroni_scan,
    branch_for,
    fm_point,
    gamma1_ci,
    switching_test,
)
from core.longrun import LongRunEstimates, estimate_long_run
from core.quantreg import QuantileFit, solve_qr
from core.series import PredictiveDataset, align_predictive
from core.tables import C_MAX, SwitchThresholds
from core.unitroot import LocalToUnityCI
from tests.conftest import predictive_data


@pytest.fixture
def pieces(dataset):
    fit = solve_qr(dataset, 0.5)
    lr = estimate_long_run(fit, dataset)
    return dataset, fit, lr


def ci(lo, hi, alpha1=0.3):
    return LocalToUnityCI(c_lower=lo, c_upper=hi, alpha1=alpha1)


def test_no_correction_without_endogeneity(pieces):
    data, fit, lr = pieces
    point = fm_point(fit, data, replace(lr, delta_tau=0.0), -10.0)
    assert point.gamma1_plus == fit.gamma1
    xm = data.x_lag - data.x_lag.mean()
    assert point.se_plus == pytest.approx(lr.omega_psi / fit.f_hat / np.sqrt(xm @ xm))


def test_fm_statistic_is_affine_in_c_star(pieces):
    data, fit, lr = pieces
    t = [fm_point(fit, data, lr, c).t_plus for c in (-30.0, -20.0, -10.0)]
    assert t[1] == pytest.approx(0.5 * (t[0] + t[2]))


def test_perfect_correlation_is_degenerate(pieces):
    data, fit, lr = pieces
    with pytest.raises(DegenerateSEError):
        fm_point(fit, data, replace(lr, delta_tau=-1.0), 0.0)
    with pytest.raises(DegenerateSEError):
        FmPoint(c_star=0.0, gamma1_plus=1.0, se_plus=0.0)


def test_scan_grid(pieces):
    data, fit, lr = pieces
    points = bonferroni_scan(fit, data, lr, ci(-20.0, -17.9), grid_step=0.25)
    grid = np.array([p.c_star for p in points])
    assert grid[0] == -20.0 and grid[-1] == pytest.approx(-17.9)
    assert np.all(np.diff(grid) <= 0.25 + 1e-12)


def test_scan_caps_explosive_end(pieces):
    data, fit, lr = pieces
    points = bonferroni_scan(fit, data, lr, ci(0.0, 30.0), grid_step=1.0)
    assert points[-1].c_star == C_MAX
    assert len(bonferroni_scan(fit, data, lr, ci(-5.0, -5.0))) == 1
    with pytest.raises(DomainError):
        bonferroni_scan(fit, data, lr, ci(-5.0, 0.0), grid_step=0.0)


def test_extreme_sits_at_an_endpoint(pieces):
    data, fit, lr = pieces
    points = bonferroni_scan(fit, data, lr, ci(-60.0, -5.0))
    t = [p.t_plus for p in points]
    assert min(t) == pytest.approx(min(t[0], t[-1]))
    assert max(t) == pytest.approx(max(t[0], t[-1]))


def test_branch_rule():
    assert branch_for(ci(-50.0, 0.0), -90.0) == BONFERRONI_ONLY
    assert branch_for(ci(-200.0, -120.0), -90.0) == T_ONLY
    assert branch_for(ci(-120.0, -50.0), -90.0) == INTERSECTION


def decision(branch, reject_fm, reject_t, points=(), t_critical=1.9, fm_critical=1.645, tail="right"):
    return TailDecision(
        tail=tail, branch=branch, alpha1=0.3, ci_c=ci(-10.0, 0.0), t_critical=t_critical,
        fm_critical=fm_critical, fm_extreme=0.0, reject_fm=reject_fm, reject_t=reject_t, points=points,
    )


def test_tail_reject_follows_branch():
    assert decision(BONFERRONI_ONLY, True, False).reject
    assert not decision(T_ONLY, True, False).reject
    assert decision(T_ONLY, False, True).reject
    assert not decision(INTERSECTION, True, False).reject
    assert decision(INTERSECTION, True, True).reject


def test_gamma1_bounds_by_branch():
    fit = type("Fit", (), {"gamma1": 1.0})()
    hac = type("Hac", (), {"se": 0.1})()
    pts = (FmPoint(-10.0, 0.8, 0.2), FmPoint(0.0, 1.2, 0.2))
    z = 1.645
    right = decision(BONFERRONI_ONLY, False, False, pts, t_critical=2.0, fm_critical=z)
    left = decision(T_ONLY, False, False, pts, t_critical=-z, fm_critical=-z, tail="left")
    lower, upper = gamma1_ci(fit, hac, right, left)
    assert lower == pytest.approx(0.8 - z * 0.2)
    assert upper == pytest.approx(1.0 + z * 0.1)

    right = decision(INTERSECTION, False, False, pts, t_critical=2.0, fm_critical=z)
    lower, _ = gamma1_ci(fit, hac, right, left)
    assert lower == pytest.approx(min(0.8 - z * 0.2, 1.0 - 2.0 * 0.1))


def test_switching_test_structure(dataset, table_set):
    result = switching_test(dataset, 0.5, table_set)
    assert not (result.reject_right and result.reject_left)
    assert result.gamma1_lower <= result.gamma1_upper
    assert result.critical_right == pytest.approx(0.5 * (1.852 + 1.877))
    assert result.left.t_critical == pytest.approx(-norm.ppf(0.95))
    assert result.right.ci_c.alpha1 == result.right.alpha1
    assert set(result.branch) == {"right", "left"}
    assert result.bonferroni_points == result.right.points
    assert result.unit_root.T == dataset.T + 1


@pytest.mark.parametrize("gamma1, side", [(0.5, "right"), (-0.5, "left")])
def test_stationary_predictor_uses_plain_t(table_set, gamma1, side):
    y, x = predictive_data(T=1000, phi=0.5, delta=-0.3, gamma1=gamma1, seed=11)
    result = switching_test(align_predictive(y, x), 0.5, table_set)
    assert result.branch == {"right": T_ONLY, "left": T_ONLY}
    assert result.reject_right == (side == "right")
    assert result.reject_left == (side == "left")
    assert any("clamped" in note for note in result.notes)


def test_conflict_suppresses_both_tails(dataset, table_set):
    result = replace(switching_test(dataset, 0.5, table_set), conflict=True)
    assert not result.reject_right and not result.reject_left and not result.reject_two_sided


def test_alpha2_must_be_a_level(dataset, table_set):
    with pytest.raises(DomainError):
        switching_test(dataset, 0.5, table_set, SwitchThresholds(), alpha2=1.5)


def hand_pieces(delta=-0.6):
    # x = 1, 2, 3, 4, 6 so that x_lag has sum of squared deviations 5
    data = PredictiveDataset(
        y=np.zeros(4), x_lag=np.array([1.0, 2.0, 3.0, 4.0]), x_level=np.array([2.0, 3.0, 4.0, 6.0]),
        enforce_floor=False,
    )
    fit = QuantileFit(tau=0.5, gamma0=0.0, gamma1=1.0, residuals=np.zeros(4), psi=np.zeros(4),
                      f_hat=0.5, bandwidth_h=1.0)
    lr = LongRunEstimates(omega_psi2=0.25, omega_psi_v=0.5 * 2.0 * delta, omega_v2=4.0,
                          delta_tau=delta, lambda_vv=0.25)
    return data, fit, lr


def test_fm_point_hand_evaluated():
    data, fit, lr = hand_pieces()
    # c* = -4 gives phi = 0; deviation = 6.5 - 4 * 0.25 = 5.5
    # correction = (0.5 / 2) * (-0.6) / (0.5 * 5) * 5.5 = -0.33
    point = fm_point(fit, data, lr, -4.0)
    assert point.gamma1_plus == pytest.approx(1.33)
    assert point.se_plus == pytest.approx(0.8 / np.sqrt(5.0))
    assert point.t_plus == pytest.approx(1.33 * np.sqrt(5.0) / 0.8)


def test_correction_direction_follows_delta():
    data, fit, lr = hand_pieces(-0.6)
    neg = fm_point(fit, data, lr, -4.0)
    pos = fm_point(fit, data, replace(lr, delta_tau=0.6), -4.0)
    # positive deviation with negative delta pushes the estimate up
    assert neg.gamma1_plus > fit.gamma1 > pos.gamma1_plus
    assert neg.gamma1_plus - fit.gamma1 == pytest.approx(fit.gamma1 - pos.gamma1_plus)
    # with delta < 0 a larger c* means less mean reversion removed, so a smaller estimate
    grid = [fm_point(fit, data, lr, c).gamma1_plus for c in (-8.0, -4.0, 0.0)]
    assert grid[0] > grid[1] > grid[2]


@pytest.mark.parametrize("delta", [0.0, -0.3, -0.8, 0.95])
def test_se_scales_with_conditional_variance(delta):
    data, fit, lr = hand_pieces()
    base = fm_point(fit, data, replace(lr, delta_tau=0.0), -4.0).se_plus
    point = fm_point(fit, data, replace(lr, delta_tau=delta), -4.0)
    assert point.se_plus == pytest.approx(base * np.sqrt(1.0 - delta ** 2))


@pytest.mark.slow
def test_fm_statistic_is_standard_normal_under_the_null():
    T, c = 400, -10.0
    stats = []
    for seed in range(400):
        y, x = predictive_data(T=T, phi=1.0 + c / T, delta=-0.9, gamma1=0.0, seed=1000 + seed)
        data = align_predictive(y, x)
        fit = solve_qr(data, 0.5)
        lr = estimate_long_run(fit, data)
        stats.append(fm_point(fit, data, lr, c).t_plus)
    stats = np.array(stats)
    assert abs(stats.mean()) < 0.2
    assert 0.8 < stats.std() < 1.25
    assert np.mean(np.abs(stats) > norm.ppf(0.975)) < 0.1
    assert kstest(stats, "norm").pvalue > 0.001
