import math

import numpy as np
import pytest

from mgglab.stats import (FitUnavailableError, InvalidBoundArgError,
                          fit_line, fit_tail, normal_tail_bound,
                          normal_tail_exact, poisson_chernoff,
                          poisson_tail_exact, transform_values,
                          wilson_interval)
from mgglab.survival import SurvivalCurve


def _curve_from_neglog(nl, survivors=None):
    nl = np.asarray(nl, dtype=float)
    n = len(nl)
    if survivors is None:
        survivors = np.full(n, 1000)
    est = np.exp(-nl)
    return SurvivalCurve(np.arange(n), 1000, survivors, est,
                         est * 0.9, np.minimum(est * 1.1, 1.0), 0)


def test_fit_line_exact_on_linear_data():
    x = np.arange(10, dtype=float)
    slope, intercept, r2, resid = fit_line(x, 3.0 * x - 2.0)
    assert slope == pytest.approx(3.0)
    assert intercept == pytest.approx(-2.0)
    assert r2 == pytest.approx(1.0)
    assert np.allclose(resid, 0.0)


def test_fit_line_degenerate():
    with pytest.raises(FitUnavailableError):
        fit_line(np.ones(5), np.arange(5.0))


def test_fit_tail_recovers_synthetic_slope():
    t = np.arange(30)
    nl = 0.7 * t + 0.1
    nl[0] = 0.0  # survival 1 at t=0
    fit = fit_tail(_curve_from_neglog(nl), "t", t_lo=1, min_survivors=0)
    assert fit.slope == pytest.approx(0.7, rel=1e-12)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.n_points == 29


def test_fit_tail_affine_equivariance():
    t = np.arange(25)
    nl = 0.4 * t
    base = fit_tail(_curve_from_neglog(nl), "t", t_lo=1, min_survivors=0)
    shifted = fit_tail(_curve_from_neglog(nl + 2.0), "t", t_lo=1,
                       min_survivors=0)
    assert shifted.slope == pytest.approx(base.slope)
    assert shifted.intercept == pytest.approx(base.intercept + 2.0)


def test_fit_tail_t_over_logt():
    # t/log t only increases from t=3 on; build a valid monotone curve
    t = np.arange(40)
    x = np.zeros_like(t, dtype=float)
    x[3:] = t[3:] / np.log(t[3:])
    nl = 1.3 * x
    fit = fit_tail(_curve_from_neglog(nl), "t/logt", t_lo=3, min_survivors=0)
    assert fit.slope == pytest.approx(1.3, rel=1e-9)
    assert fit.t_lo >= 3


def test_fit_tail_excludes_zero_survival_and_thin_points():
    t = np.arange(20)
    nl = 0.5 * t.astype(float)
    nl[15:] = np.inf  # dead survival, excluded not clamped
    survivors = np.full(20, 1000)
    survivors[10:] = 10  # below the 50-survivor rule
    est = np.where(np.isinf(nl), 0.0, np.exp(-nl))
    curve = SurvivalCurve(t, 1000, survivors, est,
                          np.zeros(20), np.ones(20), 0)
    fit = fit_tail(curve, "t", t_lo=1)
    assert fit.t_hi == 9
    assert fit.n_points == 9


def test_fit_tail_needs_five_points():
    with pytest.raises(FitUnavailableError):
        fit_tail(_curve_from_neglog([0.0, 1.0, 2.0, 3.0]), "t", min_survivors=0)


def test_transform_values_validation():
    with pytest.raises(ValueError):
        transform_values(np.arange(3), "weird")
    with pytest.raises(ValueError):
        transform_values(np.arange(3), "power")
    assert np.allclose(transform_values(np.array([4.0]), "power", 0.5), 2.0)


def test_wilson_contains_point_estimate():
    for k, n in [(0, 10), (1, 10), (5, 10), (10, 10), (37, 1000)]:
        lo, hi = wilson_interval(k, n)
        assert lo <= k / n <= hi
        assert 0.0 <= lo <= hi <= 1.0
    with pytest.raises(ValueError):
        wilson_interval(5, 0)
    with pytest.raises(ValueError):
        wilson_interval(11, 10)


def test_poisson_bounds_dominate_exact_on_grid():
    for lam in (10.0, 100.0, 1000.0):
        for eps in (0.05, 0.2, 0.5):
            for side in ("upper", "lower"):
                bound = poisson_chernoff(lam, eps, side)
                exact = poisson_tail_exact(lam, eps, side)
                assert exact <= bound, (lam, eps, side)


def test_poisson_bound_argument_checks():
    with pytest.raises(InvalidBoundArgError):
        poisson_chernoff(10.0, 1.5, "upper")
    with pytest.raises(InvalidBoundArgError):
        poisson_chernoff(-1.0, 0.2, "upper")
    with pytest.raises(ValueError):
        poisson_chernoff(10.0, 0.2, "middle")


def test_normal_bound_dominates_exact():
    for ratio in (0.5, 1.0, 2.0, 4.0):
        assert normal_tail_exact(1.0, ratio) <= normal_tail_bound(1.0, ratio)
    # scale invariance in x/sigma
    assert normal_tail_bound(2.0, 3.0) == pytest.approx(
        normal_tail_bound(1.0, 1.5))
    with pytest.raises(InvalidBoundArgError):
        normal_tail_bound(1.0, 0.0)


def test_normal_exact_value():
    assert normal_tail_exact(1.0, 0.0) == pytest.approx(0.5)
    assert normal_tail_exact(1.0, 1.96) == pytest.approx(0.025, abs=1e-3)
