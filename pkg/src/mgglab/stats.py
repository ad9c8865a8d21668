"""Tail fitting and concentration-bound utilities.

Fits are ordinary least squares of -log(survival) against a coordinate
transform of t; thresholds on fit quality live with the callers, this
module only measures.  The concentration bounds are closed-form Poisson
Chernoff and Gaussian tail inequalities plus exact-tail oracles to
check them against.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps


class FitUnavailableError(ValueError):
    pass


class InvalidBoundArgError(ValueError):
    pass


TRANSFORMS = ("t", "t/logt", "power")


def transform_values(t: np.ndarray, transform: str, exponent: float = None) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    if transform == "t":
        return t
    if transform == "t/logt":
        out = np.full(len(t), np.nan)
        ok = t > 1
        out[ok] = t[ok] / np.log(t[ok])
        return out
    if transform == "power":
        if exponent is None:
            raise ValueError("power transform needs an exponent")
        return t ** exponent
    raise ValueError(f"transform must be one of {TRANSFORMS}, got {transform!r}")


@dataclass
class TailFit:
    transform: str
    exponent: float
    slope: float
    intercept: float
    r_squared: float
    residuals: np.ndarray
    t_lo: int
    t_hi: int
    n_points: int

    def to_dict(self) -> dict:
        return {
            "transform": self.transform,
            "exponent": self.exponent,
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "t_lo": self.t_lo,
            "t_hi": self.t_hi,
            "n_points": self.n_points,
        }


def fit_line(x: np.ndarray, y: np.ndarray):
    """OLS slope, intercept, R^2 and residuals."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(x)
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0:
        raise FitUnavailableError("degenerate abscissa")
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = ym - slope * xm
    pred = slope * x + intercept
    resid = y - pred
    syy = float(np.sum((y - ym) ** 2))
    r2 = 1.0 if syy == 0 else 1.0 - float(np.sum(resid**2)) / syy
    return slope, intercept, r2, resid


def fit_tail(curve, transform: str, exponent: float = None,
             t_lo: int = None, t_hi: int = None,
             min_survivors: int = 50) -> TailFit:
    """Fit -log(estimate) against transform(t) over the usable range.

    A point is usable when it lies in [t_lo, t_hi], its estimate is
    strictly positive (zeros are excluded, never clamped), its survivor
    count meets min_survivors, and the transform is defined there.
    """
    t = curve.t
    neglog = curve.neglog()
    x = transform_values(t, transform, exponent)
    ok = np.isfinite(neglog) & np.isfinite(x) & (curve.survivors >= min_survivors)
    if t_lo is not None:
        ok &= t >= t_lo
    if t_hi is not None:
        ok &= t <= t_hi
    if int(ok.sum()) < 5:
        raise FitUnavailableError(
            f"only {int(ok.sum())} usable points for transform {transform!r}")
    slope, intercept, r2, resid = fit_line(x[ok], neglog[ok])
    used = t[ok]
    return TailFit(transform, exponent if exponent is not None else 1.0,
                   slope, intercept, r2, resid,
                   int(used.min()), int(used.max()), int(ok.sum()))


def wilson_interval(successes: int, trials: int, confidence: float = 0.95):
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    z = sps.norm.ppf(0.5 + confidence / 2.0)
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return lo, hi


def poisson_chernoff(lam: float, eps: float, side: str) -> float:
    """Chernoff bound for a Poisson(lam) variable P.

    upper: Pr[P >= (1+eps) lam] <= exp(-lam eps^2 (1 - eps/3) / 2)
    lower: Pr[P <= (1-eps) lam] <= exp(-lam eps^2 / 2)
    """
    if not 0 < eps < 1:
        raise InvalidBoundArgError(f"eps must be in (0, 1), got {eps}")
    if lam <= 0:
        raise InvalidBoundArgError(f"lam must be > 0, got {lam}")
    if side == "upper":
        return math.exp(-lam * eps * eps * (1 - eps / 3) / 2)
    if side == "lower":
        return math.exp(-lam * eps * eps / 2)
    raise ValueError(f"side must be 'upper' or 'lower', got {side!r}")


def poisson_tail_exact(lam: float, eps: float, side: str) -> float:
    """Exact tail the Chernoff bound dominates, via the Poisson CDF."""
    if side == "upper":
        k = math.ceil((1 + eps) * lam)
        return float(sps.poisson.sf(k - 1, lam))
    if side == "lower":
        k = math.floor((1 - eps) * lam)
        return float(sps.poisson.cdf(k, lam))
    raise ValueError(f"side must be 'upper' or 'lower', got {side!r}")


def normal_tail_bound(sigma: float, x: float) -> float:
    """Pr[N(0, sigma^2) >= x] <= (sigma / (sqrt(2 pi) x)) exp(-x^2 / (2 sigma^2))."""
    if x <= 0:
        raise InvalidBoundArgError(f"x must be > 0, got {x}")
    if sigma <= 0:
        raise InvalidBoundArgError(f"sigma must be > 0, got {sigma}")
    return sigma / (math.sqrt(2 * math.pi) * x) * math.exp(-x * x / (2 * sigma * sigma))


def normal_tail_exact(sigma: float, x: float) -> float:
    return 0.5 * math.erfc(x / (sigma * math.sqrt(2)))
