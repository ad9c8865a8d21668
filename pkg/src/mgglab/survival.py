"""Empirical survival curves t -> P[T >= t] with honest censoring."""

import io
from dataclasses import dataclass, field

import numpy as np

from .stats import wilson_interval


@dataclass
class SurvivalCurve:
    """Tail estimate on the integer grid t = 0..t_max.

    ``survivors[t]`` counts trials with T >= t; trials censored at the
    horizon stay in the survivor count at every t.  ``resampled`` counts
    discarded-and-redrawn trials (broadcast's empty-ensemble rule).
    """

    t: np.ndarray
    trials: int
    survivors: np.ndarray
    estimate: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    censored: int
    resampled: int = 0

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.int64)
        self.survivors = np.asarray(self.survivors, dtype=np.int64)
        self.estimate = np.asarray(self.estimate, dtype=np.float64)
        if np.any(self.estimate[:-1] < self.estimate[1:] - 1e-12):
            raise ValueError("survival estimate must be non-increasing")
        if np.any(self.estimate < 0) or np.any(self.estimate > 1):
            raise ValueError("survival estimate must lie in [0, 1]")
        if np.any(self.survivors > self.trials):
            raise ValueError("survivors cannot exceed trials")

    @property
    def t_max(self) -> int:
        return int(self.t[-1])

    def neglog(self) -> np.ndarray:
        """-log estimate with zeros mapped to +inf (excluded from fits)."""
        out = np.full(len(self.t), np.inf)
        pos = self.estimate > 0
        out[pos] = -np.log(self.estimate[pos])
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,trials,survivors,estimate,ci_low,ci_high,censored\n")
        for i in range(len(self.t)):
            cens = self.censored if self.t[i] == self.t_max else 0
            buf.write(f"{self.t[i]},{self.trials},{self.survivors[i]},"
                      f"{float(self.estimate[i])!r},{float(self.ci_low[i])!r},"
                      f"{float(self.ci_high[i])!r},{cens}\n")
        return buf.getvalue()


def from_event_times(times: np.ndarray, t_max: int, trials: int = None,
                     resampled: int = 0) -> SurvivalCurve:
    """Build a curve from per-trial event steps.

    ``times[j]`` is the trial's event step, recorded as t_max when the
    event did not occur before the horizon (censored).
    """
    times = np.asarray(times, dtype=np.int64)
    if trials is None:
        trials = len(times)
    if len(times) != trials:
        raise ValueError("times must have one entry per trial")
    grid = np.arange(t_max + 1, dtype=np.int64)
    # survivors at t: trials with T >= t
    events_before = np.searchsorted(np.sort(times), grid, side="left")
    survivors = trials - events_before
    censored = int(np.count_nonzero(times >= t_max))
    est = survivors / trials
    lo = np.empty_like(est)
    hi = np.empty_like(est)
    for i in range(len(grid)):
        lo[i], hi[i] = wilson_interval(int(survivors[i]), trials)
    return SurvivalCurve(grid, trials, survivors, est, lo, hi, censored,
                         resampled=resampled)


def from_neglog(neglog: np.ndarray, trials: int, survivors: np.ndarray,
                neglog_low: np.ndarray, neglog_high: np.ndarray,
                censored: int = 0) -> SurvivalCurve:
    """Curve whose estimate comes from an identity -log S(t) = value(t).

    Used by the single-node estimators where S itself is far below the
    Monte Carlo floor: estimate = exp(-neglog), bands propagated from
    the identity's own confidence limits.
    """
    neglog = np.asarray(neglog, dtype=np.float64)
    grid = np.arange(len(neglog), dtype=np.int64)
    est = np.exp(-neglog)
    return SurvivalCurve(grid, trials, survivors, est,
                         np.exp(-np.asarray(neglog_high, dtype=np.float64)),
                         np.exp(-np.asarray(neglog_low, dtype=np.float64)),
                         censored)
