"""Broadcast-time experiments on a torus.

One uniformly chosen originator knows the message at step 0.  Within a
step, the message instantly reaches every node sharing a connected
component with an informed node (relaying is much faster than motion).
T_bc is the first step after whose closure all nodes are informed.
"""

import math
from dataclasses import dataclass

import numpy as np

from ..domain import ModelParams, RngPolicy, SimDomain
from ..kernels import impl
from ..survival import SurvivalCurve, from_event_times


@dataclass(frozen=True)
class BroadcastTrialSpec:
    params: ModelParams
    n: int                      # expected node count; torus volume = n / lambda
    t_max: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("broadcast needs an expected node count >= 2")

    @property
    def side(self) -> float:
        return (self.n / self.params.lam) ** (1.0 / self.params.d)


def _trial_tbc(spec: BroadcastTrialSpec, rng: np.random.Generator):
    """One broadcast trial; returns (T_bc or t_max if censored, resamples)."""
    p = spec.params
    side = spec.side
    resamples = 0
    while True:
        n = int(rng.poisson(p.lam * side**p.d))
        if n > 0:
            break
        resamples += 1
    pos = rng.uniform(0.0, side, size=(n, p.d))
    informed = np.zeros(n, dtype=bool)
    informed[int(rng.integers(n))] = True
    for i in range(spec.t_max):
        labels = impl.component_labels(np.ascontiguousarray(pos),
                                       float(p.r), float(side), True)
        informed |= np.isin(labels, labels[informed])
        if informed.all():
            return i, resamples
        pos = np.mod(pos + p.s * rng.standard_normal((n, p.d)), side)
    return spec.t_max, resamples


def run_broadcast(spec: BroadcastTrialSpec, trials: int, policy: RngPolicy,
                  experiment: str = "broadcast", threads: int = 1) -> SurvivalCurve:
    from ..util import parallel_map_ordered

    def one_trial(trial):
        return _trial_tbc(spec, policy.stream(experiment, trial))

    results = parallel_map_ordered(one_trial, range(trials), threads)
    times = np.array([t for t, _ in results], dtype=np.int64)
    resampled = sum(rs for _, rs in results)
    return from_event_times(times, spec.t_max, resampled=resampled)


def giant_overlap_frequency(spec: BroadcastTrialSpec, trials: int, steps: int,
                            policy: RngPolicy,
                            experiment: str = "broadcast-overlap") -> float:
    """Fraction of consecutive steps whose giant components share a node.

    Sharing is by node identity (ids are stable across motion).
    """
    share = 0
    total = 0
    for trial in range(trials):
        rng = policy.stream(experiment, trial)
        p = spec.params
        side = spec.side
        n = int(rng.poisson(p.lam * side**p.d))
        if n == 0:
            continue
        pos = rng.uniform(0.0, side, size=(n, p.d))
        prev_members = None
        for i in range(steps):
            labels = impl.component_labels(np.ascontiguousarray(pos),
                                           float(p.r), float(side), True)
            lab, cnt = np.unique(labels, return_counts=True)
            giant = lab[np.argmax(cnt)]
            members = np.nonzero(labels == giant)[0]
            if prev_members is not None:
                total += 1
                if np.intersect1d(members, prev_members).size > 0:
                    share += 1
            prev_members = members
            pos = np.mod(pos + p.s * rng.standard_normal((n, p.d)), side)
    return share / total if total else float("nan")
