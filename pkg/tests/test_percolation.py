import warnings

import numpy as np
import pytest

from mgglab.domain import ModelParams, RngPolicy
from mgglab.experiments import PercolationTrialSpec, run_percolation

POL = RngPolicy(505)


def _spec(lam=6.0, side=15.0, t_max=10, **kw):
    return PercolationTrialSpec(ModelParams(lam=lam, s=1.0, d=2), side,
                                t_max, **kw)


def test_spec_validation():
    with pytest.raises(ValueError):
        _spec(subcube_side=14.5)  # no slack r on the torus
    with pytest.raises(ValueError):
        _spec(subcube_side=1.0)   # <= 2r, single nodes would cross
    with pytest.raises(ValueError):
        _spec(proxy="magic")
    with pytest.raises(ValueError):
        _spec(obs_every=0)
    assert _spec().subcube_side == pytest.approx(5.0)


def test_subcritical_warning():
    with pytest.warns(UserWarning):
        run_percolation(_spec(lam=4.0, t_max=2), 2, POL)


def test_pathwise_domination_small_run():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        perc, det, record = run_percolation(_spec(t_max=15), 300, POL,
                                            threads=4)
    assert record["domination_holds"]
    assert np.all(record["t_det"] <= record["t_perc"])
    # identical trials, so the curves are coupled pointwise
    assert np.all(perc.estimate >= det.estimate)
    assert np.all(perc.survivors >= det.survivors)


def test_threads_do_not_change_results():
    a = run_percolation(_spec(t_max=5), 100, POL, threads=1)
    b = run_percolation(_spec(t_max=5), 100, POL, threads=8)
    assert np.array_equal(a[0].survivors, b[0].survivors)
    assert np.array_equal(a[1].survivors, b[1].survivors)


def test_giant_proxy_runs_and_dominates():
    perc, det, record = run_percolation(_spec(t_max=10, proxy="giant"),
                                        200, POL)
    assert record["domination_holds"]


def test_denser_graphs_percolate_sooner():
    sparse, _, _ = run_percolation(_spec(lam=5.0, t_max=10), 400, POL,
                                   experiment="dens-a", threads=4)
    dense, _, _ = run_percolation(_spec(lam=7.0, t_max=10), 400, POL,
                                  experiment="dens-b", threads=4)
    assert dense.estimate[3] < sparse.estimate[3]


def test_observation_stride():
    # with obs_every=3, T_perc can only be observed at multiples of 3
    perc, _, record = run_percolation(_spec(t_max=9, obs_every=3), 100, POL,
                                      experiment="stride")
    fired = record["t_perc"][record["t_perc"] < 9]
    assert np.all(fired % 3 == 0)
