import math

import numpy as np
import pytest

from mgglab.domain import InvalidIntensityError, RngPolicy, SimDomain
from mgglab.pointprocess import (IncompatibleEnsemblesError, IntensityField,
                                 InvalidBoundError, NodeEnsemble, make_ids,
                                 sample_ppp, sample_ppp_domain,
                                 sample_nonhomogeneous, superpose, thin)

POL = RngPolicy(101)


def test_ids_unique_across_trials():
    a = make_ids(0, 100)
    b = make_ids(1, 100)
    assert len(np.intersect1d(a, b)) == 0


def test_duplicate_ids_rejected():
    with pytest.raises(ValueError):
        NodeEnsemble(np.zeros((2, 2)), np.array([5, 5]))


def test_negative_intensity_rejected():
    with pytest.raises(InvalidIntensityError):
        sample_ppp(-0.5, [0, 0], [1, 1], POL.stream("pp", 0))


def test_void_probability():
    # P[no point in a set of volume v] = exp(-lam v)
    lam, v = 2.0, 0.7
    side = v ** 0.5
    rng = POL.stream("void", 0)
    empties = sum(
        len(sample_ppp(lam, [0, 0], [side, side], rng)) == 0
        for _ in range(20000))
    p = empties / 20000
    expect = math.exp(-lam * v)
    assert abs(p - expect) <= 3 * math.sqrt(expect * (1 - expect) / 20000)


def test_counts_in_disjoint_regions_independent():
    rng = POL.stream("indep", 0)
    n = 5000
    left = np.empty(n)
    right = np.empty(n)
    for i in range(n):
        ens = sample_ppp(3.0, [0, 0], [2, 1], rng)
        left[i] = np.count_nonzero(ens.positions[:, 0] < 1.0)
        right[i] = len(ens) - left[i]
    corr = np.corrcoef(left, right)[0, 1]
    assert abs(corr) <= 3.0 / math.sqrt(n)
    # Poisson marginals: mean == variance == lam * vol
    assert left.mean() == pytest.approx(3.0, abs=3 * math.sqrt(3.0 / n))
    assert left.var() == pytest.approx(3.0, rel=0.1)


def test_thin_partition_and_intensity():
    rng = POL.stream("thin", 0)
    ens = sample_ppp(10.0, [0, 0], [10, 10], rng)
    kept, deleted = thin(ens, 0.3, rng)
    assert len(kept) + len(deleted) == len(ens)
    merged = np.sort(np.concatenate([kept.ids, deleted.ids]))
    assert np.array_equal(merged, np.sort(ens.ids))
    # deletion probability respected within binomial noise
    frac = len(deleted) / len(ens)
    assert abs(frac - 0.3) <= 3 * math.sqrt(0.3 * 0.7 / len(ens))


def test_superpose_checks_and_union():
    rng = POL.stream("sup", 0)
    a = sample_ppp(1.0, [0, 0], [5, 5], rng, trial=0)
    b = sample_ppp(2.0, [0, 0], [5, 5], rng, trial=1)
    u = superpose(a, b)
    assert len(u) == len(a) + len(b)
    late = NodeEnsemble(b.positions, b.ids, timestamp=3)
    with pytest.raises(IncompatibleEnsemblesError):
        superpose(a, late)


def test_nonhomogeneous_sampling_mean_count():
    # nu(x, y) = 4x on the unit square; total mass 2
    field = IntensityField(lambda p: 4.0 * p[:, 0], [0, 0], [1, 1], 4.0)
    rng = POL.stream("nonhom", 0)
    counts = np.array([len(sample_nonhomogeneous(field, rng))
                       for _ in range(4000)])
    assert counts.mean() == pytest.approx(2.0, abs=3 * math.sqrt(2.0 / 4000))
    # and the x-marginal is tilted toward 1
    xs = np.concatenate([sample_nonhomogeneous(field, rng).positions[:, 0]
                         for _ in range(500)])
    assert xs.mean() == pytest.approx(2.0 / 3.0, abs=0.02)


def test_nonhomogeneous_bound_enforced():
    field = IntensityField(lambda p: 10.0 * np.ones(len(p)), [0, 0], [1, 1], 4.0)
    with pytest.raises(InvalidBoundError):
        sample_nonhomogeneous(field, POL.stream("bad", 0))


def test_ensemble_csv_shape():
    ens = NodeEnsemble(np.array([[1.5, -2.0]]), np.array([7]))
    lines = ens.to_csv().strip().split("\n")
    assert lines[0] == "id,x0,x1"
    assert lines[1] == "7,1.5,-2.0"


def test_sample_on_domain():
    dom = SimDomain(d=3, kind="torus", side=4.0)
    ens = sample_ppp_domain(2.0, dom, POL.stream("dom", 0))
    assert ens.d == 3
    assert np.all(ens.positions >= 0) and np.all(ens.positions < 4.0)
