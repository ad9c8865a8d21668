"""Backend twin equality: the numba kernels must reproduce the pure-numpy
kernels bit for bit, since callers treat the backend choice as invisible."""

import numpy as np
import pytest

from mgglab.kernels import impl, nb, pure

RNG = np.random.default_rng(777)


def _points(n, d, side):
    return np.ascontiguousarray(RNG.uniform(0, side, (n, d)))


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("torus", [False, True])
@pytest.mark.parametrize("n", [0, 1, 7, 60, 900])
def test_component_labels_twins(d, torus, n):
    side = 9.0
    pts = _points(n, d, side)
    a = pure.component_labels(pts, 0.6, side if torus else 0.0, torus)
    b = nb.component_labels(pts, 0.6, side if torus else 0.0, torus)
    assert np.array_equal(a, b)


def test_component_labels_are_canonical_min_index():
    pts = np.array([[0.0, 0.0], [0.5, 0.0], [5.0, 5.0], [1.0, 0.0]])
    for mod in (pure, nb):
        lab = mod.component_labels(np.ascontiguousarray(pts), 0.6, 0.0, False)
        assert lab.tolist() == [0, 0, 2, 0]


def test_component_labels_torus_seam():
    # neighbors across the wrap must connect
    pts = np.ascontiguousarray(np.array([[0.1, 4.0], [7.9, 4.0]]))
    for mod in (pure, nb):
        lab = mod.component_labels(pts, 0.5, 8.0, True)
        assert lab.tolist() == [0, 0]
        lab = mod.component_labels(pts, 0.1, 8.0, True)
        assert lab.tolist() == [0, 1]


def test_adjacency_radius_inclusive():
    pts = np.ascontiguousarray(np.array([[0.0, 0.0], [1.0, 0.0]]))
    for mod in (pure, nb):
        assert mod.component_labels(pts, 1.0, 0.0, False).tolist() == [0, 0]


@pytest.mark.parametrize("d", [1, 2, 3])
def test_first_hit_twins(d):
    n, t = 300, 25
    start = np.ascontiguousarray(RNG.uniform(-8, 8, (n, d)))
    disp = np.ascontiguousarray(RNG.standard_normal((n, t - 1, d)))
    traj = np.ascontiguousarray(np.cumsum(RNG.standard_normal((t, d)), axis=0))
    for killr in (np.full(t, np.inf),
                  0.6 + 6.0 * np.sqrt(np.arange(t - 1, -1, -1, dtype=float))):
        a = pure.first_hit(start, disp, traj, 0.6, killr)
        b = nb.first_hit(start, disp, traj, 0.6, killr)
        assert np.array_equal(a, b)


def test_first_hit_semantics():
    # one node that starts on the target: hit at step 0
    start = np.ascontiguousarray(np.array([[0.0, 0.0], [10.0, 0.0]]))
    disp = np.ascontiguousarray(np.zeros((2, 4, 2)))
    traj = np.ascontiguousarray(np.zeros((5, 2)))
    killr = np.full(5, np.inf)
    for mod in (pure, nb):
        fh = mod.first_hit(start, disp, traj, 0.5, killr)
        assert fh.tolist() == [0, 5]  # 5 == len(traj) means never


def test_early_kill_matches_no_kill_run():
    # killing at 6 sigma must not change any first-hit outcome here
    n, t, d = 4000, 20, 2
    start = np.ascontiguousarray(RNG.uniform(-20, 20, (n, d)))
    disp = np.ascontiguousarray(RNG.standard_normal((n, t - 1, d)))
    traj = np.ascontiguousarray(np.zeros((t, d)))
    killr = 0.5642 + 6.0 * np.sqrt(np.arange(t - 1, -1, -1, dtype=float))
    loose = pure.first_hit(start, disp, traj, 0.5642, np.full(t, np.inf))
    tight = pure.first_hit(start, disp, traj, 0.5642, killr)
    assert np.array_equal(loose, tight)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_hit_counts_twins(d):
    n, t = 250, 15
    start = np.ascontiguousarray(RNG.uniform(-5, 5, (n, d)))
    disp = np.ascontiguousarray(RNG.standard_normal((n, t - 1, d)))
    traj = np.ascontiguousarray(np.cumsum(RNG.standard_normal((t, d)), axis=0))
    a1, a2 = pure.hit_counts(start, disp, traj, 0.6)
    b1, b2 = nb.hit_counts(start, disp, traj, 0.6)
    assert np.array_equal(a1, b1)
    assert np.array_equal(a2, b2)
    assert a1.sum() == a2.sum()


@pytest.mark.parametrize("d", [2, 3])
def test_sausage_hits_twins(d):
    path = np.ascontiguousarray(np.cumsum(RNG.standard_normal((18, d)), axis=0))
    lo = path.min(axis=0) - 1.0
    hi = path.max(axis=0) + 1.0
    probes = np.ascontiguousarray(RNG.uniform(lo, hi, (3000, d)))
    a = pure.sausage_hits(path, probes, 0.62)
    b = nb.sausage_hits(path, probes, 0.62)
    assert a == b


def test_sausage_hits_against_direct_distances():
    path = np.ascontiguousarray(RNG.standard_normal((6, 2)))
    probes = np.ascontiguousarray(RNG.uniform(-3, 3, (500, 2)))
    direct = 0
    for p in probes:
        dmin = np.min(np.sqrt(np.sum((path - p) ** 2, axis=1)))
        direct += dmin <= 0.7
    for mod in (pure, nb):
        assert mod.sausage_hits(path, probes, 0.7) == direct


def test_active_backend_is_one_of_the_twins():
    assert impl in (pure, nb)
