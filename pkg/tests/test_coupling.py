import math

import numpy as np
import pytest

from mgglab.coupling import (CouplingSpec, eq7_failure_bound, g_ball_integral,
                             g_density, lemma_psi_check,
                             percolation_step_coupled, psi, run_coupling,
                             sample_g, sample_residual)
from mgglab.domain import RngPolicy
from mgglab.pointprocess import NodeEnsemble, sample_ppp

POL = RngPolicy(707)

# the scale-condition advisories are expected for these configurations
pytestmark = pytest.mark.filterwarnings("ignore::UserWarning")

# small worked configuration: 10x10 cells of side 4 on Q_40
WORKED = CouplingSpec(K=40.0, K_prime=20.0, ell=4.0, beta=5.0, eps=0.5,
                      delta=1024, s=1.0, d=2)

# a configuration whose inner-ball mass is large enough that the final
# thinning is a genuine thinning (keep probability < 1)
FEASIBLE = CouplingSpec(K=180.0, K_prime=20.0, ell=4.0, beta=1.0, eps=0.5,
                        delta=1024, s=1.0, d=2)


def test_spec_validation():
    with pytest.raises(ValueError):
        CouplingSpec(K=10.0, K_prime=20.0, ell=1.0, beta=1.0, eps=0.5,
                     delta=4, s=1.0, d=2)
    with pytest.raises(ValueError):
        CouplingSpec(K=10.0, K_prime=5.0, ell=3.0, beta=1.0, eps=0.5,
                     delta=4, s=1.0, d=2)  # ell does not divide K
    with pytest.raises(ValueError):
        CouplingSpec(K=10.0, K_prime=5.0, ell=1.0, beta=1.0, eps=1.5,
                     delta=4, s=1.0, d=2)


def test_g_density_value():
    # closed-form spot value at the origin
    val = g_density(np.zeros(2), 1.0, 1.0, 4, 2)
    assert val == pytest.approx(1.0 / (8 * math.pi) * math.exp(-0.25),
                                rel=1e-9)
    assert val == pytest.approx(0.0309877, abs=5e-7)


def test_g_is_subdensity_of_both_transition_kernels():
    # g(z) <= min{f_Delta(y', y'+z), f_Delta(y, y'+z)} whenever
    # |y - y'| <= sqrt(d) ell
    rng = POL.stream("eq8", 0)
    ell, s, delta, d = 4.0, 1.0, 1024, 2
    a = math.sqrt(d) * ell
    var = s * s * delta
    y = rng.uniform(-20, 20, (10000, d))
    u = rng.standard_normal((10000, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    yp = y + u * rng.uniform(0, a, (10000, 1))
    z = rng.standard_normal((10000, d)) * math.sqrt(var) * 1.5

    def f(center, x):
        sq = np.sum((x - center) ** 2, axis=1)
        return (2 * math.pi * var) ** (-d / 2) * np.exp(-sq / (2 * var))

    g = g_density(z, ell, s, delta, d)
    assert np.all(g <= np.minimum(f(yp, yp + z), f(y, yp + z)) * (1 + 1e-12))


def test_g_total_mass_below_one_and_psi():
    total = g_ball_integral(np.inf, 4.0, 1.0, 1024, 2)
    assert 0 < total < 1
    assert psi(4.0, 1.0, 1024, 2) == pytest.approx(1 - total, abs=1e-12)
    # monotone in the radius
    assert g_ball_integral(10.0, 4.0, 1.0, 1024, 2) < g_ball_integral(
        50.0, 4.0, 1.0, 1024, 2) < total


def test_lemma_psi_check_worked_configuration_fails():
    # at delta = 1024 the g mass sits near radius s*sqrt(2*delta) ~ 45,
    # far outside B_10, so the inner-ball requirement cannot hold
    passes, margin, integral = lemma_psi_check(WORKED)
    assert not passes
    assert integral == pytest.approx(0.0452, abs=0.001)
    assert margin < 0


def test_lemma_psi_check_passes_with_wide_gap():
    passes, margin, integral = lemma_psi_check(FEASIBLE)
    assert passes
    assert integral >= 0.75


def test_sample_g_radial_law():
    # empirical CDF of |z| must match the g ball integral (normalized)
    rng = POL.stream("gsamp", 0)
    z = sample_g(4.0, 1.0, 1024, 2, rng, n=20000)
    norms = np.sqrt(np.sum(z * z, axis=1))
    total = g_ball_integral(np.inf, 4.0, 1.0, 1024, 2)
    for radius in (20.0, 40.0, 60.0):
        expect = g_ball_integral(radius, 4.0, 1.0, 1024, 2) / total
        emp = np.count_nonzero(norms <= radius) / len(norms)
        sigma = math.sqrt(expect * (1 - expect) / len(norms))
        assert abs(emp - expect) <= 4 * sigma, radius


def test_pair_mixture_reconstructs_brownian_marginal():
    # kept share g, thinned take the residual; the mixture must be the
    # plain delta-step Gaussian around y
    rng = POL.stream("mix", 0)
    ell, s, delta, d = 1.0, 1.0, 64, 2
    y = np.array([0.3, -0.2])
    yp = np.array([0.9, 0.5])  # within sqrt(2)*ell of y
    p_keep = 1.0 - psi(ell, s, delta, d)
    n = 20000
    xs = np.empty((n, d))
    kept = rng.random(n) < p_keep
    xs[kept] = yp + sample_g(ell, s, delta, d, rng, int(kept.sum()))
    for i in np.nonzero(~kept)[0]:
        xs[i] = sample_residual(y, yp, ell, s, delta, d, rng)
    sigma = s * math.sqrt(delta)
    centered = (xs - y) / sigma
    # first and second moments of a standard Gaussian
    assert np.abs(centered.mean(axis=0)).max() < 4 / math.sqrt(n)
    assert centered.std(axis=0) == pytest.approx(1.0, abs=0.02)
    # tail mass in each coordinate
    frac = np.count_nonzero(np.abs(centered[:, 0]) > 1.0) / n
    assert frac == pytest.approx(0.3173, abs=4 * math.sqrt(0.32 * 0.68 / n))


def test_run_coupling_ok_and_subset():
    rng = POL.stream("run", 0)
    pi0 = sample_ppp(8.0, np.full(2, -20.0), np.full(2, 20.0), rng)
    tr = run_coupling(WORKED, pi0, rng)
    assert tr.verdict == "ok"
    assert tr.subset_ok
    assert tr.thinning_capped  # see the feasibility note in lemma test
    assert len(tr.pi_delta) == len(pi0)
    assert np.array_equal(tr.pi_delta.ids, pi0.ids)
    # every surviving fresh node is inside the inner cube
    if len(tr.xi_final):
        assert np.all(np.abs(tr.xi_final.positions) <= 10.0)
    # pairing is injective on both sides
    assert len(np.unique(tr.pairing[:, 0])) == len(tr.pairing)
    assert len(np.unique(tr.pairing[:, 1])) == len(tr.pairing)


def test_run_coupling_precondition_failure():
    rng = POL.stream("pre", 0)
    pi0 = sample_ppp(0.1, np.full(2, -20.0), np.full(2, 20.0), rng)
    tr = run_coupling(WORKED, pi0, rng)
    assert tr.verdict == "failed-precondition"
    assert tr.sparse_cells > 0
    assert tr.xi_final is None


def test_run_coupling_domination_failure_when_barely_dense():
    # exactly beta*ell^d nodes per cell: the fresh candidate set then
    # overshoots some cell almost surely
    spec = CouplingSpec(K=40.0, K_prime=20.0, ell=4.0, beta=1.0, eps=0.5,
                        delta=1024, s=1.0, d=2)
    per_cell = int(spec.beta * spec.ell ** 2)
    pts = []
    for cx in range(10):
        for cy in range(10):
            base = np.array([-20.0 + 4.0 * cx, -20.0 + 4.0 * cy])
            grid = np.stack(np.meshgrid(np.linspace(0.5, 3.5, 4),
                                        np.linspace(0.5, 3.5, 4)),
                            axis=-1).reshape(-1, 2)
            pts.append(base + grid[:per_cell])
    pi0 = NodeEnsemble(np.vstack(pts), np.arange(100 * per_cell))
    tr = run_coupling(spec, pi0, POL.stream("dom", 0))
    assert tr.verdict == "domination-failed"


def test_freshness_and_intensity_of_final_process():
    # over repeated runs the fresh process has the advertised intensity
    # and per-cell counts uncorrelated with the initial configuration
    runs = 25
    lam0 = 3.0
    xi_counts = []
    pi_counts = []
    for j in range(runs):
        rng = POL.stream("fresh", j)
        pi0 = sample_ppp(lam0, np.full(2, -90.0), np.full(2, 90.0), rng)
        tr = run_coupling(FEASIBLE, pi0, rng)
        assert tr.verdict == "ok"
        assert not tr.thinning_capped
        assert tr.subset_ok
        for cx in range(5):
            for cy in range(5):
                lo = np.array([-10.0 + 4 * cx, -10.0 + 4 * cy])
                hi = lo + 4.0
                inside_xi = np.all((tr.xi_final.positions >= lo)
                                   & (tr.xi_final.positions < hi), axis=1)
                inside_pi = np.all((pi0.positions >= lo)
                                   & (pi0.positions < hi), axis=1)
                xi_counts.append(int(inside_xi.sum()))
                pi_counts.append(int(inside_pi.sum()))
    xi_counts = np.array(xi_counts, dtype=float)
    pi_counts = np.array(pi_counts, dtype=float)
    n = len(xi_counts)
    # intensity (1 - eps) * beta = 0.5 per unit area -> mean 8 per cell
    mean = xi_counts.mean()
    assert mean == pytest.approx(8.0, abs=4 * math.sqrt(8.0 / n))
    # Poisson-like dispersion
    assert xi_counts.var() / mean == pytest.approx(1.0, abs=0.25)
    # independence from the initial crowd
    corr = np.corrcoef(xi_counts, pi_counts)[0, 1]
    assert abs(corr) <= 4 / math.sqrt(n)


def test_eq7_bound_formula():
    spec = WORKED
    eps = spec.eps
    dlt = eps / (2 - eps)
    c = (1 - dlt / 3) / (8 * (1 - eps / 2))
    expect = 100 * math.exp(-c * eps * eps * spec.beta * 16)
    assert eq7_failure_bound(spec) == pytest.approx(expect, rel=1e-12)


def test_percolation_step_coupled_smoke():
    rng = POL.stream("step", 0)
    prev = sample_ppp(60.0, np.full(2, -4.0), np.full(2, 4.0), rng)
    moved, embedded, ok = percolation_step_coupled(
        prev, xi=0.5, lam=40.0, ell=1.0, big_l=4.0, big_c=2.0, s=1.0, d=2,
        rng=rng)
    assert ok
    assert len(moved) == len(prev)
    assert embedded is not None
    assert np.all(np.abs(embedded.positions) <= 2.0)
