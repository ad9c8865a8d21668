"""Coupled construction of a fresh Poisson process inside a moved crowd.

Starting from any point set with at least beta * ell^d nodes per cell of
the outer cube Q_K at time 0, the construction produces, after Delta
Brownian steps, a point process Xi on the inner cube Q_K' that is
simultaneously (a) a genuine PPP((1 - eps) beta) independent of the
initial configuration, and (b) node-for-node a subset of the moved
original nodes, whenever a per-cell domination event holds.

The trick is the radially shifted sub-density

    g(z) = (2 pi s^2 Delta)^(-d/2) exp(-(|z| + sqrt(d) ell)^2 / (2 s^2 Delta))

which lower-bounds the Delta-step transition density from *every* point
of a cell to every target, so one displacement sample can be shared by
a fresh node and its paired original node.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import quad

from .pointprocess import NodeEnsemble, sample_ppp


@dataclass(frozen=True)
class CouplingSpec:
    K: float
    K_prime: float
    ell: float
    beta: float
    eps: float
    delta: int          # number of Brownian steps bridged
    s: float
    d: int
    c1: float = 16.0
    c2: float = 8.0

    def __post_init__(self):
        if not (self.K > self.K_prime > 0):
            raise ValueError("need K > K' > 0")
        if self.ell <= 0 or self.beta <= 0 or self.s <= 0 or self.delta < 1:
            raise ValueError("ell, beta, s must be > 0 and delta >= 1")
        if not 0 < self.eps < 1:
            raise ValueError("eps must be in (0, 1)")
        ratio = self.K / self.ell
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("ell must divide K")

    @property
    def cells_per_axis(self) -> int:
        return int(round(self.K / self.ell))

    def scale_warnings(self) -> list:
        """Check the Delta and K - K' scale conditions; warn, don't refuse.

        The construction runs regardless; whether its certified-fresh
        intensity floor actually reaches (1 - eps) beta is then decided
        numerically by lemma_psi_check.
        """
        out = []
        need_delta = self.c1 * self.ell**2 / (self.s**2 * self.eps**2)
        if self.delta < need_delta:
            out.append(f"delta={self.delta} below scale condition {need_delta:.6g}")
        need_gap = self.c2 * self.s * math.sqrt(self.delta * math.log(1 / self.eps))
        if self.K_prime > self.K - need_gap:
            out.append(f"K'={self.K_prime} exceeds K - {need_gap:.6g}")
        for msg in out:
            warnings.warn(msg, stacklevel=3)
        return out


def g_density(z: np.ndarray, ell: float, s: float, delta: int, d: int):
    """The shared-displacement sub-density g(z); vectorized over rows."""
    z = np.asarray(z, dtype=np.float64)
    single = z.ndim == 1
    z2 = np.atleast_2d(z)
    norm = np.sqrt(np.einsum("ij,ij->i", z2, z2))
    var = s * s * delta
    val = (2 * math.pi * var) ** (-d / 2) * np.exp(
        -(norm + math.sqrt(d) * ell) ** 2 / (2 * var))
    return float(val[0]) if single else val


def _radial_integral(radius: float, ell: float, s: float, delta: int, d: int,
                     rtol: float = 1e-10) -> float:
    """Integral of g over the centered ball of the given radius."""
    if radius <= 0:
        return 0.0
    a = math.sqrt(d) * ell
    var = s * s * delta
    surf = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
    pref = (2 * math.pi * var) ** (-d / 2)

    def f(rho):
        return rho ** (d - 1) * math.exp(-(rho + a) ** 2 / (2 * var))

    hi = radius if math.isfinite(radius) else np.inf
    val, _ = quad(f, 0.0, hi, epsrel=rtol, epsabs=0.0, limit=200)
    return surf * pref * val


def psi(ell: float, s: float, delta: int, d: int) -> float:
    """Thinning probability 1 - integral of g over R^d."""
    return 1.0 - _radial_integral(np.inf, ell, s, delta, d)


def g_ball_integral(radius: float, ell: float, s: float, delta: int, d: int) -> float:
    return _radial_integral(radius, ell, s, delta, d)


def lemma_psi_check(spec: CouplingSpec):
    """Quadrature check of integral_{B_(K-K')/2} g >= 1 - eps/2.

    Returns (passes, margin, integral); margin is integral - (1 - eps/2).
    """
    radius = (spec.K - spec.K_prime) / 2.0
    integral = g_ball_integral(radius, spec.ell, spec.s, spec.delta, spec.d)
    target = 1.0 - spec.eps / 2.0
    return integral >= target, integral - target, integral


def sample_g(ell: float, s: float, delta: int, d: int,
             rng: np.random.Generator, n: int = 1) -> np.ndarray:
    """n draws from g / (1 - psi) by rejection against the full Gaussian."""
    sigma = s * math.sqrt(delta)
    a = math.sqrt(d) * ell
    out = np.empty((n, d))
    got = 0
    while got < n:
        batch = max(2 * (n - got), 16)
        z = sigma * rng.standard_normal((batch, d))
        norm = np.sqrt(np.einsum("ij,ij->i", z, z))
        accept_p = np.exp(-(2 * norm * a + a * a) / (2 * sigma * sigma))
        keep = rng.random(batch) < accept_p
        take = min(int(keep.sum()), n - got)
        out[got:got + take] = z[keep][:take]
        got += take
    return out


def sample_residual(y: np.ndarray, y_prime: np.ndarray, ell: float, s: float,
                    delta: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Landing point for a node at y whose shared draw was thinned away.

    Samples from (f_Delta(y, .) - g(. - y_prime)) / psi by rejection, so
    the node's overall displacement law stays exactly Brownian.  Requires
    |y - y_prime| <= sqrt(d) ell (same cell), which makes the residual
    nonnegative everywhere.
    """
    sigma2 = s * s * delta
    a = math.sqrt(d) * ell
    while True:
        x = y + math.sqrt(sigma2) * rng.standard_normal(d)
        zy = x - y
        zp = x - y_prime
        ratio = math.exp((zy @ zy - (math.sqrt(zp @ zp) + a) ** 2) / (2 * sigma2))
        if rng.random() >= ratio:
            return x


def _residual_batch(y: np.ndarray, yp: np.ndarray, spec: "CouplingSpec",
                    rng: np.random.Generator) -> np.ndarray:
    """Vectorized sample_residual for many (y, y') rows at once."""
    n, d = y.shape
    sigma = spec.s * math.sqrt(spec.delta)
    a = math.sqrt(d) * spec.ell
    out = np.empty((n, d))
    pending = np.arange(n)
    while len(pending):
        x = y[pending] + sigma * rng.standard_normal((len(pending), d))
        zy = x - y[pending]
        zp = x - yp[pending]
        ratio = np.exp((np.einsum("ij,ij->i", zy, zy)
                        - (np.sqrt(np.einsum("ij,ij->i", zp, zp)) + a) ** 2)
                       / (2 * sigma * sigma))
        acc = rng.random(len(pending)) >= ratio
        out[pending[acc]] = x[acc]
        pending = pending[~acc]
    return out


@dataclass
class CouplingTranscript:
    """Full record of one run; enough to audit every verdict."""

    spec: CouplingSpec
    verdict: str                      # ok | domination-failed | failed-precondition
    pi0: NodeEnsemble
    xi0: Optional[NodeEnsemble] = None
    pi_delta: Optional[NodeEnsemble] = None
    xi_kept_delta: Optional[NodeEnsemble] = None    # Xi''_Delta
    xi_final: Optional[NodeEnsemble] = None         # Xi on Q_K'
    pairing: Optional[np.ndarray] = None            # (m, 2) xi-id, pi-id
    thinned: Optional[np.ndarray] = None            # per-pair thinning coin
    psi_value: float = 0.0
    inner_integral: float = 0.0
    keep_probability: float = 0.0
    thinning_capped: bool = False
    subset_ok: Optional[bool] = None
    sparse_cells: int = 0

    def summary(self) -> dict:
        return {
            "verdict": self.verdict,
            "psi": self.psi_value,
            "inner_integral": self.inner_integral,
            "keep_probability": self.keep_probability,
            "thinning_capped": self.thinning_capped,
            "subset_ok": self.subset_ok,
            "sparse_cells": self.sparse_cells,
            "n_pi0": len(self.pi0),
            "n_xi0": len(self.xi0) if self.xi0 is not None else 0,
            "n_final": len(self.xi_final) if self.xi_final is not None else 0,
        }


def _cell_index(pos: np.ndarray, spec: CouplingSpec) -> np.ndarray:
    """Flat cell index within Q_K = [-K/2, K/2)^d; -1 for outside nodes."""
    m = spec.cells_per_axis
    idx = np.floor((pos + spec.K / 2.0) / spec.ell).astype(np.int64)
    inside = np.all((idx >= 0) & (idx < m), axis=1)
    flat = np.zeros(len(pos), dtype=np.int64)
    for k in range(pos.shape[1]):
        flat = flat * m + idx[:, k]
    flat[~inside] = -1
    return flat


def run_coupling(spec: CouplingSpec, pi0: NodeEnsemble,
                 rng: np.random.Generator) -> CouplingTranscript:
    """Execute the construction once and record everything.

    Steps: sample the fresh candidate set Xi'_0, check per-cell
    domination by pi0, pair injectively by ascending id within cells,
    thin each pair with probability psi (residual motion for the
    abandoned partner), share one g-displacement per kept pair, move
    unpaired nodes by plain Brownian increments, and finally thin down
    to intensity (1 - eps) beta on the inner cube.
    """
    spec.scale_warnings()
    d = spec.d
    psi_value = psi(spec.ell, spec.s, spec.delta, d)
    inner = g_ball_integral((spec.K - spec.K_prime) / 2.0,
                            spec.ell, spec.s, spec.delta, d)

    cell_pi = _cell_index(pi0.positions, spec)
    need = spec.beta * spec.ell**d
    ncells = spec.cells_per_axis ** d
    counts_pi = np.bincount(cell_pi[cell_pi >= 0], minlength=ncells)
    sparse = int(np.count_nonzero(counts_pi < need - 1e-9))
    if sparse > 0:
        return CouplingTranscript(spec, "failed-precondition", pi0,
                                  psi_value=psi_value, inner_integral=inner,
                                  sparse_cells=sparse)

    half = spec.K / 2.0
    xi0 = sample_ppp((1.0 - spec.eps / 2.0) * spec.beta,
                     np.full(d, -half), np.full(d, half), rng,
                     timestamp=pi0.timestamp,
                     id_start=0)
    xi0 = NodeEnsemble(xi0.positions,
                       xi0.ids + (int(pi0.ids.max()) + 1 if len(pi0) else 0),
                       xi0.timestamp)
    cell_xi = _cell_index(xi0.positions, spec)
    counts_xi = np.bincount(cell_xi[cell_xi >= 0], minlength=ncells)
    if np.any(counts_xi > counts_pi):
        return CouplingTranscript(spec, "domination-failed", pi0, xi0=xi0,
                                  psi_value=psi_value, inner_integral=inner)

    # injective, cell-respecting pairing by ascending node id
    pair_xi = []   # indices into xi0
    pair_pi = []   # indices into pi0
    for c in np.unique(cell_xi):
        xi_here = np.nonzero(cell_xi == c)[0]
        pi_here = np.nonzero(cell_pi == c)[0]
        xi_here = xi_here[np.argsort(xi0.ids[xi_here])]
        pi_here = pi_here[np.argsort(pi0.ids[pi_here])]
        k = len(xi_here)
        pair_xi.extend(xi_here.tolist())
        pair_pi.extend(pi_here[:k].tolist())
    pair_xi = np.array(pair_xi, dtype=np.int64)
    pair_pi = np.array(pair_pi, dtype=np.int64)
    m = len(pair_xi)

    new_pi = np.empty_like(pi0.positions)
    paired_mask = np.zeros(len(pi0), dtype=bool)
    paired_mask[pair_pi] = True

    thin_coin = rng.random(m) < psi_value
    kept = ~thin_coin
    nkept = int(kept.sum())
    if nkept > 0:
        z = sample_g(spec.ell, spec.s, spec.delta, d, rng, nkept)
        landings = xi0.positions[pair_xi[kept]] + z
        new_pi[pair_pi[kept]] = landings
        kept_positions = landings
        kept_ids = xi0.ids[pair_xi[kept]]
    else:
        kept_positions = np.zeros((0, d))
        kept_ids = np.zeros(0, dtype=np.int64)
    nthin = m - nkept
    if nthin > 0:
        y = pi0.positions[pair_pi[thin_coin]]
        yp = xi0.positions[pair_xi[thin_coin]]
        res = _residual_batch(y, yp, spec, rng)
        new_pi[pair_pi[thin_coin]] = res

    unpaired = np.nonzero(~paired_mask)[0]
    if len(unpaired) > 0:
        new_pi[unpaired] = (pi0.positions[unpaired]
                            + spec.s * math.sqrt(spec.delta)
                            * rng.standard_normal((len(unpaired), d)))
    pi_delta = NodeEnsemble(new_pi, pi0.ids, pi0.timestamp + spec.delta)

    xi_kept = NodeEnsemble(kept_positions, kept_ids,
                           pi0.timestamp + spec.delta)

    # final thinning down to (1 - eps) beta on Q_K', using the uniform
    # analytic intensity floor (1 - eps/2) beta * inner as denominator
    target = (1.0 - spec.eps) * spec.beta
    floor = (1.0 - spec.eps / 2.0) * spec.beta * inner
    capped = False
    if floor <= 0:
        keep_p = 0.0
    else:
        keep_p = target / floor
        if keep_p > 1.0:
            keep_p = 1.0
            capped = True
    half_in = spec.K_prime / 2.0
    in_inner = np.all(np.abs(xi_kept.positions) <= half_in, axis=1) \
        if len(xi_kept) else np.zeros(0, dtype=bool)
    coins = rng.random(len(xi_kept)) < keep_p
    final_mask = in_inner & coins
    xi_final = NodeEnsemble(xi_kept.positions[final_mask],
                            xi_kept.ids[final_mask], xi_kept.timestamp)

    subset_ok = True
    if len(xi_final) > 0:
        pd_set = {tuple(row) for row in pi_delta.positions}
        subset_ok = all(tuple(row) in pd_set for row in xi_final.positions)

    return CouplingTranscript(
        spec, "ok", pi0, xi0=xi0, pi_delta=pi_delta, xi_kept_delta=xi_kept,
        xi_final=xi_final,
        pairing=np.stack([xi0.ids[pair_xi], pi0.ids[pair_pi]], axis=1)
        if m else np.empty((0, 2), dtype=np.int64),
        thinned=thin_coin, psi_value=psi_value, inner_integral=inner,
        keep_probability=keep_p, thinning_capped=capped, subset_ok=subset_ok)


def eq7_failure_bound(spec: CouplingSpec) -> float:
    """Union-Chernoff value bounding the domination failure probability.

    Per cell, failure needs Poisson((1-eps/2) beta ell^d) to exceed the
    cell's count, which is at least beta ell^d; the Poisson Chernoff
    upper bound at relative overshoot delta = eps / (2 - eps) gives
    exp(-c eps^2 beta ell^d) with c = (1 - delta/3) / (8 (1 - eps/2)).
    """
    eps = spec.eps
    dlt = eps / (2.0 - eps)
    c = (1.0 - dlt / 3.0) / (8.0 * (1.0 - eps / 2.0))
    cells = spec.cells_per_axis ** spec.d
    return cells * math.exp(-c * eps * eps * spec.beta * spec.ell**spec.d)


def percolation_step_coupled(prev: NodeEnsemble, xi: float, lam: float,
                             ell: float, big_l: float, big_c: float, s: float,
                             d: int, rng: np.random.Generator):
    """One tessellation-argument step: refresh the crowd inside Q_L.

    Invokes the construction with beta = (1 - xi) lam, eps = xi, K = 2L,
    K' = L and Delta = ceil(C^2 ell^2 / s^2).  Returns (moved ensemble,
    embedded PPP((1 - xi)^2 lam) on Q_L or None, success flag).
    """
    delta = math.ceil(big_c**2 * ell**2 / s**2)
    spec = CouplingSpec(K=2 * big_l, K_prime=big_l, ell=ell,
                        beta=(1 - xi) * lam, eps=xi, delta=delta, s=s, d=d)
    tr = run_coupling(spec, prev, rng)
    ok = tr.verdict == "ok"
    moved = tr.pi_delta if ok else None
    return moved, (tr.xi_final if ok else None), ok
