"""Tessellation diagnostics: dense cells and target escape probabilities."""

import math

import numpy as np

from ..domain import RngPolicy
from ..pointprocess import NodeEnsemble


def dense_cell_diagnostic(ens: NodeEnsemble, box_low, box_high, ell: float,
                          xi: float, lam: float, t: float = None,
                          big_l: float = None, delta: float = None) -> dict:
    """Fraction of cells holding at least (1 - xi) * lam * ell^d nodes.

    The requested cell side is rounded so each axis is an integer number
    of cells; the actual side used is reported.  When t, big_l and delta
    are given, the union-bound value
    (t * big_l^d / (delta * ell^d)) * exp(-xi^2 lam ell^d / 2) for the
    probability that some inspected cell is sparse is reported too.
    """
    box_low = np.atleast_1d(np.asarray(box_low, dtype=np.float64))
    box_high = np.atleast_1d(np.asarray(box_high, dtype=np.float64))
    d = len(box_low)
    if ell <= 0:
        raise ValueError("cell side must be > 0")
    ncell = np.maximum(1, np.round((box_high - box_low) / ell)).astype(np.int64)
    actual = (box_high - box_low) / ncell
    pos = ens.positions
    inside = np.all((pos >= box_low) & (pos < box_high), axis=1)
    pos = pos[inside]
    idx = np.floor((pos - box_low) / actual).astype(np.int64)
    idx = np.minimum(idx, ncell - 1)
    flat = np.zeros(len(pos), dtype=np.int64)
    for k in range(d):
        flat = flat * ncell[k] + idx[:, k]
    total = int(np.prod(ncell))
    counts = np.bincount(flat, minlength=total)
    cell_vol = float(np.prod(actual))
    need = (1.0 - xi) * lam * cell_vol
    dense = counts >= need
    out = {
        "cells": total,
        "actual_ell": actual.tolist(),
        "threshold": need,
        "fraction_dense": float(dense.mean()),
        "counts": counts,
    }
    if t is not None and big_l is not None and delta is not None:
        ell_eff = float(np.prod(actual)) ** (1.0 / d)
        out["union_bound"] = (t * big_l**d / (delta * ell_eff**d)
                              * math.exp(-xi * xi * lam * cell_vol / 2.0))
    return out


def escape_diagnostic(s: float, big_l: float, t: int, d: int, obs_every: int,
                      trials: int, policy: RngPolicy,
                      experiment: str = "escape") -> dict:
    """P[a Brownian target stays inside Q_{L/3} at every observed step].

    Compared against the analytic lower bound
    1 - (t/obs_every) * (12 d s sqrt(t) / (sqrt(2 pi) L)) * exp(-L^2 / (72 s^2 t)),
    the union-plus-Gaussian-tail estimate for the same event.
    """
    if s == 0:
        return {"empirical": 1.0, "analytic_lower": 1.0, "trials": trials}
    stay = 0
    half = big_l / 6.0
    for trial in range(trials):
        rng = policy.stream(experiment, trial)
        path = np.cumsum(s * rng.standard_normal((t, d)), axis=0)
        obs = path[obs_every - 1::obs_every]
        if len(obs) == 0 or np.abs(obs).max() <= half:
            stay += 1
    analytic = 1.0 - (t / obs_every) * (12.0 * d * s * math.sqrt(t)
                                        / (math.sqrt(2.0 * math.pi) * big_l)) \
        * math.exp(-big_l * big_l / (72.0 * s * s * t))
    return {"empirical": stay / trials, "analytic_lower": analytic,
            "trials": trials}
