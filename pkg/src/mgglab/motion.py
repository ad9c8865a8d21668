"""Discrete-time observation of Brownian node motion.

Nodes move in continuous time by independent Brownian motion with variance
s^2, observed at integer steps, so per-step displacements are exact
Normal(0, s^2) marginals per coordinate.  Also provides the i-step
transition density and mass-transport propagation of intensity fields.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .domain import SimDomain, torus_wrap
from .pointprocess import IntensityField, NodeEnsemble

BROWNIAN = "brownian"
STATIONARY = "stationary"
DRIFT = "brownian-with-drift"


class DegenerateDensityError(ValueError):
    """Raised for i=0 or s=0 where the transition law is a point mass."""


@dataclass(frozen=True)
class MotionModel:
    """Motion law for nodes or the target.

    ``drift_length`` only applies to the drift kind: each node draws an
    i.i.d. drift vector of this fixed length in a uniformly random
    direction, held fixed for the node's lifetime.
    """

    kind: str = BROWNIAN
    s: float = 1.0
    drift_length: float = 0.0

    def __post_init__(self):
        if self.kind not in (BROWNIAN, STATIONARY, DRIFT):
            raise ValueError(f"unknown motion kind {self.kind!r}")
        if self.s < 0:
            raise ValueError("s must be >= 0")
        if self.drift_length < 0:
            raise ValueError("drift length must be >= 0")


def random_directions(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """n unit vectors uniform on the (d-1)-sphere."""
    v = rng.standard_normal((n, d))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    # resample the (measure-zero) degenerate draws
    while np.any(norms == 0):
        bad = norms[:, 0] == 0
        v[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(v, axis=1, keepdims=True)
    return v / norms


def step(ens: NodeEnsemble, model: MotionModel, domain: SimDomain,
         rng: np.random.Generator, drifts: Optional[np.ndarray] = None) -> NodeEnsemble:
    """Advance every node one step; ids preserved, timestamp incremented.

    For the drift kind the caller supplies the per-node drift vectors
    (drawn once per trial with :func:`random_directions`).
    """
    if model.kind == STATIONARY:
        raise ValueError("network nodes require a mobile motion model")
    n, d = ens.positions.shape
    disp = model.s * rng.standard_normal((n, d)) if model.s > 0 else np.zeros((n, d))
    if model.kind == DRIFT:
        if drifts is None:
            raise ValueError("drift motion needs per-node drift vectors")
        disp = disp + drifts
    pos = torus_wrap(ens.positions + disp, domain)
    return NodeEnsemble(pos, ens.ids, ens.timestamp + 1)


def transition_density(i: int, x: np.ndarray, y: np.ndarray, s: float, d: int) -> float:
    """f_i(x, y) = (2 pi s^2 i)^(-d/2) exp(-|y-x|^2 / (2 s^2 i))."""
    if i < 1 or s <= 0:
        raise DegenerateDensityError("i >= 1 and s > 0 required (point mass otherwise)")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    var = s * s * i
    sq = float(np.sum((y - x) ** 2))
    return (2 * math.pi * var) ** (-d / 2) * math.exp(-sq / (2 * var))


@dataclass(frozen=True)
class Trajectory:
    """Target locations x_0 .. x_{t-1}, one per observed step."""

    points: np.ndarray  # (t, d)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        if len(pts) < 1:
            raise ValueError("trajectory needs at least one point")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)


def sample_target_trajectory(model: MotionModel, t: int, start: np.ndarray,
                             rng: np.random.Generator) -> Trajectory:
    """Length-t trajectory from ``start`` under the given motion model."""
    if t < 1:
        raise ValueError("t must be >= 1")
    start = np.atleast_1d(np.asarray(start, dtype=np.float64))
    d = len(start)
    if model.kind == STATIONARY or (model.s == 0 and model.kind == BROWNIAN):
        return Trajectory(np.tile(start, (t, 1)))
    incr = model.s * rng.standard_normal((t - 1, d)) if t > 1 else np.zeros((0, d))
    if model.kind == DRIFT and model.drift_length > 0:
        incr = incr + model.drift_length * random_directions(1, d, rng)[0]
    pts = np.vstack([start[None, :], start[None, :] + np.cumsum(incr, axis=0)]) \
        if t > 1 else start[None, :]
    return Trajectory(pts)


# ---------------------------------------------------------------------------
# Mass transport: nu_i(y) = integral nu_0(x) f_i(x, y) dx
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)
_TAIL_SIGMAS = 8.0


def _quad_box(f, low, high, rtol=1e-6, _depth=0):
    """Adaptive tensor-product Gauss-Legendre on a box.

    Splits the box along its longest axis until the 8-point panel estimate
    stabilizes to the requested relative tolerance.
    """
    low = np.asarray(low, dtype=np.float64)
    high = np.asarray(high, dtype=np.float64)
    d = len(low)
    grids = [0.5 * (high[k] + low[k]) + 0.5 * (high[k] - low[k]) * _GL_NODES
             for k in range(d)]
    mesh = np.meshgrid(*grids, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    wmesh = np.meshgrid(*[0.5 * (high[k] - low[k]) * _GL_WEIGHTS for k in range(d)],
                        indexing="ij")
    w = np.ones(len(pts))
    for wm in wmesh:
        w *= wm.ravel()
    coarse = float(np.dot(w, f(pts)))
    if _depth >= 12:
        return coarse
    axis = int(np.argmax(high - low))
    mid = 0.5 * (low[axis] + high[axis])
    h1 = high.copy(); h1[axis] = mid
    l2 = low.copy(); l2[axis] = mid
    fine = (_quad_box_once(f, low, h1) + _quad_box_once(f, l2, high))
    if abs(fine - coarse) <= rtol * (abs(fine) + 1e-300):
        return fine
    return (_quad_box(f, low, h1, rtol, _depth + 1)
            + _quad_box(f, l2, high, rtol, _depth + 1))


def _quad_box_once(f, low, high):
    low = np.asarray(low, dtype=np.float64)
    high = np.asarray(high, dtype=np.float64)
    d = len(low)
    grids = [0.5 * (high[k] + low[k]) + 0.5 * (high[k] - low[k]) * _GL_NODES
             for k in range(d)]
    mesh = np.meshgrid(*grids, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    wmesh = np.meshgrid(*[0.5 * (high[k] - low[k]) * _GL_WEIGHTS for k in range(d)],
                        indexing="ij")
    w = np.ones(len(pts))
    for wm in wmesh:
        w *= wm.ravel()
    return float(np.dot(w, f(pts)))


def propagate_intensity(nu0: IntensityField, i: int, s: float,
                        rtol: float = 1e-6) -> IntensityField:
    """Push an intensity field forward i Brownian steps by convolution.

    The returned field evaluates nu_i(y) by adaptive quadrature of
    nu_0(x) f_i(x, y) over the part of nu_0's box within 8 Gaussian
    standard deviations of y.  With s = 0 or i = 0 the field is unchanged.
    """
    if i == 0 or s == 0:
        return nu0
    sigma = s * math.sqrt(i)
    d = nu0.d
    norm = (2 * math.pi * sigma * sigma) ** (-d / 2)

    def nu_i(ys: np.ndarray) -> np.ndarray:
        ys = np.atleast_2d(np.asarray(ys, dtype=np.float64))
        out = np.empty(len(ys))
        for j, y in enumerate(ys):
            lo = np.maximum(nu0.low, y - _TAIL_SIGMAS * sigma)
            hi = np.minimum(nu0.high, y + _TAIL_SIGMAS * sigma)
            if np.any(lo >= hi):
                out[j] = 0.0
                continue

            def integrand(xs, y=y):
                sq = np.sum((xs - y) ** 2, axis=1)
                return nu0.func(xs) * norm * np.exp(-sq / (2 * sigma * sigma))

            out[j] = _quad_box(integrand, lo, hi, rtol=rtol)
        return out

    # the convolution spreads mass at most ~8 sigma beyond the source box
    pad = _TAIL_SIGMAS * sigma
    return IntensityField(nu_i, nu0.low - pad, nu0.high + pad, nu0.nu_max)
