"""Geometry primitives, model parameters and the deterministic RNG contract.

All other modules build on the types here.  Everything is an immutable
value object and safe to share between concurrent trial workers.
"""

import math
import zlib
from dataclasses import dataclass, field

import numpy as np


class InvalidDimensionError(ValueError):
    pass


class InvalidIntensityError(ValueError):
    pass


def ball_volume(d: int, radius: float) -> float:
    """Volume of the d-dimensional Euclidean ball of the given radius."""
    if d < 1:
        raise InvalidDimensionError(f"dimension must be >= 1, got {d}")
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * radius**d


def derive_range(d: int) -> float:
    """Transmission range r(d) normalized so that vol(B_r) = 1.

    r = (Gamma(d/2+1) / pi^(d/2))^(1/d).  Never configurable; every graph
    in the package uses this radius.
    """
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise InvalidDimensionError(f"dimension must be an integer >= 1, got {d!r}")
    return (math.gamma(d / 2 + 1) / math.pi ** (d / 2)) ** (1.0 / d)


@dataclass(frozen=True)
class SimDomain:
    """A d-dimensional box (infinite-volume proxy) or torus.

    ``side`` is the full side length.  Torus coordinates are kept
    canonical in [0, side); box coordinates are unconstrained.
    """

    d: int
    kind: str  # "box" | "torus"
    side: float

    def __post_init__(self):
        if self.d < 1:
            raise InvalidDimensionError(f"dimension must be >= 1, got {self.d}")
        if self.kind not in ("box", "torus"):
            raise ValueError(f"domain kind must be 'box' or 'torus', got {self.kind!r}")
        if not (self.side > 0 and math.isfinite(self.side)):
            raise ValueError(f"side must be positive and finite, got {self.side}")

    @property
    def is_torus(self) -> bool:
        return self.kind == "torus"

    @property
    def volume(self) -> float:
        return self.side**self.d

    @staticmethod
    def torus_for_n(n: float, lam: float, d: int) -> "SimDomain":
        """Torus of volume n/lam, the finite-network normalization."""
        if lam <= 0:
            raise InvalidIntensityError(f"lambda must be > 0, got {lam}")
        return SimDomain(d=d, kind="torus", side=(n / lam) ** (1.0 / d))


@dataclass(frozen=True)
class ModelParams:
    """Global model parameters: intensity, mobility, derived range."""

    lam: float  # nodes per unit volume
    s: float    # per-step Brownian standard deviation per coordinate
    d: int
    r: float = field(init=False)

    def __post_init__(self):
        if self.lam < 0:
            raise InvalidIntensityError(f"lambda must be >= 0, got {self.lam}")
        if self.s < 0:
            raise ValueError(f"mobility s must be >= 0, got {self.s}")
        object.__setattr__(self, "r", derive_range(self.d))


def torus_wrap(p: np.ndarray, domain: SimDomain) -> np.ndarray:
    """Reduce coordinates modulo the side into [0, side); identity on boxes."""
    p = np.asarray(p, dtype=np.float64)
    if not domain.is_torus:
        return p
    return np.mod(p, domain.side)


def torus_distance(p: np.ndarray, q: np.ndarray, domain: SimDomain) -> float:
    """Euclidean distance minimized over integer side-translates per axis.

    On box domains this is the plain Euclidean distance.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    delta = p - q
    if domain.is_torus:
        side = domain.side
        delta = delta - side * np.round(delta / side)
    return float(np.sqrt(np.sum(delta * delta, axis=-1)))


def min_image_delta(p: np.ndarray, q: np.ndarray, side: float) -> np.ndarray:
    """Wrapped coordinate difference p - q mapped into [-side/2, side/2)."""
    delta = np.asarray(p, dtype=np.float64) - np.asarray(q, dtype=np.float64)
    return delta - side * np.round(delta / side)


@dataclass(frozen=True)
class RngPolicy:
    """Counter-based random stream derivation.

    A stream is a pure function of (master seed, experiment name, index),
    so trials may be executed in any order, on any number of workers, and
    still reproduce byte-identical output.  Only within-build determinism
    is promised; the Gaussian sampling method is numpy's.
    """

    seed: int

    def stream(self, experiment: str, index: int) -> np.random.Generator:
        tag = zlib.crc32(experiment.encode("utf-8"))
        ss = np.random.SeedSequence([int(self.seed) & 0xFFFFFFFFFFFFFFFF, tag, int(index)])
        return np.random.default_rng(ss)

    def spawn_many(self, experiment: str, n: int, start: int = 0):
        return [self.stream(experiment, i) for i in range(start, start + n)]
