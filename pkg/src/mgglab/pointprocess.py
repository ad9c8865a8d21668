"""Poisson point process sampling and the basic closure operations.

Homogeneous sampling on a box, independent thinning, superposition, and
rejection sampling from a bounded non-homogeneous intensity field.
"""

import io
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from .domain import InvalidIntensityError, SimDomain

ID_TRIAL_SHIFT = 32  # ids are (trial << 32) | counter


class IncompatibleEnsemblesError(ValueError):
    pass


class InvalidBoundError(ValueError):
    pass


@dataclass
class NodeEnsemble:
    """Positions of all nodes at one time step with stable identities.

    positions: (n, d) float64; ids: (n,) int64, unique; timestamp: step index.
    """

    positions: np.ndarray
    ids: np.ndarray
    timestamp: int = 0

    def __post_init__(self):
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=np.float64))
        if self.positions.size == 0:
            self.positions = self.positions.reshape(0, max(1, self.positions.shape[-1] if self.positions.ndim > 1 else 1))
        self.ids = np.asarray(self.ids, dtype=np.int64)
        if len(self.ids) != len(self.positions):
            raise ValueError("ids and positions must have equal length")
        if len(np.unique(self.ids)) != len(self.ids):
            raise ValueError("node ids must be unique")

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    def to_csv(self) -> str:
        """Serialize as ``id,x0,...,x{d-1}`` rows."""
        buf = io.StringIO()
        cols = ",".join(f"x{k}" for k in range(self.d))
        buf.write(f"id,{cols}\n")
        for i in range(len(self)):
            coords = ",".join(repr(float(x)) for x in self.positions[i])
            buf.write(f"{self.ids[i]},{coords}\n")
        return buf.getvalue()


def make_ids(trial: int, n: int, start: int = 0) -> np.ndarray:
    """Ids unique across trials: (trial index, running counter) packed."""
    return (np.int64(trial) << ID_TRIAL_SHIFT) | np.arange(start, start + n, dtype=np.int64)


@dataclass
class IntensityField:
    """x -> nu(x) >= 0 on a bounded box, together with an upper bound.

    ``func`` must accept an (n, d) array and return (n,) intensities.
    """

    func: Callable[[np.ndarray], np.ndarray]
    low: np.ndarray
    high: np.ndarray
    nu_max: float

    def __post_init__(self):
        self.low = np.asarray(self.low, dtype=np.float64)
        self.high = np.asarray(self.high, dtype=np.float64)
        if self.nu_max < 0:
            raise InvalidBoundError(f"nu_max must be >= 0, got {self.nu_max}")

    @property
    def d(self) -> int:
        return len(self.low)

    @property
    def box_volume(self) -> float:
        return float(np.prod(self.high - self.low))


def sample_ppp(lam: float, low, high, rng: np.random.Generator,
               timestamp: int = 0, trial: int = 0, id_start: int = 0) -> NodeEnsemble:
    """Homogeneous PPP(lam) on the box [low, high): Poisson count, uniform positions."""
    if lam < 0:
        raise InvalidIntensityError(f"intensity must be >= 0, got {lam}")
    low = np.atleast_1d(np.asarray(low, dtype=np.float64))
    high = np.atleast_1d(np.asarray(high, dtype=np.float64))
    vol = float(np.prod(high - low))
    n = int(rng.poisson(lam * vol)) if lam * vol > 0 else 0
    pos = rng.uniform(low, high, size=(n, len(low)))
    return NodeEnsemble(pos.reshape(n, len(low)), make_ids(trial, n, id_start), timestamp)


def sample_ppp_domain(lam: float, domain: SimDomain, rng: np.random.Generator,
                      timestamp: int = 0, trial: int = 0) -> NodeEnsemble:
    return sample_ppp(lam, np.zeros(domain.d), np.full(domain.d, domain.side),
                      rng, timestamp, trial)


def thin(ens: NodeEnsemble, p_delete: float,
         rng: np.random.Generator) -> Tuple[NodeEnsemble, NodeEnsemble]:
    """Delete each node independently with probability p_delete.

    Returns (kept, deleted); their union is exactly the input.
    """
    if not 0.0 <= p_delete <= 1.0:
        raise ValueError(f"p_delete must be in [0, 1], got {p_delete}")
    drop = rng.random(len(ens)) < p_delete
    kept = NodeEnsemble(ens.positions[~drop], ens.ids[~drop], ens.timestamp)
    deleted = NodeEnsemble(ens.positions[drop], ens.ids[drop], ens.timestamp)
    return kept, deleted


def superpose(a: NodeEnsemble, b: NodeEnsemble) -> NodeEnsemble:
    """Union of two ensembles; ids from both sides are preserved and must stay unique."""
    if a.timestamp != b.timestamp:
        raise IncompatibleEnsemblesError(
            f"timestamps differ: {a.timestamp} vs {b.timestamp}")
    if len(a) == 0:
        return NodeEnsemble(b.positions.copy(), b.ids.copy(), b.timestamp)
    if len(b) == 0:
        return NodeEnsemble(a.positions.copy(), a.ids.copy(), a.timestamp)
    if a.d != b.d:
        raise IncompatibleEnsemblesError("dimension mismatch")
    pos = np.vstack([a.positions, b.positions])
    ids = np.concatenate([a.ids, b.ids])
    return NodeEnsemble(pos, ids, a.timestamp)


def sample_nonhomogeneous(field: IntensityField, rng: np.random.Generator,
                          timestamp: int = 0, trial: int = 0) -> NodeEnsemble:
    """Sample a PPP with intensity nu(x) by thinning a PPP(nu_max) proposal.

    Each proposal node at x is kept with probability nu(x)/nu_max, giving
    expected count integral(nu) over the box.
    """
    proposal = sample_ppp(field.nu_max, field.low, field.high, rng,
                          timestamp=timestamp, trial=trial)
    if len(proposal) == 0:
        return proposal
    nu = np.asarray(field.func(proposal.positions), dtype=np.float64)
    if np.any(nu > field.nu_max * (1 + 1e-12)):
        raise InvalidBoundError("intensity exceeds declared nu_max")
    if np.any(nu < 0):
        raise InvalidBoundError("intensity must be nonnegative")
    keep = rng.random(len(proposal)) * field.nu_max < nu
    return NodeEnsemble(proposal.positions[keep], proposal.ids[keep], timestamp)
