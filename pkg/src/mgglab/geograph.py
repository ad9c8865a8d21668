"""Transmission-range graphs and component queries.

A GeoGraph is the geometric graph of a NodeEnsemble at radius r: nodes
are adjacent iff their distance under the domain metric is at most r
(inclusive).  Component labels are canonical: the smallest node index
in the component.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .domain import SimDomain, min_image_delta
from .kernels import impl
from .kernels import pure as _pure_kernels
from .pointprocess import NodeEnsemble


class NoComponentError(ValueError):
    pass


class NodeNotFoundError(KeyError):
    pass


@dataclass
class GeoGraph:
    ensemble: NodeEnsemble
    r: float
    domain: SimDomain
    labels: np.ndarray                      # canonical component label per node
    _edges: Optional[np.ndarray] = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.ensemble)

    @property
    def edges(self) -> np.ndarray:
        """(m, 2) array of node-index pairs i < j at distance <= r."""
        if self._edges is None:
            self._edges = _pure_kernels.pairwise_adjacency(
                self.ensemble.positions, self.r, self.domain.side,
                self.domain.is_torus)
        return self._edges

    def component_sizes(self) -> dict:
        lab, cnt = np.unique(self.labels, return_counts=True)
        return dict(zip(lab.tolist(), cnt.tolist()))

    def edges_csv(self) -> str:
        rows = ["id_u,id_v"]
        ids = self.ensemble.ids
        for u, v in self.edges:
            rows.append(f"{ids[u]},{ids[v]}")
        return "\n".join(rows) + "\n"


def build_graph(ens: NodeEnsemble, r: float, domain: SimDomain) -> GeoGraph:
    """Cell-list (or tree) construction; exact adjacency at radius r."""
    if r <= 0:
        raise ValueError(f"r must be > 0, got {r}")
    if len(ens) == 0:
        return GeoGraph(ens, r, domain, np.empty(0, dtype=np.int64))
    labels = impl.component_labels(
        np.ascontiguousarray(ens.positions), float(r),
        float(domain.side), domain.is_torus)
    return GeoGraph(ens, r, domain, labels)


def brute_force_graph(ens: NodeEnsemble, r: float, domain: SimDomain) -> GeoGraph:
    """O(n^2) oracle used to certify build_graph."""
    n = len(ens)
    edges = _pure_kernels.pairwise_adjacency(
        ens.positions, r, domain.side, domain.is_torus)
    parent = np.arange(n, dtype=np.int64)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru < rv:
            parent[rv] = ru
        elif rv < ru:
            parent[ru] = rv
    labels = np.array([find(i) for i in range(n)], dtype=np.int64)
    return GeoGraph(ens, r, domain, labels, _edges=edges)


def giant_component(g: GeoGraph):
    """Label and size of the largest component.

    Ties go to the component whose smallest node id is smallest, so the
    result is deterministic for any input order.
    """
    if len(g) == 0:
        raise NoComponentError("graph has no nodes")
    labels, counts = np.unique(g.labels, return_counts=True)
    biggest = counts.max()
    tied = labels[counts == biggest]
    if len(tied) == 1:
        return int(tied[0]), int(biggest)
    best = None
    best_id = None
    for lab in tied:
        min_id = g.ensemble.ids[g.labels == lab].min()
        if best_id is None or min_id < best_id:
            best_id = min_id
            best = int(lab)
    return best, int(biggest)


def contains_node(g: GeoGraph, component: int, node_id: int) -> bool:
    idx = np.nonzero(g.ensemble.ids == node_id)[0]
    if len(idx) == 0:
        raise NodeNotFoundError(f"no node with id {node_id}")
    return int(g.labels[idx[0]]) == int(component)


def restricted_components(g: GeoGraph, center: np.ndarray, side_s: float):
    """Components of the graph restricted to the sub-cube S.

    Only nodes inside S and edges between them count.  Returns
    (member_indices, sub_labels): global indices of the member nodes and
    a canonical label (minimum global index) per member.  On a torus the
    sub-cube must fit well inside the domain (side_s + 2r <= side).
    """
    pos = g.ensemble.positions
    center = np.asarray(center, dtype=np.float64)
    half = side_s / 2.0
    if g.domain.is_torus:
        if side_s + 2 * g.r > g.domain.side:
            raise ValueError("sub-cube too large for an unambiguous torus restriction")
        delta = min_image_delta(pos, center, g.domain.side)
    else:
        delta = pos - center
    inside = np.all(np.abs(delta) <= half, axis=1)
    members = np.nonzero(inside)[0]
    if len(members) == 0:
        return members, np.empty(0, dtype=np.int64)
    # local coordinates carry no wrap (S fits in half the torus), so the
    # restriction is an ordinary box graph on the deltas
    local = np.ascontiguousarray(delta[members])
    sub = impl.component_labels(local, float(g.r), float(g.domain.side), False)
    return members, members[sub]


def crossing_components(g: GeoGraph, center: np.ndarray, side_s: float) -> set:
    """Labels of sub-cube components crossing between every pair of faces.

    A restricted component crosses iff for every axis it contains a node
    within perpendicular distance r of the low face and one within r of
    the high face.  Labels are canonical global indices (see
    restricted_components).
    """
    members, sub_labels = restricted_components(g, center, side_s)
    if len(members) == 0:
        return set()
    pos = g.ensemble.positions[members]
    center = np.asarray(center, dtype=np.float64)
    half = side_s / 2.0
    if g.domain.is_torus:
        delta = min_image_delta(pos, center, g.domain.side)
    else:
        delta = pos - center
    out = set()
    for lab in np.unique(sub_labels):
        dl = delta[sub_labels == lab]
        crossing = True
        for k in range(dl.shape[1]):
            if not (dl[:, k].min() <= -half + g.r and dl[:, k].max() >= half - g.r):
                crossing = False
                break
        if crossing:
            out.add(int(lab))
    return out
