"""Pure-numpy kernel implementations.

Semantically the reference backend: every function here defines the
contract the numba twins in ``nb`` must reproduce on identical inputs.
"""

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree


def _dist2(pos: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Squared distances from rows of pos to the point c.

    Written coordinate by coordinate so the floating-point evaluation
    order matches the numba twin exactly.
    """
    d = pos.shape[1]
    acc = (pos[:, 0] - c[0]) ** 2
    for k in range(1, d):
        acc = acc + (pos[:, k] - c[k]) ** 2
    return acc


def component_labels(pos: np.ndarray, r: float, side: float, torus: bool) -> np.ndarray:
    """Connected-component label per node at adjacency radius r.

    The label of a component is the smallest node index it contains.
    Torus positions must be canonical in [0, side).
    """
    n = len(pos)
    if n == 0:
        return np.empty(0, dtype=np.int64)
    tree = cKDTree(pos, boxsize=side if torus else None)
    pairs = tree.query_pairs(r, output_type="ndarray")
    if len(pairs) == 0:
        return np.arange(n, dtype=np.int64)
    data = np.ones(len(pairs), dtype=np.int8)
    mat = coo_matrix((data, (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    ncomp, lab = connected_components(mat, directed=False)
    canon = np.full(ncomp, n, dtype=np.int64)
    np.minimum.at(canon, lab, np.arange(n, dtype=np.int64))
    return canon[lab]


def first_hit(start: np.ndarray, disp: np.ndarray, traj: np.ndarray,
              r: float, killr: np.ndarray) -> np.ndarray:
    """First step i with |node_i - traj_i| <= r, else t.

    Nodes are checked at step i before moving by disp[:, i].  A node is
    abandoned (recorded as t, no hit) as soon as some coordinate differs
    from the target's by more than killr[i]; killr must be conservative
    enough that abandoned nodes could not have hit later.
    """
    n, d = start.shape
    t = len(traj)
    out = np.full(n, t, dtype=np.int64)
    idx = np.arange(n, dtype=np.int64)
    pos = start.copy()
    r2 = r * r
    for i in range(t):
        c = traj[i]
        d2 = _dist2(pos, c)
        hit = d2 <= r2
        out[idx[hit]] = i
        keep = ~hit
        if killr[i] < np.inf:
            dead = np.abs(pos - c).max(axis=1) > killr[i]
            keep &= ~dead
        idx = idx[keep]
        if len(idx) == 0:
            break
        pos = pos[keep]
        if i < t - 1:
            pos = pos + disp[idx, i]
    return out


def hit_counts(start: np.ndarray, disp: np.ndarray, traj: np.ndarray,
               r: float) -> tuple:
    """Detection counts without abandonment.

    Returns (per_step, per_node): per_step[i] is the number of nodes
    within r of traj[i] at step i; per_node[j] the number of steps at
    which node j is within r.
    """
    n, d = start.shape
    t = len(traj)
    per_step = np.zeros(t, dtype=np.int64)
    per_node = np.zeros(n, dtype=np.int64)
    pos = start.copy()
    r2 = r * r
    for i in range(t):
        hit = _dist2(pos, traj[i]) <= r2
        per_step[i] = int(hit.sum())
        per_node += hit
        if i < t - 1:
            pos = pos + disp[:, i]
    return per_step, per_node


def sausage_hits(path: np.ndarray, probes: np.ndarray, r: float) -> int:
    """Number of probe points within r of at least one path point."""
    if len(probes) == 0 or len(path) == 0:
        return 0
    tree = cKDTree(path)
    dist, _ = tree.query(probes, k=1, distance_upper_bound=np.nextafter(r, np.inf))
    return int(np.count_nonzero(dist <= r))


def pairwise_adjacency(pos: np.ndarray, r: float, side: float, torus: bool) -> np.ndarray:
    """Dense O(n^2) adjacency for small point sets; (m, 2) index pairs i<j."""
    n = len(pos)
    if n < 2:
        return np.empty((0, 2), dtype=np.int64)
    delta = pos[:, None, :] - pos[None, :, :]
    if torus:
        delta = delta - side * np.round(delta / side)
    d2 = np.einsum("ijk,ijk->ij", delta, delta)
    iu, ju = np.triu_indices(n, k=1)
    ok = d2[iu, ju] <= r * r
    return np.stack([iu[ok], ju[ok]], axis=1).astype(np.int64)
