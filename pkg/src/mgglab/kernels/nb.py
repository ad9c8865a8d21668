"""Numba kernel implementations.

Each function mirrors its twin in ``pure`` exactly: same inputs, same
outputs, same floating-point evaluation order on the hot comparisons.
"""

import numpy as np
from numba import njit

from .pure import pairwise_adjacency  # not hot; shared implementation


@njit(cache=True)
def _find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


@njit(cache=True)
def _union(parent, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra < rb:
        parent[rb] = ra
    elif rb < ra:
        parent[ra] = rb


@njit(cache=True)
def _canonical(parent):
    n = len(parent)
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        out[i] = _find(parent, i)
    # root of a set is always its minimum element by the union rule
    return out


@njit(cache=True)
def _brute_components(pos, r2, side, torus, parent):
    n, d = pos.shape
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            for k in range(d):
                diff = pos[i, k] - pos[j, k]
                if torus:
                    diff = diff - side * np.floor(diff / side + 0.5)
                acc += diff * diff
            if acc <= r2:
                _union(parent, i, j)


@njit(cache=True)
def component_labels(pos, r, side, torus):
    """Connected-component label per node at adjacency radius r.

    Labels are the minimum node index of each component.  Uses a cell
    list with cell side >= r so only 3^d neighbor cells need checking;
    falls back to the O(n^2) loop for tiny inputs or tori with fewer
    than 3 cells per axis (where neighbor offsets would alias).
    """
    n, d = pos.shape
    parent = np.arange(n)
    if n < 2:
        return parent
    r2 = r * r

    lo = np.empty(d)
    ncell = np.empty(d, dtype=np.int64)
    csize = np.empty(d)
    cap = int(2.0 * n ** (1.0 / d)) + 1
    use_cells = n >= 50
    for k in range(d):
        if torus:
            lo[k] = 0.0
            m = int(side / r)
            if m > cap:
                m = cap
            if m < 3:
                use_cells = False
                m = 1
            ncell[k] = m
            csize[k] = side / m
        else:
            mn = pos[0, k]
            mx = pos[0, k]
            for i in range(1, n):
                v = pos[i, k]
                if v < mn:
                    mn = v
                if v > mx:
                    mx = v
            ext = mx - mn
            m = int(ext / r)
            if m > cap:
                m = cap
            if m < 1:
                m = 1
            lo[k] = mn
            ncell[k] = m
            csize[k] = ext / m if ext > 0 else 1.0

    if not use_cells:
        _brute_components(pos, r2, side, torus, parent)
        return _canonical(parent)

    total = 1
    for k in range(d):
        total *= ncell[k]

    cid = np.empty(n, dtype=np.int64)
    for i in range(n):
        f = 0
        for k in range(d):
            c = int((pos[i, k] - lo[k]) / csize[k])
            if c >= ncell[k]:
                c = ncell[k] - 1
            if c < 0:
                c = 0
            f = f * ncell[k] + c
        cid[i] = f

    startv = np.zeros(total + 1, dtype=np.int64)
    for i in range(n):
        startv[cid[i] + 1] += 1
    for c in range(total):
        startv[c + 1] += startv[c]
    order = np.empty(n, dtype=np.int64)
    cursor = startv[:total].copy()
    for i in range(n):
        order[cursor[cid[i]]] = i
        cursor[cid[i]] += 1

    noff = 3 ** d
    ci = np.empty(d, dtype=np.int64)
    cj = np.empty(d, dtype=np.int64)
    for i in range(n):
        f = cid[i]
        for k in range(d - 1, -1, -1):
            ci[k] = f % ncell[k]
            f //= ncell[k]
        for off in range(noff):
            o = off
            ok = True
            for k in range(d - 1, -1, -1):
                delta = o % 3 - 1
                o //= 3
                c = ci[k] + delta
                if torus:
                    if c < 0:
                        c += ncell[k]
                    elif c >= ncell[k]:
                        c -= ncell[k]
                else:
                    if c < 0 or c >= ncell[k]:
                        ok = False
                        break
                cj[k] = c
            if not ok:
                continue
            fj = 0
            for k in range(d):
                fj = fj * ncell[k] + cj[k]
            for jj in range(startv[fj], startv[fj + 1]):
                j = order[jj]
                if j <= i:
                    continue
                acc = 0.0
                for k in range(d):
                    diff = pos[i, k] - pos[j, k]
                    if torus:
                        diff = diff - side * np.floor(diff / side + 0.5)
                    acc += diff * diff
                if acc <= r2:
                    _union(parent, i, j)
    return _canonical(parent)


@njit(cache=True)
def first_hit(start, disp, traj, r, killr):
    """First step i with |node_i - traj_i| <= r, else t; see the pure twin."""
    n, d = start.shape
    t = traj.shape[0]
    out = np.full(n, t, dtype=np.int64)
    r2 = r * r
    p = np.empty(d)
    for j in range(n):
        for k in range(d):
            p[k] = start[j, k]
        for i in range(t):
            acc = (p[0] - traj[i, 0]) ** 2
            for k in range(1, d):
                acc = acc + (p[k] - traj[i, k]) ** 2
            if acc <= r2:
                out[j] = i
                break
            kr = killr[i]
            dead = False
            for k in range(d):
                diff = p[k] - traj[i, k]
                if diff > kr or -diff > kr:
                    dead = True
                    break
            if dead:
                break
            if i < t - 1:
                for k in range(d):
                    p[k] += disp[j, i, k]
    return out


@njit(cache=True)
def hit_counts(start, disp, traj, r):
    """Per-step and per-node detection counts without abandonment."""
    n, d = start.shape
    t = traj.shape[0]
    per_step = np.zeros(t, dtype=np.int64)
    per_node = np.zeros(n, dtype=np.int64)
    r2 = r * r
    p = np.empty(d)
    for j in range(n):
        for k in range(d):
            p[k] = start[j, k]
        for i in range(t):
            acc = (p[0] - traj[i, 0]) ** 2
            for k in range(1, d):
                acc = acc + (p[k] - traj[i, k]) ** 2
            if acc <= r2:
                per_step[i] += 1
                per_node[j] += 1
            if i < t - 1:
                for k in range(d):
                    p[k] += disp[j, i, k]
    return per_step, per_node


@njit(cache=True)
def sausage_hits(path, probes, r):
    """Number of probes within r of some path point, via a cell grid."""
    t, d = path.shape
    m = probes.shape[0]
    if t == 0 or m == 0:
        return 0
    r2 = r * r

    lo = np.empty(d)
    ncell = np.empty(d, dtype=np.int64)
    csize = np.empty(d)
    cap = int(4.0 * t ** (1.0 / d)) + 1
    for k in range(d):
        mn = path[0, k]
        mx = path[0, k]
        for i in range(1, t):
            v = path[i, k]
            if v < mn:
                mn = v
            if v > mx:
                mx = v
        lo[k] = mn - r
        ext = mx - mn + 2 * r
        nc = int(ext / r)
        if nc > cap:
            nc = cap
        if nc < 1:
            nc = 1
        ncell[k] = nc
        csize[k] = ext / nc

    total = 1
    for k in range(d):
        total *= ncell[k]
    cid = np.empty(t, dtype=np.int64)
    for i in range(t):
        f = 0
        for k in range(d):
            c = int((path[i, k] - lo[k]) / csize[k])
            if c >= ncell[k]:
                c = ncell[k] - 1
            if c < 0:
                c = 0
            f = f * ncell[k] + c
        cid[i] = f
    startv = np.zeros(total + 1, dtype=np.int64)
    for i in range(t):
        startv[cid[i] + 1] += 1
    for c in range(total):
        startv[c + 1] += startv[c]
    order = np.empty(t, dtype=np.int64)
    cursor = startv[:total].copy()
    for i in range(t):
        order[cursor[cid[i]]] = i
        cursor[cid[i]] += 1

    noff = 3 ** d
    ci = np.empty(d, dtype=np.int64)
    cj = np.empty(d, dtype=np.int64)
    hits = 0
    for q in range(m):
        for k in range(d):
            c = int((probes[q, k] - lo[k]) / csize[k])
            if c >= ncell[k]:
                c = ncell[k] - 1
            if c < 0:
                c = 0
            ci[k] = c
        found = False
        for off in range(noff):
            if found:
                break
            o = off
            ok = True
            for k in range(d - 1, -1, -1):
                delta = o % 3 - 1
                o //= 3
                c = ci[k] + delta
                if c < 0 or c >= ncell[k]:
                    ok = False
                    break
                cj[k] = c
            if not ok:
                continue
            fj = 0
            for k in range(d):
                fj = fj * ncell[k] + cj[k]
            for jj in range(startv[fj], startv[fj + 1]):
                i = order[jj]
                acc = 0.0
                for k in range(d):
                    diff = probes[q, k] - path[i, k]
                    acc += diff * diff
                if acc <= r2:
                    found = True
                    break
        if found:
            hits += 1
    return hits
