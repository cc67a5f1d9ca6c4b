"""Primal network simplex core for transportation problems.

Solves  min sum_ij cost[i, j] * x[i, j]
        s.t. sum_j x[i, j] = a[i],  sum_i x[i, j] = b[j],  x >= 0

on the complete bipartite graph, returning a basic optimal solution
(a spanning tree) together with node potentials.  The implementation
follows the classical strongly-feasible-tree scheme: an artificial
root node provides the initial basis, the entering arc is picked by
deterministic block search (most negative reduced cost within the
block, lowest arc id on ties), and the leaving arc is the last
blocking arc encountered from the cycle apex, which preserves strong
feasibility and rules out cycling.

Everything here is numba-compiled; the public wrapper lives in
``cotq.transport``.
"""

from __future__ import annotations

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_INFEASIBLE = 1
STATUS_STALLED = 2


@njit(cache=True, nogil=True, inline="always")
def _pair_cost(dense, cost, src, tgt, i, j):
    """Cost of arc (source i, target j): stored entry or half squared
    distance computed from the coordinates."""
    if dense:
        return cost[i, j]
    acc = 0.0
    for t in range(src.shape[1]):
        diff = tgt[j, t] - src[i, t]
        acc += diff * diff
    return 0.5 * acc


@njit(cache=True, nogil=True)
def _recompute_tree(parent, up, dense, cost, src, tgt, N, n, big,
                    pot, depth, off, cursor, child_buf, stack):
    """Rebuild potentials and depths of the current spanning tree in O(V)."""
    V = parent.shape[0]
    root = V - 1
    for v in range(V + 1):
        off[v] = 0
    for v in range(V - 1):  # root has no parent arc
        off[parent[v] + 1] += 1
    for v in range(V):
        off[v + 1] += off[v]
    for v in range(V + 1):
        cursor[v] = off[v]
    for v in range(V - 1):
        p = parent[v]
        child_buf[cursor[p]] = v
        cursor[p] += 1

    pot[root] = 0.0
    depth[root] = 0
    top = 0
    stack[top] = root
    top += 1
    while top > 0:
        top -= 1
        u = stack[top]
        for idx in range(off[u], off[u + 1]):
            v = child_buf[idx]
            if v < N:
                carc = big if u == root else _pair_cost(dense, cost, src, tgt, v, u - N)
            elif v < N + n:
                carc = big if u == root else _pair_cost(dense, cost, src, tgt, u, v - N)
            else:
                carc = big
            if up[v]:
                pot[v] = carc + pot[u]
            else:
                pot[v] = pot[u] - carc
            depth[v] = depth[u] + 1
            stack[top] = v
            top += 1


@njit(cache=True, nogil=True)
def bellman_longest(MT, diag, improve_tol):
    """Longest-path potentials from node 0 on the complete graph with
    edge weight MT[k, i] - diag[k] from k to i.

    Label-correcting sweeps in alternating index order; returns
    (phi, passes, converged).  Non-convergence after N+1 sweeps means a
    positive cycle exists.
    """
    N = MT.shape[0]
    phi = np.full(N, -np.inf)
    phi[0] = 0.0
    for p in range(N + 1):
        changed = False
        for kk in range(N):
            k = kk if p % 2 == 0 else N - 1 - kk
            pk = phi[k]
            if pk == -np.inf:
                continue
            base = pk - diag[k]
            row = MT[k]
            for i in range(N):
                cand = base + row[i]
                if cand > phi[i] + improve_tol:
                    phi[i] = cand
                    changed = True
        if not changed:
            return phi, p + 1, True
    return phi, N + 1, False


@njit(cache=True, nogil=True)
def network_simplex(cost, src, tgt, dense, a, b, block_size, opt_tol, max_pivots):
    """Run the simplex loop; returns (parent, up, tflow, pot, status, pivots).

    With ``dense`` set, arc costs come from the ``cost`` matrix;
    otherwise they are computed on the fly from the point coordinates
    ``src``/``tgt`` (half squared Euclidean distance), which keeps the
    memory footprint linear for very large instances.
    """
    N = a.shape[0]
    n = b.shape[0]
    V = N + n + 1
    root = N + n

    parent = np.empty(V, np.int64)
    up = np.empty(V, np.bool_)
    tflow = np.empty(V, np.float64)
    pot = np.empty(V, np.float64)
    depth = np.empty(V, np.int64)
    off = np.empty(V + 1, np.int64)
    cursor = np.empty(V + 1, np.int64)
    child_buf = np.empty(V, np.int64)
    stack = np.empty(V, np.int64)
    path_i = np.empty(V, np.int64)
    path_j = np.empty(V, np.int64)

    if dense:
        cmax = 0.0
        for i in range(N):
            for j in range(n):
                c = cost[i, j]
                if c > cmax:
                    cmax = c
    else:
        # upper bound from the joint bounding box; only used to scale
        # the artificial cost and the pivot tolerance
        cmax = 0.0
        for t in range(src.shape[1]):
            lo = src[0, t]
            hi = src[0, t]
            for i in range(N):
                v = src[i, t]
                if v < lo:
                    lo = v
                if v > hi:
                    hi = v
            for j in range(n):
                v = tgt[j, t]
                if v < lo:
                    lo = v
                if v > hi:
                    hi = v
            cmax += 0.5 * (hi - lo) * (hi - lo)
    big = cmax + 1.0
    tol = opt_tol * (1.0 + cmax)

    # initial basis: every node hangs off the artificial root
    parent[root] = -1
    up[root] = False
    tflow[root] = 0.0
    pot[root] = 0.0
    depth[root] = 0
    for i in range(N):
        parent[i] = root
        up[i] = True
        tflow[i] = a[i]
        pot[i] = big
        depth[i] = 1
    for j in range(n):
        v = N + j
        parent[v] = root
        up[v] = False
        tflow[v] = b[j]
        pot[v] = -big
        depth[v] = 1

    narcs = N * n
    if block_size <= 0:
        block_size = int(np.sqrt(narcs)) + 1
    if block_size > narcs:
        block_size = narcs

    start = 0
    pivots = 0
    while True:
        # --- entering arc: deterministic block search ---
        enter = -1
        best = -tol
        scanned = 0
        pos = start
        while scanned < narcs:
            stop = pos + block_size
            if stop > narcs:
                stop = narcs
            for arc in range(pos, stop):
                i = arc // n
                j = arc - i * n
                red = _pair_cost(dense, cost, src, tgt, i, j) - pot[i] + pot[N + j]
                if red < best:
                    best = red
                    enter = arc
            scanned += stop - pos
            pos = stop
            if pos >= narcs:
                pos = 0
            if enter >= 0:
                break
        if enter < 0:
            break  # optimal
        start = pos

        pivots += 1
        if pivots > max_pivots:
            return parent, up, tflow, pot, STATUS_STALLED, pivots

        ei = enter // n
        ejv = N + enter - ei * n

        # --- cycle: climb both endpoints to the common apex ---
        u1 = ei
        u2 = ejv
        li = 0
        lj = 0
        while u1 != u2:
            if depth[u1] >= depth[u2]:
                path_i[li] = u1
                li += 1
                u1 = parent[u1]
            else:
                path_j[lj] = u2
                lj += 1
                u2 = parent[u2]

        # --- ratio test; leaving arc = last blocking arc from the apex ---
        # traversal order: apex -> ei (reverse of path_i), enter, ejv -> apex
        delta = np.inf
        leave = np.int64(-1)  # node owning the leaving tree arc
        leave_on_i = False
        for t in range(li - 1, -1, -1):
            v = path_i[t]
            if up[v]:  # arc v->parent opposes the cycle direction
                f = tflow[v]
                if f < delta:
                    delta = f
                    leave = v
                    leave_on_i = True
                elif f == delta:
                    leave = v
                    leave_on_i = True
        for t in range(lj):
            v = path_j[t]
            if not up[v]:
                f = tflow[v]
                if f < delta:
                    delta = f
                    leave = v
                    leave_on_i = False
                elif f == delta:
                    leave = v
                    leave_on_i = False

        # a transportation cycle always contains a blocking arc
        if leave < 0:
            return parent, up, tflow, pot, STATUS_INFEASIBLE, pivots

        # --- update flows around the cycle ---
        if delta > 0.0:
            for t in range(li):
                v = path_i[t]
                if up[v]:
                    tflow[v] -= delta
                else:
                    tflow[v] += delta
            for t in range(lj):
                v = path_j[t]
                if up[v]:
                    tflow[v] += delta
                else:
                    tflow[v] -= delta

        # --- restructure: re-root the detached subtree at q, hang it on p ---
        if leave_on_i:
            q = ei
            q_up = True  # entering arc ei -> ejv leaves q
        else:
            q = ejv
            q_up = False

        prev = q
        prev_up = q_up
        prev_flow = delta
        v = q
        while True:
            nxt = parent[v]
            v_up = up[v]
            v_flow = tflow[v]
            if v != prev:
                parent[v] = prev
                up[v] = not prev_up
                tflow[v] = prev_flow
            if v == leave:
                break
            prev = v
            prev_up = v_up
            prev_flow = v_flow
            v = nxt
        parent[q] = ejv if leave_on_i else ei
        up[q] = q_up
        tflow[q] = delta

        _recompute_tree(parent, up, dense, cost, src, tgt, N, n, big,
                        pot, depth, off, cursor, child_buf, stack)

    return parent, up, tflow, pot, STATUS_OK, pivots
