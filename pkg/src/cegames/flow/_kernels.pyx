# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled graph kernels: the hot inner loops of the flow engine.

Same calling convention as the pure-Python twin in ``_kernels_py``: arcs in
forward/reverse pairs (``a ^ 1`` is the mate of ``a``), ``residual`` mutated
in place.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef double INF = 1e300

ENGINE = "compiled"


def bellman_ford(long long n_nodes,
                 long long[::1] arc_src, long long[::1] arc_dst,
                 double[::1] residual, double[::1] cost,
                 long long source, double eps,
                 double[::1] dist_out, long long[::1] parent_out):
    cdef long long n_arcs = arc_src.shape[0]
    cdef long long a, v, u, round_no, last, cycle_node
    cdef double du, nd, dv
    cdef bint changed

    cdef double[::1] dist = np.empty(n_nodes, dtype=np.float64)
    cdef long long[::1] parent = np.empty(n_nodes, dtype=np.int64)
    for v in range(n_nodes):
        dist[v] = 0.0 if source < 0 else INF
        parent[v] = -1
    if source >= 0:
        dist[source] = 0.0

    cycle_node = -1
    for round_no in range(n_nodes + 1):
        changed = False
        last = -1
        for a in range(n_arcs):
            if residual[a] <= eps:
                continue
            u = arc_src[a]
            du = dist[u]
            if du >= INF:
                continue
            nd = du + cost[a]
            v = arc_dst[a]
            dv = dist[v]
            if nd < dv - 1e-14 * (1.0 + (dv if dv >= 0 else -dv)):
                dist[v] = nd
                parent[v] = a
                changed = True
                last = v
        if not changed:
            break
        if round_no == n_nodes:
            cycle_node = last
    for v in range(n_nodes):
        dist_out[v] = dist[v]
        parent_out[v] = parent[v]
    return cycle_node


def max_flow(long long n_nodes, long long source, long long sink,
             long long[::1] arc_dst, double[::1] residual,
             long long[::1] row_ptr, long long[::1] csr_arcs,
             double eps):
    cdef long long[::1] prev_arc = np.empty(n_nodes, dtype=np.int64)
    cdef long long[::1] queue = np.empty(n_nodes, dtype=np.int64)
    cdef long long head, tail, u, v, k, a
    cdef double total = 0.0
    cdef double bottleneck

    while True:
        for v in range(n_nodes):
            prev_arc[v] = -1
        prev_arc[source] = -2
        queue[0] = source
        head = 0
        tail = 1
        while head < tail:
            u = queue[head]
            head += 1
            if u == sink:
                break
            for k in range(row_ptr[u], row_ptr[u + 1]):
                a = csr_arcs[k]
                if residual[a] > eps:
                    v = arc_dst[a]
                    if prev_arc[v] == -1:
                        prev_arc[v] = a
                        queue[tail] = v
                        tail += 1
        if prev_arc[sink] == -1:
            break
        bottleneck = INF
        v = sink
        while v != source:
            a = prev_arc[v]
            if residual[a] < bottleneck:
                bottleneck = residual[a]
            v = arc_dst[a ^ 1]
        if bottleneck <= eps:
            break
        v = sink
        while v != source:
            a = prev_arc[v]
            residual[a] -= bottleneck
            residual[a ^ 1] += bottleneck
            v = arc_dst[a ^ 1]
        total += bottleneck
    return total
