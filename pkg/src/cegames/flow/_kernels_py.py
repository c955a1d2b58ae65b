"""Pure-Python graph kernels: the fallback twin of the compiled module.

Both implementations share one calling convention.  Arcs come in pairs:
arc ``2k`` is the forward direction of logical edge ``k`` and ``2k ^ 1`` is
its reverse, so augmenting along arc ``a`` always credits ``a ^ 1``.  The
``residual`` array is mutated in place.
"""

from __future__ import annotations

INF = 1e300

ENGINE = "python"


def bellman_ford(n_nodes, arc_src, arc_dst, residual, cost, source, eps,
                 dist_out, parent_out):
    """Label-correcting shortest paths over arcs with positive residual.

    ``source == -1`` starts every node at distance zero (negative-cycle
    sweep); otherwise distances start at the source.  Returns a node index
    lying on a cycle of relaxable arcs if relaxation still improves after
    ``n_nodes`` rounds, else -1.  ``dist_out``/``parent_out`` receive the
    distances and predecessor arc per node.
    """
    src = arc_src.tolist()
    dst = arc_dst.tolist()
    res = residual.tolist()
    cst = cost.tolist()
    n_arcs = len(src)

    if source < 0:
        dist = [0.0] * n_nodes
    else:
        dist = [INF] * n_nodes
        dist[source] = 0.0
    parent = [-1] * n_nodes

    cycle_node = -1
    for round_no in range(n_nodes + 1):
        changed = False
        last = -1
        for a in range(n_arcs):
            if res[a] <= eps:
                continue
            du = dist[src[a]]
            if du >= INF:
                continue
            nd = du + cst[a]
            v = dst[a]
            if nd < dist[v] - 1e-14 * (1.0 + abs(dist[v])):
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


def max_flow(n_nodes, source, sink, arc_dst, residual, row_ptr, csr_arcs, eps):
    """Edmonds-Karp: BFS augmenting paths until the sink is unreachable.

    Mutates ``residual`` in place and returns the total amount pushed.
    """
    dst = arc_dst.tolist()
    res = residual.tolist()
    rp = row_ptr.tolist()
    ca = csr_arcs.tolist()

    total = 0.0
    queue = [0] * n_nodes
    while True:
        prev_arc = [-1] * n_nodes
        prev_arc[source] = -2
        queue[0] = source
        head, tail = 0, 1
        while head < tail:
            u = queue[head]
            head += 1
            if u == sink:
                break
            for k in range(rp[u], rp[u + 1]):
                a = ca[k]
                if res[a] > eps:
                    v = dst[a]
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
            if res[a] < bottleneck:
                bottleneck = res[a]
            v = dst[a ^ 1]
        if bottleneck <= eps:
            break
        v = sink
        while v != source:
            a = prev_arc[v]
            res[a] -= bottleneck
            res[a ^ 1] += bottleneck
            v = dst[a ^ 1]
        total += bottleneck
    residual[:] = res
    return total
