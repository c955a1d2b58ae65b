"""Fractional-capacity network flow engine.

Max flow, min-cost flow, shortest paths over real (possibly negative) edge
costs, and negative-cycle detection.  Capacities and costs are doubles; the
engine never assumes integral flows or nonnegative costs, since the Nash
solver routes along edges priced at ``log(-delta)``.

The inner loops live in a compiled extension when available (see
``_backend``); flows and residuals are flat arrays so both kernel flavors
share one representation.  Residual graphs are lightweight views over a
network's arc arrays, never copies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InfeasibleFlowError, NegativeCycleError
from ._backend import available_engines, engine_name, kernels, set_engine

__all__ = [
    "FlowNetwork",
    "FlowResult",
    "ResidualGraph",
    "max_flow",
    "min_cost_flow",
    "shortest_paths",
    "find_negative_cycle",
    "available_engines",
    "engine_name",
    "set_engine",
]

INF = 1e300

#: default threshold below which residual capacity counts as exhausted
ARC_EPS = 1e-12


class FlowNetwork:
    """Directed graph with fractional capacities and additive arc costs.

    Parallel edges are allowed.  Each logical edge ``k`` is stored as an
    arc pair (forward ``2k``, reverse ``2k + 1``) so residual bookkeeping is
    a single XOR away.  Networks are mutable while being built (including
    ``set_capacity`` for reuse across parametric solves) and are treated as
    read-only by the solvers, which keep all state in their own residual
    arrays.
    """

    def __init__(self, source=None, sink=None):
        self._index: dict = {}
        self._nodes: list = []
        self._edges: list = []  # (u_idx, v_idx)
        self._caps: list = []
        self._costs: list = []
        self._arrays = None
        self.source = source
        self.sink = sink
        if source is not None:
            self.add_node(source)
        if sink is not None:
            self.add_node(sink)

    def add_node(self, node) -> int:
        idx = self._index.get(node)
        if idx is None:
            idx = len(self._nodes)
            self._index[node] = idx
            self._nodes.append(node)
        return idx

    def node_index(self, node) -> int:
        return self._index[node]

    def node_at(self, index: int):
        return self._nodes[index]

    @property
    def num_nodes(self) -> int:
        return len(self._nodes)

    @property
    def num_edges(self) -> int:
        return len(self._edges)

    def add_edge(self, u, v, capacity: float, cost: float = 0.0) -> int:
        if capacity < 0.0:
            raise ValueError(f"negative capacity {capacity} on edge {u!r}->{v!r}")
        ui, vi = self.add_node(u), self.add_node(v)
        edge_id = len(self._edges)
        self._edges.append((ui, vi))
        self._caps.append(float(capacity))
        self._costs.append(float(cost))
        self._arrays = None
        return edge_id

    def set_capacity(self, edge_id: int, capacity: float) -> None:
        if capacity < 0.0:
            raise ValueError(f"negative capacity {capacity}")
        self._caps[edge_id] = float(capacity)
        if self._arrays is not None:
            self._arrays.initial[2 * edge_id] = float(capacity)

    def edge_endpoints(self, edge_id: int):
        ui, vi = self._edges[edge_id]
        return self._nodes[ui], self._nodes[vi]

    def edge_cost(self, edge_id: int) -> float:
        return self._costs[edge_id]

    def edge_capacity(self, edge_id: int) -> float:
        return self._caps[edge_id]

    def out_edges(self, node) -> list[int]:
        ui = self._index[node]
        return [e for e, (a, _) in enumerate(self._edges) if a == ui]

    def arrays(self) -> "_ArcArrays":
        if self._arrays is None:
            self._arrays = _ArcArrays(self)
        return self._arrays

    def initial_residual(self) -> np.ndarray:
        """Residual vector of the zero flow: forward arcs at capacity."""
        return self.arrays().initial.copy()

    def as_residual(self) -> "ResidualGraph":
        """View of the untouched capacities as a residual graph."""
        return ResidualGraph(self, self.initial_residual())


class _ArcArrays:
    """Flat arc-pair representation consumed by the kernels."""

    def __init__(self, net: FlowNetwork):
        n_edges = net.num_edges
        src = np.empty(2 * n_edges, dtype=np.int64)
        dst = np.empty(2 * n_edges, dtype=np.int64)
        cost = np.empty(2 * n_edges, dtype=np.float64)
        initial = np.zeros(2 * n_edges, dtype=np.float64)
        for e, (u, v) in enumerate(net._edges):
            src[2 * e], dst[2 * e] = u, v
            src[2 * e + 1], dst[2 * e + 1] = v, u
            cost[2 * e] = net._costs[e]
            cost[2 * e + 1] = -net._costs[e]
            initial[2 * e] = net._caps[e]
        order = np.argsort(src, kind="stable").astype(np.int64)
        row_ptr = np.zeros(net.num_nodes + 1, dtype=np.int64)
        np.add.at(row_ptr, src + 1, 1)
        np.cumsum(row_ptr, out=row_ptr)
        self.src = src
        self.dst = dst
        self.cost = cost
        self.initial = initial
        self.row_ptr = row_ptr
        self.csr_arcs = order


@dataclass
class FlowResult:
    """A computed flow plus the residual array it left behind."""

    network: FlowNetwork
    value: float
    residual: np.ndarray

    def edge_flow(self, edge_id: int) -> float:
        return float(self.residual[2 * edge_id + 1])

    def flows(self) -> np.ndarray:
        return self.residual[1::2].copy()

    def total_cost(self) -> float:
        costs = np.asarray(self.network._costs)
        return float(np.dot(self.flows(), costs))

    def residual_graph(self) -> "ResidualGraph":
        return ResidualGraph(self.network, self.residual)


@dataclass
class ResidualGraph:
    """Residual view: forward arcs with leftover capacity, reverse arcs with
    capacity equal to the flow already pushed (and negated cost)."""

    network: FlowNetwork
    residual: np.ndarray

    def arcs(self, eps: float = ARC_EPS):
        """Yield (u, v, residual, cost, arc_index) for usable arcs."""
        arr = self.network.arrays()
        for a in range(len(self.residual)):
            if self.residual[a] > eps:
                yield (self.network.node_at(arr.src[a]),
                       self.network.node_at(arr.dst[a]),
                       float(self.residual[a]), float(arr.cost[a]), a)

    def arc_info(self, arc_index: int):
        arr = self.network.arrays()
        return (self.network.node_at(arr.src[arc_index]),
                self.network.node_at(arr.dst[arc_index]),
                float(self.residual[arc_index]),
                float(arr.cost[arc_index]))


def max_flow(net: FlowNetwork, eps: float = ARC_EPS) -> FlowResult:
    """Maximum source-to-sink flow via BFS augmenting paths."""
    if net.source is None or net.sink is None:
        raise ValueError("network needs a designated source and sink")
    arr = net.arrays()
    residual = arr.initial.copy()
    value = kernels().max_flow(
        net.num_nodes, net.node_index(net.source), net.node_index(net.sink),
        arr.dst, residual, arr.row_ptr, arr.csr_arcs, eps,
    )
    return FlowResult(network=net, value=float(value), residual=residual)


def _run_bellman_ford(net: FlowNetwork, residual: np.ndarray, source_idx: int,
                      eps: float):
    arr = net.arrays()
    dist = np.empty(net.num_nodes, dtype=np.float64)
    parent = np.empty(net.num_nodes, dtype=np.int64)
    cycle_node = kernels().bellman_ford(
        net.num_nodes, arr.src, arr.dst, residual, arr.cost,
        source_idx, eps, dist, parent,
    )
    return dist, parent, int(cycle_node)


def _locate_negative_cycle(net: FlowNetwork, residual: np.ndarray, eps: float,
                           cost_eps: float):
    """Slow-path extraction once the kernel has flagged instability.

    Runs enough extra relaxation rounds for predecessor pointers along any
    negative cycle to settle, then hunts for a parent-graph cycle of
    negative total cost.  Returns the cycle's arc indices or None when the
    flag was numerical churn.
    """
    arr = net.arrays()
    n = net.num_nodes
    src, dst, cost = arr.src.tolist(), arr.dst.tolist(), arr.cost.tolist()
    res = residual.tolist()
    dist = [0.0] * n
    parent = [-1] * n
    for _ in range(2 * n + 2):
        changed = False
        for a in range(len(src)):
            if res[a] <= eps:
                continue
            nd = dist[src[a]] + cost[a]
            v = dst[a]
            if nd < dist[v] - 1e-14 * (1.0 + abs(dist[v])):
                dist[v] = nd
                parent[v] = a
                changed = True
        if not changed:
            return None

    state = [0] * n  # 0 unseen, 1 on current walk, 2 done
    for start in range(n):
        if state[start] or parent[start] < 0:
            continue
        walk: list[int] = []
        seen_at: dict[int, int] = {}
        cur = start
        while True:
            if state[cur] == 2 or parent[cur] < 0:
                break
            if cur in seen_at:
                arcs = walk[seen_at[cur]:]
                arcs.reverse()
                total = sum(cost[a] for a in arcs)
                if total < -cost_eps:
                    return arcs
                break
            seen_at[cur] = len(walk)
            state[cur] = 1
            walk.append(parent[cur])
            cur = src[parent[cur]]
        for v in seen_at:
            state[v] = 2
    return None


def min_cost_flow(net: FlowNetwork, eps: float = ARC_EPS,
                  feas_tol: float = 1e-9) -> FlowResult:
    """Cheapest flow saturating every source-outgoing edge.

    Successive shortest paths with Bellman-Ford search, so negative arc
    costs are fine as long as the zero flow carries no negative cycle (our
    construction sites always start acyclic).  Raises
    :class:`InfeasibleFlowError` when the source edges cannot be saturated.
    The residual of the returned flow contains no negative-cost cycle.
    """
    if net.source is None or net.sink is None:
        raise ValueError("network needs a designated source and sink")
    arr = net.arrays()
    residual = arr.initial.copy()
    s = net.node_index(net.source)
    t = net.node_index(net.sink)
    source_arcs = np.flatnonzero(arr.src[::2] == s) * 2
    demand = float(arr.initial[source_arcs].sum()) if len(source_arcs) else 0.0

    limit = 4 * net.num_edges * max(net.num_nodes, 1) + 64
    for _ in range(limit):
        if residual[source_arcs].max(initial=0.0) <= eps:
            break
        dist, parent, cycle_node = _run_bellman_ford(net, residual, s, eps)
        if cycle_node >= 0 and _locate_negative_cycle(net, residual, eps, 1e-9):
            raise NegativeCycleError(
                "negative cycle encountered during successive shortest paths"
            )
        if dist[t] >= INF:
            break
        bottleneck = INF
        v = t
        steps = 0
        while v != s:
            a = int(parent[v])
            bottleneck = min(bottleneck, residual[a])
            v = int(arr.src[a])
            steps += 1
            if steps > net.num_nodes:
                raise NegativeCycleError("shortest-path parent chain is cyclic")
        if bottleneck <= eps:
            break
        v = t
        while v != s:
            a = int(parent[v])
            residual[a] -= bottleneck
            residual[a ^ 1] += bottleneck
            v = int(arr.src[a])

    shortfall = float(residual[source_arcs].sum()) if len(source_arcs) else 0.0
    if shortfall > feas_tol * max(1.0, demand):
        raise InfeasibleFlowError(
            f"cannot saturate source edges: {shortfall} capacity left of {demand}"
        )
    return FlowResult(network=net, value=demand - shortfall, residual=residual)


def shortest_paths(res: ResidualGraph, source, eps: float = ARC_EPS) -> dict:
    """Exact shortest distances from ``source`` over usable residual arcs.

    Distances may be negative; unreachable nodes map to ``math.inf``.
    Raises :class:`NegativeCycleError` if relaxation fails to stabilize.
    """
    net = res.network
    dist, _, cycle_node = _run_bellman_ford(
        net, res.residual, net.node_index(source), eps
    )
    if cycle_node >= 0 and _locate_negative_cycle(net, res.residual, eps, 1e-9):
        raise NegativeCycleError(
            f"negative cycle reachable while relaxing from {source!r}"
        )
    inf = float("inf")
    return {
        net.node_at(v): (float(dist[v]) if dist[v] < INF else inf)
        for v in range(net.num_nodes)
    }


def find_negative_cycle(res: ResidualGraph, eps: float = ARC_EPS,
                        cost_eps: float = 1e-9):
    """A negative-total-cost cycle of usable arcs, or None.

    Returns the cycle as a list of arc indices; ``res.arc_info`` decodes
    endpoints and costs.
    """
    net = res.network
    if net.num_edges == 0:
        return None
    _, _, cycle_node = _run_bellman_ford(net, res.residual, -1, eps)
    if cycle_node < 0:
        return None
    return _locate_negative_cycle(net, res.residual, eps, cost_eps)
