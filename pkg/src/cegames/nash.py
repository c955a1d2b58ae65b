"""Nash equilibrium solver for catcher-evader games.

The solver starts from an equilibrium of the game with zero catcher
coverage (evaders greedily on their best base-utility sites) and grows the
coverage to the catcher's full budget while keeping the profile an
equilibrium at every step.  Each round runs up to three phases:

  realloc    rebalance evader mass across active edges by a min-cost flow
             priced at ``log(-delta)``, which clears negative residual
             cycles without moving any totals;
  increase   raise coverage on open boundary sites at rates derived from
             residual shortest-path distances, stopping exactly when a site
             saturates or an inactive edge reaches its threshold;
  reroute    when no site qualifies for an increase, shift evader mass away
             from open boundary sites (max-flow feasibility inside a binary
             search over the threshold drop) so the catcher's threshold
             strictly falls and a later increase can succeed.

Every phase preserves the equilibrium of the coverage-restricted game; the
trace records enough per-iteration state to assert that externally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    CEGame,
    DEFAULT_TOL,
    EquilibriumReport,
    ProfileView,
    StrategyProfile,
    Tolerances,
    profile_view,
    require_valid,
    verify_equilibrium,
)
from .errors import (
    InvariantViolationError,
    IterationLimitError,
    NumericDegeneracyError,
    ValidationError,
)
from .flow import FlowNetwork, max_flow, min_cost_flow, shortest_paths

__all__ = [
    "IterationTrace",
    "SolveOptions",
    "NashSolution",
    "IncreaseOutcome",
    "RerouteOutcome",
    "initialize_evaders",
    "reallocate_min_cost",
    "increase_coverage",
    "reroute_decrease_theta0",
    "solve_nash",
    "iteration_bound",
]

_SIGMA = "source"
_TAU = "sink"


def _evader_node(i: int) -> tuple:
    return ("evader", i)


def _site_node(s: int) -> tuple:
    return ("site", s)


@dataclass(frozen=True)
class IterationTrace:
    """One solver phase: what ran, how far it moved, and the boundary state
    it left behind."""

    step: int
    phase: str  # "realloc" | "increase-success" | "increase-fail" | "reroute"
    delta: float
    theta0: float | None
    catcher_allocated: float
    boundary_open: frozenset
    entered_boundary: frozenset


@dataclass(frozen=True)
class SolveOptions:
    eps: float = 1e-9
    eps_equilibrium: float = 1e-6
    max_iterations: int | None = None
    trace: bool = True
    check_invariants: bool = False
    stall_limit: int = 3

    def tolerances(self) -> Tolerances:
        return Tolerances(eps=self.eps, eps_equilibrium=self.eps_equilibrium)


@dataclass
class NashSolution:
    profile: StrategyProfile
    trace: list
    iterations: int
    verified: EquilibriumReport


@dataclass(frozen=True)
class IncreaseOutcome:
    success: bool
    delta: float = 0.0
    profile: StrategyProfile | None = None
    pivot_site: int | None = None
    site_rates: np.ndarray | None = None
    evader_rates: np.ndarray | None = None


@dataclass(frozen=True)
class RerouteOutcome:
    delta: float
    profile: StrategyProfile
    delta_cap: float
    resolution: float


def iteration_bound(game: CEGame) -> int:
    """Worst-case round count, capped at 10^6 once the exponential term
    dwarfs that."""
    n, m = game.num_evaders, game.num_sites
    if n * m * math.log10(3.0) > 12:
        return 1_000_000
    return min(2 * m + 4 * m * 3 ** (n * m), 1_000_000)


def initialize_evaders(game: CEGame) -> StrategyProfile:
    """Equilibrium of the game with zero catcher coverage.

    Each evader greedily fills sites in decreasing base-utility order (ties
    toward the lowest index) up to its caps; the catcher places nothing.
    """
    require_valid(game)
    profile = StrategyProfile.zeros(game)
    for i in game.evaders:
        budget = float(game.resources[i])
        caps = game.limits[i]
        for s in sorted(range(game.num_sites), key=lambda s: (-game.base[i, s], s)):
            if budget <= 0.0:
                break
            take = min(float(caps[s]), budget)
            profile.alloc[i, s] = take
            budget -= take
    return profile


def _edge_weight(game: CEGame, i: int, s: int) -> float:
    return math.log(-float(game.delta[i, s]))


def _add_graph_nodes(net: FlowNetwork, game: CEGame) -> None:
    for i in game.evaders:
        net.add_node(_evader_node(i))
    for s in range(game.num_sites):
        net.add_node(_site_node(s))


def _add_bipartite_residual(net: FlowNetwork, game: CEGame,
                            profile: StrategyProfile, view: ProfileView,
                            tol: Tolerances) -> dict:
    """Residual arcs of the active-edge flow defined by the profile itself:
    forward headroom ``limit - x`` and backward mass ``x``, priced at
    ``log(-delta)`` and its negation.  Returns (i, s) -> (fwd, bwd) ids."""
    edges = {}
    x = profile.alloc
    for i, s in view.active_edges:
        w = _edge_weight(game, i, s)
        fwd = bwd = None
        if not tol.is_saturated(x[i, s], game.limits[i, s]):
            fwd = net.add_edge(_evader_node(i), _site_node(s),
                               float(game.limits[i, s] - x[i, s]), w)
        if tol.is_positive(x[i, s]):
            bwd = net.add_edge(_site_node(s), _evader_node(i),
                               float(x[i, s]), -w)
        edges[(i, s)] = (fwd, bwd)
    return edges


def reallocate_min_cost(game: CEGame, profile: StrategyProfile,
                        tol: Tolerances = DEFAULT_TOL) -> StrategyProfile:
    """Rebalance evader mass across active edges at minimum total cost.

    The flow network routes each evader's boundary mass back onto its
    boundary sites with arc costs ``log(-delta)``, so the optimal flow is
    the allocation whose residual carries no negative cycle.  Per-site
    evader totals, catcher coverage, marginal utilities, thresholds, and
    the active edge set are all unchanged.
    """
    view = profile_view(game, profile, tol)
    net = FlowNetwork(source=_SIGMA, sink=_TAU)
    _add_graph_nodes(net, game)
    x = profile.alloc

    edge_ids = {}
    for i, s in view.active_edges:
        edge_ids[(i, s)] = net.add_edge(
            _evader_node(i), _site_node(s),
            float(game.limits[i, s]), _edge_weight(game, i, s),
        )
    for i in game.evaders:
        cap = float(sum(x[i, s] for s in view.boundary[i]))
        net.add_edge(_SIGMA, _evader_node(i), cap)
    for s in range(game.num_sites):
        cap = float(sum(x[i, s] for i in game.evaders if s in view.boundary[i]))
        net.add_edge(_site_node(s), _TAU, cap)

    result = min_cost_flow(net)
    out = profile.copy()
    for (i, s), e in edge_ids.items():
        out.alloc[i, s] = result.edge_flow(e)
    return out


def increase_coverage(game: CEGame, profile: StrategyProfile,
                      tol: Tolerances = DEFAULT_TOL) -> IncreaseOutcome:
    """Try to raise catcher coverage without breaking any best response.

    Scans open boundary sites in index order for a pivot whose residual
    shortest-path tree stays inside the open boundary; coverage then grows
    at per-site rates ``exp(-dist)`` while every evader threshold falls at
    its own ``exp(-dist)`` rate.  The step size starts at what would spend
    the remaining budget and is clamped by the first site saturation and by
    the first inactive edge whose margin over its threshold would close.
    Fails (without touching the profile) when no pivot qualifies.
    """
    view = profile_view(game, profile, tol)
    if view.thresholds[0] is None or not view.open_boundary:
        return IncreaseOutcome(success=False)

    m = game.num_sites
    net = FlowNetwork()
    _add_graph_nodes(net, game)
    _add_bipartite_residual(net, game, profile, view, tol)
    residual = net.as_residual()

    pivot = None
    dist_map = None
    for s_star in sorted(view.open_boundary):
        dist_map = shortest_paths(residual, _site_node(s_star))
        reachable = {s for s in range(m) if dist_map[_site_node(s)] != math.inf}
        if reachable <= view.open_boundary:
            pivot = s_star
            break
    if pivot is None:
        return IncreaseOutcome(success=False)

    site_rate = np.zeros(m)
    for s in range(m):
        d = dist_map[_site_node(s)]
        if d != math.inf:
            site_rate[s] = math.exp(-d)
    evader_rate = np.zeros(game.num_players)
    for i in game.evaders:
        d = dist_map[_evader_node(i)]
        if d != math.inf:
            evader_rate[i] = math.exp(-d)

    x0 = profile.alloc[0]
    remaining = float(game.resources[0]) - float(x0.sum())
    delta = remaining / float(site_rate.sum())
    for s in range(m):
        if site_rate[s] > 0.0:
            delta = min(delta, float(game.limits[0, s] - x0[s]) / site_rate[s])
    mu = view.per_resource
    for i in game.evaders:
        th = view.thresholds[i]
        if th is None:
            continue
        for s in range(m):
            if s in view.boundary[i]:
                continue
            denom = site_rate[s] * (-float(game.delta[i, s])) - evader_rate[i]
            if denom == 0.0:
                continue  # margin and threshold drift at equal rates
            step = (float(mu[i, s]) - th) / denom
            if step > 0.0:
                delta = min(delta, step)

    out = profile.copy()
    out.alloc[0] = np.minimum(x0 + delta * site_rate, game.limits[0])
    return IncreaseOutcome(
        success=True,
        delta=float(delta),
        profile=out,
        pivot_site=pivot,
        site_rates=site_rate,
        evader_rates=evader_rate,
    )


def reroute_decrease_theta0(game: CEGame, profile: StrategyProfile,
                            tol: Tolerances = DEFAULT_TOL) -> RerouteOutcome:
    """Shift evader mass off the open boundary so the catcher threshold drops.

    Binary-searches the largest threshold drop for which a max flow can
    simultaneously drain ``delta / delta0`` mass from every open boundary
    site (source edges) while no below-threshold site absorbs enough mass
    to overshoot the new threshold (sink edges; sites the catcher can never
    cover more are uncapped).  The chosen drop is snapped to the nearest
    exact constraint boundary so new boundary memberships are crisp.
    """
    view = profile_view(game, profile, tol)
    theta0 = view.thresholds[0]
    if theta0 is None:
        raise ValidationError("catcher threshold undefined: all sites saturated")
    mu0 = view.per_resource[0]
    d0 = game.delta[0]
    m = game.num_sites
    x = profile.alloc

    slack = tol.eps * max(1.0, abs(theta0))
    below = [s for s in range(m) if theta0 - float(mu0[s]) > slack]
    delta_cap = math.inf
    if below:
        delta_cap = min(theta0 - float(mu0[s]) for s in below)
    # a drop can never exceed what any single open site can shed, so use
    # that to keep the binary search scaled to the feasible range
    for s in view.open_boundary:
        movable = sum(float(x[i, s]) for i in game.evaders
                      if s in view.boundary[i] and tol.is_positive(x[i, s]))
        delta_cap = min(delta_cap, movable * float(d0[s]))
    if delta_cap == math.inf:
        delta_cap = game.total_evader_resource() * float(d0.max()) + 1.0

    uncapped = game.total_evader_resource() + 1.0
    net = FlowNetwork(source=_SIGMA, sink=_TAU)
    _add_graph_nodes(net, game)
    bip_edges = _add_bipartite_residual(net, game, profile, view, tol)
    source_edges = {}
    sink_edges = {}
    for s in range(m):
        if s in view.open_boundary:
            source_edges[s] = net.add_edge(_SIGMA, _site_node(s), 0.0)
        else:
            coverable = not tol.is_saturated(x[0, s], game.limits[0, s])
            finite = coverable and (s in below)
            sink_edges[s] = (net.add_edge(_site_node(s), _TAU, 0.0), finite)

    def probe(delta: float, feas_tol: float = 1e-12):
        demand = 0.0
        for s, e in source_edges.items():
            cap = delta / float(d0[s])
            net.set_capacity(e, cap)
            demand += cap
        for s, (e, finite) in sink_edges.items():
            if finite:
                net.set_capacity(e, max(theta0 - delta - float(mu0[s]), 0.0)
                                 / float(d0[s]))
            else:
                net.set_capacity(e, uncapped)
        result = max_flow(net)
        feasible = result.value >= demand - feas_tol * max(1.0, demand)
        return feasible, result

    eps_delta = 1e-10 * max(1.0, delta_cap)
    feasible, result = probe(delta_cap)
    if feasible:
        chosen = delta_cap
    else:
        lo, hi = 0.0, delta_cap
        _, result = probe(0.0)
        while hi - lo > eps_delta:
            mid = 0.5 * (lo + hi)
            ok, r = probe(mid)
            if ok:
                lo, result = mid, r
            else:
                hi = mid
        # Snap to the exact constraint boundary that pinned the search, so
        # the site entering the boundary lands exactly on the threshold.
        # Candidates solve the sink-saturation equation under the two local
        # flow models (inflow constant in delta, inflow proportional to it);
        # a candidate is only taken if it is feasible at near-machine
        # precision, which is what distinguishes the true boundary.
        candidates = []
        if abs(delta_cap - lo) <= 10.0 * eps_delta:
            candidates.append(delta_cap)
        if lo > 0.0:
            for s, (e, finite) in sink_edges.items():
                if not finite:
                    continue
                inflow = result.edge_flow(e)
                candidates.append(
                    theta0 - float(mu0[s]) - float(d0[s]) * inflow)
                scale = 1.0 + float(d0[s]) * inflow / lo
                if scale > 0.0:
                    candidates.append((theta0 - float(mu0[s])) / scale)
        chosen = None
        for cand in sorted(set(candidates), reverse=True):
            cand = min(cand, delta_cap)
            if not (0.0 < cand and abs(cand - lo) <= 10.0 * eps_delta):
                continue
            ok, r = probe(cand)
            if ok:
                chosen, result = cand, r
                break
        if chosen is None:
            chosen = lo
            _, result = probe(lo)

    out = profile.copy()
    for (i, s), (fwd, bwd) in bip_edges.items():
        moved = 0.0
        if fwd is not None:
            moved += result.edge_flow(fwd)
        if bwd is not None:
            moved -= result.edge_flow(bwd)
        out.alloc[i, s] += moved
    np.clip(out.alloc[1:], 0.0, game.limits[1:], out=out.alloc[1:])
    return RerouteOutcome(delta=float(chosen), profile=out,
                          delta_cap=delta_cap, resolution=eps_delta)


class _TraceRecorder:
    """Accumulates per-phase records plus the boundary-entry bookkeeping the
    once-only invariant needs."""

    def __init__(self, game: CEGame, tol: Tolerances, keep_records: bool,
                 check: bool):
        self.game = game
        self.tol = tol
        self.keep_records = keep_records
        self.check = check
        self.records: list[IterationTrace] = []
        self.entry_counts: dict[int, int] = {}
        self.previous_open: frozenset = frozenset()

    def prime(self, view: ProfileView) -> None:
        self.previous_open = view.open_boundary
        for s in view.open_boundary:
            self.entry_counts[s] = 1

    def record(self, step: int, phase: str, delta: float,
               profile: StrategyProfile, view: ProfileView) -> frozenset:
        entered = view.open_boundary - self.previous_open
        for s in entered:
            self.entry_counts[s] = self.entry_counts.get(s, 0) + 1
            if self.check and self.entry_counts[s] > 1:
                raise InvariantViolationError(
                    f"site {self.game.sites[s]!r} re-entered the open boundary",
                    self.records,
                )
        self.previous_open = view.open_boundary
        if self.keep_records:
            self.records.append(IterationTrace(
                step=step,
                phase=phase,
                delta=delta,
                theta0=view.thresholds[0],
                catcher_allocated=float(profile.alloc[0].sum()),
                boundary_open=view.open_boundary,
                entered_boundary=entered,
            ))
        return entered


def _check_equilibrium(game: CEGame, profile: StrategyProfile, phase: str,
                       opts: SolveOptions, trace: list) -> None:
    restricted = game.with_catcher_resource(float(profile.alloc[0].sum()))
    report = verify_equilibrium(restricted, profile, opts.eps_equilibrium,
                                opts.tolerances())
    if not report.is_equilibrium:
        raise InvariantViolationError(
            f"profile is not an equilibrium after {phase} "
            f"(worst violation {report.max_violation:g})",
            trace,
        )


def solve_nash(game: CEGame, opts: SolveOptions | None = None) -> NashSolution:
    """Compute a Nash equilibrium of a valid catcher-evader game.

    Raises :class:`IterationLimitError` past the round budget and
    :class:`NumericDegeneracyError` when reroute steps stall below
    tolerance ``stall_limit`` times in a row.  With ``check_invariants``
    the restricted-game equilibrium and the per-phase structural laws are
    asserted after every phase (test builds).
    """
    opts = opts or SolveOptions()
    tol = opts.tolerances()
    require_valid(game, tol)
    max_rounds = opts.max_iterations or iteration_bound(game)

    profile = initialize_evaders(game)
    recorder = _TraceRecorder(game, tol, opts.trace,
                              opts.check_invariants)
    recorder.prime(profile_view(game, profile, tol))
    if opts.check_invariants:
        _check_equilibrium(game, profile, "initialization", opts,
                           recorder.records)

    budget = float(game.resources[0])
    stop_slack = tol.eps * max(1.0, budget)
    iterations = 0
    stall = 0
    while budget - float(profile.alloc[0].sum()) > stop_slack:
        iterations += 1
        if iterations > max_rounds:
            raise IterationLimitError(
                f"no convergence within {max_rounds} iterations",
                recorder.records,
            )

        pre_view = profile_view(game, profile, tol) if opts.check_invariants else None
        profile = reallocate_min_cost(game, profile, tol)
        view = profile_view(game, profile, tol)
        recorder.record(iterations, "realloc", 0.0, profile, view)
        if opts.check_invariants:
            _assert_realloc_noop(game, pre_view, view, recorder.records)
            _check_equilibrium(game, profile, "realloc", opts, recorder.records)

        outcome = increase_coverage(game, profile, tol)
        if outcome.success:
            pre_thresholds = view.thresholds
            profile = outcome.profile
            view = profile_view(game, profile, tol)
            recorder.record(iterations, "increase-success", outcome.delta,
                            profile, view)
            if opts.check_invariants:
                _assert_threshold_rates(game, pre_thresholds, view, outcome,
                                        recorder.records)
                _check_equilibrium(game, profile, "increase", opts,
                                   recorder.records)
            stall = 0
            continue

        recorder.record(iterations, "increase-fail", 0.0, profile, view)
        theta_before = view.thresholds[0]
        reroute = reroute_decrease_theta0(game, profile, tol)
        profile = reroute.profile
        view = profile_view(game, profile, tol)
        recorder.record(iterations, "reroute", reroute.delta, profile, view)
        if opts.check_invariants:
            _assert_theta0_drop(theta_before, reroute.delta, view,
                                recorder.records)
            _check_equilibrium(game, profile, "reroute", opts, recorder.records)

        if reroute.delta <= 2.0 * reroute.resolution:
            stall += 1
            if stall >= opts.stall_limit:
                raise NumericDegeneracyError(
                    f"threshold drop stalled at {reroute.delta:g} for "
                    f"{stall} consecutive reroutes",
                    recorder.records,
                )
        else:
            stall = 0

    report = verify_equilibrium(game, profile, opts.eps_equilibrium, tol)
    if not report.is_equilibrium:
        raise NumericDegeneracyError(
            f"final profile failed verification "
            f"(worst violation {report.max_violation:g})",
            recorder.records,
        )
    return NashSolution(
        profile=profile,
        trace=recorder.records,
        iterations=iterations,
        verified=report,
    )


def _assert_realloc_noop(game: CEGame, before: ProfileView, after: ProfileView,
                         trace: list) -> None:
    """Rebalancing may move evader mass along active edges only: marginal
    utilities, thresholds, and the active edge set must not move."""
    if not np.allclose(before.per_resource, after.per_resource, atol=1e-9,
                       rtol=0.0):
        raise InvariantViolationError(
            "realloc changed per-resource utilities", trace)
    for i in range(game.num_players):
        tb, ta = before.thresholds[i], after.thresholds[i]
        if (tb is None) != (ta is None) or (tb is not None
                                            and abs(tb - ta) > 1e-9):
            raise InvariantViolationError(
                f"realloc changed threshold of player {i}", trace)
    if before.active_edges != after.active_edges:
        raise InvariantViolationError("realloc changed the active edges", trace)


def _assert_threshold_rates(game: CEGame, pre_thresholds, after: ProfileView,
                            outcome: IncreaseOutcome, trace: list) -> None:
    """A successful increase lowers every defined evader threshold by
    exactly ``delta`` times the evader's rate."""
    for i in game.evaders:
        before = pre_thresholds[i]
        now = after.thresholds[i]
        if before is None or now is None:
            continue
        expected = before - outcome.delta * float(outcome.evader_rates[i])
        if abs(now - expected) > 1e-7:
            raise InvariantViolationError(
                f"threshold of evader {i} moved to {now}, expected {expected}",
                trace,
            )


def _assert_theta0_drop(theta_before, delta: float, after: ProfileView,
                        trace: list) -> None:
    theta_after = after.thresholds[0]
    if theta_before is None or theta_after is None:
        return
    if abs(theta_after - (theta_before - delta)) > 1e-7 * max(1.0, abs(theta_before)):
        raise InvariantViolationError(
            f"reroute moved catcher threshold to {theta_after}, expected "
            f"{theta_before - delta}",
            trace,
        )
    if delta > 1e-9 and not theta_after < theta_before:
        raise InvariantViolationError(
            "reroute with positive drop did not decrease the catcher threshold",
            trace,
        )
