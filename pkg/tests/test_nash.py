import numpy as np
import pytest

from cegames.core import (
    CEGame,
    StrategyProfile,
    per_resource_utility,
    profile_view,
    verify_equilibrium,
)
from cegames.flow import FlowNetwork, find_negative_cycle
from cegames.nash import (
    SolveOptions,
    _add_bipartite_residual,
    increase_coverage,
    initialize_evaders,
    iteration_bound,
    reallocate_min_cost,
    reroute_decrease_theta0,
    solve_nash,
)
from cegames.nash import DEFAULT_TOL, _add_graph_nodes
from cegames.randgen import gen_random

from oracles import two_site_single_evader_equilibria


def active_residual(game, profile):
    view = profile_view(game, profile)
    net = FlowNetwork()
    _add_graph_nodes(net, game)
    _add_bipartite_residual(net, game, profile, view, DEFAULT_TOL)
    return net.as_residual()


class TestInitializeEvaders:
    def test_strict_best_base(self, g1):
        assert np.allclose(initialize_evaders(g1).alloc[1], [1.0, 0.0])

    def test_tie_breaks_to_lowest_index(self):
        game = CEGame.create(sites=("A", "B"), resources=[1.0, 1.0], limits=1.0,
                             base=[[0.0, 0.0], [5.0, 5.0]],
                             delta=[[1.0, 1.0], [-1.0, -1.0]])
        assert np.allclose(initialize_evaders(game).alloc[1], [1.0, 0.0])

    def test_greedy_water_fill(self):
        game = CEGame.create(sites=("A", "B", "C"), resources=[1.0, 2.5],
                             limits=1.0,
                             base=[[0.0] * 3, [9.0, 8.0, 7.0]],
                             delta=[[1.0] * 3, [-1.0] * 3])
        assert np.allclose(initialize_evaders(game).alloc[1], [1.0, 1.0, 0.5])

    def test_initial_profile_is_restricted_equilibrium(self):
        for seed in range(10):
            game = gen_random(3, 4, seed)
            profile = initialize_evaders(game)
            restricted = game.with_catcher_resource(0.0)
            assert verify_equilibrium(restricted, profile, 1e-9).is_equilibrium


class TestReallocateMinCost:
    def test_single_active_edge_unchanged(self, g1):
        profile = initialize_evaders(g1)
        out = reallocate_min_cost(g1, profile)
        assert np.array_equal(out.alloc, profile.alloc)

    def test_crossed_evaders_get_swapped(self):
        # evader 1 is cheap to keep at site A (small |delta|), evader 2 at B;
        # start them crossed and let the flow unc cross them
        game = CEGame.create(
            sites=("A", "B"), resources=[0.0, 0.5, 0.5], limits=1.0,
            base=[[0.0, 0.0], [3.0, 3.0], [3.0, 3.0]],
            delta=[[1.0, 1.0], [-2.0, -4.0], [-4.0, -2.0]],
        )
        crossed = StrategyProfile(np.array([
            [0.0, 0.0],
            [0.0, 0.5],
            [0.5, 0.0],
        ]))
        out = reallocate_min_cost(game, crossed)
        assert np.allclose(out.alloc[1], [0.5, 0.0])
        assert np.allclose(out.alloc[2], [0.0, 0.5])

    def test_totals_and_marginals_preserved(self):
        for seed in (1, 4, 9):
            game = gen_random(3, 5, seed)
            sol = solve_nash(game, SolveOptions())
            profile = sol.profile
            out = reallocate_min_cost(game, profile)
            assert np.allclose(out.combined_evader(), profile.combined_evader(),
                               atol=1e-9)
            assert np.allclose(per_resource_utility(game, out),
                               per_resource_utility(game, profile), atol=1e-9)

    def test_no_negative_cycle_after(self):
        for seed in (0, 2, 6):
            game = gen_random(2, 4, seed)
            profile = reallocate_min_cost(game, initialize_evaders(game))
            assert find_negative_cycle(active_residual(game, profile)) is None


class TestIncreaseCoverage:
    def test_g1_first_step_stops_at_activation(self, g1):
        profile = initialize_evaders(g1)
        outcome = increase_coverage(g1, profile)
        assert outcome.success
        # coverage rises until the second site's margin meets the threshold:
        # 6 - 10 t = 4 at t = 0.2
        assert outcome.delta == pytest.approx(0.2)
        assert np.allclose(outcome.profile.alloc[0], [0.2, 0.0])

    def test_failure_when_reachable_sites_leave_open_boundary(self, g1):
        stuck = StrategyProfile(np.array([[0.2, 0.0], [1.0, 0.0]]))
        outcome = increase_coverage(g1, stuck)
        assert not outcome.success

    def test_full_catcher_means_no_open_sites(self, g1):
        profile = StrategyProfile(np.array([[1.0, 1.0], [0.5, 0.5]]))
        assert not increase_coverage(g1, profile).success


class TestRerouteDecreaseTheta0:
    def test_g1_moves_evader_until_thresholds_meet(self, g1):
        stuck = StrategyProfile(np.array([[0.2, 0.0], [1.0, 0.0]]))
        outcome = reroute_decrease_theta0(g1, stuck)
        # site B absorbs evader mass until both marginals sit at 0.5
        assert outcome.delta == pytest.approx(0.5)
        assert np.allclose(outcome.profile.alloc[1], [0.5, 0.5])
        view = profile_view(g1, outcome.profile)
        assert view.thresholds[0] == pytest.approx(0.5)

    def test_new_site_joins_boundary_or_next_increase_works(self):
        # after a reroute, progress is structural: either the open boundary
        # grew or coverage can now increase
        for seed in range(12):
            game = gen_random(2, 4, seed)
            profile = reallocate_min_cost(game, initialize_evaders(game))
            for _ in range(60):
                if game.resources[0] - profile.alloc[0].sum() <= 1e-9:
                    break
                outcome = increase_coverage(game, profile)
                if outcome.success:
                    profile = reallocate_min_cost(game, outcome.profile)
                    continue
                before = profile_view(game, profile).open_boundary
                rerouted = reroute_decrease_theta0(game, profile)
                profile = reallocate_min_cost(game, rerouted.profile)
                after = profile_view(game, profile).open_boundary
                grew = bool(after - before)
                retry = increase_coverage(game, profile)
                assert grew or retry.success


class TestSolveNash:
    def test_g1_matches_enumeration_oracle(self, g1, flow_engine):
        solution = solve_nash(g1, SolveOptions(check_invariants=True))
        pairs = two_site_single_evader_equilibria(g1)
        assert any(
            np.allclose(solution.profile.alloc[0], x0, atol=1e-6)
            and np.allclose(solution.profile.alloc[1], x1, atol=1e-6)
            for x0, x1 in pairs
        )
        assert np.allclose(solution.profile.alloc[0], [0.6, 0.4], atol=1e-6)

    def test_zero_catcher_budget_returns_initialization(self):
        game = CEGame.create(sites=("A", "B"), resources=[0.0, 1.0], limits=1.0,
                             base=[[0.0, 0.0], [6.0, 4.0]],
                             delta=[[1.0, 1.0], [-10.0, -10.0]])
        solution = solve_nash(game)
        assert solution.iterations == 0
        assert np.allclose(solution.profile.alloc,
                           initialize_evaders(game).alloc)

    def test_full_budget_saturates_every_site(self):
        game = CEGame.create(sites=("A", "B", "C"), resources=[3.0, 2.0],
                             limits=1.0,
                             base=[[0.0] * 3, [6.0, 4.0, 5.0]],
                             delta=[[1.0] * 3, [-2.0] * 3])
        solution = solve_nash(game, SolveOptions(check_invariants=True))
        assert np.allclose(solution.profile.alloc[0], [1.0, 1.0, 1.0])

    def test_trace_monotonicity(self):
        for seed in (3, 8, 13):
            game = gen_random(3, 5, seed)
            solution = solve_nash(game, SolveOptions())
            allocated = [t.catcher_allocated for t in solution.trace]
            assert all(b >= a - 1e-12 for a, b in zip(allocated, allocated[1:]))
            thresholds = [t.theta0 for t in solution.trace
                          if t.theta0 is not None]
            assert all(b <= a + 1e-9 for a, b in zip(thresholds, thresholds[1:]))
            increases = [t for t in solution.trace
                         if t.phase == "increase-success"]
            assert all(t.delta > 0.0 for t in increases)

    def test_sites_enter_open_boundary_once(self):
        for seed in range(8):
            game = gen_random(2, 5, seed)
            solution = solve_nash(game, SolveOptions(check_invariants=True))
            entered = {}
            for record in solution.trace:
                for s in record.entered_boundary:
                    entered[s] = entered.get(s, 0) + 1
            assert all(count == 1 for count in entered.values())

    def test_fail_phases_separated_by_boundary_growth(self):
        for seed in range(8):
            game = gen_random(3, 4, seed)
            solution = solve_nash(game, SolveOptions())
            since_last_fail = None
            for record in solution.trace:
                if record.phase == "increase-fail":
                    if since_last_fail is not None:
                        assert since_last_fail, (seed, record.step)
                    since_last_fail = set()
                elif since_last_fail is not None:
                    since_last_fail |= set(record.entered_boundary)

    def test_iteration_budget_respected(self):
        for seed in range(6):
            game = gen_random(1, 2, seed)
            solution = solve_nash(game, SolveOptions())
            assert solution.iterations <= iteration_bound(game)

    def test_equilibrium_at_every_size(self, flow_engine):
        for seed, (n, m) in enumerate([(1, 2), (2, 3), (4, 4), (5, 7)]):
            game = gen_random(n, m, seed + 40)
            solution = solve_nash(game, SolveOptions(check_invariants=True))
            assert solution.verified.is_equilibrium
            report = verify_equilibrium(game, solution.profile, 1e-6)
            assert report.is_equilibrium
