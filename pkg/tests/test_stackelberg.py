import numpy as np
import pytest

from cegames.core import CEGame
from cegames.errors import UnsupportedInstanceError
from cegames.randgen import SplitMix64
from cegames.stackelberg import solve_stackelberg

from oracles import stackelberg_grid_value


def random_commit_game(seed, max_sites=4):
    """Single evader free to concentrate anywhere; integer coefficients on
    the benchmark scale, including nonzero alternating terms."""
    rng = SplitMix64(seed)
    m = rng.randint(2, max_sites)
    sites = tuple(f"s{k}" for k in range(m))
    r0 = float(rng.randint(1, m))
    r1 = float(rng.randint(1, 5))
    base = np.zeros((2, m))
    delta = np.zeros((2, m))
    alt = np.zeros((2, m))
    const = np.zeros((2, m))
    for s in range(m):
        base[0, s] = rng.randint(1, 10)
        delta[0, s] = rng.randint(1, 10)
        alt[0, s] = rng.randint(-10, 10)
        const[0, s] = rng.randint(-5, 5)
        base[1, s] = rng.randint(1, 10)
        delta[1, s] = -rng.randint(1, 10)
        alt[1, s] = rng.randint(-10, 10)
    limits = np.vstack([np.ones(m), np.full(m, r1)])
    return CEGame.create(sites=sites, resources=[r0, r1], limits=limits,
                         base=base, delta=delta, alt=alt, const=const)


class TestGuards:
    def test_two_evaders_unsupported(self):
        game = CEGame.create(sites=("A", "B"), resources=[1.0, 1.0, 1.0],
                             limits=1.0, base=0.0,
                             delta=[[1.0, 1.0], [-1.0, -1.0], [-2.0, -2.0]])
        with pytest.raises(UnsupportedInstanceError):
            solve_stackelberg(game)

    def test_split_evader_unsupported(self):
        game = CEGame.create(sites=("A", "B"), resources=[1.0, 2.0],
                             limits=[[1.0, 1.0], [1.0, 1.0]],
                             base=[[0.0, 0.0], [4.0, 4.0]],
                             delta=[[1.0, 1.0], [-1.0, -1.0]])
        with pytest.raises(UnsupportedInstanceError):
            solve_stackelberg(game)


class TestKnownSolutions:
    def test_symmetric_two_sites(self):
        game = CEGame.create(
            sites=("A", "B"), resources=[1.0, 1.0],
            limits=[[1.0, 1.0], [1.0, 1.0]],
            base=[[0.0, 0.0], [5.0, 5.0]],
            delta=[[11.0, 11.0], [-10.0, -10.0]],
            alt=[[-10.0, -10.0], [0.0, 0.0]],
        )
        solution = solve_stackelberg(game)
        assert np.allclose(solution.coverage, [0.5, 0.5], atol=1e-9)
        assert solution.catcher_utility == pytest.approx(-4.5, abs=1e-9)

    def test_zero_budget_attacks_best_base(self):
        game = CEGame.create(sites=("A", "B", "C"), resources=[0.0, 1.0],
                             limits=[[1.0] * 3, [1.0] * 3],
                             base=[[0.0] * 3, [3.0, 7.0, 5.0]],
                             delta=[[1.0] * 3, [-2.0] * 3])
        solution = solve_stackelberg(game)
        assert np.allclose(solution.coverage, 0.0)
        assert solution.attacked_site == 1

    def test_forced_full_coverage(self):
        game = CEGame.create(sites=("A", "B"), resources=[2.0, 1.0],
                             limits=[[1.0, 1.0], [1.0, 1.0]],
                             base=[[0.0, 0.0], [3.0, 7.0]],
                             delta=[[1.0, 1.0], [-2.0, -2.0]])
        solution = solve_stackelberg(game)
        assert np.allclose(solution.coverage, [1.0, 1.0])
        # at full coverage the evader still prefers the higher margin site
        assert solution.attacked_site == 1


class TestAgainstGridOracle:
    def test_matches_grid_search(self):
        for seed in range(10):
            game = random_commit_game(seed)
            solution = solve_stackelberg(game)
            oracle, _ = stackelberg_grid_value(game)
            assert solution.catcher_utility == pytest.approx(oracle, abs=1e-2)

    def test_solution_structure(self):
        for seed in range(20):
            game = random_commit_game(seed + 100)
            solution = solve_stackelberg(game)
            cov = solution.coverage
            assert cov.sum() == pytest.approx(float(game.resources[0]), abs=1e-12)
            assert (cov >= -1e-9).all()
            assert (cov <= game.limits[0] + 1e-9).all()
            margins = game.base[1] + game.delta[1] * cov
            best = margins[solution.attacked_site]
            assert (margins <= best + 1e-9).all()
