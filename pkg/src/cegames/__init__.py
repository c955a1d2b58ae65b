"""Catcher-evader games: model, solvers, and reductions.

One catcher and several evaders spread fractional resources over sites;
the catcher gains from co-location, evaders lose.  The package computes
Nash equilibria (incremental coverage with flow-based rebalancing),
Stackelberg commitments for the tractable single-evader case, and embeds
Bayesian security games, scored test games, and min-cost fractional
matching into the model.
"""

from .core import (
    CEGame,
    EquilibriumReport,
    MixedStrategy,
    ProfileView,
    StrategyProfile,
    Tolerances,
    best_response,
    bvn_decompose,
    normal_form_size,
    player_utility,
    profile_view,
    validate_game,
    verify_equilibrium,
)
from .errors import (
    CEGameError,
    GameFileError,
    InfeasibleFlowError,
    InvariantViolationError,
    IterationLimitError,
    NegativeCycleError,
    NumericDegeneracyError,
    UnsupportedInstanceError,
    ValidationError,
)
from .nash import (
    IterationTrace,
    NashSolution,
    SolveOptions,
    increase_coverage,
    initialize_evaders,
    iteration_bound,
    reallocate_min_cost,
    reroute_decrease_theta0,
    solve_nash,
)
from .randgen import SplitMix64, gen_random
from .reductions import (
    MatchingEdge,
    MatchingSpec,
    SecurityGameSpec,
    TestGameSpec,
    extract_matching,
    matching_to_ce,
    security_to_ce,
    swap_profile,
    swap_roles,
    test_to_ce,
)
from .stackelberg import StackelbergSolution, solve_stackelberg

__version__ = "0.1.0"
