"""Catcher-evader game model and per-profile analysis.

A game has one catcher (player 0) and ``n`` evaders (players 1..n) that
spread fractional resource amounts over a common set of sites.  The utility
a player draws from a site is linear in its own allocation with a slope that
shifts by ``delta`` for every unit the opponent places there; the catcher
gains from co-location (``delta > 0``) while evaders lose (``delta < 0``).

Everything here is a pure function of a game plus an allocation profile:
per-resource utilities, best-response thresholds, boundary sets, exact
greedy best responses, equilibrium verification, and the decomposition of
marginal coverage into a lottery over pure site subsets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ValidationError

__all__ = [
    "Tolerances",
    "DEFAULT_TOL",
    "CEGame",
    "StrategyProfile",
    "ProfileView",
    "MixedStrategy",
    "EquilibriumReport",
    "validate_game",
    "profile_view",
    "player_utility",
    "best_response",
    "verify_equilibrium",
    "bvn_decompose",
    "normal_form_size",
]


@dataclass(frozen=True)
class Tolerances:
    """Numeric comparison policy threaded through every solver phase.

    ``eps`` governs flow/graph comparisons and threshold membership;
    ``eps_equilibrium`` is the default slack for best-response gaps.
    Threshold membership uses a relative-absolute hybrid so coefficient
    scale does not change which sites count as boundary sites.
    """

    eps: float = 1e-9
    eps_equilibrium: float = 1e-6

    def at_threshold(self, value: float, threshold: float) -> bool:
        return abs(value - threshold) <= self.eps * max(1.0, abs(threshold))

    def is_saturated(self, amount: float, cap: float) -> bool:
        return amount >= cap - self.eps * max(1.0, abs(cap))

    def is_positive(self, amount: float) -> bool:
        return amount > self.eps


DEFAULT_TOL = Tolerances()


def _coeff_grid(value, n_players: int, n_sites: int) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        arr = np.full((n_players, n_sites), float(arr))
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    if arr.shape != (n_players, n_sites):
        raise ValueError(
            f"coefficient grid has shape {arr.shape}, expected {(n_players, n_sites)}"
        )
    return arr


@dataclass(frozen=True, eq=False)
class CEGame:
    """Immutable description of a catcher-evader game.

    Row 0 of every per-player array belongs to the catcher, rows 1..n to
    the evaders.  Arrays are made read-only on construction so game objects
    can be shared freely across threads.

    Attributes:
        sites:       site names, defining the column order of all grids.
        resources:   total resource amount per player, shape (n+1,).
        limits:      per-site allocation caps, shape (n+1, m).
        alt:         utility per unit of *opponent* mass on a site.
        base:        per-resource utility of a site with no opponent mass.
        const:       fixed utility term per site (ignored by solvers).
        delta:       per-resource utility shift per unit of opponent mass.
        evader_ids:  optional display names for evaders.
        annotations: free-form metadata (e.g. original matching costs).
    """

    sites: tuple[str, ...]
    resources: np.ndarray
    limits: np.ndarray
    alt: np.ndarray
    base: np.ndarray
    const: np.ndarray
    delta: np.ndarray
    evader_ids: tuple[str, ...] | None = None
    annotations: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(str(s) for s in self.sites))
        m = len(self.sites)
        res = np.ascontiguousarray(self.resources, dtype=np.float64)
        if res.ndim != 1 or res.size < 1:
            raise ValueError("resources must be a 1-D array with one entry per player")
        p = res.size
        object.__setattr__(self, "resources", res)
        for name in ("limits", "alt", "base", "const", "delta"):
            object.__setattr__(self, name, _coeff_grid(getattr(self, name), p, m))
        if self.evader_ids is not None:
            ids = tuple(str(s) for s in self.evader_ids)
            if len(ids) != p - 1:
                raise ValueError("evader_ids must name every evader")
            object.__setattr__(self, "evader_ids", ids)
        for name in ("resources", "limits", "alt", "base", "const", "delta"):
            getattr(self, name).flags.writeable = False

    @classmethod
    def create(cls, sites, resources, limits, base, delta, alt=0.0, const=0.0,
               evader_ids=None, annotations=None) -> "CEGame":
        """Build a game from scalars or arrays, broadcasting per-site grids."""
        return cls(
            sites=tuple(sites),
            resources=np.asarray(resources, dtype=np.float64),
            limits=limits,
            alt=alt,
            base=base,
            const=const,
            delta=delta,
            evader_ids=evader_ids,
            annotations=dict(annotations or {}),
        )

    @property
    def num_players(self) -> int:
        return self.resources.size

    @property
    def num_evaders(self) -> int:
        return self.resources.size - 1

    @property
    def num_sites(self) -> int:
        return len(self.sites)

    @property
    def evaders(self) -> range:
        return range(1, self.num_players)

    def total_evader_resource(self) -> float:
        return float(self.resources[1:].sum())

    def with_catcher_resource(self, amount: float) -> "CEGame":
        """Copy of the game with the catcher's budget replaced.

        The incremental Nash solver is, at every intermediate step, at an
        equilibrium of the game restricted to the coverage placed so far;
        this helper builds that restricted game for verification.
        """
        res = self.resources.copy()
        res[0] = float(amount)
        return CEGame(self.sites, res, self.limits, self.alt, self.base,
                      self.const, self.delta, self.evader_ids, self.annotations)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CEGame):
            return NotImplemented
        return (
            self.sites == other.sites
            and self.evader_ids == other.evader_ids
            and np.array_equal(self.resources, other.resources)
            and all(
                np.array_equal(getattr(self, f), getattr(other, f))
                for f in ("limits", "alt", "base", "const", "delta")
            )
            and dict(self.annotations) == dict(other.annotations)
        )

    def __hash__(self):
        return hash((self.sites, self.resources.tobytes()))


@dataclass
class StrategyProfile:
    """Allocation matrix ``alloc[i, s]``: mass player ``i`` puts on site ``s``."""

    alloc: np.ndarray

    def __post_init__(self):
        self.alloc = np.ascontiguousarray(self.alloc, dtype=np.float64)
        if self.alloc.ndim != 2:
            raise ValueError("allocation must be a 2-D (players x sites) array")

    @classmethod
    def zeros(cls, game: CEGame) -> "StrategyProfile":
        return cls(np.zeros((game.num_players, game.num_sites)))

    def copy(self) -> "StrategyProfile":
        return StrategyProfile(self.alloc.copy())

    @property
    def catcher(self) -> np.ndarray:
        return self.alloc[0]

    def combined_evader(self) -> np.ndarray:
        """Total evader mass per site."""
        return self.alloc[1:].sum(axis=0)

    def opponent_of(self, player: int) -> np.ndarray:
        """What player ``player`` faces: evader totals for the catcher,
        catcher coverage for an evader."""
        return self.combined_evader() if player == 0 else self.alloc[0]


@dataclass(frozen=True)
class ProfileView:
    """Derived per-profile quantities, recomputed on demand.

    ``per_resource[i, s]`` is the marginal utility of one more unit of
    player ``i``'s mass at ``s`` given the opponent's current marginals.
    ``thresholds[i]`` is the best-response cutoff (None when undefined:
    all sites saturated for the catcher, or an evader with empty support).
    """

    per_resource: np.ndarray
    thresholds: tuple
    boundary: tuple
    positive_boundary: tuple
    open_boundary: frozenset
    active_edges: tuple

    def threshold(self, player: int) -> float:
        value = self.thresholds[player]
        if value is None:
            raise ValidationError(f"threshold undefined for player {player}")
        return value


def per_resource_utility(game: CEGame, profile: StrategyProfile) -> np.ndarray:
    """Marginal utilities ``base + delta * opponent`` for every player."""
    mu = np.empty_like(game.base)
    combined = profile.combined_evader()
    mu[0] = game.base[0] + game.delta[0] * combined
    mu[1:] = game.base[1:] + game.delta[1:] * profile.alloc[0]
    return mu


def profile_view(game: CEGame, profile: StrategyProfile,
                 tol: Tolerances = DEFAULT_TOL) -> ProfileView:
    """Thresholds, boundary sets and active edges for a profile.

    Player 0's threshold is the largest marginal utility among sites it has
    not filled to the cap; an evader's is the smallest marginal utility on
    its support.  Membership of the boundary sets uses the hybrid tolerance.
    """
    mu = per_resource_utility(game, profile)
    n_players, m = mu.shape
    x = profile.alloc
    caps = game.limits
    unsaturated = x < caps - tol.eps * np.maximum(1.0, np.abs(caps))
    has_mass = x > tol.eps

    thresholds: list = [None] * n_players
    if unsaturated[0].any():
        thresholds[0] = float(mu[0][unsaturated[0]].max())
    for i in range(1, n_players):
        if has_mass[i].any():
            thresholds[i] = float(mu[i][has_mass[i]].min())

    boundary = []
    positive = []
    for i in range(n_players):
        th = thresholds[i]
        if th is None:
            boundary.append(frozenset())
            positive.append(frozenset())
            continue
        at_th = np.abs(mu[i] - th) <= tol.eps * max(1.0, abs(th))
        boundary.append(frozenset(np.flatnonzero(at_th).tolist()))
        positive.append(frozenset(np.flatnonzero(at_th & has_mass[i]).tolist()))

    open_boundary = frozenset(
        np.flatnonzero(unsaturated[0]).tolist()) & boundary[0]
    active = tuple(
        (i, s) for i in range(1, n_players) for s in sorted(boundary[i])
    )
    mu.flags.writeable = False
    return ProfileView(
        per_resource=mu,
        thresholds=tuple(thresholds),
        boundary=tuple(boundary),
        positive_boundary=tuple(positive),
        open_boundary=open_boundary,
        active_edges=active,
    )


def player_utility(game: CEGame, profile: StrategyProfile, player: int) -> float:
    """Total utility of one player at the profile."""
    mu = per_resource_utility(game, profile)
    opp = profile.opponent_of(player)
    return float(
        np.dot(mu[player], profile.alloc[player])
        + np.dot(game.alt[player], opp)
        + game.const[player].sum()
    )


def validate_game(game: CEGame, tol: Tolerances = DEFAULT_TOL) -> list[str]:
    """Every violated model invariant, or an empty list when the game is valid.

    Violations are reported, not raised, so callers can surface all of them
    at once.  Checked: sign requirements on ``delta``, nonnegative resources
    and limits, and per-player feasibility ``resources <= sum(limits)``.
    """
    violations: list[str] = []
    m = game.num_sites
    for s in range(m):
        if not game.delta[0, s] > 0.0:
            violations.append(
                f"catcher delta must be positive at site {game.sites[s]!r} "
                f"(got {game.delta[0, s]})"
            )
    for i in game.evaders:
        for s in range(m):
            if not game.delta[i, s] < 0.0:
                violations.append(
                    f"evader {i} delta must be negative at site {game.sites[s]!r} "
                    f"(got {game.delta[i, s]})"
                )
    for i in range(game.num_players):
        if game.resources[i] < 0.0:
            violations.append(f"player {i} resource is negative ({game.resources[i]})")
        for s in range(m):
            if game.limits[i, s] < 0.0:
                violations.append(
                    f"player {i} limit at site {game.sites[s]!r} is negative"
                )
        cap = float(game.limits[i].sum())
        if game.resources[i] > cap + tol.eps * max(1.0, cap):
            violations.append(
                f"infeasible resource for player {i}: {game.resources[i]} exceeds "
                f"total limit {cap}"
            )
    return violations


def require_valid(game: CEGame, tol: Tolerances = DEFAULT_TOL) -> None:
    violations = validate_game(game, tol)
    if violations:
        raise ValidationError(violations)


def best_response(game: CEGame, opponent_marginals, player: int,
                  tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Exact utility-maximizing allocation against fixed opponent marginals.

    Fractional-knapsack greedy: fill sites in order of decreasing marginal
    utility (ties broken toward the lowest site index) up to each cap until
    the player's budget is spent.
    """
    opp = np.asarray(opponent_marginals, dtype=np.float64)
    mu = game.base[player] + game.delta[player] * opp
    caps = game.limits[player]
    budget = float(game.resources[player])
    if budget > caps.sum() + tol.eps * max(1.0, caps.sum()):
        raise ValidationError(
            f"player {player} cannot place {budget} within total limit {caps.sum()}"
        )
    out = np.zeros_like(caps)
    for s in sorted(range(len(caps)), key=lambda s: (-mu[s], s)):
        if budget <= 0.0:
            break
        take = min(caps[s], budget)
        out[s] = take
        budget -= take
    return out


@dataclass(frozen=True)
class EquilibriumReport:
    """Best-response verification result for one profile.

    ``gaps[i]`` is the exact utility a player could still gain by deviating;
    ``per_player_violation[i]`` is the worst allocation-unit breach of the
    threshold structure (mass missing from above-threshold sites, or present
    on below-threshold sites).
    """

    gaps: tuple
    per_player_violation: tuple
    feasibility_violation: float
    eps: float
    is_equilibrium: bool

    @property
    def max_violation(self) -> float:
        return max(max(self.gaps), max(self.per_player_violation),
                   self.feasibility_violation)


def feasibility_violation(game: CEGame, profile: StrategyProfile) -> float:
    """Worst deviation from row sums and allocation bounds."""
    x = profile.alloc
    worst = 0.0
    for i in range(game.num_players):
        worst = max(worst, abs(float(x[i].sum()) - float(game.resources[i])))
    worst = max(worst, float(np.maximum(-x, 0.0).max(initial=0.0)))
    worst = max(worst, float(np.maximum(x - game.limits, 0.0).max(initial=0.0)))
    return worst


def verify_equilibrium(game: CEGame, profile: StrategyProfile, eps: float = 1e-6,
                       tol: Tolerances = DEFAULT_TOL) -> EquilibriumReport:
    """Check that every player best-responds, using the exact greedy oracle.

    For each player the deviation gap ``u(best response) - u(profile)`` is
    computed against the opponents' marginals held fixed; the threshold
    structure is additionally checked site by site.  The profile is an
    equilibrium at ``eps`` iff every gap and violation is at most ``eps``.
    """
    mu = per_resource_utility(game, profile)
    x = profile.alloc
    gaps = []
    violations = []
    for i in range(game.num_players):
        br = best_response(game, profile.opponent_of(i), i, tol)
        gaps.append(float(np.dot(mu[i], br - x[i])))

        if i == 0:
            candidates = [s for s in range(game.num_sites)
                          if not tol.is_saturated(x[0, s], game.limits[0, s])]
            th = max((mu[0, s] for s in candidates), default=None)
        else:
            support = [s for s in range(game.num_sites) if tol.is_positive(x[i, s])]
            th = min((mu[i, s] for s in support), default=None)
        worst = 0.0
        if th is not None:
            slack = eps * max(1.0, abs(th))
            for s in range(game.num_sites):
                if mu[i, s] > th + slack:
                    worst = max(worst, float(game.limits[i, s] - x[i, s]))
                elif mu[i, s] < th - slack:
                    worst = max(worst, float(x[i, s]))
        violations.append(worst)

    feas = feasibility_violation(game, profile)
    ok = (max(gaps) <= eps and max(violations) <= eps and feas <= eps)
    return EquilibriumReport(
        gaps=tuple(gaps),
        per_player_violation=tuple(violations),
        feasibility_violation=feas,
        eps=eps,
        is_equilibrium=ok,
    )


@dataclass(frozen=True)
class MixedStrategy:
    """Lottery over pure assignments: (0/1 site indicator, probability)."""

    atoms: tuple

    def recompose(self) -> np.ndarray:
        """Weighted sum of the atoms' indicators; equals the input marginals."""
        m = len(self.atoms[0][0])
        out = np.zeros(m)
        for pure, prob in self.atoms:
            out += prob * np.asarray(pure, dtype=np.float64)
        return out

    def total_probability(self) -> float:
        return float(sum(prob for _, prob in self.atoms))


def bvn_decompose(marginals: Sequence[float], size: int,
                  eps: float = 1e-9) -> MixedStrategy:
    """Express per-site marginals as a lottery over subsets of fixed size.

    Greedy peeling: repeatedly pick the ``size`` largest remaining marginals
    (ties toward lower index) and peel off the largest probability weight
    that keeps every residual marginal nonnegative and no residual marginal
    above the remaining probability mass.  For an integral ``size`` this
    terminates with at most ``m`` atoms whose weighted indicators reproduce
    the input exactly.
    """
    y = [float(v) for v in marginals]
    m = len(y)
    if size != int(size) or size < 0:
        raise ValidationError(f"subset size must be a nonnegative integer, got {size}")
    size = int(size)
    if size > m:
        raise ValidationError(f"subset size {size} exceeds {m} sites")
    for s, v in enumerate(y):
        if v < -eps or v > 1.0 + eps:
            raise ValidationError(f"marginal {v} at site index {s} outside [0, 1]")
    total = sum(y)
    if abs(total - size) > eps * max(1.0, size):
        raise ValidationError(f"marginals sum to {total}, expected {size}")

    if size == 0:
        return MixedStrategy(atoms=((tuple([0] * m), 1.0),))

    y = [min(max(v, 0.0), 1.0) for v in y]
    remaining = 1.0
    atoms = []
    for _ in range(m + 1):
        if remaining <= eps:
            break
        order = sorted(range(m), key=lambda s: (-y[s], s))
        chosen = order[:size]
        weight = min(remaining, min(y[s] for s in chosen))
        if size < m:
            weight = min(weight, remaining - max(y[s] for s in order[size:]))
        if weight <= 0.0:
            raise ValidationError("marginals are numerically inconsistent")
        pure = [0] * m
        for s in chosen:
            pure[s] = 1
            y[s] = max(y[s] - weight, 0.0)
        remaining -= weight
        atoms.append((tuple(pure), weight))
    if remaining > eps:
        raise ValidationError("decomposition did not exhaust probability mass")
    # fold any residual dust into the last atom so probabilities sum to one
    pure, prob = atoms[-1]
    atoms[-1] = (pure, prob + remaining)
    return MixedStrategy(atoms=tuple(atoms))


def normal_form_size(game: CEGame) -> int:
    """Number of pure profiles if every player picked ``resources`` distinct
    sites under unit caps: the product over players of C(m, r_i).

    Exact over arbitrary-precision integers; rejects fractional resources.
    """
    m = game.num_sites
    total = 1
    for i in range(game.num_players):
        r = float(game.resources[i])
        if abs(r - round(r)) > 1e-9:
            raise ValidationError(
                f"normal-form size needs integral resources; player {i} has {r}"
            )
        total *= math.comb(m, int(round(r)))
    return total
