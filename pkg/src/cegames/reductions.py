"""Conversions into the catcher-evader model.

Bayesian security games, scored test games, and balanced min-cost matching
instances all embed into the same structure: the defender/tester/unit
buyer becomes the catcher (after a role swap where needed) and the
attacker types / test taker types / left vertices become evaders whose
marginals are the thing the solvers compute.

Role swapping rewrites player 0's allocation as its complement against the
site caps, negating every ``delta``; it is an exact algebraic involution
and preserves all utilities under the companion profile map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CEGame, StrategyProfile
from .errors import ValidationError
from .flow import FlowNetwork
from .nash import NashSolution

__all__ = [
    "AttackerType",
    "SecurityGameSpec",
    "TakerType",
    "TestGameSpec",
    "MatchingEdge",
    "MatchingSpec",
    "MatchingResult",
    "security_to_ce",
    "test_to_ce",
    "test_to_ce_unswapped",
    "swap_roles",
    "swap_profile",
    "matching_to_ce",
    "matching_network",
    "extract_matching",
]


@dataclass(frozen=True)
class AttackerType:
    """One attacker type: utilities per target when it hits a covered or an
    uncovered target."""

    probability: float
    resources: float
    covered: tuple
    uncovered: tuple


@dataclass(frozen=True)
class SecurityGameSpec:
    targets: tuple
    defender_resources: float
    defender_covered: tuple
    defender_uncovered: tuple
    attackers: tuple


def security_to_ce(spec: SecurityGameSpec) -> CEGame:
    """Bayesian security game as a catcher-evader game.

    Type probabilities scale each attacker's resources and caps, so evader
    marginals are expected coverage contributions; the defender keeps unit
    caps.  Per-target utility deltas must favor the defender when covering
    (``covered > uncovered``) and punish the attacker (``covered <
    uncovered``), otherwise the embedding breaks the sign requirement.
    """
    targets = tuple(spec.targets)
    m = len(targets)
    n = len(spec.attackers)
    probs = [a.probability for a in spec.attackers]
    if any(p <= 0.0 for p in probs):
        raise ValidationError("attacker type probabilities must be positive")
    if abs(sum(probs) - 1.0) > 1e-9:
        raise ValidationError(f"type probabilities sum to {sum(probs)}, expected 1")

    resources = np.empty(n + 1)
    limits = np.empty((n + 1, m))
    alt = np.zeros((n + 1, m))
    base = np.zeros((n + 1, m))
    delta = np.empty((n + 1, m))

    resources[0] = spec.defender_resources
    limits[0] = 1.0
    for s in range(m):
        dc, du = float(spec.defender_covered[s]), float(spec.defender_uncovered[s])
        if dc <= du:
            raise ValidationError(
                f"defender must prefer covering target {targets[s]!r} "
                f"({dc} <= {du})"
            )
        alt[0, s] = du
        delta[0, s] = dc - du
    for k, att in enumerate(spec.attackers, start=1):
        resources[k] = att.probability * att.resources
        limits[k] = att.probability
        for s in range(m):
            ac, au = float(att.covered[s]), float(att.uncovered[s])
            if ac >= au:
                raise ValidationError(
                    f"attacker type {k} must prefer uncovered target "
                    f"{targets[s]!r} ({ac} >= {au})"
                )
            base[k, s] = au
            delta[k, s] = ac - au
    return CEGame(sites=targets, resources=resources, limits=limits,
                  alt=alt, base=base, const=np.zeros((n + 1, m)), delta=delta)


@dataclass(frozen=True)
class TakerType:
    """A test taker type: which questions it finds hard and how many answers
    it can memorize."""

    probability: float
    importance: float
    hard: frozenset
    capacity: int


@dataclass(frozen=True)
class TestGameSpec:
    questions: tuple
    scores: tuple
    weights: tuple
    length: int
    takers: tuple


def test_to_ce_unswapped(spec: TestGameSpec) -> CEGame:
    """Scored test game in tester-as-player-0 form.

    This raw form has the deltas the wrong way around for the solvers (the
    tester is really an evader: it profits from asking what was not
    memorized); it exists for inspecting the reduction directly.  Easy
    questions leave a taker's delta at zero, which the validity check will
    flag; such games need every question hard for someone to be solvable.
    """
    questions = tuple(spec.questions)
    m = len(questions)
    n = len(spec.takers)
    if spec.length > m:
        raise ValidationError(f"test length {spec.length} exceeds pool size {m}")
    resources = np.empty(n + 1)
    limits = np.empty((n + 1, m))
    alt = np.zeros((n + 1, m))
    base = np.zeros((n + 1, m))
    delta = np.zeros((n + 1, m))

    resources[0] = float(spec.length)
    limits[0] = 1.0
    for q in range(m):
        hard_mass = sum(t.probability * t.importance
                        for t in spec.takers if questions[q] in t.hard)
        base[0, q] = float(spec.weights[q]) * hard_mass
        delta[0, q] = -float(spec.weights[q])
    for k, taker in enumerate(spec.takers, start=1):
        weight = taker.probability * taker.importance
        if weight <= 0.0:
            raise ValidationError(
                f"taker type {k} has nonpositive probability*importance {weight}"
            )
        if taker.capacity > m:
            raise ValidationError(
                f"taker type {k} memorizes {taker.capacity} of {m} questions"
            )
        resources[k] = weight * taker.capacity
        limits[k] = weight
        for q in range(m):
            if questions[q] in taker.hard:
                alt[k, q] = -float(spec.scores[q])
                delta[k, q] = float(spec.scores[q]) / weight
    return CEGame(sites=questions, resources=resources, limits=limits,
                  alt=alt, base=base, const=np.zeros((n + 1, m)), delta=delta)


def test_to_ce(spec: TestGameSpec) -> CEGame:
    """Scored test game in solver convention (roles swapped so the tester's
    complement plays the catcher)."""
    return swap_roles(test_to_ce_unswapped(spec))


def swap_roles(game: CEGame) -> CEGame:
    """Negate every delta by re-basing player 0 on the complement of its
    allocation; utilities are unchanged under :func:`swap_profile`.

    Exact algebra on the stored values; applying it twice returns the
    original game field by field.
    """
    lim0 = game.limits[0]
    resources = game.resources.copy()
    resources[0] = -game.resources[0] + float(lim0.sum())
    alt = game.alt.copy()
    base = game.base.copy()
    const = game.const.copy()
    delta = -game.delta

    alt[0] = game.alt[0] + game.delta[0] * lim0
    const[0] = game.const[0] + game.base[0] * lim0
    base[0] = -game.base[0]
    for i in game.evaders:
        alt[i] = -game.alt[i]
        base[i] = game.base[i] + game.delta[i] * lim0
        const[i] = game.const[i] + game.alt[i] * lim0
    return CEGame(sites=game.sites, resources=resources, limits=game.limits,
                  alt=alt, base=base, const=const, delta=delta,
                  evader_ids=game.evader_ids, annotations=game.annotations)


def swap_profile(game: CEGame, profile: StrategyProfile) -> StrategyProfile:
    """Companion map for :func:`swap_roles`: player 0's allocation becomes
    its complement against the caps, evaders are untouched."""
    out = profile.copy()
    out.alloc[0] = game.limits[0] - profile.alloc[0]
    return out


@dataclass(frozen=True)
class MatchingEdge:
    left: str
    right: str
    capacity: float
    cost: float


@dataclass(frozen=True)
class MatchingSpec:
    """Balanced bipartite instance: saturate every vertex capacity at
    minimum total cost."""

    left: tuple
    right: tuple
    left_capacity: tuple
    right_capacity: tuple
    edges: tuple

    def balance_gap(self) -> float:
        return abs(float(np.sum(self.left_capacity))
                   - float(np.sum(self.right_capacity)))


def matching_to_ce(spec: MatchingSpec) -> CEGame:
    """Min-cost fractional matching as a catcher-evader game.

    Left vertices become evaders with their capacities as budgets, right
    vertices become sites; edge costs enter through ``delta = -exp(cost)``
    so equilibrium reallocation minimizes the original cost.  The original
    costs ride along as an annotation so they never need to be recovered
    through a log round trip.
    """
    if spec.balance_gap() > 1e-9:
        raise ValidationError(
            f"capacities are unbalanced by {spec.balance_gap()}"
        )
    left = tuple(spec.left)
    right = tuple(spec.right)
    n, m = len(left), len(right)
    lidx = {u: k for k, u in enumerate(left)}
    ridx = {v: k for k, v in enumerate(right)}

    resources = np.empty(n + 1)
    limits = np.zeros((n + 1, m))
    delta = np.empty((n + 1, m))
    delta[1:] = -1.0  # absent pairs carry no capacity; any negative delta works

    resources[0] = 1.0
    limits[0] = 1.0
    for v in range(m):
        cap = float(spec.right_capacity[v])
        if cap <= 0.0:
            raise ValidationError(f"right vertex {right[v]!r} has capacity {cap}")
        delta[0, v] = 1.0 / cap
    for k, u in enumerate(left, start=1):
        resources[k] = float(spec.left_capacity[k - 1])
    for edge in spec.edges:
        u, v = lidx[edge.left], ridx[edge.right]
        limits[u + 1, v] = float(edge.capacity)
        delta[u + 1, v] = -math.exp(float(edge.cost))

    annotations = {
        "matching": {
            "edges": [[e.left, e.right, float(e.cost)] for e in spec.edges],
        }
    }
    return CEGame(sites=right, resources=resources, limits=limits,
                  alt=np.zeros((n + 1, m)), base=np.zeros((n + 1, m)),
                  const=np.zeros((n + 1, m)), delta=delta,
                  evader_ids=left, annotations=annotations)


def matching_network(spec: MatchingSpec) -> FlowNetwork:
    """The instance as a plain flow problem (the direct route to the answer,
    used to cross-check the equilibrium route)."""
    net = FlowNetwork(source="__source__", sink="__sink__")
    for u, cap in zip(spec.left, spec.left_capacity):
        net.add_edge("__source__", ("left", u), float(cap))
    for v, cap in zip(spec.right, spec.right_capacity):
        net.add_edge(("right", v), "__sink__", float(cap))
    for e in spec.edges:
        net.add_edge(("left", e.left), ("right", e.right),
                     float(e.capacity), float(e.cost))
    return net


@dataclass(frozen=True)
class MatchingResult:
    flows: dict
    total_cost: float


def extract_matching(game: CEGame, solution: NashSolution) -> MatchingResult:
    """Read the evader allocations of an equilibrium back as matching flow.

    Costs come from the annotation written by :func:`matching_to_ce`.
    """
    info = game.annotations.get("matching") if game.annotations else None
    if not info:
        raise ValidationError("game carries no matching annotation")
    if game.evader_ids is None:
        raise ValidationError("game does not name its evaders")
    lidx = {u: k + 1 for k, u in enumerate(game.evader_ids)}
    ridx = {v: k for k, v in enumerate(game.sites)}
    flows = {}
    total = 0.0
    for u, v, cost in info["edges"]:
        amount = float(solution.profile.alloc[lidx[u], ridx[v]])
        flows[(u, v)] = amount
        total += amount * float(cost)
    return MatchingResult(flows=flows, total_cost=total)
