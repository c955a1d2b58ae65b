"""Catcher commitment against a single all-in evader.

Tractable exactly when there is one evader that can concentrate its whole
budget on any site; the evader then best-responds by attacking a single
site, ties broken in the catcher's favor.  For each candidate attacked
site the optimal coverage solves a small linear program whose structure is
one-dimensional: fixing the coverage ``t`` on the attacked site, every
other site needs at least enough coverage to stay unattractive, and the
leftover budget is spent greedily on the best base utilities.  The value of
that inner fill is concave piecewise-linear in ``t``, so a ternary search
plus the kink candidates finds the per-site optimum exactly; the best
candidate overall is the commitment.

With more evaders, or an evader forced to split, the problem is NP-hard
and :func:`solve_stackelberg` refuses the instance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CEGame, require_valid
from .errors import UnsupportedInstanceError, ValidationError

__all__ = ["StackelbergSolution", "solve_stackelberg"]

_FEAS_SLACK = 1e-12


@dataclass(frozen=True)
class StackelbergSolution:
    """Optimal commitment: coverage vector, the site the evader attacks,
    and both players' utilities under that outcome."""

    coverage: np.ndarray
    attacked_site: int
    catcher_utility: float
    evader_utility: float


def _mandatory_coverage(game: CEGame, target: int, t: float) -> np.ndarray:
    """Per-site coverage lower bounds keeping ``target`` a weak best response
    when the attacked site carries coverage ``t``."""
    b1, d1 = game.base[1], game.delta[1]
    margin = b1 - (b1[target] + d1[target] * t)
    lows = margin / (-d1)
    lows[target] = 0.0
    return np.maximum(lows, 0.0)


def _fill_coverage(game: CEGame, target: int, t: float):
    """Best feasible coverage with ``coverage[target] == t``, or None.

    Mandatory lower bounds first; any remaining budget goes to the highest
    base-utility sites (the budget must be spent: row sums are equalities).
    """
    caps = game.limits[0]
    budget_total = float(game.resources[0])
    lows = _mandatory_coverage(game, target, t)
    if np.any(lows > caps + _FEAS_SLACK * np.maximum(1.0, caps)):
        return None
    coverage = np.minimum(lows, caps)
    coverage[target] = t
    leftover = budget_total - t - float(np.delete(coverage, target).sum())
    if leftover < -_FEAS_SLACK * max(1.0, budget_total):
        return None
    order = sorted((s for s in range(game.num_sites) if s != target),
                   key=lambda s: (-game.base[0, s], s))
    for s in order:
        if leftover <= 0.0:
            break
        add = min(float(caps[s] - coverage[s]), leftover)
        coverage[s] += add
        leftover -= add
    if leftover > _FEAS_SLACK * max(1.0, budget_total):
        return None
    return coverage


def _commit_value(game: CEGame, coverage: np.ndarray, target: int) -> float:
    """Catcher utility when the evader answers ``coverage`` by putting its
    whole budget on ``target``."""
    r1 = float(game.resources[1])
    return float(
        np.dot(game.base[0], coverage)
        + game.delta[0, target] * r1 * coverage[target]
        + game.alt[0, target] * r1
        + game.const[0].sum()
    )


def _target_optimum(game: CEGame, target: int, tol_bisect: float = 1e-13):
    """(value, coverage) of the best coverage keeping ``target`` attacked,
    or None when no feasible coverage does."""
    caps = game.limits[0]
    r0 = float(game.resources[0])
    t_lo = max(0.0, r0 - float(np.delete(caps, target).sum()))
    t_top = min(float(caps[target]), r0)
    if t_lo > t_top + _FEAS_SLACK:
        return None
    if _fill_coverage(game, target, t_lo) is None:
        return None

    # the feasible set in t is an interval starting at t_lo
    if _fill_coverage(game, target, t_top) is not None:
        t_hi = t_top
    else:
        lo, hi = t_lo, t_top
        while hi - lo > tol_bisect * max(1.0, t_top):
            mid = 0.5 * (lo + hi)
            if _fill_coverage(game, target, mid) is None:
                hi = mid
            else:
                lo = mid
        t_hi = lo

    def value_at(t: float) -> float:
        cov = _fill_coverage(game, target, t)
        return -math.inf if cov is None else _commit_value(game, cov, target)

    lo, hi = t_lo, t_hi
    for _ in range(200):
        if hi - lo <= tol_bisect * max(1.0, t_top):
            break
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if value_at(m1) < value_at(m2):
            lo = m1
        else:
            hi = m2

    candidates = {t_lo, t_hi, 0.5 * (lo + hi)}
    b1, d1 = game.base[1], game.delta[1]
    for s in range(game.num_sites):
        if s == target:
            continue
        # kinks where site s's mandatory coverage activates or hits its cap
        for shift in (0.0, float(game.delta[1, s]) * float(caps[s])):
            t_kink = (float(b1[s] - b1[target]) + shift) / float(d1[target])
            if t_lo - 1e-12 <= t_kink <= t_hi + 1e-12:
                candidates.add(min(max(t_kink, t_lo), t_hi))

    best = None
    for t in sorted(candidates):
        cov = _fill_coverage(game, target, t)
        if cov is None:
            continue
        val = _commit_value(game, cov, target)
        if best is None or val > best[0]:
            best = (val, cov)
    return best


def solve_stackelberg(game: CEGame) -> StackelbergSolution:
    """Optimal catcher commitment for the single-evader, no-split case.

    Requires ``n == 1`` and ``limits[1, s] >= resources[1]`` on every site;
    anything else is NP-hard and raises :class:`UnsupportedInstanceError`.
    Ties between equally good attacked sites resolve to the lowest index.
    """
    require_valid(game)
    if game.num_evaders != 1:
        raise UnsupportedInstanceError(
            f"Stackelberg commitment with {game.num_evaders} evaders is "
            "strongly NP-hard; only the single-evader case is supported"
        )
    r1 = float(game.resources[1])
    for s in range(game.num_sites):
        if game.limits[1, s] < r1 - 1e-12 * max(1.0, r1):
            raise UnsupportedInstanceError(
                "evader site limits below its budget make commitment "
                f"NP-hard (site {game.sites[s]!r} caps {game.limits[1, s]} "
                f"< {r1})"
            )

    best = None
    best_target = None
    for target in range(game.num_sites):
        result = _target_optimum(game, target)
        if result is None:
            continue
        if best is None or result[0] > best[0]:
            best = result
            best_target = target
    if best is None:
        raise ValidationError("no attacked site admits a feasible coverage")

    value, coverage = best
    # exact row sum; the dust adjustment is far below constraint tolerances
    residual = float(game.resources[0]) - float(coverage.sum())
    if residual != 0.0:
        order = np.argsort(game.limits[0] - coverage)
        for s in reversed(order):
            room = float(game.limits[0, s] - coverage[s]) if residual > 0 else float(coverage[s])
            if s != best_target and room > 0.0:
                coverage[s] += residual
                break

    mu1 = float(game.base[1, best_target]
                + game.delta[1, best_target] * coverage[best_target])
    evader_value = float(mu1 * r1 + np.dot(game.alt[1], coverage)
                         + game.const[1].sum())
    return StackelbergSolution(
        coverage=coverage,
        attacked_site=best_target,
        catcher_utility=_commit_value(game, coverage, best_target),
        evader_utility=evader_value,
    )
