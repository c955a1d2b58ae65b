"""Deterministic random game generation.

Uses a self-contained splitmix64 stream rather than the platform RNG so a
(n, m, seed) triple produces byte-identical games on every platform and
language runtime.  Draw order, which is part of the format: resources for
players 0..n, then per site the catcher's base and delta, then per evader
(in player order) per site that evader's base and delta.
"""

from __future__ import annotations

import numpy as np

from .core import CEGame

__all__ = ["SplitMix64", "gen_random"]

_MASK = (1 << 64) - 1


class SplitMix64:
    """splitmix64: 64-bit state advanced by the golden-gamma constant, with
    the standard two-round xor-multiply finalizer."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return (z ^ (z >> 31)) & _MASK

    def randint(self, low: int, high: int) -> int:
        """Uniform-ish integer in [low, high] (modulo reduction; the bias is
        below 2**-60 for the ranges used here)."""
        span = high - low + 1
        return low + self.next_u64() % span


def gen_random(n: int, m: int, seed: int) -> CEGame:
    """Random benchmark instance: ``n`` evaders, ``m`` sites, unit caps.

    Resources and base utilities are uniform on {1..10} (resources clamped
    to the site count so the game stays feasible), catcher deltas uniform
    on {1..10}, evader deltas uniform on {-10..-1}; the alternating and
    constant coefficients are zero.
    """
    if n < 1 or m < 1:
        raise ValueError("need at least one evader and one site")
    rng = SplitMix64(seed)
    players = n + 1
    resources = np.empty(players)
    for i in range(players):
        resources[i] = min(rng.randint(1, 10), m)
    base = np.zeros((players, m))
    delta = np.zeros((players, m))
    for s in range(m):
        base[0, s] = rng.randint(1, 10)
        delta[0, s] = rng.randint(1, 10)
    for i in range(1, players):
        for s in range(m):
            base[i, s] = rng.randint(1, 10)
            delta[i, s] = -rng.randint(1, 10)
    sites = tuple(f"s{k}" for k in range(m))
    return CEGame.create(sites=sites, resources=resources, limits=1.0,
                         base=base, delta=delta)
