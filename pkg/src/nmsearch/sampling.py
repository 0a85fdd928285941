"""Configuration sampling: vanilla uniform and two-step cost-interval.

Vanilla sampling draws each layer's level independently and uniformly; by
the central limit theorem the FLOPs of such configs pile up around the mean,
so extremal-cost configs are rarely visited. Two-step sampling removes that
bias: first pick a FLOPs interval uniformly, then draw a config whose cost
lands inside it, using the per-layer choice probability table.

The in-interval draw is layer-sequential: layers are visited in order of
decreasing cost spread and each choice is restricted to levels that keep the
target interval reachable given the remaining layers' cost range (exact at
the last layer). A draw can still dead-end on discrete cost gaps; those are
retried, and after ``max_retries`` failures a greedy single-layer repair is
attempted before moving to the next interval. Only repair counts as a
fallback; it is reported so callers can log the rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cost import CostIntervals, fixed_flops
from .errors import ConfigurationError, SamplingExhaustedError
from .nm import SparsityLevel
from .space import SearchSpace, SparseConfig


@dataclass(frozen=True)
class ChoiceProbabilityTable:
    """p[l][k]: probability of picking level k for layer l."""

    levels: tuple[SparsityLevel, ...]
    probs: np.ndarray  # (L, K), rows sum to 1

    def __post_init__(self):
        p = self.probs
        if p.ndim != 2 or p.shape[1] != len(self.levels):
            raise ConfigurationError(f"probs shape {p.shape} vs {len(self.levels)} levels")
        if np.any(p < 0):
            raise ConfigurationError("probabilities must be non-negative")
        if np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-9):
            raise ConfigurationError("every layer's probabilities must sum to 1")

    @classmethod
    def uniform(cls, space: SearchSpace) -> "ChoiceProbabilityTable":
        k = space.num_levels
        probs = np.full((space.num_modules, k), 1.0 / k)
        return cls(levels=space.levels, probs=probs)

    @property
    def num_layers(self) -> int:
        return self.probs.shape[0]

    def probability(self, layer: int, level: SparsityLevel) -> float:
        return float(self.probs[layer, self.levels.index(level)])

    def with_probs(self, probs: np.ndarray) -> "ChoiceProbabilityTable":
        return ChoiceProbabilityTable(levels=self.levels, probs=probs)


@dataclass(frozen=True)
class SampleResult:
    config: SparseConfig
    interval: int
    attempts: int
    repaired: bool


def vanilla_sample(space: SearchSpace, rng: np.random.Generator) -> SparseConfig:
    """Each layer iid uniform over the space's levels; no cost constraint."""
    picks = rng.integers(0, space.num_levels, size=space.num_modules)
    return tuple(space.levels[int(k)] for k in picks)


def _interval_distance(flops, lo, hi, closed) -> float:
    if flops < lo:
        return lo - flops
    if flops <= hi if closed else flops < hi:
        return 0.0
    return flops - hi + (0.0 if closed else 1e-9)


def _draw_in_interval(costs, fixed, probs, order, suffix_min, suffix_max,
                      lo, hi, closed, rng):
    """One sequential feasible draw; returns level indices or None."""
    num_layers = len(order)
    chosen = [0] * num_layers
    partial = fixed
    for pos in range(num_layers):
        layer = order[pos]
        rest_lo = suffix_min[pos + 1]
        rest_hi = suffix_max[pos + 1]
        weights = []
        options = []
        row_p = probs[layer]
        row_c = costs[layer]
        for k in range(len(row_p)):
            if row_p[k] <= 0.0:
                continue
            low_total = partial + row_c[k] + rest_lo
            high_total = partial + row_c[k] + rest_hi
            if high_total < lo:
                continue
            if (low_total > hi) if closed else (low_total >= hi):
                continue
            options.append(k)
            weights.append(row_p[k])
        if not options:
            return None
        if len(options) == 1:
            pick = options[0]
        else:
            total = sum(weights)
            r = rng.random() * total
            acc = 0.0
            pick = options[-1]
            for k, w in zip(options, weights):
                acc += w
                if r < acc:
                    pick = k
                    break
        chosen[layer] = pick
        partial += row_c[pick]
    return chosen


def _repair_toward_interval(costs, fixed, probs, chosen, lo, hi, closed):
    """Greedy single-layer level changes moving F(config) into the interval."""
    num_layers = len(chosen)
    flops = fixed + sum(costs[l][chosen[l]] for l in range(num_layers))
    dist = _interval_distance(flops, lo, hi, closed)
    for _ in range(num_layers):
        if dist == 0.0:
            return chosen
        best = None
        for l in range(num_layers):
            for k in range(len(probs[l])):
                if k == chosen[l] or probs[l][k] <= 0.0:
                    continue
                cand = flops - costs[l][chosen[l]] + costs[l][k]
                d = _interval_distance(cand, lo, hi, closed)
                if d < dist and (best is None or d < best[0]):
                    best = (d, l, k, cand)
        if best is None:
            return None
        dist, l, k, flops = best[0], best[1], best[2], best[3]
        chosen = list(chosen)
        chosen[l] = k
    return chosen if dist == 0.0 else None


def two_step_sample(
    space: SearchSpace,
    intervals: CostIntervals,
    table: ChoiceProbabilityTable,
    rng: np.random.Generator,
    max_retries: int = 200,
) -> SampleResult:
    """Pick an interval uniformly, then a config whose cost lands in it.

    If the chosen interval is unreachable under the table, the remaining
    intervals are tried in rotation before raising
    :class:`SamplingExhaustedError`.
    """
    if table.num_layers != space.num_modules or table.levels != space.levels:
        raise ConfigurationError("probability table does not match the search space")
    costs = space.cost_matrix().tolist()
    fixed = fixed_flops(space.arch)
    probs = table.probs.tolist()

    # Visit wide-spread layers first so the cheap ones can fine-tune the sum.
    spreads = []
    for l in range(space.num_modules):
        allowed = [costs[l][k] for k in range(space.num_levels) if probs[l][k] > 0.0]
        spreads.append(max(allowed) - min(allowed) if allowed else 0)
    order = sorted(range(space.num_modules), key=lambda l: (-spreads[l], l))

    suffix_min = [0] * (space.num_modules + 1)
    suffix_max = [0] * (space.num_modules + 1)
    for pos in range(space.num_modules - 1, -1, -1):
        layer = order[pos]
        allowed = [costs[layer][k] for k in range(space.num_levels) if probs[layer][k] > 0.0]
        lo_c = min(allowed) if allowed else 0
        hi_c = max(allowed) if allowed else 0
        suffix_min[pos] = suffix_min[pos + 1] + lo_c
        suffix_max[pos] = suffix_max[pos + 1] + hi_c

    first = int(rng.integers(intervals.num_intervals))
    attempts_by_interval = {}
    for offset in range(intervals.num_intervals):
        idx = (first + offset) % intervals.num_intervals
        lo, hi, closed = intervals.bounds(idx)
        attempts = 0
        for _ in range(max_retries):
            attempts += 1
            chosen = _draw_in_interval(
                costs, fixed, probs, order, suffix_min, suffix_max, lo, hi, closed, rng
            )
            if chosen is not None:
                config = tuple(space.levels[k] for k in chosen)
                return SampleResult(config, idx, attempts, repaired=False)
        # Rejection exhausted: nudge an unconstrained draw into the interval.
        base = [
            int(rng.choice(space.num_levels, p=np.asarray(probs[l]) / sum(probs[l])))
            for l in range(space.num_modules)
        ]
        repaired = _repair_toward_interval(costs, fixed, probs, base, lo, hi, closed)
        attempts_by_interval[idx] = attempts
        if repaired is not None:
            config = tuple(space.levels[k] for k in repaired)
            return SampleResult(config, idx, attempts, repaired=True)
    raise SamplingExhaustedError(
        f"no configuration found in any of {intervals.num_intervals} intervals "
        f"(first tried {first}; attempts per interval: {attempts_by_interval})",
        interval=first,
        attempts=attempts_by_interval,
    )
