"""Closed-form load-balancing bounds and independent brute-force oracles.

The simulator's probabilistic guarantees all reduce to uniform balls-into-bins
facts.  This module evaluates the closed forms and checks them against exact
enumeration (for small instances) or Monte Carlo (for the donation game), so
the simulation results can be validated against something that shares none of
the simulator's code paths.

Conventions: ``alpha`` is the idle-processor ratio of a round, ``P``/``B``
the processor/bin count.  All arithmetic is double precision; enumeration
oracles refuse instances beyond ``ENUMERATION_BUDGET`` outcomes instead of
silently switching to sampling.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from itertools import product
from statistics import NormalDist

ENUMERATION_BUDGET = 10_000_000


class OracleBudgetError(ValueError):
    """Exact enumeration would exceed the outcome budget."""


@dataclass(frozen=True)
class BoundReport:
    """Outcome of checking one bound: closed form vs oracle, with direction."""

    name: str
    params: str
    alpha: float | None
    closed_form: float | None
    oracle: float | None
    half_width: float | None
    satisfied: bool


# ---------------------------------------------------------------------------
# Uniform-toss hit probability (one bin, m independent tosses into B bins)


def hit_probability(bins: int, tosses: int) -> float:
    """Probability that a fixed bin receives at least one of ``tosses``
    uniform independent tosses into ``bins`` bins: 1 - (1 - 1/B)^m."""
    if bins < 1:
        raise ValueError(f"need at least one bin, got {bins}")
    if tosses < 0:
        raise ValueError(f"toss count must be >= 0, got {tosses}")
    return 1.0 - (1.0 - 1.0 / bins) ** tosses


def hit_probability_brute(bins: int, tosses: int) -> float:
    """Same probability by enumerating all B^m equiprobable toss outcomes."""
    if bins < 1:
        raise ValueError(f"need at least one bin, got {bins}")
    if tosses < 0:
        raise ValueError(f"toss count must be >= 0, got {tosses}")
    total = bins ** tosses
    if total > ENUMERATION_BUDGET:
        raise OracleBudgetError(f"{bins}^{tosses} outcomes exceed the budget")
    hits = sum(1 for outcome in product(range(bins), repeat=tosses) if 0 in outcome)
    return hits / total


# ---------------------------------------------------------------------------
# Steal and spread bounds


def steal_bounds(alpha: float) -> tuple[float, float]:
    """(lower, upper) bounds on the expected nodes stolen per round from a
    processor with surplus work, at idle ratio ``alpha``."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    return 1.0 - math.exp(-alpha), alpha


def spread_lower_bound(alpha: float) -> float:
    """Lower bound on the expected nodes a two-enabling processor donates:
    alpha^2 / (1 - alpha) * (1 - e^-(1-alpha)).  Undefined at alpha = 1."""
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must be in [0, 1), got {alpha}")
    return alpha * alpha / (1.0 - alpha) * (1.0 - math.exp(-(1.0 - alpha)))


def total_spread_bound(p_count: int, alpha: float) -> float:
    """Lower bound on the expected donations across all busy processors when
    every busy processor donates: P * alpha^2 * (1 - e^-(1-alpha))."""
    if p_count < 2:
        raise ValueError(f"need at least 2 processors, got {p_count}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    return p_count * alpha * alpha * (1.0 - math.exp(-(1.0 - alpha)))


def ws_growth_bound(r_size: int, alpha: float) -> float:
    """Expected next-round attached-set size of a surplus processor that
    enables two nodes under plain work stealing: at least |R| + 1 - alpha."""
    if r_size < 2:
        raise ValueError(f"surplus processor holds >= 2 nodes, got {r_size}")
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must be in [0, 1), got {alpha}")
    return r_size + 1.0 - alpha


# ---------------------------------------------------------------------------
# Two-stage cube/ball experiment (exact expectation by enumeration)
#
# B bins, the first B_R red and the rest green.  Stage one: toss B_R cubes
# uniformly; each cube landing in a green bin repaints one red bin green.
# Stage two: toss B_G = B - B_R balls uniformly; Y counts still-red bins
# holding at least one ball.  Only the repaint COUNT matters for Y's
# distribution (ball tosses are uniform over all bins), which keeps the
# enumeration to B^B_R + B^B_G outcomes instead of their product.


def cube_ball_expectation_brute(bins: int, red: int) -> float:
    """Exact E[Y] for the two-stage repaint-then-toss experiment."""
    if bins < 1:
        raise ValueError(f"need at least one bin, got {bins}")
    if not 0 <= red <= bins:
        raise ValueError(f"red bin count must be in [0, {bins}], got {red}")
    green = bins - red
    if bins ** red * bins ** green > ENUMERATION_BUDGET:
        raise OracleBudgetError(f"{bins}^{red} * {bins}^{green} outcomes exceed the budget")
    if red == 0 or green == 0:
        # no red bins to count, or no balls to land in them
        return 0.0

    # stage one: exact distribution of the repaint count
    repaint_weight = [0] * (red + 1)
    for cubes in product(range(bins), repeat=red):
        landed_green = sum(1 for b in cubes if b >= red)
        repaint_weight[min(landed_green, red)] += 1
    cube_total = bins ** red

    # stage two: E[balls hitting >= 1 of k designated bins] for each k
    ball_total = bins ** green
    expected_hits = [0.0] * (red + 1)
    for balls in product(range(bins), repeat=green):
        landed = set(balls)
        for k in range(red + 1):
            expected_hits[k] += sum(1 for b in landed if b < k)
    expected_hits = [h / ball_total for h in expected_hits]

    return sum(
        (repaint_weight[m] / cube_total) * expected_hits[red - m]
        for m in range(red + 1)
    )


# ---------------------------------------------------------------------------
# Stability margin and threshold


def wss_margin(alpha: float) -> float:
    """Expected outbound migrations of a two-enabling surplus processor,
    minus one: (1 - e^-alpha) + spread_lower_bound(alpha) - 1.

    Positive means donations plus steals drain faster than the processor
    generates; the sign flip locates the stability threshold.
    """
    return (1.0 - math.exp(-alpha)) + spread_lower_bound(alpha) - 1.0


def find_threshold(tolerance: float, lo: float = 0.5, hi: float = 0.99) -> float:
    """Bisection root of :func:`wss_margin` on [lo, hi] (margin is strictly
    increasing there, so the root is unique)."""
    if tolerance <= 0:
        raise ValueError(f"tolerance must be > 0, got {tolerance}")
    f_lo, f_hi = wss_margin(lo), wss_margin(hi)
    if not (f_lo < 0.0 < f_hi):
        raise ArithmeticError(f"bracket [{lo}, {hi}] does not straddle the root")
    while hi - lo > tolerance:
        mid = (lo + hi) / 2.0
        if wss_margin(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


# ---------------------------------------------------------------------------
# Donation-game Monte Carlo (spread monotonicity in the donor count)


def _simulate_donation_game(p_count: int, n_idle: int, donors: int, rng) -> int:
    """One round of the isolated donation game; returns successful donations.

    Stage one mirrors the steal phase: ``n_idle`` uniform victim picks, each
    pick landing on a busy processor turning one idle processor busy.  Stage
    two: ``donors`` uniform donee picks; every still-idle processor picked by
    at least one donor accepts exactly one donation.
    """
    repaints = sum(1 for _ in range(n_idle) if rng.randrange(p_count) >= n_idle)
    survivors = n_idle - min(repaints, n_idle)
    hit = set()
    for _ in range(donors):
        target = rng.randrange(p_count)
        if target < survivors:
            hit.add(target)
    return len(hit)


@dataclass(frozen=True)
class SpreadEstimate:
    donors: int
    per_donor_mean: float
    half_width: float


def spread_monotonicity_check(p_count: int, alpha: float, d_values,
                              replications: int = 20_000, seed: int = 0,
                              confidence: float = 0.99) -> dict:
    """Monte Carlo the donation game for several donor counts.

    Checks that the per-donor success expectation is minimized (within
    confidence intervals) when every busy processor donates, and that at
    that point it still clears :func:`spread_lower_bound`.
    """
    n_idle = round(p_count * alpha)
    if abs(n_idle - p_count * alpha) > 1e-9:
        raise ValueError(f"P*alpha must be integral, got {p_count}*{alpha}")
    max_donors = p_count - n_idle
    ds = sorted(set(int(d) for d in d_values) | {max_donors})
    if any(d < 1 or d > max_donors for d in ds):
        raise ValueError(f"donor counts must be in [1, {max_donors}], got {ds}")
    rng = random.Random(seed)
    z = NormalDist().inv_cdf(0.5 + confidence / 2.0)
    estimates: dict[int, SpreadEstimate] = {}
    for d in ds:
        vals = [_simulate_donation_game(p_count, n_idle, d, rng) / d
                for _ in range(replications)]
        mean = sum(vals) / replications
        var = sum((v - mean) ** 2 for v in vals) / (replications - 1)
        estimates[d] = SpreadEstimate(d, mean, z * math.sqrt(var / replications))

    full = estimates[max_donors]
    bound = spread_lower_bound(alpha)
    checks = {
        "full_contention_clears_bound":
            full.per_donor_mean >= bound - full.half_width,
        "minimized_at_full_contention": all(
            est.per_donor_mean + est.half_width
            >= full.per_donor_mean - full.half_width
            for est in estimates.values()
        ),
    }
    return {
        "estimates": estimates,
        "bound": bound,
        "checks": checks,
        "ok": all(checks.values()),
    }
