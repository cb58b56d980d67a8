import math
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from wssim.bounds import (OracleBudgetError, cube_ball_expectation_brute,
                          find_threshold, hit_probability, hit_probability_brute,
                          spread_lower_bound, spread_monotonicity_check,
                          steal_bounds, total_spread_bound, ws_growth_bound,
                          wss_margin)


def test_hit_probability_values():
    assert hit_probability(2, 1) == 0.5
    assert hit_probability(4, 2) == 0.4375
    assert hit_probability(4, 2) >= 1 - math.exp(-0.5)
    assert hit_probability(5, 0) == 0.0
    with pytest.raises(ValueError):
        hit_probability(0, 1)
    with pytest.raises(ValueError):
        hit_probability(2, -1)


def test_hit_probability_brute_values():
    assert hit_probability_brute(2, 2) == 0.75
    assert hit_probability_brute(3, 3) == pytest.approx(19 / 27, abs=1e-15)
    assert hit_probability_brute(1, 1) == 1.0


def test_hit_probability_oracle_equivalence_grid():
    for bins in range(1, 6):
        for tosses in range(0, 7):
            assert abs(hit_probability(bins, tosses)
                       - hit_probability_brute(bins, tosses)) <= 1e-12


def test_hit_probability_exponential_floor():
    # integral-ratio grid: alpha = m/10 for m in 1..9
    for m in range(1, 10):
        alpha = m / 10
        assert hit_probability(10, m) >= 1 - math.exp(-alpha)


def test_brute_budget_guard():
    with pytest.raises(OracleBudgetError):
        hit_probability_brute(10, 9)


def test_steal_bounds_values():
    assert steal_bounds(0.0) == (0.0, 0.0)
    lo, hi = steal_bounds(0.5)
    assert lo == pytest.approx(1 - math.exp(-0.5), abs=1e-15) and hi == 0.5
    lo, hi = steal_bounds(1.0)
    assert lo == pytest.approx(1 - math.exp(-1), abs=1e-15) and hi == 1.0
    for i in range(0, 11):
        lo, hi = steal_bounds(i / 10)
        assert lo <= hi
        assert (lo == hi) == (i == 0)


def test_spread_lower_bound_values():
    assert spread_lower_bound(0.0) == 0.0
    assert spread_lower_bound(0.75) == pytest.approx(2.25 * (1 - math.exp(-0.25)), abs=1e-15)
    assert spread_lower_bound(0.5) == pytest.approx(0.5 * (1 - math.exp(-0.5)), abs=1e-15)
    with pytest.raises(ValueError):
        spread_lower_bound(1.0)


def test_total_spread_bound_values():
    assert total_spread_bound(8, 0.0) == 0.0
    assert total_spread_bound(8, 0.75) == pytest.approx(
        8 * 0.5625 * (1 - math.exp(-0.25)), abs=1e-15)
    for i in range(1, 10):
        alpha = i / 10
        assert total_spread_bound(8, alpha) == pytest.approx(
            8 * (1 - alpha) * spread_lower_bound(alpha), abs=1e-12)


def _cube_ball_joint_oracle(bins: int, red: int) -> float:
    """Fully joint enumeration: every cube toss x ball toss outcome.

    Repaints the highest-index red bins (any fixed rule gives the same
    expectation since ball tosses are uniform), then counts still-red bins
    holding a ball.  Independent of the factorized production oracle.
    """
    green_start = red
    total = 0.0
    count = 0
    for cubes in product(range(bins), repeat=red):
        repaint = min(sum(1 for c in cubes if c >= green_start), red)
        still_red = red - repaint
        for balls in product(range(bins), repeat=bins - red):
            hit_bins = {b for b in balls if b < still_red}
            total += len(hit_bins)
            count += 1
    return total / count if count else 0.0


def test_cube_ball_edge_cases():
    assert cube_ball_expectation_brute(4, 0) == 0.0
    assert cube_ball_expectation_brute(4, 4) == 0.0
    with pytest.raises(ValueError):
        cube_ball_expectation_brute(4, 5)


def test_cube_ball_matches_joint_enumeration():
    for bins in range(1, 4):
        for red in range(0, bins + 1):
            assert cube_ball_expectation_brute(bins, red) == pytest.approx(
                _cube_ball_joint_oracle(bins, red), abs=1e-12)


def test_cube_ball_clears_floor():
    for bins in range(1, 6):
        for red in range(0, bins + 1):
            alpha = red / bins
            floor = bins * alpha * alpha * (1 - math.exp(-(1 - alpha)))
            assert cube_ball_expectation_brute(bins, red) >= floor - 1e-12


def test_cube_ball_b4_r2_exact():
    value = cube_ball_expectation_brute(4, 2)
    assert value == pytest.approx(_cube_ball_joint_oracle(4, 2), abs=1e-12)
    assert value >= 4 * 0.25 * (1 - math.exp(-0.5))


def test_margin_signs():
    assert wss_margin(0.70) < 0
    assert wss_margin(0.70) == pytest.approx(-0.0733, abs=5e-4)
    assert wss_margin(0.7375) > 0
    assert wss_margin(0.7375) == pytest.approx(6.5e-5, abs=2e-5)
    assert wss_margin(0.9) > 0
    with pytest.raises(ValueError):
        wss_margin(1.0)


def test_margin_strictly_increasing_on_grid():
    grid = [0.7375 + k / 1000 for k in range(0, 262)]
    values = [wss_margin(a) for a in grid]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_find_threshold():
    root = find_threshold(1e-6)
    assert 0.737 < root < 0.7375
    assert abs(root - 0.7375) <= 1e-3
    tight = find_threshold(1e-9)
    assert abs(wss_margin(tight)) <= 1e-8
    # the root sits below every alpha where the margin tested positive
    assert tight < 0.7375 and wss_margin(0.7375) > 0
    with pytest.raises(ValueError):
        find_threshold(0.0)
    with pytest.raises(ArithmeticError):
        find_threshold(1e-6, lo=0.8, hi=0.9)


def test_ws_growth_bound():
    assert ws_growth_bound(2, 0.5) == 2.5
    assert ws_growth_bound(5, 0.25) == 5.75
    eps = 1e-9
    assert abs(ws_growth_bound(3, 1 - eps) - 3) < 2 * eps
    with pytest.raises(ValueError):
        ws_growth_bound(1, 0.5)


@given(st.integers(2, 6), st.integers(0, 8))
@settings(max_examples=40)
def test_hit_probability_matches_brute_property(bins, tosses):
    assert hit_probability(bins, tosses) == pytest.approx(
        hit_probability_brute(bins, tosses), abs=1e-12)


def test_spread_monotonicity_check():
    report = spread_monotonicity_check(16, 0.75, [1, 2, 4],
                                       replications=8000, seed=4)
    assert report["ok"], report["checks"]
    est = report["estimates"]
    # single donor: per-donor success rate equals the expected surviving-idle
    # fraction, alpha^2
    assert est[1].per_donor_mean == pytest.approx(0.75 ** 2, abs=4 * est[1].half_width + 0.01)
    assert est[4].per_donor_mean >= report["bound"] - est[4].half_width
    assert est[1].per_donor_mean >= est[4].per_donor_mean - \
        (est[1].half_width + est[4].half_width)


def test_spread_monotonicity_rejects_bad_parameters():
    with pytest.raises(ValueError):
        spread_monotonicity_check(16, 0.73, [1])  # non-integral idle count
    with pytest.raises(ValueError):
        spread_monotonicity_check(16, 0.75, [5])  # more donors than busy procs
