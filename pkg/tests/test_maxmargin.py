"""Hard-margin separator tests.

The production solver and the subset-enumeration oracle are independent
implementations of the same optimum; most of this file plays them against
each other on small random separable instances and against one fully worked
analytic case.
"""

from __future__ import annotations

import numpy as np
import pytest

from weightlab.errors import NotSeparableError
from weightlab.maxmargin import (
    MaxMarginSolution,
    brute_force_max_margin,
    solve_max_margin,
)

from conftest import binary_dataset, random_separable, two_point_dataset

N_CROSS_CHECKS = 10


# ---------------------------------------------------------------------------
# analytic case
# ---------------------------------------------------------------------------


def test_two_point_problem_both_solvers():
    # (1,1)->+1 and (-1,-1)->-1: optimum direction (1,1)/sqrt(2),
    # gamma* = sqrt(2). The signed rows y_i x_i coincide, so the dual is
    # degenerate: any support subset of {0, 1} is legitimate.
    ds = two_point_dataset()
    for solve in (solve_max_margin, brute_force_max_margin):
        sol = solve(ds)
        np.testing.assert_allclose(sol.direction, np.full(2, np.sqrt(0.5)), atol=1e-9)
        np.testing.assert_allclose(sol.gamma_star, np.sqrt(2.0), rtol=1e-9)
        assert sol.support_set and set(sol.support_set) <= {0, 1}


def test_direction_is_unit_norm_and_margins_feasible():
    rng = np.random.default_rng(17)
    for _ in range(5):
        ds = random_separable(rng, n=8, d=2)
        sol = solve_max_margin(ds)
        np.testing.assert_allclose(np.linalg.norm(sol.direction), 1.0, rtol=1e-12)
        margins = ds.labels * (ds.features @ sol.direction)
        assert margins.min() >= sol.gamma_star - 1e-9


def test_solvers_agree_on_random_separable_instances():
    rng = np.random.default_rng(23)
    for trial in range(N_CROSS_CHECKS):
        n = int(rng.integers(4, 13))
        d = int(rng.integers(2, 4))
        ds = random_separable(rng, n=n, d=d)
        a = solve_max_margin(ds)
        b = brute_force_max_margin(ds)
        cosine = float(np.dot(a.direction, b.direction))
        assert cosine >= 0.999, f"trial {trial}: cosine {cosine}"
        np.testing.assert_allclose(a.gamma_star, b.gamma_star, rtol=1e-6)


def test_solution_is_scale_invariant():
    rng = np.random.default_rng(31)
    ds = random_separable(rng, n=10, d=3)
    scaled = binary_dataset(5.0 * ds.features, ds.labels)
    a, b = solve_max_margin(ds), solve_max_margin(scaled)
    np.testing.assert_allclose(a.direction, b.direction, atol=1e-7)
    np.testing.assert_allclose(b.gamma_star, 5.0 * a.gamma_star, rtol=1e-7)


def test_non_support_points_do_not_move_the_answer():
    # a far-away correctly classified point is not a support vector
    ds = binary_dataset(
        np.array([[1.0, 1.0], [-1.0, -1.0], [50.0, 50.0]]),
        np.array([1, -1, 1]),
    )
    sol = solve_max_margin(ds)
    base = solve_max_margin(two_point_dataset())
    np.testing.assert_allclose(sol.direction, base.direction, atol=1e-9)
    np.testing.assert_allclose(sol.gamma_star, base.gamma_star, rtol=1e-9)
    assert 2 not in sol.support_set
    assert sol.dual_coefficients[2] == 0.0


def test_duals_reconstruct_the_direction():
    # stationarity: sum_i p_i y_i x_i is parallel to the optimal direction
    rng = np.random.default_rng(41)
    for _ in range(5):
        ds = random_separable(rng, n=9, d=3)
        sol = solve_max_margin(ds)
        combo = (sol.dual_coefficients * ds.labels) @ ds.features
        cosine = combo @ sol.direction / np.linalg.norm(combo)
        assert cosine >= 0.999
        assert np.all(sol.dual_coefficients >= 0)
        off_support = np.setdiff1d(np.arange(ds.n), sol.support_set)
        np.testing.assert_array_equal(sol.dual_coefficients[off_support], 0.0)


def test_support_set_margins_are_tight():
    rng = np.random.default_rng(43)
    ds = random_separable(rng, n=10, d=2)
    sol = solve_max_margin(ds)
    margins = ds.labels * (ds.features @ sol.direction)
    np.testing.assert_allclose(
        margins[list(sol.support_set)], sol.gamma_star, rtol=1e-6
    )


# ---------------------------------------------------------------------------
# failure modes
# ---------------------------------------------------------------------------


def test_not_separable_raises_in_both_solvers():
    # identical point with both labels cannot be separated
    ds = binary_dataset(np.array([[1.0, 0.0], [1.0, 0.0]]), np.array([1, -1]))
    with pytest.raises(NotSeparableError):
        solve_max_margin(ds)
    with pytest.raises(NotSeparableError):
        brute_force_max_margin(ds)


def test_zero_feature_vector_is_not_separable():
    ds = binary_dataset(np.array([[0.0, 0.0], [1.0, 1.0]]), np.array([1, 1]))
    with pytest.raises(NotSeparableError):
        solve_max_margin(ds)


def test_solution_arrays_are_immutable():
    sol = solve_max_margin(two_point_dataset())
    assert isinstance(sol, MaxMarginSolution)
    with pytest.raises(ValueError):
        sol.direction[0] = 0.0
    with pytest.raises(ValueError):
        sol.dual_coefficients[0] = 0.0
