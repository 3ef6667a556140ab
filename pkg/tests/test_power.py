"""Power allocation: closed forms, grid oracle, descent, gradient, feasibility."""

import math

import numpy as np
import pytest

from beamhop.power import (PowerProblem, objective, objective_gradient,
                           optimize, rates, slacks_from_powers)

from conftest import random_power_problem


def single_beam_problem(rng):
    h = float(rng.uniform(1e-14, 1e-12))
    demand = float(rng.uniform(1e3, 2e6))
    return PowerProblem(gains=np.array([[h]]), demands=np.array([demand]),
                        p_max=250.0, noise_w=7.96e-13, bits_scale=1e5)


def single_beam_closed_form(problem: PowerProblem) -> float:
    # one beam has no interference: the best power either meets the demand
    # exactly or spends the whole budget
    h = problem.gains[0, 0]
    d = problem.demands[0]
    p_match = (2.0 ** (d / problem.bits_scale) - 1.0) * problem.noise_w / h
    return min(problem.p_max, p_match)


def test_problem_validation():
    with pytest.raises(ValueError):
        PowerProblem(gains=np.array([[0.0]]), demands=np.array([1.0]),
                     p_max=1.0, noise_w=1.0, bits_scale=1.0)
    with pytest.raises(ValueError):
        PowerProblem(gains=np.array([[1.0]]), demands=np.array([0.0]),
                     p_max=1.0, noise_w=1.0, bits_scale=1.0)
    with pytest.raises(ValueError):
        PowerProblem(gains=np.array([[1.0, -0.1], [0.0, 1.0]]),
                     demands=np.array([1.0, 1.0]),
                     p_max=1.0, noise_w=1.0, bits_scale=1.0)


def test_rates_two_beam_hand_case():
    # SINR_0 = 3*2/(2*1+1) = 2, SINR_1 = 2*4/(3*0.5+1) = 3.2
    problem = PowerProblem(gains=np.array([[2.0, 1.0], [0.5, 4.0]]),
                           demands=np.array([1.0, 1.0]),
                           p_max=10.0, noise_w=1.0, bits_scale=1.0)
    r = rates(problem, np.array([3.0, 2.0]))
    assert r[0] == pytest.approx(math.log2(3.0), rel=1e-12)
    assert r[1] == pytest.approx(math.log2(4.2), rel=1e-12)


def test_objective_is_squared_gap():
    problem = PowerProblem(gains=np.diag([1.0, 1.0]),
                           demands=np.array([2.0, 3.0]),
                           p_max=10.0, noise_w=1.0, bits_scale=1.0)
    p = np.array([3.0, 0.0])
    r = rates(problem, p)  # [2, 0]
    assert r[0] == pytest.approx(2.0)
    assert objective(problem, p) == pytest.approx(0.0 + 9.0, rel=1e-12)


def test_slacks_layout():
    problem = PowerProblem(gains=np.diag([1.0, 1.0]),
                           demands=np.array([2.0, 3.0]),
                           p_max=10.0, noise_w=1.0, bits_scale=1.0)
    p = np.array([3.0, 1.0])
    s = slacks_from_powers(problem, p)
    assert s.shape == (5,)
    assert s[0] == pytest.approx(6.0)          # budget slack
    assert np.allclose(s[1:3], p)              # positivity slacks
    assert np.allclose(s[3:], problem.demands - rates(problem, p))


def test_single_beam_matches_closed_form():
    rng = np.random.default_rng(17)
    worst = 0.0
    for _ in range(60):
        problem = single_beam_problem(rng)
        p_star = single_beam_closed_form(problem)
        got = optimize(problem).powers[0]
        worst = max(worst, abs(got - p_star) / max(p_star, 1e-300))
    assert worst <= 1e-6


def test_exact_match_shortcut_path():
    # small demands far inside the budget: the matching allocation is the
    # optimum, found without running the barrier schedule
    rng = np.random.default_rng(3)
    for _ in range(10):
        problem = random_power_problem(rng, 4, demand_scale=2e4)
        res = optimize(problem)
        assert res.outer_iterations == 0
        assert res.converged
        assert res.objective_value <= 1e-12 * float(problem.demands @ problem.demands)
        assert np.allclose(res.rates, problem.demands, rtol=1e-6)
        assert res.powers.sum() <= problem.p_max


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(29)
    for _ in range(30):
        k = int(rng.integers(1, 7))
        problem = random_power_problem(rng, k)
        p = rng.uniform(0.05, 0.9, k) * problem.p_max / k
        grad = objective_gradient(problem, p)
        scale = float(np.linalg.norm(grad)) + 1e-12
        for j in range(k):
            h = max(1e-6 * p[j], 1e-9)
            up = p.copy()
            dn = p.copy()
            up[j] += h
            dn[j] -= h
            fd = (objective(problem, up) - objective(problem, dn)) / (2 * h)
            assert abs(grad[j] - fd) <= 1e-5 * max(scale, abs(fd))


def test_never_worse_than_equal_split():
    rng = np.random.default_rng(41)
    for _ in range(100):
        k = int(rng.choice([2, 4, 8]))
        problem = random_power_problem(rng, k, demand_scale=8e5)
        res = optimize(problem, thorough=False)
        equal = objective(problem, np.full(k, problem.p_max / k))
        assert res.objective_value <= equal * (1 + 1e-9) + 1e-9


def test_returned_points_are_feasible():
    rng = np.random.default_rng(53)
    for _ in range(60):
        k = int(rng.integers(1, 9))
        problem = random_power_problem(rng, k, demand_scale=1.2e6)
        res = optimize(problem, thorough=False)
        assert np.all(res.powers >= -1e-12)
        assert res.powers.sum() <= problem.p_max * (1 + 1e-9)
        assert np.all(res.rates <= problem.demands * (1 + 1e-7))
        assert np.isfinite(res.objective_value)


def test_two_beam_grid_oracle():
    rng = np.random.default_rng(61)
    for _ in range(4):
        problem = random_power_problem(rng, 2, demand_scale=7e5)
        res = optimize(problem)
        grid_best, resolution = _grid_search(problem, 600)
        assert res.objective_value <= grid_best + resolution + 1e-9


def _grid_search(problem: PowerProblem, n: int):
    """Brute-force reference: evaluate the objective on a feasible grid.

    Returns (best value, local resolution error around the best cell),
    computed with a standalone formula rather than the library's rates().
    """
    g = problem.gains
    d = problem.demands
    p1, p2 = np.meshgrid(np.linspace(0.0, problem.p_max, n),
                         np.linspace(0.0, problem.p_max, n), indexing="ij")
    r1 = problem.bits_scale * np.log2(
        1.0 + p1 * g[0, 0] / (p2 * g[0, 1] + problem.noise_w))
    r2 = problem.bits_scale * np.log2(
        1.0 + p2 * g[1, 1] / (p1 * g[1, 0] + problem.noise_w))
    feasible = ((p1 + p2 <= problem.p_max)
                & (r1 <= d[0] * (1 + 1e-12)) & (r2 <= d[1] * (1 + 1e-12)))
    obj = (r1 - d[0]) ** 2 + (r2 - d[1]) ** 2
    obj[~feasible] = np.inf
    best_flat = int(np.argmin(obj))
    i, j = np.unravel_index(best_flat, obj.shape)
    best = float(obj[i, j])
    neigh = obj[max(0, i - 1):i + 2, max(0, j - 1):j + 2]
    finite = neigh[np.isfinite(neigh)]
    return best, float(finite.max() - best)


def test_degenerate_identical_beams():
    # two beams, one sink position duplicated: symmetric optimum exists and
    # the solver must stay finite and feasible
    gains = np.full((2, 2), 2e-13)
    problem = PowerProblem(gains=gains, demands=np.array([3e5, 3e5]),
                           p_max=250.0, noise_w=7.96e-13, bits_scale=1e5)
    res = optimize(problem)
    assert np.isfinite(res.objective_value)
    assert res.powers.sum() <= 250.0 * (1 + 1e-9)


def test_power_vector_validation():
    problem = PowerProblem(gains=np.array([[1.0]]), demands=np.array([1.0]),
                           p_max=1.0, noise_w=1.0, bits_scale=1.0)
    with pytest.raises(ValueError):
        rates(problem, np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        rates(problem, np.array([-0.5]))
    with pytest.raises(ValueError):
        objective_gradient(problem, np.array([0.0]))
