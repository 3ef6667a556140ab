"""Jitted hot loops for the schedulers.

The per-slot schedulers dominate simulation runtime (the genetic baseline
evaluates ~20k candidate assignments per slot), so the inner loops live here
as numba kernels over plain arrays.  Everything is deterministic: the genetic
kernel carries its own splitmix64 stream seeded by the caller, so a fixed
seed reproduces runs bit-for-bit regardless of numpy RNG internals.

Convention: ``gains[n, m]`` is the channel gain from the beam pointed at
position m to the receiving node selected at position n, ``demands[n]`` the
queued bits of position n, and every beam transmits ``p_beam`` watts here
(power optimization happens after scheduling).
"""

import numpy as np
from numba import njit

_U64_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_U64_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_U64_MIX2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 1.0 / 9007199254740992.0


@njit(cache=True)
def _next_uniform(state):
    # splitmix64, then take the top 53 bits as a double in [0, 1)
    state[0] = state[0] + _U64_GOLDEN
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * _U64_MIX1
    z = (z ^ (z >> np.uint64(27))) * _U64_MIX2
    z = z ^ (z >> np.uint64(31))
    return float(z >> np.uint64(11)) * _INV_2_53


@njit(cache=True)
def _rand_below(state, m):
    return int(_next_uniform(state) * m)


@njit(cache=True)
def utility_kernel(assignment, gains, demands, p_beam, noise_w, bits_scale):
    """Identical-interest scheduling cost: sum over beams of
    offered^2 - 2 * demand * offered, with offered = bits_scale * log2(1+SINR)
    under equal per-beam power."""
    k_beams = assignment.shape[0]
    total = 0.0
    for j in range(k_beams):
        n = assignment[j]
        interference = 0.0
        for l in range(k_beams):
            if l != j:
                interference += gains[n, assignment[l]]
        snr = p_beam * gains[n, n] / (p_beam * interference + noise_w)
        offered = bits_scale * np.log2(1.0 + snr)
        total += offered * offered - 2.0 * demands[n] * offered
    return total


@njit(cache=True)
def best_response_kernel(assignment, k, gains, demands, p_beam, noise_w,
                         bits_scale):
    """Best single-beam move: candidate position minimizing the shared cost,
    scanning in index order so ties resolve to the lowest index."""
    n_pos = gains.shape[0]
    k_beams = assignment.shape[0]
    work = assignment.copy()
    best_c = -1
    best_u = np.inf
    for c in range(n_pos):
        taken = False
        for j in range(k_beams):
            if j != k and assignment[j] == c:
                taken = True
                break
        if taken:
            continue
        work[k] = c
        u = utility_kernel(work, gains, demands, p_beam, noise_w, bits_scale)
        if u < best_u:
            best_u = u
            best_c = c
    return best_c, best_u


@njit(cache=True)
def find_ne_kernel(gains, demands, initial, p_beam, noise_w, bits_scale,
                   max_sweeps):
    """Round-robin best-response sweeps until a full sweep changes nothing.

    Returns (assignment, converged, sweeps, cost_trace) where cost_trace[i]
    is the shared cost after sweep i.
    """
    k_beams = initial.shape[0]
    assignment = initial.copy()
    trace = np.empty(max_sweeps)
    sweeps = 0
    converged = False
    for _ in range(max_sweeps):
        changed = False
        for k in range(k_beams):
            c, _u = best_response_kernel(assignment, k, gains, demands,
                                         p_beam, noise_w, bits_scale)
            if c != assignment[k]:
                assignment[k] = c
                changed = True
        trace[sweeps] = utility_kernel(assignment, gains, demands, p_beam,
                                       noise_w, bits_scale)
        sweeps += 1
        if not changed:
            converged = True
            break
    return assignment, converged, sweeps, trace[:sweeps]


@njit(cache=True)
def _fill_unused(child, used, k_beams, n_pos, state):
    """Replace hole markers (-1) left to right with random unused positions."""
    used_count = 0
    for v in range(n_pos):
        if used[v]:
            used_count += 1
    for j in range(k_beams):
        if child[j] == -1:
            r = _rand_below(state, n_pos - used_count)
            seen = -1
            for v in range(n_pos):
                if not used[v]:
                    seen += 1
                    if seen == r:
                        child[j] = v
                        used[v] = 1
                        used_count += 1
                        break


@njit(cache=True)
def ga_kernel(gains, demands, k_beams, pop_size, generations, p_mut, p_cro,
              p_beam, noise_w, bits_scale, seed):
    """Genetic search over ordered distinct beam assignments.

    Fitness is the same shared cost the best-response scheduler minimizes,
    shifted by the constant sum of squared demands so it equals the global
    scheduling objective.  Binary tournaments, one-point crossover with
    duplicate repair, per-gene mutation to an unused position, elitism of
    one.  Returns (best assignment, best fitness, per-generation best).
    """
    n_pos = gains.shape[0]
    state = np.empty(1, dtype=np.uint64)
    state[0] = seed

    demand_sq = 0.0
    for n in range(n_pos):
        demand_sq += demands[n] * demands[n]

    pop = np.empty((pop_size, k_beams), dtype=np.int64)
    perm = np.empty(n_pos, dtype=np.int64)
    for i in range(pop_size):
        for v in range(n_pos):
            perm[v] = v
        for j in range(k_beams):
            r = j + _rand_below(state, n_pos - j)
            tmp = perm[j]
            perm[j] = perm[r]
            perm[r] = tmp
            pop[i, j] = perm[j]
    fit = np.empty(pop_size)
    for i in range(pop_size):
        fit[i] = demand_sq + utility_kernel(pop[i], gains, demands, p_beam,
                                            noise_w, bits_scale)

    best_hist = np.empty(generations)
    new_pop = np.empty_like(pop)
    new_fit = np.empty_like(fit)
    child = np.empty(k_beams, dtype=np.int64)
    used = np.zeros(n_pos, dtype=np.uint8)

    for g in range(generations):
        b = 0
        for i in range(1, pop_size):
            if fit[i] < fit[b]:
                b = i
        for j in range(k_beams):
            new_pop[0, j] = pop[b, j]
        new_fit[0] = fit[b]

        for i in range(1, pop_size):
            c1 = _rand_below(state, pop_size)
            c2 = _rand_below(state, pop_size)
            pa = c1 if fit[c1] <= fit[c2] else c2
            c1 = _rand_below(state, pop_size)
            c2 = _rand_below(state, pop_size)
            pb = c1 if fit[c1] <= fit[c2] else c2

            if k_beams > 1 and _next_uniform(state) < p_cro:
                cut = 1 + _rand_below(state, k_beams - 1)
            else:
                cut = k_beams
            for j in range(k_beams):
                child[j] = pop[pa, j] if j < cut else pop[pb, j]

            # crossover can duplicate genes; keep first occurrences, refill rest
            for v in range(n_pos):
                used[v] = 0
            for j in range(k_beams):
                v = child[j]
                if used[v]:
                    child[j] = -1
                else:
                    used[v] = 1
            _fill_unused(child, used, k_beams, n_pos, state)

            if n_pos > k_beams:
                for j in range(k_beams):
                    if _next_uniform(state) < p_mut:
                        old = child[j]
                        r = _rand_below(state, n_pos - k_beams)
                        seen = -1
                        for v in range(n_pos):
                            if not used[v]:
                                seen += 1
                                if seen == r:
                                    child[j] = v
                                    used[v] = 1
                                    used[old] = 0
                                    break

            for j in range(k_beams):
                new_pop[i, j] = child[j]
            new_fit[i] = demand_sq + utility_kernel(child, gains, demands,
                                                    p_beam, noise_w, bits_scale)

        tmp_pop = pop
        pop = new_pop
        new_pop = tmp_pop
        tmp_fit = fit
        fit = new_fit
        new_fit = tmp_fit
        b = 0
        for i in range(1, pop_size):
            if fit[i] < fit[b]:
                b = i
        best_hist[g] = fit[b]

    b = 0
    for i in range(1, pop_size):
        if fit[i] < fit[b]:
            b = i
    return pop[b].copy(), fit[b], best_hist
