"""Transmit-power allocation for one slot's illuminated beams.

Given the chosen assignment, powers minimize the squared gap between what
each beam offers and what its serving sink has queued,

    g(P) = sum_k (R_k(P) - demand_k)^2,
    R_k(P) = bits_scale * log2(1 + P_k G[k,k] / (sum_{l!=k} P_l G[k,l] + noise)),

subject to a total power budget, non-negative powers, and the no-waste cap
R_k <= demand_k.  The inequality constraints are handled by a log-barrier
interior-point method: slack variables turn each inequality into an equality
with a positive slack, every slack is an explicit function of P, and the
barrier subproblem

    phi_mu(P) = g(P) - mu * sum_i ln s_i(P)

is minimized by damped Newton steps (trust-region truncated-CG fallback when
the Hessian goes indefinite or a step fails), with mu reduced geometrically
from max(1, g at the equal split) down to 1e-10 of that.  A final active-set
Newton cleanup sharpens near-binding constraints to machine accuracy, which
matters when the optimum rides the demand caps.  Gradients and Hessians are
analytic throughout; the tests difference the objective to confirm them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class PowerProblem:
    """One slot's power-allocation instance over the K illuminated beams.

    gains[k, l] is the channel gain from beam l to the sink served by beam k;
    demands[k] the bits queued at that sink (must be positive: beams are only
    assigned to positions with pending demand).
    """

    gains: np.ndarray
    demands: np.ndarray
    p_max: float
    noise_w: float
    bits_scale: float

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=float)
        d = np.asarray(self.demands, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("gains must be square")
        if d.shape != (g.shape[0],):
            raise ValueError("demands length must match gains")
        if (d <= 0).any():
            raise ValueError("demands must be positive")
        if (np.diag(g) <= 0).any() or (g < 0).any():
            raise ValueError("gains must be non-negative with positive diagonal")
        if self.p_max <= 0 or self.noise_w <= 0 or self.bits_scale <= 0:
            raise ValueError("p_max, noise and bits scale must be positive")
        object.__setattr__(self, "gains", np.ascontiguousarray(g))
        object.__setattr__(self, "demands", np.ascontiguousarray(d))
        # cached views for the hot evaluation path
        object.__setattr__(self, "_diag", np.ascontiguousarray(np.diag(g)))
        object.__setattr__(self, "_diag_idx", np.diag_indices(g.shape[0]))

    @property
    def n_beams(self) -> int:
        return self.gains.shape[0]


def _check_powers(problem: PowerProblem, powers) -> np.ndarray:
    p = np.asarray(powers, dtype=float)
    if p.shape != (problem.n_beams,):
        raise ValueError("power vector has wrong length")
    if (p < 0).any():
        raise ValueError("powers must be non-negative")
    return p


def rates(problem: PowerProblem, powers) -> np.ndarray:
    """Offered bits per beam for a power vector."""
    p = _check_powers(problem, powers)
    diag = problem._diag
    interference = problem.gains @ p - diag * p + problem.noise_w
    return problem.bits_scale * np.log2(1.0 + diag * p / interference)


def objective(problem: PowerProblem, powers) -> float:
    """Sum of squared offered-vs-demand gaps (bits^2)."""
    r = rates(problem, powers)
    return float(np.sum((r - problem.demands) ** 2))


def _rate_terms(problem: PowerProblem, p: np.ndarray):
    """Rates plus the pieces their derivatives need.

    Returns (R, I, A, J):  I_k is interference+noise, A_k = I_k + own signal,
    J[k, j] = dR_k/dP_j.  The off-diagonal of J is written as
    -c*G[k,j]*P_k*G[k,k]/(A_k I_k) rather than a difference of reciprocals,
    which avoids cancellation when the own signal is weak.
    """
    G = problem.gains
    diag = problem._diag
    gp = G @ p
    I = gp - diag * p + problem.noise_w
    A = gp + problem.noise_w
    with np.errstate(divide="ignore", invalid="ignore"):
        R = problem.bits_scale * np.log2(A / I)
    c = problem.bits_scale / _LN2
    J = -c * G * (diag * p / (A * I))[:, None]
    J[problem._diag_idx] = c * diag / A
    return R, I, A, J


def objective_gradient(problem: PowerProblem, powers) -> np.ndarray:
    """Analytic gradient of the objective with respect to powers."""
    p = _check_powers(problem, powers)
    if (p <= 0).any():
        raise ValueError("gradient requires strictly positive powers")
    R, _, _, J = _rate_terms(problem, p)
    return 2.0 * J.T @ (R - problem.demands)


def _curvature(problem: PowerProblem, I, A, weights):
    """sum_k weights[k] * hess(R_k): analytic, from the log structure."""
    G = problem.gains
    Gz = G.copy()
    np.fill_diagonal(Gz, 0.0)
    c = problem.bits_scale / _LN2
    wb = weights / (I * I)
    wa = weights / (A * A)
    return c * (Gz.T @ (wb[:, None] * Gz) - G.T @ (wa[:, None] * G))


def slacks_from_powers(problem: PowerProblem, powers) -> np.ndarray:
    """Slack vector (budget, K positivities, K demand caps) implied by P."""
    p = _check_powers(problem, powers)
    r = rates(problem, p)
    return np.concatenate(([problem.p_max - p.sum()], p, problem.demands - r))


@dataclass(frozen=True)
class BarrierState:
    """A strictly feasible barrier iterate: powers, slacks and current mu."""

    powers: np.ndarray
    slacks: np.ndarray
    mu: float

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if (np.asarray(self.slacks) <= 0).any():
            raise ValueError("slacks must be strictly positive")


def barrier_value(problem: PowerProblem, state: BarrierState) -> float:
    """phi_mu = objective - mu * sum(ln slacks) at a consistent state."""
    s = np.asarray(state.slacks, dtype=float)
    if s.shape != (2 * problem.n_beams + 1,):
        raise ValueError("slack vector has wrong length")
    implied = slacks_from_powers(problem, state.powers)
    scale = np.maximum(1.0, np.abs(implied))
    if np.max(np.abs(s - implied) / scale) > 1e-6:
        raise ValueError("slacks inconsistent with powers")
    return objective(problem, state.powers) - state.mu * float(np.sum(np.log(s)))


def _phi_and_grad(problem, p, mu):
    """Barrier value and gradient; +inf value when p leaves the interior."""
    s_bud = problem.p_max - p.sum()
    if s_bud <= 0 or (p <= 0).any():
        return np.inf, None, None
    R, I, A, J = _rate_terms(problem, p)
    gap = problem.demands - R
    if (gap <= 0).any():
        return np.inf, None, None
    res = R - problem.demands
    phi = float(res @ res) - mu * (math.log(s_bud) + float(np.sum(np.log(p)))
                                   + float(np.sum(np.log(gap))))
    grad = J.T @ (2.0 * res + mu / gap) + mu / s_bud - mu / p
    return phi, grad, (R, I, A, J, gap, s_bud)


def _phi_only(problem, p, mu):
    """Barrier value alone, skipping the Jacobian the line search never needs."""
    s_bud = problem.p_max - p.sum()
    if s_bud <= 0 or (p <= 0).any():
        return np.inf
    diag = problem._diag
    I = problem.gains @ p - diag * p + problem.noise_w
    R = problem.bits_scale * np.log2(1.0 + diag * p / I)
    gap = problem.demands - R
    if (gap <= 0).any():
        return np.inf
    res = R - problem.demands
    return float(res @ res) - mu * (math.log(s_bud) + float(np.sum(np.log(p)))
                                    + float(np.sum(np.log(gap))))


def _phi_hessian(problem, p, mu, parts):
    R, I, A, J, gap, s_bud = parts
    res = R - problem.demands
    K = problem.n_beams
    H = 2.0 * (J.T @ J) + _curvature(problem, I, A, 2.0 * res)
    H += mu / (s_bud * s_bud)  # rank-one budget term: mu/s^2 * ones*ones^T
    H += np.diag(mu / (p * p))
    H += J.T @ ((mu / (gap * gap))[:, None] * J)
    H += _curvature(problem, I, A, mu / gap)
    return H


def _max_linear_step(problem, p, d, fraction):
    """Largest step keeping the linear boundaries (budget, positivity) away."""
    t = 1.0
    ds = d.sum()
    s_bud = problem.p_max - p.sum()
    if ds > 0:
        t = min(t, fraction * s_bud / ds)
    neg = d < 0
    if neg.any():
        t = min(t, fraction * float(np.min(p[neg] / -d[neg])))
    return t


def _max_step(problem, p, d, parts, fraction):
    """Fraction-to-boundary cap over all constraints.

    Linear boundaries are exact; the nonlinear demand caps are limited through
    their linearization, which is what keeps the line search from starting at
    points the barrier has already priced at +inf.
    """
    t = _max_linear_step(problem, p, d, fraction)
    _, _, _, J, gap, _ = parts
    jd = J @ d
    rising = jd > 0
    if rising.any():
        t = min(t, fraction * float(np.min(gap[rising] / jd[rising])))
    return t


def _steihaug(H, grad, radius):
    """Truncated CG on the quadratic model within a trust region."""
    n = grad.shape[0]
    z = np.zeros(n)
    r = grad.copy()
    d = -r
    rr = float(r @ r)
    if math.sqrt(rr) < 1e-300:
        return z
    for _ in range(2 * n + 10):
        Hd = H @ d
        dHd = float(d @ Hd)
        if dHd <= 0:
            # negative curvature: ride it to the boundary
            return z + _boundary_tau(z, d, radius) * d
        alpha = rr / dHd
        z_new = z + alpha * d
        if np.linalg.norm(z_new) >= radius:
            return z + _boundary_tau(z, d, radius) * d
        r = r + alpha * Hd
        rr_new = float(r @ r)
        if math.sqrt(rr_new) < 1e-10 * math.sqrt(float(grad @ grad)) + 1e-300:
            return z_new
        d = -r + (rr_new / rr) * d
        z = z_new
        rr = rr_new
    return z


def _boundary_tau(z, d, radius):
    dd = float(d @ d)
    zd = float(z @ d)
    zz = float(z @ z)
    disc = max(0.0, zd * zd - dd * (zz - radius * radius))
    return (-zd + math.sqrt(disc)) / dd


def _inner_minimize(problem, p, mu, tol_inner, max_iter, fraction):
    """Minimize phi_mu from p; returns (p, grad_inf_norm, iters, hit_tol)."""
    phi, grad, parts = _phi_and_grad(problem, p, mu)
    radius = 0.1 * problem.p_max
    for it in range(max_iter):
        gnorm = float(np.max(np.abs(grad)))
        if gnorm <= tol_inner:
            return p, gnorm, it, True
        phi_before = phi
        H = _phi_hessian(problem, p, mu, parts)
        Hj = H + 1e-14 * np.trace(H) / len(p) * np.eye(len(p))
        step_taken = False
        # damped Newton first; cholesky doubles as the definiteness test
        try:
            np.linalg.cholesky(Hj)
            d = -np.linalg.solve(Hj, grad)
            t = _max_step(problem, p, d, parts, fraction)
            slope = float(grad @ d)
            if slope < 0:
                # once the Newton decrement drops below arithmetic noise in
                # phi, the remaining gradient is cancellation error from the
                # ill-conditioned small-mu barrier, not real suboptimality
                if -slope <= 1e-13 * (1.0 + abs(phi)):
                    return p, gnorm, it, True
                for _ in range(45):
                    cand = p + t * d
                    phi_c = _phi_only(problem, cand, mu)
                    if phi_c <= phi + 1e-4 * t * slope:
                        p = cand
                        phi, grad, parts = _phi_and_grad(problem, p, mu)
                        step_taken = True
                        break
                    t *= 0.5
        except np.linalg.LinAlgError:
            pass
        if step_taken:
            if phi_before - phi <= 1e-13 * (1.0 + abs(phi_before)):
                return p, float(np.max(np.abs(grad))), it + 1, True
            continue
        # trust-region truncated-CG fallback
        accepted = False
        for _ in range(25):
            d = _steihaug(H, grad, radius)
            nd = np.linalg.norm(d)
            if nd < 1e-300:
                break
            t = _max_step(problem, p, d, parts, fraction)
            cand = p + t * d
            phi_c = _phi_only(problem, cand, mu)
            model_drop = -(float(grad @ d) * t + 0.5 * t * t * float(d @ (H @ d)))
            if np.isfinite(phi_c) and phi_c < phi and model_drop > 0:
                rho = (phi - phi_c) / model_drop
                p = cand
                phi, grad, parts = _phi_and_grad(problem, p, mu)
                if rho > 0.75 and t * nd > 0.9 * radius:
                    radius = min(radius * 2.0, problem.p_max)
                accepted = True
                break
            radius *= 0.25
            if radius < 1e-16 * problem.p_max:
                break
        if not accepted:
            return p, float(np.max(np.abs(grad))), it + 1, False
        if phi_before - phi <= 1e-13 * (1.0 + abs(phi_before)):
            return p, float(np.max(np.abs(grad))), it + 1, True
    return p, float(np.max(np.abs(grad))), max_iter, False


def _feasible_scale(problem, base):
    """Shrink a positive vector into the strict interior along its ray."""
    def ok(t):
        p = t * base
        if problem.p_max - p.sum() <= 1e-12 * problem.p_max:
            return False
        r = rates(problem, p)
        return bool(np.all(problem.demands - r > 1e-9 * problem.demands))

    if ok(1.0):
        return base.copy()
    lo, hi = 0.0, 1.0
    for _ in range(70):
        mid = 0.5 * (lo + hi)
        if mid <= 0:
            break
        if ok(mid):
            lo = mid
        else:
            hi = mid
    t = lo if lo > 0 else 1e-12
    return (0.999 * t) * base


def _exact_match(problem):
    """Minimal-power solution of rates == demands, or None if none fits.

    Each beam's power is set to exactly meet its demand given the current
    interference.  That update is a standard interference function (positive,
    monotone, scalable), so iterating from zero climbs monotonically to the
    unique minimal fixed point whenever any budget-feasible match exists, and
    blows through the budget otherwise.
    """
    G = problem.gains
    diag = problem._diag
    need = (2.0 ** (problem.demands / problem.bits_scale) - 1.0)
    p = np.zeros(problem.n_beams)
    for _ in range(400):
        interference = G @ p - diag * p + problem.noise_w
        p_new = need * interference / diag
        if p_new.sum() > problem.p_max * (1.0 - 1e-12):
            return None
        delta = float(np.max(np.abs(p_new - p)))
        p = p_new
        if delta <= 1e-15 * float(np.max(p)):
            break
    r = rates(problem, p)
    if float(np.max(np.abs(r - problem.demands) / problem.demands)) > 1e-10:
        return None
    return p


def _constraint_rows(problem, active_bud, active_pos, active_cap, J):
    rows = []
    if active_bud:
        rows.append(np.ones(problem.n_beams))
    for k in active_pos:
        e = np.zeros(problem.n_beams)
        e[k] = -1.0
        rows.append(e)
    for k in active_cap:
        rows.append(J[k])
    return np.array(rows) if rows else np.zeros((0, problem.n_beams))


def _polish_with_set(problem, p, active_bud, active_pos, active_cap):
    """Newton solve of the first-order system for one guessed active set.

    Returns the refined powers, or None when the iteration leaves the model's
    domain or the endpoint fails feasibility validation.
    """
    m = int(active_bud) + len(active_pos) + len(active_cap)
    x = p.copy()
    free_pos = [k for k in range(problem.n_beams) if k not in active_pos]
    nu = np.zeros(m)  # the system is linear in nu; the first step sets it
    for _ in range(25):
        Rx, I, A, J = _rate_terms(problem, x)
        res = Rx - problem.demands
        grad = 2.0 * J.T @ res
        C = _constraint_rows(problem, active_bud, active_pos, active_cap, J)
        cvals = []
        if active_bud:
            cvals.append(x.sum() - problem.p_max)
        for k in active_pos:
            cvals.append(-x[k])
        for k in active_cap:
            cvals.append(Rx[k] - problem.demands[k])
        cvals = np.array(cvals)
        F = np.concatenate([grad + C.T @ nu, cvals])
        if not np.all(np.isfinite(F)):
            return None
        scale = max(1.0, float(np.max(np.abs(grad))))
        if np.max(np.abs(F)) <= 1e-11 * scale:
            break
        W = 2.0 * (J.T @ J) + _curvature(problem, I, A, 2.0 * res)
        cap_weights = np.zeros(problem.n_beams)
        for idx, k in enumerate(active_cap):
            cap_weights[k] = nu[int(active_bud) + len(active_pos) + idx]
        if active_cap:
            W += _curvature(problem, I, A, cap_weights)
        KKT = np.block([[W, C.T], [C, np.zeros((m, m))]])
        if not np.all(np.isfinite(KKT)):
            return None
        try:
            step = np.linalg.lstsq(KKT, -F, rcond=None)[0]
        except np.linalg.LinAlgError:
            return None
        dx = step[:problem.n_beams]
        # damp so beams not pinned at zero keep strictly positive power,
        # otherwise the rate model feeds logs a negative argument
        t = 1.0
        for k in free_pos:
            if dx[k] < 0 and x[k] + t * dx[k] <= 0.1 * x[k]:
                t = min(t, -0.9 * x[k] / dx[k])
        if t < 1e-14:
            return None
        x = x + t * dx
        nu = nu + t * step[problem.n_beams:]
        if not np.all(np.isfinite(x)):
            return None

    x = np.where(np.abs(x) <= 1e-14 * problem.p_max, 0.0, x)
    if (x < 0).any() or x.sum() > problem.p_max * (1 + 1e-10):
        return None
    r = rates(problem, x)
    if not np.all(np.isfinite(r)) or np.any(r > problem.demands * (1 + 1e-9)):
        return None
    return x


def _active_set_polish(problem, p, mu_end, mu0):
    """Newton cleanup on the constraints the barrier path is converging to.

    The barrier keeps iterates strictly interior, so a cap that should bind
    is missed by O(sqrt(mu)); solving the equality-constrained first-order
    system for the nearly active set recovers the boundary solution to
    machine accuracy.  The near-active classification is a guess, so a couple
    of fallback sets cover the borderline reads; the best feasible refinement
    wins.  Returns None when nothing is nearly active or every attempt fails
    validation.
    """
    K = problem.n_beams
    thresh = 1000.0 * math.sqrt(mu_end / mu0)
    s_bud = problem.p_max - p.sum()
    bud = bool(s_bud <= thresh * problem.p_max)
    R = rates(problem, p)
    cap = [k for k in range(K)
           if problem.demands[k] - R[k] <= thresh * problem.demands[k]]
    # demands are strictly positive, so a vanishing cap gap implies strictly
    # positive power: a beam reading both "near zero" and "near its cap" is
    # capped, not pinned
    pos = [k for k in range(K)
           if k not in cap and p[k] <= thresh * problem.p_max / K]

    seen = set()
    candidates = []

    def consider(b, po, ca):
        key = (b, tuple(po), tuple(ca))
        n_active = int(b) + len(po) + len(ca)
        if 0 < n_active <= K and key not in seen:
            seen.add(key)
            candidates.append((b, po, ca))

    consider(bud, pos, cap)
    if bud and cap:
        # budget and cap readings can be jointly infeasible or one of them
        # spurious right at the crossover; try each face alone
        consider(bud, pos, [])
        consider(False, pos, cap)

    best_x = None
    best_g = np.inf
    for b, po, ca in candidates:
        x = _polish_with_set(problem, p, b, po, ca)
        if x is None:
            continue
        g = objective(problem, x)
        if g < best_g:
            best_x, best_g = x, g
    return best_x


@dataclass
class PowerResult:
    powers: np.ndarray
    objective_value: float
    rates: np.ndarray
    converged: bool
    outer_iterations: int
    newton_iterations: int
    mu_final: float
    barrier_stationarity: float
    polished: bool = False
    start_points: int = field(default=1, repr=False)


def optimize(problem: PowerProblem, *, tol: float = 1e-9,
             outer_max: int = 100, inner_max: int = 60,
             mu_reduce: float = 0.2, mu_floor_ratio: float = 1e-10,
             boundary_fraction: float = 0.995,
             thorough: bool = True) -> PowerResult:
    """Solve the per-slot power allocation.

    When every demand is exactly matchable inside the budget, the minimal
    matching power vector is already the global optimum (zero objective), so
    it is returned directly after a cleanup pass and the barrier never runs;
    ``outer_iterations == 0`` marks that path.  Otherwise the barrier
    schedule starts from the equal split pulled into the strict interior
    (with ``thorough``, for two beams, one-sided starts join the list and
    the best endpoint wins).  The returned powers are feasible and never
    worse than the equal split when that point is itself feasible.
    """
    K = problem.n_beams
    match = _exact_match(problem)
    if match is not None:
        refined = _polish_with_set(problem, match, False, [], list(range(K)))
        pick = match
        polished = False
        if refined is not None and objective(problem, refined) <= objective(problem, match):
            pick = refined
            polished = True
        return PowerResult(powers=pick, objective_value=objective(problem, pick),
                           rates=rates(problem, pick), converged=True,
                           outer_iterations=0, newton_iterations=0,
                           mu_final=0.0, barrier_stationarity=0.0,
                           polished=polished, start_points=1)

    p_avg = np.full(K, problem.p_max / K)
    g_avg = objective(problem, p_avg)
    mu0 = max(1.0, g_avg)
    mu_end = mu_floor_ratio * mu0

    starts = [_feasible_scale(problem, p_avg)]
    if thorough and K == 2:
        for k in range(K):
            lop = np.full(K, 1e-6 * problem.p_max / K)
            lop[k] = 0.9 * problem.p_max
            starts.append(_feasible_scale(problem, lop))

    # stationarity is measured against the natural gradient scale of the
    # problem, objective units over power units
    grad_scale = max(1.0, mu0 / problem.p_max)

    best = None  # (objective, powers, stationarity, converged, outers, newtons)
    for p0 in starts:
        p = p0.copy()
        mu = mu0
        outers = 0
        newtons = 0
        ok = True
        stat = np.inf
        while outers < outer_max:
            outers += 1
            if mu <= mu_end * (1 + 1e-12):
                tol_inner = tol * grad_scale
            else:
                tol_inner = max(tol, 1e-3 * mu / mu0) * grad_scale
            p, stat, it, hit = _inner_minimize(problem, p, mu, tol_inner,
                                               inner_max, boundary_fraction)
            newtons += it
            if mu <= mu_end * (1 + 1e-12):
                ok = hit
                break
            mu = max(mu * mu_reduce, mu_end)
        g_here = objective(problem, p)
        cand = (g_here, p, stat, ok, outers, newtons)
        if best is None or g_here < best[0]:
            best = cand

    g_best, p_best, stat_best, ok_best, outers_best, newtons_best = best
    polished_p = _active_set_polish(problem, p_best, mu_end, mu0)
    polished = False
    if polished_p is not None:
        g_pol = objective(problem, polished_p)
        if g_pol <= g_best + 1e-12 * max(1.0, g_best):
            p_best = polished_p
            g_best = g_pol
            polished = True

    # never return worse than a feasible equal split
    if g_avg < g_best:
        r_avg = rates(problem, p_avg)
        if np.all(r_avg <= problem.demands * (1 + 1e-12)):
            alt = _active_set_polish(problem, p_avg, mu_end, mu0)
            if alt is not None and objective(problem, alt) <= g_avg:
                p_best, g_best, polished = alt, objective(problem, alt), True
            else:
                p_best, g_best = p_avg.copy(), g_avg

    return PowerResult(powers=p_best, objective_value=g_best,
                       rates=rates(problem, p_best), converged=ok_best,
                       outer_iterations=outers_best,
                       newton_iterations=newtons_best, mu_final=mu_end,
                       barrier_stationarity=stat_best / grad_scale,
                       polished=polished, start_points=len(starts))
