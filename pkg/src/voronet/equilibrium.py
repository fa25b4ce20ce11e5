"""Buffer Markov-chain equilibrium: fixed point, limit law, KPIs.

The tagged link's buffer is a birth-death chain on {0..K} whose jump
probabilities depend on the conditional success probability U = V_T(q)/q,
with q itself determined by a scalar balance map F.  Iterating F from
q0 = p yields the minimal fixed point q*, from which the limiting buffer
distribution and all performance indicators follow in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import optimize

from .model import ParameterError, TrafficParams, k_delta_fast

Coverage = Callable[[float], float]

DEGENERATE_B_TOL = 1e-12


class ConvergenceError(RuntimeError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = np.asarray(trace if trace is not None else [])


@dataclass
class EquilibriumSolution:
    p: float
    buffer: float                 # capacity K; math.inf for the unbounded system
    q_star: float
    u_star: float
    b: float
    pi: np.ndarray                # {0..K}; truncated geometric tail for K=inf
    throughput: float
    loss_probability: float
    delay: float
    ld_product: float
    iterations: int
    trace: np.ndarray
    converged: bool
    minimal_solution: bool = True
    locally_stable: bool = True


@dataclass
class InfeasibleResult:
    """No steady state: the balance equation V_T(q) = p has no solution."""
    p: float
    p_c: float
    iterations: int
    trace: np.ndarray


def _busy_ratio(p: float, U: float) -> float:
    return p * (1.0 - U) / ((1.0 - p) * U)


def slot_stationary(p: float, U: float, K: int) -> np.ndarray:
    """Stationary distribution of the slot-frozen buffer chain.

    Truncated, weighted geometric with ratio b = p(1-U)/((1-p)U); the
    terminal weight carries the extra factor (1-p).  The degenerate
    ratio b = 1 is evaluated through its analytic limit.
    """
    if not 0.0 < p < 1.0:
        raise ParameterError("need 0 < p < 1")
    if not 0.0 < U <= 1.0:
        raise ParameterError("need 0 < U <= 1 (U = 0 drifts all mass to K)")
    if K < 1:
        raise ParameterError("need K >= 1")
    b = _busy_ratio(p, U)
    nu = np.empty(K + 1)
    if abs(b - 1.0) < DEGENERATE_B_TOL:
        nu0 = 1.0 / (K + 1.0 - p)
        nu[:] = nu0
        nu[K] = (1.0 - p) * nu0
        return nu
    nu0 = (1.0 - b) / (1.0 - (p + b - p * b) * b**K)
    nu[:K] = nu0 * b ** np.arange(K)
    nu[K] = (1.0 - p) * b**K * nu0
    return nu


def transition_matrix(p: float, U: float, K: int) -> np.ndarray:
    """Tri-diagonal transition matrix of the buffer chain on {0..K}."""
    if not 0.0 < p < 1.0:
        raise ParameterError("need 0 < p < 1")
    if not 0.0 < U <= 1.0:
        raise ParameterError("need 0 < U <= 1")
    if K < 1:
        raise ParameterError("need K >= 1")
    up = p * (1.0 - U)
    down = (1.0 - p) * U
    M = np.zeros((K + 1, K + 1))
    for k in range(K + 1):
        beta_k = up if k < K else 0.0
        if k == 0:
            delta_k = 0.0
        elif k < K:
            delta_k = down
        else:
            delta_k = U
        if k > 0:
            M[k, k - 1] = delta_k
        if k < K:
            M[k, k + 1] = beta_k
        M[k, k] = 1.0 - beta_k - delta_k
    return M


def map_F(q: float, p: float, K: int, coverage: Coverage) -> float:
    """One step of the busy-link balance map, F(q) = 1 - (1-p) nu0(U(q))."""
    if q <= 0.0:
        raise ParameterError("need q > 0")
    U = min(coverage(q) / q, 1.0)
    if U <= 0.0:
        raise ParameterError("conditional success probability vanished")
    nu = slot_stationary(p, U, K)
    return 1.0 - (1.0 - p) * nu[0]


def _iterate(F, q0: float, tol: float, max_iter: int):
    """Fixed-point iteration with an oscillation guard.

    If the increment sign flips three times in a row, restart the tail of
    the iteration with damping 0.5 (the map can be non-monotone for
    bounded attenuation).
    """
    trace = [q0]
    q = q0
    alpha = 1.0
    flips = 0
    prev_inc = 0.0
    for n in range(1, max_iter + 1):
        qn = (1.0 - alpha) * q + alpha * F(q)
        inc = qn - q
        if prev_inc * inc < 0:
            flips += 1
            if flips >= 3 and alpha == 1.0:
                alpha = 0.5
        else:
            flips = 0
        prev_inc = inc
        trace.append(qn)
        if abs(inc) < tol:
            return qn, n, np.asarray(trace), True
        q = qn
    return q, max_iter, np.asarray(trace), False


def limiting_pi(p: float, q_star: float, u_star: float, K) -> np.ndarray:
    """Limiting buffer distribution of the strongly ergodic chain.

    For finite K: weighted geometric with pi_0 = (1-q*)/(1-p).  For
    K = inf: plain geometric with ratio (q*-p)/(1-p), returned truncated
    where the tail mass falls below 1e-16.
    """
    if q_star <= p:
        raise ParameterError("need q* > p")
    if K == math.inf:
        b = (q_star - p) / (1.0 - p)
        # cap the reported tail: near criticality b -> 1 and the exact
        # truncation point diverges
        n = max(2, int(math.ceil(math.log(1e-16) / math.log(b))) if b > 0 else 2)
        n = min(n, 100_000)
        pi = (1.0 - b) * b ** np.arange(n)
        return pi
    K = int(K)
    b = _busy_ratio(p, u_star)
    pi0 = (1.0 - q_star) / (1.0 - p)
    pi = np.empty(K + 1)
    pi[:K] = pi0 * b ** np.arange(K)
    pi[K] = (1.0 - p) * b**K * pi0
    return pi


def delay_formula(p: float, K: int, q_star: float, v_star: float) -> float:
    """Mean delay from the balance identities (finite K)."""
    num = v_star * (q_star - v_star) - q_star * K * (p - v_star)
    den = p * (v_star - p * q_star)
    return num / den


def _finite_kpis(p, K, q_star, u_star, pi):
    v_star = u_star * q_star
    loss = float(pi[K])
    throughput = p * (1.0 - loss)
    mean_buffer = float(np.arange(K + 1) @ pi)
    delay = mean_buffer / p
    return throughput, loss, delay, loss * delay, v_star


def solve_busy(traffic: TrafficParams, coverage: Coverage, tol: float = 1e-12,
               max_iter: int = 10_000, check_minimal: bool = True,
               scan_resolution: float = 1e-4) -> EquilibriumSolution:
    """Minimal fixed point of the balance map for a finite buffer K >= 1."""
    p = traffic.p
    if traffic.infinite:
        raise ParameterError("use solve_busy_infinite for the unbounded buffer")
    K = traffic.K
    if K < 1:
        raise ParameterError("the pure-loss system K = 0 has q = p; use pure_loss_rate")

    F = lambda q: map_F(q, p, K, coverage)
    q_star, iters, trace, converged = _iterate(F, p, tol, max_iter)
    if not converged:
        raise ConvergenceError(
            f"busy-link iteration did not converge in {max_iter} steps", trace)
    residual = abs(F(q_star) - q_star)
    if residual > 100 * tol:
        raise ConvergenceError(
            f"fixed-point residual {residual:.3e} exceeds tolerance", trace)

    # local stability and minimality diagnostics
    h = 1e-7
    fprime = (F(min(q_star + h, 1.0)) - F(max(q_star - h, p))) / (
        min(q_star + h, 1.0) - max(q_star - h, p))
    locally_stable = fprime < 1.0
    minimal = True
    if check_minimal and q_star - p > scan_resolution:
        qs = np.arange(p + scan_resolution, q_star - scan_resolution, scan_resolution)
        sign = np.sign([q - F(q) for q in qs])
        minimal = not np.any(np.diff(sign) > 0)

    u_star = min(coverage(q_star) / q_star, 1.0)
    pi = limiting_pi(p, q_star, u_star, K)
    throughput, loss, delay, ld, _ = _finite_kpis(p, K, q_star, u_star, pi)
    return EquilibriumSolution(
        p=p, buffer=K, q_star=q_star, u_star=u_star, b=_busy_ratio(p, u_star),
        pi=pi, throughput=throughput, loss_probability=loss, delay=delay,
        ld_product=ld, iterations=iters, trace=trace, converged=True,
        minimal_solution=minimal, locally_stable=locally_stable)


def critical_p_estimate(coverage: Coverage, grid: int = 64) -> float:
    """Largest sustainable data rate: max of V_T over (0, 1].

    Golden-section refinement seeded from a uniform grid; for the
    kappa = sigma2 = 0 closed form this equals 1/(1+C).
    """
    qs = np.linspace(1.0 / grid, 1.0, grid)
    vals = [coverage(q) for q in qs]
    i = int(np.argmax(vals))
    lo = qs[max(i - 1, 0)]
    hi = qs[min(i + 1, grid - 1)]
    if lo == hi:
        return vals[i]
    res = optimize.minimize_scalar(lambda q: -coverage(q), bounds=(lo, hi),
                                   method="bounded", options={"xatol": 1e-12})
    return max(float(-res.fun), float(vals[i]))


def solve_busy_infinite(p: float, coverage: Coverage, tol: float = 1e-12,
                        max_iter: int = 10_000):
    """Minimal solution of the no-loss balance equation V_T(q) = p.

    Iterates q <- p/U(q) from q0 = p.  Returns an InfeasibleResult with
    the estimated critical rate p_c when the balance equation has no
    solution in (p, 1].
    """
    if not 0.0 < p < 1.0:
        raise ParameterError("need 0 < p < 1")

    def F(q):
        U = min(coverage(q) / q, 1.0)
        if U <= 0.0:
            raise ParameterError("conditional success probability vanished")
        return p / U

    trace = [p]
    q = p
    converged = False
    iters = max_iter
    for n in range(1, max_iter + 1):
        qn = F(q)
        trace.append(qn)
        if qn > 1.0 or not math.isfinite(qn):
            return InfeasibleResult(p=p, p_c=critical_p_estimate(coverage),
                                    iterations=n, trace=np.asarray(trace))
        if abs(qn - q) < tol:
            q, iters, converged = qn, n, True
            break
        q = qn
    if not converged:
        return InfeasibleResult(p=p, p_c=critical_p_estimate(coverage),
                                iterations=max_iter, trace=np.asarray(trace))

    q_star = q
    # prefer an earlier root of V_T(q) - p if the balance curve is non-monotone
    minimal = True
    qs = np.arange(p * (1 + 1e-9), q_star, 1e-4)
    if qs.size >= 2:
        g = np.array([coverage(x) - p for x in qs])
        crossings = np.nonzero(np.diff(np.sign(g)) != 0)[0]
        if crossings.size and qs[crossings[0]] < q_star - 1e-4:
            q_star = float(optimize.brentq(lambda x: coverage(x) - p,
                                           qs[crossings[0]], qs[crossings[0] + 1],
                                           xtol=1e-14))
            minimal = True  # refined to the smallest root
    h = 1e-7
    vprime = (coverage(min(q_star + h, 1.0)) - coverage(max(q_star - h, 1e-12))) / (
        min(q_star + h, 1.0) - max(q_star - h, 1e-12))
    u_star = p / q_star
    pi = limiting_pi(p, q_star, u_star, math.inf)
    b = (q_star - p) / (1.0 - p)
    delay = (q_star - p) / ((1.0 - q_star) * p) if q_star < 1.0 else math.inf
    return EquilibriumSolution(
        p=p, buffer=math.inf, q_star=q_star, u_star=u_star, b=b, pi=pi,
        throughput=p, loss_probability=0.0, delay=delay, ld_product=0.0,
        iterations=iters, trace=np.asarray(trace), converged=True,
        minimal_solution=minimal, locally_stable=vprime > 0.0)


@dataclass
class EvolutionTrace:
    q: np.ndarray          # busy-link probabilities q_0..q_n
    dtv: np.ndarray        # total-variation distance to the limit, per step
    pi: np.ndarray         # final distribution pi^n
    pi_limit: np.ndarray
    solution: EquilibriumSolution


def evolve(p: float, K: int, coverage: Coverage, n_slots: int,
           pi0: Sequence[float] | None = None) -> EvolutionTrace:
    """Nonhomogeneous evolution pi^n = pi^{n-1} M_n with q_n from the
    slot-stationary recursion (started at q_0 = p)."""
    if K < 1:
        raise ParameterError("need K >= 1")
    if pi0 is None:
        pi = np.zeros(K + 1)
        pi[0] = 1.0
    else:
        pi = np.asarray(pi0, dtype=float)
        if pi.shape != (K + 1,) or abs(pi.sum() - 1.0) > 1e-12 or np.any(pi < 0):
            raise ParameterError("pi0 must be a probability vector on {0..K}")
    sol = solve_busy(TrafficParams(p=p, buffer=K), coverage, check_minimal=False)
    pi_limit = sol.pi

    qs = np.empty(n_slots + 1)
    dtv = np.empty(n_slots + 1)
    qs[0] = p
    dtv[0] = 0.5 * np.abs(pi - pi_limit).sum()
    q = p
    for n in range(1, n_slots + 1):
        U_prev = min(coverage(q) / q, 1.0)
        nu = slot_stationary(p, U_prev, K)
        q = 1.0 - (1.0 - p) * nu[0]
        U = min(coverage(q) / q, 1.0)
        M = transition_matrix(p, U, K)
        pi = pi @ M
        qs[n] = q
        dtv[n] = 0.5 * np.abs(pi - pi_limit).sum()
    return EvolutionTrace(q=qs, dtv=dtv, pi=pi, pi_limit=pi_limit, solution=sol)


def kpis(solution: EquilibriumSolution):
    """(throughput, loss probability, delay, loss-delay product)."""
    if not solution.converged:
        raise ParameterError("KPIs require a converged solution")
    return (solution.throughput, solution.loss_probability,
            solution.delay, solution.ld_product)


# ---------------------------------------------------------------------------
# closed forms for kappa = sigma2 = 0

def k1_closed(p: float, C: float):
    """K = 1 quadratic closed form: (q*, throughput, delay)."""
    if not 0.0 < p < 1.0 or C <= 0:
        raise ParameterError("need 0 < p < 1 and C > 0")
    disc = math.sqrt((1.0 - C * p) ** 2 + 4.0 * C * p * p)
    q_star = (disc - (1.0 - C * p)) / (2.0 * C * p)
    throughput = (1.0 + C * p - disc) / (2.0 * C * (1.0 - p))
    delay = (q_star - p) / (p * (1.0 - p))
    return q_star, throughput, delay


def critical_p(C: float) -> float:
    """Critical data rate of the unbounded-buffer system, 1/(1+C)."""
    if C <= 0:
        raise ParameterError("need C > 0")
    return 1.0 / (1.0 + C)


def kinf_closed(p: float, C: float):
    """K = inf closed form: (q*, geometric ratio b, delay).  Needs p <= p_c."""
    if not 0.0 < p < 1.0 or C <= 0:
        raise ParameterError("need 0 < p < 1 and C > 0")
    if p > critical_p(C):
        raise ParameterError(f"no steady state above p_c = {critical_p(C)}")
    q_star = p / (1.0 - C * p)
    b = C * p * p / ((1.0 - C * p) * (1.0 - p))
    delay = C * p / (1.0 - p * (1.0 + C))
    return q_star, b, delay


def t_max(p: float, delta: float, w: float) -> float:
    """Largest SINR threshold sustaining the no-loss system at rate p.

    Bisection on the increasing map y -> y K_delta(1/y); the threshold is
    the delta-th power of the crossing point.
    """
    if not 0.0 < p < 1.0 or w <= 0:
        raise ParameterError("need 0 < p < 1 and w > 0")
    target = (1.0 / p - 1.0) / w
    g = lambda y: y * k_delta_fast(1.0 / y, delta) - target
    lo, hi = 1e-9, 1.0
    while g(hi) < 0:
        hi *= 2.0
        if hi > 1e12:
            raise ConvergenceError("t_max bracket expansion failed")
    y = optimize.brentq(g, lo, hi, xtol=1e-14, rtol=1e-14)
    return y**delta


def pure_loss_rate(p: float, coverage: Coverage) -> float:
    """Asymptotic per-slot loss rate of the pure-loss system, p - V_T(p)."""
    if not 0.0 < p < 1.0:
        raise ParameterError("need 0 < p < 1")
    return p - coverage(p)


@dataclass
class DimensioningResult:
    feasible: list
    max_loss: dict
    max_delay: dict
    loss_nonincreasing_in_K: bool
    delay_nondecreasing_in_K: bool


def dimension_buffer(p0: float, L_max: float, D_max: float, coverage: Coverage,
                     K_range: Iterable[int], n_grid: int = 256) -> DimensioningResult:
    """Buffer sizes meeting loss and delay caps for every p <= p0."""
    if not 0.0 < p0 < 1.0 or L_max <= 0 or D_max <= 0:
        raise ParameterError("need 0 < p0 < 1 and positive caps")
    ps = np.linspace(p0 / n_grid, p0, n_grid)
    Ks = sorted(set(int(k) for k in K_range))
    losses = {}
    delays = {}
    feasible = []
    for K in Ks:
        worst_loss = 0.0
        worst_delay = 0.0
        for p in ps:
            sol = solve_busy(TrafficParams(p=float(p), buffer=K), coverage,
                             check_minimal=False)
            worst_loss = max(worst_loss, sol.loss_probability)
            worst_delay = max(worst_delay, sol.delay)
        losses[K] = worst_loss
        delays[K] = worst_delay
        if worst_loss <= L_max and worst_delay <= D_max:
            feasible.append(K)
    loss_vals = [losses[K] for K in Ks]
    delay_vals = [delays[K] for K in Ks]
    return DimensioningResult(
        feasible=feasible, max_loss=losses, max_delay=delays,
        loss_nonincreasing_in_K=all(a >= b - 1e-12 for a, b in zip(loss_vals, loss_vals[1:])),
        delay_nondecreasing_in_K=all(a <= b + 1e-12 for a, b in zip(delay_vals, delay_vals[1:])))
