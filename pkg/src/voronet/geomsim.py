"""Slot-level Monte Carlo over sampled Poisson-Voronoi deployments.

A Scenario freezes one random deployment (BS and UE point sets on a flat
torus, the tagged link, and the interferer distances).  `run` then plays
the slotted SINR/buffer dynamics on it in one of four modes:

  pure_loss          interferers and target busy only on fresh arrivals
  meanfield_fixed    interferers independently busy with a fixed q
  meanfield_adaptive interferers busy with the analytic slot sequence q_n
  exact              every base station runs its own arrival/buffer chain

Quantitative agreement with the analytic coverage formulas requires the
emitter intensity seen by the receiver to match the model's interference
intensity, i.e. lambda0 = lambda1 (one designated link per cell).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from .model import NetworkParams, ParameterError, TrafficParams
from .equilibrium import slot_stationary

MODES = ("pure_loss", "exact", "meanfield_fixed", "meanfield_adaptive")


class SamplingError(RuntimeError):
    """Scenario sampling failed after bounded retries."""


def _rng(*key) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(list(int(k) for k in key)))


def torus_distance(a: np.ndarray, b: np.ndarray, side: float) -> np.ndarray:
    d = np.abs(np.atleast_2d(a) - np.atleast_2d(b))
    d = np.minimum(d, side - d)
    return np.hypot(d[:, 0], d[:, 1])


@dataclass
class Scenario:
    """One sampled deployment with a tagged downlink."""
    params: NetworkParams
    window_side: float
    torus: bool
    bs_points: np.ndarray
    ue_points: np.ndarray
    ue_assoc: np.ndarray
    serving_bs: int
    target_ue: int
    link_distance: float
    interferer_distances: np.ndarray
    seed: int

    @property
    def v_link(self) -> float:
        """Normalized d-th-power link coordinate (r/ell0)**d."""
        return (self.link_distance / self.params.ell0) ** self.params.d

    @property
    def v_interferers(self) -> np.ndarray:
        return (self.interferer_distances / self.params.ell0) ** self.params.d


def sample_scenario(params: NetworkParams, window_side: float, seed: int,
                    torus: bool = True, min_expected_bs: float = 50.0,
                    max_retries: int = 50) -> Scenario:
    """Sample a deployment; the tagged link sits in the cell of the BS
    nearest the window center, with a uniformly chosen UE of that cell."""
    if params.d != 2:
        raise ParameterError("the simulator supports d = 2 only")
    L = window_side
    if params.lambda1 * L**2 < min_expected_bs:
        raise ParameterError(
            f"window too small: expected BS count {params.lambda1 * L**2:.1f} < {min_expected_bs}")
    boxsize = L if torus else None
    for attempt in range(max_retries):
        rng = _rng(seed, attempt)
        n_bs = rng.poisson(params.lambda1 * L**2)
        n_ue = rng.poisson(params.lambda0 * L**2)
        if n_bs < 2 or n_ue < 1:
            continue
        bs = rng.random((n_bs, 2)) * L
        ue = rng.random((n_ue, 2)) * L
        tree = cKDTree(bs, boxsize=boxsize)
        link_d, assoc = tree.query(ue)
        _, serving = tree.query([[L / 2, L / 2]])
        serving = int(serving[0])
        candidates = np.nonzero(assoc == serving)[0]
        if candidates.size == 0:
            continue
        target = int(rng.choice(candidates))
        rx = ue[target]
        if torus:
            dists = torus_distance(bs, rx, L)
        else:
            dists = np.hypot(*(bs - rx).T)
        mask = np.ones(n_bs, dtype=bool)
        mask[serving] = False
        return Scenario(
            params=params, window_side=L, torus=torus, bs_points=bs,
            ue_points=ue, ue_assoc=assoc, serving_bs=serving, target_ue=target,
            link_distance=float(dists[serving]), interferer_distances=dists[mask],
            seed=seed)
    raise SamplingError(f"no non-empty center cell in {max_retries} attempts (seed={seed})")


@dataclass
class SimStats:
    """Per-run empirical statistics.

    The histogram and rate estimates cover the post-warmup slots; the
    integer conservation counters cover the full run.
    """
    slots: int                      # recorded (post-warmup) slots
    slots_total: int
    warmup: int
    arrivals: int
    successes: int
    busy_slots: int                 # recorded slots with the target busy
    busy_successes: int
    loss_count: int
    histogram: np.ndarray           # recorded-slot counts of the buffer level
    coverage_rate: float            # mean of the success indicator, recorded slots
    conditional_success_rate: float
    mean_buffer: float
    delay_estimate: float
    interferer_busy_fraction: float
    lindley_consistent: bool
    a_trace: np.ndarray = field(repr=False)
    z_trace: np.ndarray = field(repr=False)
    b_trace: np.ndarray = field(repr=False)


def _attenuation(v: np.ndarray, kappa: float, delta: float) -> np.ndarray:
    return (1.0 + kappa) / (np.asarray(v, dtype=float) ** delta + kappa)


def adaptive_q_sequence(p: float, K: int, coverage: Callable[[float], float],
                        n_slots: int) -> np.ndarray:
    """Analytic busy-link sequence q_1..q_n from the slot-stationary recursion."""
    qs = np.empty(n_slots)
    q = p
    for n in range(n_slots):
        if K == math.inf:
            U = min(coverage(q) / q, 1.0)
            q = min(p / U, 1.0)
        elif K >= 1:
            U = min(coverage(q) / q, 1.0)
            nu = slot_stationary(p, U, K)
            q = 1.0 - (1.0 - p) * nu[0]
        qs[n] = q
    return qs


def _buffer_chain(arrivals, success_flag, K):
    """Sequential buffer recursion given per-slot conditional success flags.

    Returns (busy, Z, B, loss_increments); success_flag[t] decides the SINR
    comparison outcome of slot t were the link busy.
    """
    n = arrivals.size
    busy = np.zeros(n, dtype=bool)
    Z = np.zeros(n, dtype=bool)
    B = np.zeros(n, dtype=np.int64)
    lost = np.zeros(n, dtype=bool)
    b = 0
    unbounded = K == math.inf
    for t in range(n):
        a = arrivals[t]
        at_cap = (not unbounded) and b == K
        is_busy = a or b > 0
        z = is_busy and success_flag[t]
        lost[t] = a and at_cap
        b = b + (1 if (a and not at_cap) else 0) - (1 if z else 0)
        busy[t] = is_busy
        Z[t] = z
        B[t] = b
    return busy, Z, B, lost


def run(scenario: Scenario, traffic: TrafficParams, mode: str, n_slots: int,
        seed: int, q: float | None = None,
        coverage: Callable[[float], float] | None = None,
        warmup_frac: float = 0.1, chunk_slots: int = 20_000) -> SimStats:
    """Play the slotted dynamics on a frozen deployment."""
    if mode not in MODES:
        raise ParameterError(f"unknown mode {mode!r}; expected one of {MODES}")
    if n_slots < 1:
        raise ParameterError("need n_slots >= 1")
    params = scenario.params
    p = traffic.p
    K = math.inf if traffic.infinite else traffic.K
    if mode == "pure_loss" and K != 0:
        raise ParameterError("pure_loss is the K = 0 reference model")
    if mode == "meanfield_fixed" and q is None:
        raise ParameterError("meanfield_fixed needs the busy-link probability q")
    if mode == "meanfield_adaptive" and coverage is None:
        raise ParameterError("meanfield_adaptive needs a coverage function")
    if mode == "exact" and traffic.rho(params) >= 1.0:
        raise ParameterError(
            f"exact mode needs service load rho = p*lambda0/lambda1 < 1, got {traffic.rho(params)}")

    rng = _rng(seed, scenario.seed)
    mu, T, sigma2 = params.mu, params.T, params.sigma2
    a_x = _attenuation(scenario.v_link, params.kappa, params.delta)

    if mode == "exact":
        arrivals, busy, Z, B, lost, int_busy = _run_exact(
            scenario, traffic, n_slots, rng)
    else:
        a_int = _attenuation(scenario.v_interferers, params.kappa, params.delta)
        arrivals = rng.random(n_slots) < p
        if mode == "pure_loss":
            q_seq = np.full(n_slots, p)
        elif mode == "meanfield_fixed":
            q_seq = np.full(n_slots, float(q))
        else:
            q_seq = adaptive_q_sequence(p, K, coverage, n_slots)
        success_flag = np.empty(n_slots, dtype=bool)
        active_total = 0
        n_int = a_int.size
        for lo in range(0, n_slots, chunk_slots):
            hi = min(lo + chunk_slots, n_slots)
            m = hi - lo
            act = rng.random((m, n_int)) < q_seq[lo:hi, None]
            fad = rng.standard_exponential((m, n_int)) / mu
            S = rng.standard_exponential(m) / mu
            I = (act * fad) @ a_int
            success_flag[lo:hi] = S * a_x > T * (sigma2 + I)
            active_total += int(act.sum())
        int_busy = active_total / (n_slots * max(n_int, 1))
        if K == 0:
            busy = arrivals.copy()
            Z = busy & success_flag
            B = np.zeros(n_slots, dtype=np.int64)
            lost = arrivals & ~Z
        else:
            busy, Z, B, lost = _buffer_chain(arrivals, success_flag, K)

    # Lindley counter identity D_n = B_n + L_n, driven by arrivals minus successes
    D = np.cumsum(arrivals.astype(np.int64) - Z.astype(np.int64))
    lindley_ok = bool(np.all(B + np.cumsum(lost.astype(np.int64)) == D))

    warmup = int(warmup_frac * n_slots)
    rec = slice(warmup, n_slots)
    B_rec = B[rec]
    k_top = int(K) if K != math.inf else int(B.max())
    histogram = np.bincount(B_rec, minlength=k_top + 1)
    busy_rec = int(busy[rec].sum())
    succ_rec = int(Z[rec].sum())
    mean_buffer = float(B_rec.mean())
    return SimStats(
        slots=n_slots - warmup, slots_total=n_slots, warmup=warmup,
        arrivals=int(arrivals.sum()), successes=int(Z.sum()),
        busy_slots=busy_rec, busy_successes=succ_rec,
        loss_count=int(lost.sum()), histogram=histogram,
        coverage_rate=succ_rec / max(n_slots - warmup, 1),
        conditional_success_rate=succ_rec / busy_rec if busy_rec else 0.0,
        mean_buffer=mean_buffer, delay_estimate=mean_buffer / p,
        interferer_busy_fraction=int_busy, lindley_consistent=lindley_ok,
        a_trace=arrivals, z_trace=Z, b_trace=B)


def _designated_receivers(scenario: Scenario, rng: np.random.Generator) -> np.ndarray:
    """One receiver per BS: the tagged UE for the serving BS, a uniform
    point of the own Voronoi cell for every other BS (rejection sampling)."""
    bs = scenario.bs_points
    L = scenario.window_side
    tree = cKDTree(bs, boxsize=L if scenario.torus else None)
    rec = np.empty_like(bs)
    rec[scenario.serving_bs] = scenario.ue_points[scenario.target_ue]
    pending = [j for j in range(len(bs)) if j != scenario.serving_bs]
    while pending:
        pts = rng.random((64 * len(pending), 2)) * L
        _, owner = tree.query(pts)
        still = []
        for j in pending:
            hits = np.nonzero(owner == j)[0]
            if hits.size:
                rec[j] = pts[hits[0]]
            else:
                still.append(j)
        pending = still
    return rec


def _run_exact(scenario: Scenario, traffic: TrafficParams, n_slots: int,
               rng: np.random.Generator):
    """Per-BS arrival/buffer chains; interference aggregated over all
    active emitters at each designated receiver."""
    params = scenario.params
    bs = scenario.bs_points
    n = len(bs)
    L = scenario.window_side
    K = math.inf if traffic.infinite else traffic.K
    rec = _designated_receivers(scenario, rng)
    dist = np.empty((n, n))
    for i in range(n):
        dist[i] = torus_distance(bs, rec[i], L) if scenario.torus else \
            np.hypot(*(bs - rec[i]).T)
    v = (dist / params.ell0) ** params.d
    att = _attenuation(v, params.kappa, params.delta)
    a_own = att[np.arange(n), np.arange(n)].copy()
    att[np.arange(n), np.arange(n)] = 0.0

    probs = np.full(n, min(traffic.rho(params), 1.0))
    probs[scenario.serving_bs] = traffic.p
    mu, T, sigma2 = params.mu, params.T, params.sigma2
    tgt = scenario.serving_bs

    buf = np.zeros(n, dtype=np.int64)
    arrivals = np.zeros(n_slots, dtype=bool)
    busy_t = np.zeros(n_slots, dtype=bool)
    Z_t = np.zeros(n_slots, dtype=bool)
    B_t = np.zeros(n_slots, dtype=np.int64)
    lost_t = np.zeros(n_slots, dtype=bool)
    active_sum = 0
    for t in range(n_slots):
        A = rng.random(n) < probs
        active = A | (buf > 0)
        S = rng.standard_exponential(n) / mu
        emit = np.where(active, S, 0.0)
        I = att @ emit
        succ = active & (S * a_own > T * (sigma2 + I))
        at_cap = buf == K if K != math.inf else np.zeros(n, dtype=bool)
        buf = buf + (A & ~at_cap).astype(np.int64) - succ.astype(np.int64)
        arrivals[t] = A[tgt]
        busy_t[t] = active[tgt]
        Z_t[t] = succ[tgt]
        B_t[t] = buf[tgt]
        lost_t[t] = A[tgt] and at_cap[tgt]
        active_sum += int(active.sum()) - int(active[tgt])
    int_busy = active_sum / (n_slots * (n - 1))
    return arrivals, busy_t, Z_t, B_t, lost_t, int_busy


@dataclass
class KpiEstimate:
    throughput: float
    loss_probability: float
    delay: float
    pi_hat: np.ndarray
    se_coverage: float
    se_delay: float


def estimate_kpis(stats: SimStats, p: float, n_batches: int = 16) -> KpiEstimate:
    """Point estimates with batch-means standard errors (post-warmup slots)."""
    rec = slice(stats.warmup, stats.slots_total)
    B = stats.b_trace[rec].astype(float)
    Z = stats.z_trace[rec].astype(float)
    pi_hat = stats.histogram / stats.histogram.sum()
    loss_prob = stats.loss_count / max(stats.arrivals, 1)
    throughput = p * (1.0 - pi_hat[-1])
    delay = stats.mean_buffer / p
    nb = max(2, n_batches)
    usable = (len(B) // nb) * nb
    bm_B = B[:usable].reshape(nb, -1).mean(axis=1)
    bm_Z = Z[:usable].reshape(nb, -1).mean(axis=1)
    se_B = float(bm_B.std(ddof=1) / math.sqrt(nb))
    se_Z = float(bm_Z.std(ddof=1) / math.sqrt(nb))
    return KpiEstimate(throughput=throughput, loss_probability=loss_prob,
                       delay=delay, pi_hat=pi_hat, se_coverage=se_Z,
                       se_delay=se_B / p)


def merge_histograms(stats_list) -> np.ndarray:
    width = max(s.histogram.size for s in stats_list)
    out = np.zeros(width)
    for s in stats_list:
        out[:s.histogram.size] += s.histogram
    return out
