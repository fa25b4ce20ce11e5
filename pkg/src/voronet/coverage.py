"""Coverage probability of the tagged link under mean-field interference.

The cell-averaged coverage V_T(q) is a double integral: an outer average
over the normalized link coordinate v (exponentially distributed) of the
conditional coverage, whose interference exposure is itself a tail
integral over interferer positions.  The tail integral reduces
algebraically to the K_delta function, so each outer integrand
evaluation costs one special-function call.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .model import NetworkParams, ParameterError, k_delta_fast


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


def coverage_closed(q: float, C: float) -> float:
    """Closed form q/(1+Cq), valid for kappa=0 and sigma2=0."""
    if not 0.0 <= q <= 1.0:
        raise ParameterError("need 0 <= q <= 1")
    if C <= 0:
        raise ParameterError("need C > 0")
    return q / (1.0 + C * q)


def closed_coverage(C: float) -> Callable[[float], float]:
    """Coverage function q -> q/(1+Cq) for use in the equilibrium solvers."""
    # partial (not a lambda) so the result can cross process boundaries
    return functools.partial(coverage_closed, C=C)


def coverage_sigma(q: float, C: float, mu: float, sigma2: float, T: float,
                   delta: float, upper: float = 40.0, rel_tol: float = 1e-10) -> float:
    """Coverage for kappa=0 with background noise sigma2 >= 0."""
    if not 0.0 <= q <= 1.0:
        raise ParameterError("need 0 <= q <= 1")
    if q == 0.0:
        return 0.0
    a = mu * sigma2 * T
    val, _ = integrate.quad(
        lambda v: math.exp(-q * C * v - a * v**delta - v),
        0.0, upper, epsabs=0.0, epsrel=rel_tol, limit=200)
    return q * val


@dataclass
class CoverageEvaluator:
    """Deterministic evaluator of V_T(q) for one parameter set.

    Evaluations are memoized per exact q bit pattern, so repeated calls
    within a fixed-point solve are free and bit-identical.
    """

    params: NetworkParams
    outer_limit: float = 40.0   # truncation of the e^{-v} average; error < 5e-18
    rel_tol: float = 1e-9
    _cache: dict = field(default_factory=dict, repr=False)

    def inner_exposure(self, v: float, q: float) -> float:
        """Interference exposure q * int_v^inf wT(k+v^d)/(k+u^d+T(k+v^d)) du.

        Scaling u = B**(1/delta) s with B = kappa + T(kappa+v^delta)
        turns the tail into a K_delta value.
        """
        if not 0.0 <= q <= 1.0:
            raise ParameterError("need 0 <= q <= 1")
        if v < 0:
            raise ParameterError("need v >= 0")
        p = self.params
        delta = p.delta
        A = p.T * (p.kappa + v**delta)
        if A == 0.0:
            return 0.0
        B = p.kappa + A
        return q * p.w * A * B ** (1.0 / delta - 1.0) * k_delta_fast(v * B ** (-1.0 / delta), delta)

    def coverage_given_link(self, q: float, v: float) -> float:
        """Conditional coverage V_T(q; v**(1/d) ell0) at link coordinate v."""
        p = self.params
        if q == 0.0:
            return 0.0
        noise = p.mu * p.T * p.sigma2 * (p.kappa + v**p.delta) / (1.0 + p.kappa)
        return q * math.exp(-noise - self.inner_exposure(v, q))

    def coverage(self, q: float) -> float:
        """Cell-averaged coverage probability V_T(q)."""
        if not 0.0 <= q <= 1.0:
            raise ParameterError("need 0 <= q <= 1")
        if q == 0.0:
            return 0.0
        key = q.hex() if isinstance(q, float) else float(q).hex()
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        val, err = integrate.quad(
            lambda v: self.coverage_given_link(q, v) * math.exp(-v),
            0.0, self.outer_limit, epsabs=0.0, epsrel=self.rel_tol, limit=200)
        if not math.isfinite(val) or (val > 0 and err > 1e-6 * max(val, 1e-12)):
            raise QuadratureError(
                f"outer coverage integral did not converge: value={val}, abserr={err}")
        val = min(max(val, 0.0), 1.0)
        self._cache[key] = val
        return val

    __call__ = coverage

    def u(self, q: float) -> float:
        """Conditional success probability U(q) = V_T(q)/q."""
        if q <= 0.0:
            raise ParameterError("U(q) undefined at q = 0")
        return self.coverage(q) / q


def conditional_success_given_points(q: float, v_link: float,
                                     v_interferers: np.ndarray,
                                     params: NetworkParams) -> float:
    """Success probability given a busy link, on a fixed interferer set.

    All coordinates are normalized d-th-power distances from the
    receiver.  This is the per-point-set conditional coverage divided by
    q; the simulator's empirical conditional success rate estimates it.
    """
    delta = params.delta
    kappa = params.kappa
    a_x = (1.0 + kappa) / (v_link**delta + kappa)
    a_k = (1.0 + kappa) / (np.asarray(v_interferers, dtype=float) ** delta + kappa)
    log_terms = np.log1p(-q * params.T * a_k / (a_x + params.T * a_k))
    return math.exp(float(np.sum(log_terms)) - params.mu * params.T * params.sigma2 / a_x)
