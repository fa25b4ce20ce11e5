import math

import numpy as np
import pytest

from voronet.model import NetworkParams, ParameterError, TrafficParams
from voronet.coverage import CoverageEvaluator, conditional_success_given_points
from voronet.equilibrium import solve_busy
from voronet.geomsim import (
    adaptive_q_sequence,
    estimate_kpis,
    merge_histograms,
    run,
    sample_scenario,
    torus_distance,
)
from voronet.coverage import closed_coverage

PARAMS = NetworkParams(lambda0=1.0, lambda1=1.0, d=2, beta=4.0, T=10.1)


def test_torus_distance():
    a = np.array([[0.5, 0.5]])
    b = np.array([[9.5, 9.5]])
    assert torus_distance(a, b, 10.0)[0] == pytest.approx(math.sqrt(2.0))
    assert torus_distance(a, a, 10.0)[0] == 0.0


def test_sample_scenario_structure_and_determinism():
    sc = sample_scenario(PARAMS, 12.0, seed=7)
    sc2 = sample_scenario(PARAMS, 12.0, seed=7)
    np.testing.assert_array_equal(sc.bs_points, sc2.bs_points)
    assert sc.link_distance == sc2.link_distance
    assert sc.interferer_distances.size == len(sc.bs_points) - 1
    # the serving BS is the nearest BS to the tagged receiver
    rx = sc.ue_points[sc.target_ue]
    d_all = torus_distance(sc.bs_points, rx, sc.window_side)
    assert int(np.argmin(d_all)) == sc.serving_bs
    assert sc.link_distance == pytest.approx(float(d_all.min()))
    assert np.all(sc.interferer_distances >= sc.link_distance)
    sc3 = sample_scenario(PARAMS, 12.0, seed=8)
    assert sc3.link_distance != sc.link_distance


def test_sample_scenario_validation():
    with pytest.raises(ParameterError):
        sample_scenario(PARAMS, 3.0, seed=1)  # too few expected BS
    with pytest.raises(ParameterError):
        sample_scenario(NetworkParams(d=3, beta=4.5), 12.0, seed=1)


def test_link_coordinate_is_exponential():
    # (r/ell0)^d is Exp(1) under the Poisson-Voronoi link-distance law
    vs = [sample_scenario(PARAMS, 12.0, seed=s).v_link for s in range(150)]
    assert np.mean(vs) == pytest.approx(1.0, abs=0.25)


def test_adaptive_q_sequence_converges_to_fixed_point():
    cov = closed_coverage(4.0)
    qs = adaptive_q_sequence(0.1, 1, cov, 200)
    sol = solve_busy(TrafficParams(p=0.1, buffer=1), cov)
    assert qs[-1] == pytest.approx(sol.q_star, abs=1e-10)
    qs_inf = adaptive_q_sequence(0.1, math.inf, cov, 200)
    assert qs_inf[-1] == pytest.approx(1.0 / 6.0, abs=1e-10)
    np.testing.assert_array_almost_equal(adaptive_q_sequence(0.1, 0, cov, 5),
                                         np.full(5, 0.1))


def test_run_determinism_and_conservation():
    sc = sample_scenario(PARAMS, 12.0, seed=3)
    traffic = TrafficParams(p=0.1, buffer=2)
    st = run(sc, traffic, "meanfield_fixed", 4000, seed=11, q=0.15)
    st2 = run(sc, traffic, "meanfield_fixed", 4000, seed=11, q=0.15)
    np.testing.assert_array_equal(st.b_trace, st2.b_trace)
    assert st.lindley_consistent
    assert st.histogram.sum() == st.slots
    assert np.all(st.b_trace <= 2)
    st3 = run(sc, traffic, "meanfield_fixed", 4000, seed=12, q=0.15)
    assert not np.array_equal(st.z_trace, st3.z_trace)


def test_run_mode_validation():
    sc = sample_scenario(PARAMS, 12.0, seed=3)
    with pytest.raises(ParameterError):
        run(sc, TrafficParams(p=0.1, buffer=1), "pure_loss", 100, seed=1)
    with pytest.raises(ParameterError):
        run(sc, TrafficParams(p=0.1, buffer=1), "meanfield_fixed", 100, seed=1)
    with pytest.raises(ParameterError):
        run(sc, TrafficParams(p=0.1, buffer=1), "meanfield_adaptive", 100, seed=1)
    with pytest.raises(ParameterError):
        run(sc, TrafficParams(p=0.1, buffer=1), "warp", 100, seed=1)
    heavy = NetworkParams(lambda0=20.0, lambda1=1.0, T=10.1)
    sc2 = sample_scenario(heavy, 12.0, seed=3)
    with pytest.raises(ParameterError):
        run(sc2, TrafficParams(p=0.1, buffer=1), "exact", 100, seed=1)


def test_pure_loss_conditional_rate_matches_point_oracle():
    sc = sample_scenario(PARAMS, 12.0, seed=7)
    st = run(sc, TrafficParams(p=0.1, buffer=0), "pure_loss", 30_000, seed=3)
    oracle = conditional_success_given_points(0.1, sc.v_link, sc.v_interferers,
                                              PARAMS)
    se = math.sqrt(oracle * (1 - oracle) / st.busy_slots)
    assert abs(st.conditional_success_rate - oracle) < 4 * se
    # pure loss: every busy slot is a fresh arrival, failures are losses
    assert st.loss_count == st.arrivals - st.successes


def test_exact_mode_runs_and_conserves():
    sc = sample_scenario(PARAMS, 12.0, seed=5)
    st = run(sc, TrafficParams(p=0.1, buffer=3), "exact", 3000, seed=2)
    assert st.lindley_consistent
    assert st.histogram.sum() == st.slots
    assert 0.0 < st.interferer_busy_fraction < 1.0
    st2 = run(sc, TrafficParams(p=0.1, buffer=3), "exact", 3000, seed=2)
    np.testing.assert_array_equal(st.b_trace, st2.b_trace)


def test_meanfield_adaptive_uses_analytic_sequence():
    sc = sample_scenario(PARAMS, 12.0, seed=5)
    cov = CoverageEvaluator(PARAMS)
    st = run(sc, TrafficParams(p=0.1, buffer=1), "meanfield_adaptive", 5000,
             seed=2, coverage=cov.coverage)
    assert st.lindley_consistent
    assert st.slots == 4500  # default 10% warmup
    # interferers follow q_n -> q*, so the busy fraction sits near q*
    assert abs(st.interferer_busy_fraction - 0.15) < 0.05


def test_estimate_kpis_consistency():
    sc = sample_scenario(PARAMS, 12.0, seed=5)
    st = run(sc, TrafficParams(p=0.1, buffer=2), "meanfield_fixed", 20_000,
             seed=2, q=0.15)
    k = estimate_kpis(st, 0.1)
    assert k.pi_hat.sum() == pytest.approx(1.0, abs=1e-12)
    assert k.delay == pytest.approx(st.mean_buffer / 0.1, rel=1e-12)
    assert k.throughput == pytest.approx(0.1 * (1 - k.pi_hat[-1]), rel=1e-12)
    assert k.se_coverage > 0 and k.se_delay > 0


def test_merge_histograms():
    sc = sample_scenario(PARAMS, 12.0, seed=5)
    runs = [run(sc, TrafficParams(p=0.1, buffer=2), "meanfield_fixed", 2000,
                seed=s, q=0.15) for s in (1, 2)]
    merged = merge_histograms(runs)
    assert merged.sum() == sum(r.histogram.sum() for r in runs)
