import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from stefanlab.analysis import (INCONCLUSIVE, SPREADING, VANISHING,
                                classify, find_eps_star, find_mu_star,
                                measure_speed, run_verdict, semiwave_k0,
                                speed_bounds)
from stefanlab.errors import InsufficientData, NoSemiWave
from stefanlab.fbsolver import SolverConfig, simulate
from stefanlab.model import PeriodicScalarFunction

from conftest import make_params

const = PeriodicScalarFunction.constant
sinusoid = PeriodicScalarFunction.sinusoid

# Frozen value of the phase-plane shooting oracle below for
# mu=1, a=1, b=1, d=1 (regenerate with semiwave_slope_oracle).
SHOOTING_K0_MU1 = 0.36437072


def slope_at_zero(k, a=1.0, b=1.0, d=1.0):
    """Profile slope at the front from backward shooting off the saddle."""
    qstar = a / b
    beta_minus = (k - np.sqrt(k * k + 4 * a * d)) / (2 * d)
    eps = 1e-8 * qstar
    y0 = [qstar - eps, -beta_minus * eps]

    def rhs(_tau, y):
        q, p = y
        return (-p, -(k * p - q * (a - b * q)) / d)

    def hit_zero(_tau, y):
        return y[0]

    hit_zero.terminal = True
    hit_zero.direction = -1
    sol = solve_ivp(rhs, [0.0, 2000.0], y0, events=hit_zero, rtol=1e-11,
                    atol=1e-13)
    assert sol.t_events[0].size, f"no front crossing for k={k}"
    return sol.y_events[0][0][1]


def semiwave_slope_oracle(mu, a=1.0, b=1.0, d=1.0):
    k_max = 2.0 * np.sqrt(a * d)
    return brentq(lambda k: mu * slope_at_zero(k, a, b, d) - k,
                  1e-9, 0.9999 * k_max, xtol=1e-11, rtol=1e-13)


class TestClassify:
    def test_spreading_benchmark(self, spread_params, h_star_bench):
        cfg = SolverConfig(ns=256, nr=512, dt=1 / 512, r_out=25.6, t_end=10.0)
        verdict, traj = run_verdict(spread_params, cfg, h_star_bench)
        assert verdict == SPREADING
        full = classify(traj, spread_params, h_star=h_star_bench)
        assert full.kind == SPREADING
        assert full.radius_crossed
        assert full.crossing_time is not None
        assert full.crossing_time <= 10.0

    def test_vanishing_benchmark(self, vanish_params, vanish_solver,
                                 h_star_bench):
        verdict, traj = run_verdict(vanish_params, vanish_solver,
                                    h_star_bench)
        assert verdict == VANISHING
        full = classify(traj, vanish_params, h_star=h_star_bench)
        assert full.kind == VANISHING
        assert full.final_sup_u < 1e-4
        assert full.final_front_advance < 1e-5 * 0.5

    def test_short_borderline_run_is_inconclusive(self, threshold_params,
                                                  h_star_bench):
        params = threshold_params.with_mu(4.0)
        cfg = SolverConfig(ns=256, nr=256, dt=1 / 512, r_out=12.8, t_end=10.0)
        traj = simulate(params, cfg)
        verdict = classify(traj, params, h_star=h_star_bench)
        assert verdict.kind == INCONCLUSIVE
        assert verdict.recommendation is not None


class TestSemiWave:
    def test_constant_coefficients_match_shooting_oracle(self):
        res = semiwave_k0(1.0, const(1.0), const(1.0), 1.0, 1.0)
        oracle = semiwave_slope_oracle(1.0)
        assert oracle == pytest.approx(SHOOTING_K0_MU1, abs=1e-7)
        assert res.mean_K0 == pytest.approx(oracle, rel=1e-3)

    def test_constant_case_is_time_flat(self):
        res = semiwave_k0(1.0, const(1.0), const(1.0), 1.0, 1.0)
        assert np.ptp(res.K0_values) < 1e-8

    def test_invariants_on_accepted_result(self):
        res = semiwave_k0(2.0, const(1.0), const(1.0), 1.0, 1.0)
        assert 0.0 < res.mean_K0 < res.existence_bound
        assert res.boundary_residual < 1e-5
        assert res.tail_gap < 0.01
        assert np.all(np.diff(res.U_profile[0]) > -1e-9)
        assert res.U_profile[0, 0] == 0.0

    def test_periodic_growth(self):
        res = semiwave_k0(1.0, sinusoid(1.0, 0.5), const(1.0), 1.0, 1.0)
        assert 0.0 < res.mean_K0 < 2.0
        assert res.K0_values.min() > 0
        assert np.ptp(res.K0_values) > 1e-4      # genuinely time-dependent
        assert res.boundary_residual < 1e-5

    def test_nonpositive_mean_growth_raises(self):
        with pytest.raises(NoSemiWave):
            semiwave_k0(1.0, const(-0.5), const(1.0), 1.0, 1.0)
        with pytest.raises(NoSemiWave):
            semiwave_k0(1.0, sinusoid(0.0, 1.0), const(1.0), 1.0, 1.0)


class TestSpeedBounds:
    def test_benchmark_bracket(self, spread_params):
        sb = speed_bounds(spread_params)
        assert not sb.lower_flagged_zero
        assert 0 < sb.lower < sb.upper
        assert sb.lower == pytest.approx(
            semiwave_slope_oracle(5.0, a=0.8), rel=2e-3)
        assert sb.upper == pytest.approx(
            semiwave_slope_oracle(5.0, a=1.0), rel=2e-3)

    def test_no_competition_collapses_bracket(self):
        params = make_params(c1=0.0)
        sb = speed_bounds(params)
        assert sb.lower == pytest.approx(sb.upper, abs=1e-10)

    def test_dominated_lower_composite_flagged(self):
        params = make_params(c1=2.0)     # c1 V = 2 >= m1 = 1
        sb = speed_bounds(params)
        assert sb.lower_flagged_zero
        assert sb.lower == 0.0
        assert sb.upper > 0


class TestMeasureSpeed:
    def test_requires_three_windows(self, spread_params):
        cfg = SolverConfig(ns=256, nr=512, dt=1 / 512, r_out=25.6, t_end=5.0)
        traj = simulate(spread_params, cfg)
        with pytest.raises(InsufficientData):
            measure_speed(traj, window=2.0)

    def test_linear_fit_and_residual(self, spread_params):
        cfg = SolverConfig(ns=256, nr=512, dt=1 / 512, r_out=25.6, t_end=12.0)
        traj = simulate(spread_params, cfg)
        res = measure_speed(traj, window=2.0)
        assert 0.5 < res.speed < 1.0
        assert res.fit_residual < 0.05
        wide = measure_speed(traj, window=4.0)
        assert wide.speed == pytest.approx(res.speed, rel=0.05)


class TestThresholds:
    def test_mu_star_degenerate_when_h0_large(self, spread_params,
                                              spread_solver, V_bench):
        res = find_mu_star(spread_params, spread_solver, (0.05, 5.0),
                           V=V_bench)
        assert res.degenerate
        assert res.lower == res.upper == 0.0
        assert spread_params.init.h0 >= res.h_star_inflated

    def test_eps_star_degenerate_when_h0_large(self, spread_params,
                                               spread_solver, V_bench):
        res = find_eps_star(spread_params, spread_solver, (0.01, 20.0),
                            V=V_bench)
        assert res.degenerate

    def test_positive_threshold_confirmed_for_small_h0(self, threshold_params,
                                                       threshold_solver,
                                                       V_bench,
                                                       h_star_bench):
        # h0 = 0.5 < h*(m1): the low endpoint must vanish, so mu* > 0.
        assert threshold_params.init.h0 < h_star_bench
        verdict, _ = run_verdict(threshold_params.with_mu(0.05),
                                 threshold_solver, h_star_bench,
                                 t_end=25.0)
        assert verdict == VANISHING

    def test_eps_star_interval(self, threshold_params, threshold_solver,
                               V_bench):
        # Initial-density dial at mu = 5: the bracket must resolve to < 1%.
        params = threshold_params.with_mu(5.0)
        res = find_eps_star(params, threshold_solver, (0.05, 2.0), V=V_bench)
        assert not res.degenerate
        assert not res.unresolved
        assert res.width < 0.01 * (2.0 - 0.05) + 1e-12
        assert 0.05 < res.lower < res.upper < 2.0
        kinds = dict(res.evaluations)
        assert kinds[0.05] == VANISHING and kinds[2.0] == SPREADING
