import numpy as np
import pytest

from stefanlab.entire import RadialPeriodicField
from stefanlab.errors import DegenerateV, NoPositivePeriodicSolution
from stefanlab.model import PeriodicScalarFunction
from stefanlab.periodic_ode import (check_H3, envelope_constants,
                                    solve_periodic_logistic, vbar)

from conftest import make_params

# Independent oracle value for V(0) of V' = V(1 + 0.5 sin(2 pi t) - V):
# RK4 at dt = 1e-4, iterated until the period map contracts below 1e-10.
RK4_V0 = 0.9238518085


def rk4_period_map_oracle(n_per_period=10_000, max_periods=200, tol=1e-10):
    dt = 1.0 / n_per_period

    def f(t, v):
        return v * (1.0 + 0.5 * np.sin(2 * np.pi * t) - v)

    v = 1.0
    for _ in range(max_periods):
        v_prev = v
        t = 0.0
        for _ in range(n_per_period):
            k1 = f(t, v)
            k2 = f(t + dt / 2, v + dt / 2 * k1)
            k3 = f(t + dt / 2, v + dt / 2 * k2)
            k4 = f(t + dt, v + dt * k3)
            v += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += dt
        if abs(v - v_prev) < tol:
            return v
    raise AssertionError("oracle period map did not contract")


const = PeriodicScalarFunction.constant
sinusoid = PeriodicScalarFunction.sinusoid


def flat_field(value: float, r_out: float = 20.0) -> RadialPeriodicField:
    times = np.linspace(0.0, 1.0, 5)
    radii = np.linspace(0.0, r_out, 9)
    samples = np.full((5, 9), value)
    return RadialPeriodicField(times=times, radii=radii, samples=samples,
                               r_out=r_out, period=1.0, residual=0.0,
                               periods=1)


class TestSolvePeriodicLogistic:
    def test_constant_fixed_point(self):
        sol = solve_periodic_logistic(const(2.0), const(1.0), 1.0)
        assert np.abs(sol.values - 2.0).max() < 1e-12
        assert sol.residual < 1e-8

    def test_negative_mean_growth_raises(self):
        with pytest.raises(NoPositivePeriodicSolution):
            solve_periodic_logistic(const(-1.0), const(1.0), 1.0)

    def test_zero_mean_growth_raises(self):
        with pytest.raises(NoPositivePeriodicSolution):
            solve_periodic_logistic(sinusoid(0.0, 1.0), const(1.0), 1.0)

    def test_sinusoid_matches_rk4_oracle(self):
        sol = solve_periodic_logistic(sinusoid(1.0, 0.5), const(1.0), 1.0)
        oracle = rk4_period_map_oracle()
        assert oracle == pytest.approx(RK4_V0, abs=5e-10)
        assert sol.values[0] == pytest.approx(oracle, abs=2e-9)

    def test_periodic_endpoint_match(self):
        sol = solve_periodic_logistic(sinusoid(1.5, 1.0), const(2.0), 1.0)
        assert abs(sol.V(0.0) - sol.V(1.0)) < 1e-10

    @pytest.mark.parametrize("a,b", [
        (sinusoid(1.0, 0.5), const(1.0)),
        (sinusoid(2.0, 1.5), const(1.0)),
        (sinusoid(0.7, 0.3, phase=1.1), sinusoid(1.0, 0.4)),
        (const(3.0), sinusoid(2.0, 0.5)),
    ])
    def test_residual_invariant(self, a, b):
        sol = solve_periodic_logistic(a, b, 1.0)
        assert sol.residual < 1e-8
        assert sol.min() > 0

    @pytest.mark.parametrize("bump", [0.2, 0.5, 1.0])
    def test_comparison_in_growth(self, bump):
        b = const(1.0)
        base = sinusoid(1.0, 0.5)
        bigger = sinusoid(1.0 + bump, 0.5)
        v1 = solve_periodic_logistic(bigger, b, 1.0)
        v2 = solve_periodic_logistic(base, b, 1.0)
        assert np.all(v1.values >= v2.values - 1e-12)


class TestEnvelopeConstants:
    def test_direct_formula(self):
        params = make_params(v0_value=3.0)
        constants = envelope_constants(params, flat_field(2.0))
        assert constants.K == pytest.approx(1.0)
        assert constants.H == pytest.approx(0.5)

    def test_matching_v0_gives_zero_overshoot(self):
        params = make_params(v0_value=2.0)
        constants = envelope_constants(params, flat_field(2.0))
        assert constants.H == pytest.approx(0.0, abs=1e-12)

    def test_oscillating_coefficients_use_grid_minima(self):
        b2 = PeriodicScalarFunction.sinusoid(1.0, 0.5)
        from stefanlab.model import CoefficientField
        params = make_params(b2=CoefficientField.space_constant(b2),
                             v0_value=3.0)
        constants = envelope_constants(params, flat_field(2.0))
        assert constants.K == pytest.approx(0.5 * 0.5 * 2.0, rel=1e-6)

    def test_degenerate_field_raises(self):
        params = make_params()
        with pytest.raises(DegenerateV):
            envelope_constants(params, flat_field(-0.5))


class TestVbar:
    def test_zero_overshoot_equals_field(self):
        from stefanlab.periodic_ode import EnvelopeConstants
        consts = EnvelopeConstants(K=1.0, H=0.0, min_b2=1.0, min_V=2.0)
        fld = flat_field(2.0)
        for t in (0.0, 0.7, 3.3):
            assert vbar(t, 1.0, fld, consts) == pytest.approx(2.0)

    def test_initial_value_and_decay(self):
        from stefanlab.periodic_ode import EnvelopeConstants
        consts = EnvelopeConstants(K=1.0, H=0.5, min_b2=1.0, min_V=2.0)
        fld = flat_field(2.0)
        assert vbar(0.0, 0.0, fld, consts) == pytest.approx(3.0)
        gap = vbar(10.0, 0.0, fld, consts) - 2.0
        assert gap == pytest.approx(2.0 * 0.5 * np.exp(-10.0), rel=1e-12)

    def test_dominates_field(self):
        from stefanlab.periodic_ode import EnvelopeConstants
        consts = EnvelopeConstants(K=2.0, H=0.7, min_b2=1.0, min_V=2.0)
        fld = flat_field(2.0)
        ts = np.linspace(0.0, 5.0, 21)
        assert all(vbar(t, 3.0, fld, consts) >= 2.0 for t in ts)


class TestCheckH3:
    def test_benchmark_margin(self):
        params = make_params()
        constants = envelope_constants(params, flat_field(1.0))
        res = check_H3(params, flat_field(1.0), constants)
        assert res.ok
        assert res.margin == pytest.approx(0.8, abs=1e-9)

    def test_strong_competition_fails(self):
        params = make_params(c1=2.0)
        constants = envelope_constants(params, flat_field(1.0))
        res = check_H3(params, flat_field(1.0), constants)
        assert not res.ok
        assert res.margin == pytest.approx(-1.0, abs=1e-9)

    def test_overshoot_inflates_competition(self):
        params = make_params(v0_value=1.5)   # H = 0.5 against V = 1
        constants = envelope_constants(params, flat_field(1.0))
        assert constants.H == pytest.approx(0.5)
        res = check_H3(params, flat_field(1.0), constants)
        assert res.ok
        assert res.margin == pytest.approx(0.7, abs=1e-9)
