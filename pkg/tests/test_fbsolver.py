import dataclasses

import numpy as np
import pytest

from stefanlab.errors import (BoundViolation, OrderingViolation,
                              StabilityFailure)
from stefanlab.fbsolver import (AprioriBounds, SolverConfig, compare_runs,
                                scalar_free_boundary, simulate, step,
                                verify_bounds)
from conftest import make_params


def small_config(**kw):
    base = dict(ns=128, nr=128, dt=1.0 / 256, r_out=12.8, t_end=2.0)
    base.update(kw)
    return SolverConfig(**base)


class TestConfigValidation:
    def test_coarse_front_grid_rejected(self):
        cfg = small_config(ns=64)
        with pytest.raises(ValueError, match="first order"):
            cfg.validate(make_params())

    def test_tiny_grids_rejected(self):
        with pytest.raises(ValueError):
            small_config(nr=32).validate(make_params())

    def test_large_dt_rejected(self):
        cfg = small_config(dt=1.0 / 32)
        with pytest.raises(ValueError, match="T/64"):
            cfg.validate(make_params())

    def test_dt_must_divide_period(self):
        cfg = small_config(dt=0.0031)
        with pytest.raises(ValueError, match="divide"):
            cfg.validate(make_params())

    def test_truncation_too_close(self):
        cfg = small_config(r_out=6.0)
        with pytest.raises(ValueError, match="4"):
            cfg.validate(make_params(h0=2.0))


class TestStep:
    def test_front_advances_and_dirichlet_exact(self):
        params = make_params()
        cfg = small_config()
        traj = simulate(params, small_config(t_end=2.0 / 256))
        assert traj.h[1] > traj.h[0]
        from stefanlab.fbsolver import _FrontFixedSolver
        solver = _FrontFixedSolver(params, cfg, True)
        st0 = solver.state
        st1 = step(st0, params, cfg)
        assert st1.h > st0.h
        assert st1.u[-1] == 0.0
        assert st1.t == pytest.approx(cfg.dt)

    def test_initial_front_speed_matches_stencil(self):
        params = make_params()
        traj = simulate(params, small_config(t_end=4.0 / 256))
        # mu * amp * pi/(2 h0) = 5 * 0.5 * pi/4
        assert traj.dhdt[0] == pytest.approx(5 * 0.5 * np.pi / 4, rel=1e-3)

    def test_oversized_front_speed_fails(self):
        params = make_params(mu=300.0)
        with pytest.raises(StabilityFailure, match="substeps"):
            simulate(params, small_config(dt=1.0 / 64, ns=512, nr=128))


class TestDecouplingExactness:
    def test_bitwise_identity_without_coupling(self):
        params = make_params(c1=0.0, c2=0.0)
        cfg = small_config(t_end=1.0)
        coupled = simulate(params, cfg)
        scalar = scalar_free_boundary(params, cfg)
        assert np.array_equal(coupled.h, scalar.h)
        assert np.array_equal(coupled.dhdt, scalar.dhdt)
        for a, b in zip(coupled.snapshots, scalar.snapshots):
            assert np.array_equal(a.u, b.u)

    def test_c1_zero_keeps_u_independent_of_v(self):
        params = make_params(c1=0.0, c2=0.3)
        cfg = small_config(t_end=1.0)
        coupled = simulate(params, cfg)
        scalar = scalar_free_boundary(params, cfg)
        assert np.array_equal(coupled.h, scalar.h)


class TestBounds:
    def test_constants_formula(self):
        params = make_params()
        bounds = AprioriBounds.from_params(params, 20.0)
        assert bounds.C1 == pytest.approx(1.0)     # max(1/1, 0.5)
        assert bounds.C2 == pytest.approx(1.0)
        assert bounds.C3 == pytest.approx(2.0 * bounds.M * 5.0)
        # M = max(1/h0, sqrt(m1/(2 d1)), 4 |u0|_C1 / (3 C1))
        c1_norm = params.init.c1_norm_u0()
        assert bounds.M == pytest.approx(
            max(0.5, np.sqrt(0.5), 4 * c1_norm / 3.0), rel=1e-6)

    def test_benchmark_run_respects_bounds(self):
        params = make_params()
        traj = simulate(params, small_config(t_end=3.0))
        rep = verify_bounds(traj, params)
        assert rep.ok
        assert rep.max_u <= rep.bounds.C1 * (1 + 1e-6)
        assert rep.min_dhdt > 0

    def test_violation_reported_with_record(self):
        params = make_params()
        traj = simulate(params, small_config(t_end=1.0))
        doctored = dataclasses.replace(
            traj, u_max=np.where(traj.t > 0.5, 5.0, traj.u_max))
        with pytest.raises(BoundViolation, match="u exceeded"):
            verify_bounds(doctored, params)

    def test_front_stall_detected(self):
        params = make_params()
        traj = simulate(params, small_config(t_end=1.0))
        doctored = dataclasses.replace(
            traj, dhdt=np.zeros_like(traj.dhdt))
        with pytest.raises(BoundViolation, match="not positive"):
            verify_bounds(doctored, params)


class TestCompareRuns:
    def test_identical_runs_equal(self):
        params = make_params()
        cfg = small_config(t_end=1.0)
        a = simulate(params, cfg)
        b = simulate(params, cfg)
        rep = compare_runs(a, b, mode="full")
        assert rep.ok
        assert abs(rep.worst_front_margin) <= 2 * a.h.max() / cfg.ns
        assert np.array_equal(a.h, b.h)

    def test_coupled_below_scalar(self):
        params = make_params()
        cfg = small_config(t_end=3.0)
        coupled = simulate(params, cfg)
        scalar = scalar_free_boundary(params, cfg)
        rep = compare_runs(coupled, scalar, mode="full")
        assert rep.ok
        assert scalar.final_h > coupled.final_h

    def test_larger_initial_data_spreads_faster(self):
        cfg = small_config(t_end=3.0)
        small = simulate(make_params(u0_amp=0.25), cfg)
        big = simulate(make_params(u0_amp=0.5), cfg)
        assert compare_runs(small, big, mode="full").ok

    def test_ordering_violation_detected(self):
        params = make_params()
        cfg = small_config(t_end=3.0)
        coupled = simulate(params, cfg)
        scalar = scalar_free_boundary(params, cfg)
        with pytest.raises(OrderingViolation):
            compare_runs(scalar, coupled, mode="front_only")

    def test_mismatched_grids_rejected(self):
        params = make_params()
        a = simulate(params, small_config(t_end=1.0))
        b = simulate(params, small_config(t_end=1.0, ns=256))
        with pytest.raises(ValueError, match="grid config"):
            compare_runs(a, b)


class TestTrajectory:
    def test_series_and_snapshots(self):
        params = make_params()
        cfg = small_config(t_end=2.0, snapshot_every=1)
        traj = simulate(params, cfg)
        assert traj.t.size == 2 * 256 + 1
        assert np.all(np.diff(traj.t) > 0)
        assert np.all(np.diff(traj.h) > 0)
        assert len(traj.snapshots) == 3          # t = 0, 1, 2
        assert traj.periods_completed == 2
        assert traj.termination == "t_end"

    def test_domain_exhaustion_terminates(self):
        params = make_params(mu=5.0)
        traj = simulate(params, small_config(r_out=9.0, t_end=20.0))
        assert traj.termination == "domain_exhausted"
        assert traj.final_h >= 0.9 * 9.0 - 0.5
