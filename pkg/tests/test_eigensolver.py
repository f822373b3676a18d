import time

import numpy as np
import pytest
from scipy.special import jn_zeros

from stefanlab.eigensolver import (EigenProblem, FastDiffusionResult,
                                   UNBOUNDED, principal_eigenvalue,
                                   threshold_diffusion_fast,
                                   threshold_diffusion_slow, threshold_radius)
from stefanlab.errors import NoSignChange
from stefanlab.model import CoefficientField, PeriodicScalarFunction

J01 = jn_zeros(0, 1)[0]
NU1 = (np.pi / 2) ** 2

m_zero = CoefficientField.constant(0.0)
m_one = CoefficientField.constant(1.0)
m_sin2 = CoefficientField.space_constant(
    PeriodicScalarFunction.sinusoid(2.0, 1.0))


def lam(d, m, R, N=1, grid=256, steps=256, T=1.0):
    prob = EigenProblem(d=d, m=m, R=R, T=T, N=N, grid=grid)
    return principal_eigenvalue(prob, steps_per_period=steps).lambda1


# Coefficient families used by the monotonicity suites.
FAMILIES = [
    m_zero,
    m_one,
    CoefficientField.space_constant(PeriodicScalarFunction.sinusoid(1.0, 0.5)),
    CoefficientField.gaussian_dip(1.0, 2.0, center=0.0, width=1.0),
    CoefficientField.gaussian_dip(PeriodicScalarFunction.sinusoid(1.0, 0.25),
                                  1.5, center=1.0, width=0.5),
]


class TestPrincipalEigenvalue:
    def test_pure_diffusion_anchor(self):
        res = principal_eigenvalue(EigenProblem(1.0, m_zero, 1.0, 1.0, 1, 256))
        assert res.lambda1 == pytest.approx(NU1, rel=1e-3)
        assert res.rel_change < 1e-8
        assert res.phi0[-1] == 0.0
        assert np.all(res.phi0[:-1] > 0)
        assert res.phi0.max() == pytest.approx(1.0)

    def test_time_dependent_shift_anchor(self):
        res = principal_eigenvalue(EigenProblem(1.0, m_sin2, 1.0, 1.0, 1, 256))
        assert res.lambda1 == pytest.approx(NU1 - 2.0, rel=1e-3)

    def test_bessel_anchor(self):
        res = principal_eigenvalue(EigenProblem(1.0, m_zero, 1.0, 1.0, 2, 512))
        assert res.lambda1 == pytest.approx(J01 ** 2, rel=1e-3)

    def test_bessel_with_shift(self):
        res = principal_eigenvalue(
            EigenProblem(0.5, CoefficientField.constant(3.0), 1.0, 1.0, 2,
                         1024))
        assert res.lambda1 == pytest.approx(0.5 * J01 ** 2 - 3.0, abs=1e-4)

    def test_multiplier_consistency(self):
        res = principal_eigenvalue(EigenProblem(1.0, m_one, 1.0, 1.0, 1, 128))
        assert res.multiplier == pytest.approx(np.exp(-res.lambda1), rel=1e-12)

    def test_grid_too_coarse_rejected(self):
        with pytest.raises(ValueError):
            EigenProblem(1.0, m_zero, 1.0, 1.0, 1, grid=16)


class TestMonotonicity:
    @pytest.mark.parametrize("m", FAMILIES)
    def test_strictly_decreasing_in_radius(self, m):
        vals = [lam(1.0, m, R, grid=128) for R in (0.5, 1.0, 2.0, 4.0)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("m", FAMILIES)
    def test_strictly_decreasing_in_coefficient(self, m):
        bump = CoefficientField.gaussian_dip(
            m.base if m.kind == "space_constant" else
            PeriodicScalarFunction.constant(1.0),
            -0.5, center=0.5, width=0.4)
        base = lam(1.0, m, 1.0, grid=128)
        if m.kind == "space_constant":
            bigger = CoefficientField.gaussian_dip(m.base, -0.5, center=0.5,
                                                   width=0.4)
        else:
            tgrid = np.linspace(0.0, 1.0, 33)[:-1]
            rgrid = np.linspace(0.0, 2.0, 65)
            vals = m(tgrid[:, None], rgrid[None, :]) \
                + 0.5 * np.exp(-(((rgrid - 0.5) / 0.4) ** 2))[None, :]
            bigger = CoefficientField.tabulated(tgrid, rgrid, vals)
        raised = lam(1.0, bigger, 1.0, grid=128)
        assert raised < base - 1e-3

    def test_small_radius_blowup(self):
        small = lam(1.0, m_zero, 0.05, grid=128, steps=1024)
        unit = lam(1.0, m_zero, 1.0, grid=128)
        assert small >= 100.0 * unit

    def test_space_constant_reduction(self):
        # 1e-6 relative needs the temporal quadrature of m(t) resolved.
        nu = lam(1.0, m_zero, 1.0, grid=512, steps=2048)
        shifted = lam(1.0, m_sin2, 1.0, grid=512, steps=2048)
        assert shifted == pytest.approx(nu - 2.0, rel=1e-6)


class TestDiffusionLimits:
    def test_small_d_approaches_minus_max_mean(self):
        # Gaussian-dip growth on B_4: the mean's max is the plateau value 1.
        m = CoefficientField.gaussian_dip(1.0, 2.0, center=0.0, width=1.0)
        val = lam(1e-3, m, 4.0, grid=512)
        assert val == pytest.approx(-1.0, rel=0.05)

    def test_small_d_constant_growth(self):
        val = lam(1e-3, m_one, 1.0)
        assert val == pytest.approx(1e-3 * NU1 - 1.0, abs=5e-4)

    def test_large_d_blows_up(self):
        val = lam(1e3, m_one, 1.0)
        assert val > 1e2


class TestThresholdRadius:
    def test_constant_growth_anchor(self):
        h = threshold_radius(1.0, m_one, 1.0, 1)
        assert h == pytest.approx(np.pi / 2, abs=1e-3)

    def test_no_growth_is_unbounded(self):
        assert threshold_radius(1.0, m_zero, 1.0, 1) == UNBOUNDED

    def test_bessel_anchor(self):
        h = threshold_radius(1.0, m_one, 1.0, 2, grid=512)
        assert h == pytest.approx(J01, abs=1e-3)


class TestThresholdDiffusion:
    def test_fast_anchor(self):
        res = threshold_diffusion_fast(m_one, 1.0, 1.0, 1, d_min=0.01,
                                       points_per_decade=8)
        assert isinstance(res, FastDiffusionResult)
        assert res.d_star == pytest.approx(4.0 / np.pi ** 2, abs=1e-3)
        assert abs(res.lambda_at_threshold) < 1e-3
        # every tested d above the threshold had a positive eigenvalue
        above = [l for d, l in zip(res.tested_d, res.tested_lambda)
                 if d > res.d_star * 1.001]
        assert above and all(l > 0 for l in above)

    def test_fast_time_dependence_averages_out(self):
        m = CoefficientField.space_constant(
            PeriodicScalarFunction.sinusoid(1.0, 1.0))
        res = threshold_diffusion_fast(m, 1.0, 1.0, 1, d_min=0.01,
                                       points_per_decade=8)
        assert res.d_star == pytest.approx(4.0 / np.pi ** 2, abs=1e-3)

    def test_no_sign_change_for_nonpositive_growth(self):
        with pytest.raises(NoSignChange):
            threshold_diffusion_fast(CoefficientField.constant(-1.0), 1.0,
                                     1.0, 1, d_min=0.01, points_per_decade=4)

    def test_slow_certified_prefix(self):
        res = threshold_diffusion_slow(m_one, 1.0, 1.0, 1, d_floor=1e-4,
                                       points_per_decade=6, grid=128)
        assert res.applicable
        assert 0.3 <= res.d_star <= 4.0 / np.pi ** 2 + 1e-6
        certified = [l for d, l in zip(res.tested_d, res.tested_lambda)
                     if d <= res.d_star]
        assert certified and all(l <= 0 for l in certified)

    def test_slow_not_applicable(self):
        m = CoefficientField.space_constant(
            PeriodicScalarFunction.sinusoid(0.0, 1.0))   # zero mean growth
        res = threshold_diffusion_slow(m, 1.0, 1.0, 1, points_per_decade=4)
        assert not res.applicable
        assert res.d_star is None
