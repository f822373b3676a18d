import numpy as np
import pytest

from stefanlab.analysis import critical_radius
from stefanlab.config import load_config, params_from_config, solver_from_config
from stefanlab.entire import entire_state_v
from stefanlab.model import CoefficientField, InitialData, ModelParams


def make_params(mu=5.0, h0=2.0, u0_amp=0.5, c1=0.2, c2=0.3, d1=1.0, d2=1.0,
                N=1, T=1.0, m1=None, m2=None, b1=None, b2=None,
                v0_value=1.0) -> ModelParams:
    """Benchmark-family instance with constant coefficients by default."""
    init = InitialData(h0=h0, u0_kind="cosine_bump", u0_amplitude=u0_amp,
                       v0_kind="constant", v0_value=v0_value)
    return ModelParams(
        d1=d1, d2=d2, mu=mu, N=N, T=T,
        m1=m1 or CoefficientField.constant(1.0, T),
        m2=m2 or CoefficientField.constant(1.0, T),
        b1=b1 or CoefficientField.constant(1.0, T),
        b2=b2 or CoefficientField.constant(1.0, T),
        c1=CoefficientField.constant(c1, T),
        c2=CoefficientField.constant(c2, T),
        init=init)


@pytest.fixture(scope="session")
def spread_cfg():
    return load_config("bench_spread")


@pytest.fixture(scope="session")
def vanish_cfg():
    return load_config("bench_vanish")


@pytest.fixture(scope="session")
def threshold_cfg():
    return load_config("bench_threshold")


@pytest.fixture(scope="session")
def spread_params(spread_cfg):
    return params_from_config(spread_cfg)


@pytest.fixture(scope="session")
def vanish_params(vanish_cfg):
    return params_from_config(vanish_cfg)


@pytest.fixture(scope="session")
def threshold_params(threshold_cfg):
    return params_from_config(threshold_cfg)


@pytest.fixture(scope="session")
def spread_solver(spread_cfg):
    return solver_from_config(spread_cfg)


@pytest.fixture(scope="session")
def vanish_solver(vanish_cfg):
    return solver_from_config(vanish_cfg)


@pytest.fixture(scope="session")
def threshold_solver(threshold_cfg):
    return solver_from_config(threshold_cfg)


@pytest.fixture(scope="session")
def V_bench(vanish_params):
    """Entire periodic state of v for the benchmark coefficient family."""
    fld = entire_state_v(vanish_params)
    assert abs(fld.samples - 1.0).max() < 1e-10
    return fld


@pytest.fixture(scope="session")
def h_star_bench(vanish_params, V_bench):
    """Critical radius of m1 - c1*V = 0.8 for the benchmark family."""
    h = critical_radius(vanish_params, V_bench, inflation=1.0)
    assert abs(h - (np.pi / 2) / np.sqrt(0.8)) < 2e-3
    return h
