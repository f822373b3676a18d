"""Scalar T-periodic logistic problems and the super-solution envelope.

The periodic logistic equation V' = V(a(t) - b(t)V), V(0) = V(T) is solved in
closed Bernoulli form: with A(t) the cumulative integral of a,

    V(t) = exp(A(t)) / (C + int_0^t b(s) exp(A(s)) ds),
    C = int_0^T b exp(A) ds / (exp(A(T)) - 1),

which has a positive solution exactly when the mean of a is positive.
Quadratures are composite Simpson on >= 512 nodes, doubled on residual
failure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from .errors import DegenerateV, NoPositivePeriodicSolution
from .model import (ModelParams, PeriodicScalarFunction, TIME_SAMPLES,
                    SPACE_SAMPLES)

RESIDUAL_TOL = 1e-8
MIN_NODES = 512
DEFAULT_NODES = 2048   # keeps constant-coefficient error below 1e-12
MAX_NODES = 16384


@dataclass(frozen=True)
class PeriodicLogisticSolution:
    """Positive T-periodic solution of V' = V(a - bV), tabulated in time."""

    V: PeriodicScalarFunction
    mean_a: float
    residual: float
    times: np.ndarray
    values: np.ndarray

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())

    def mean(self) -> float:
        vals = np.append(self.values, self.values[0])
        return float(simpson(vals, x=np.append(self.times, self.V.period))
                     / self.V.period)


def _ode_residual(times: np.ndarray, vals: np.ndarray, a: np.ndarray,
                  b: np.ndarray) -> float:
    """Sup-norm defect of V' = V(a - bV) using 4th-order periodic differences."""
    dt = times[1] - times[0]
    dv = (-np.roll(vals, -2) + 8.0 * np.roll(vals, -1)
          - 8.0 * np.roll(vals, 1) + np.roll(vals, 2)) / (12.0 * dt)
    return float(np.abs(dv - vals * (a - b * vals)).max())


def solve_periodic_logistic(a: PeriodicScalarFunction,
                            b: PeriodicScalarFunction,
                            T: float,
                            nodes: int = DEFAULT_NODES) -> PeriodicLogisticSolution:
    """Unique positive T-periodic solution of V' = V(a(t) - b(t)V).

    Raises NoPositivePeriodicSolution when the mean of a is nonpositive.
    """
    if b.min() <= 0:
        raise ValueError("self-limitation b must be positive on [0, T]")
    nodes = max(int(nodes), MIN_NODES)
    while True:
        t = np.linspace(0.0, T, nodes + 1)
        av, bv = a(t), b(t)
        mean_a = float(simpson(av, x=t) / T)
        if mean_a <= 0:
            raise NoPositivePeriodicSolution(
                f"mean growth {mean_a:.6g} <= 0: no positive periodic solution")
        A = cumulative_simpson(av, x=t, initial=0.0)
        if A[-1] > 600.0:
            raise ValueError("cumulative growth too large for the closed form")
        E = np.exp(A)
        I = cumulative_simpson(bv * E, x=t, initial=0.0)
        C = I[-1] / (E[-1] - 1.0)
        vals = E / (C + I)
        residual = _ode_residual(t[:-1], vals[:-1], av[:-1], bv[:-1])
        if residual < RESIDUAL_TOL or nodes >= MAX_NODES:
            break
        nodes *= 2
    if vals.min() <= 0:
        raise NoPositivePeriodicSolution("computed solution is not positive")
    rule = PeriodicScalarFunction.tabulated(vals[:-1], T)
    return PeriodicLogisticSolution(V=rule, mean_a=mean_a, residual=residual,
                                    times=t[:-1], values=vals[:-1])


def tail_envelope_lower(params: ModelParams,
                        nodes: int = DEFAULT_NODES) -> PeriodicLogisticSolution:
    """Periodic logistic solution driven by the weakest large-r environment
    for v: growth = liminf of m2 at infinity, crowding = upper envelope of b2.
    Bounds the tail of the entire periodic state of v from below."""
    if params.m2.asymptotic_liminf is None or params.b2.declared_upper is None:
        raise ValueError("m2 asymptotic liminf and b2 upper envelope required")
    return solve_periodic_logistic(params.m2.asymptotic_liminf,
                                   params.b2.declared_upper, params.T, nodes)


def tail_envelope_upper(params: ModelParams,
                        nodes: int = DEFAULT_NODES) -> PeriodicLogisticSolution:
    """Periodic logistic solution driven by the strongest large-r environment
    for v: growth = limsup of m2 at infinity, crowding = lower envelope of b2.
    Bounds the tail of the entire periodic state of v from above."""
    if params.m2.asymptotic_limsup is None or params.b2.declared_lower is None:
        raise ValueError("m2 asymptotic limsup and b2 lower envelope required")
    return solve_periodic_logistic(params.m2.asymptotic_limsup,
                                   params.b2.declared_lower, params.T, nodes)


@dataclass(frozen=True)
class EnvelopeConstants:
    """Decay rate K and overshoot H of the super-solution (1+H e^{-Kt}) V."""

    K: float
    H: float
    min_b2: float
    min_V: float


def envelope_constants(params: ModelParams, V) -> EnvelopeConstants:
    """K = (1/2) min b2 min V and 1+H = sup v0 / min_r V(0, r).

    V is the entire periodic state of v (a RadialPeriodicField); minima are
    taken over the sampled grids.
    """
    min_V = float(V.samples.min())
    if min_V <= 0:
        raise DegenerateV(f"entire state has nonpositive minimum {min_V:.3g}")
    lo_b2, _ = params.b2.grid_range(V.r_out, nt=TIME_SAMPLES, nr=SPACE_SAMPLES)
    sup_v0 = params.init.sup_v0(V.r_out)
    min_V0 = float(V.samples[0].min())
    if sup_v0 < min_V0 * (1.0 - 1e-12):
        raise ValueError(
            "sup v0 below min_r V(0, r): envelope overshoot H would be negative")
    K = 0.5 * lo_b2 * min_V
    H = max(sup_v0 / min_V0 - 1.0, 0.0)
    return EnvelopeConstants(K=K, H=H, min_b2=lo_b2, min_V=min_V)


def vbar(t: float, r, V, constants: EnvelopeConstants):
    """Super-solution (1 + H exp(-Kt)) V(t mod T, r) dominating v for all t."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return (1.0 + constants.H * np.exp(-constants.K * t)) * V.eval(t, r)


@dataclass(frozen=True)
class H3Result:
    ok: bool
    margin: float
    margin_curve: np.ndarray
    times: np.ndarray


def check_H3(params: ModelParams, V_entire, constants: EnvelopeConstants,
             nodes: int = DEFAULT_NODES) -> H3Result:
    """Weak-competition condition on u at infinity.

    Passes when min_t [ liminf m1 - (1+H) sup c1 * Vtail_upper(t) ] > 0,
    where Vtail_upper is the upper tail envelope of v's entire state.
    """
    if V_entire is not None and float(V_entire.samples.min()) <= 0:
        raise DegenerateV("entire state of v must be positive")
    if params.m1.asymptotic_liminf is None or params.c1.declared_upper is None:
        raise ValueError("m1 asymptotic liminf and c1 upper envelope required")
    upper = tail_envelope_upper(params, nodes)
    t = upper.times
    curve = (params.m1.asymptotic_liminf(t)
             - (1.0 + constants.H) * params.c1.declared_upper(t) * upper.values)
    margin = float(curve.min())
    return H3Result(ok=bool(margin > 0), margin=margin, margin_curve=curve,
                    times=t)
