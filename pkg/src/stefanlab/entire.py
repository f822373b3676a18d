"""Positive T-periodic radial states on (approximately) all of space.

The reaction-diffusion problem w_t - d*Lap(w) = w(growth - b*w) posed on
R^N is truncated to [0, R_out] with zero flux at both ends and solved as the
fixed point of the one-period map, starting from the flat plateau
mean(growth at R_out)/mean(b at R_out). The truncation is certified by the
doubling test (doubling R_out moves the inner half by < 1e-3).

Time stepping is an IMEX predictor-corrector: Crank-Nicolson diffusion with
a Heun (explicit trapezoidal) reaction whose predictor carries the full
diffusion step, so the scheme is second order in time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Degenerate, NonConvergence
from .model import CoefficientField, ModelParams, combine_rules
from .periodic_ode import (PeriodicLogisticSolution, tail_envelope_lower,
                           tail_envelope_upper)
from .radial import cn_banded, radial_laplacian, solve_tridiag

DEFAULT_GRID = 512
DEFAULT_STEPS = 256
PERIOD_MAP_TOL = 1e-6
MAX_PERIODS = 2000
COLLAPSE_TOL = 1e-12


@dataclass(frozen=True)
class RadialPeriodicField:
    """Samples of a positive T-periodic radial field on [0,T] x [0,R_out]."""

    times: np.ndarray
    radii: np.ndarray
    samples: np.ndarray
    r_out: float
    period: float
    residual: float
    periods: int

    def eval(self, t, r):
        """Bilinear interpolation, periodic in t, clamped in r."""
        t, r = np.broadcast_arrays(np.asarray(t, float), np.asarray(r, float))
        tau = np.mod(t, self.period)
        nt = self.times.size
        k = np.clip(np.searchsorted(self.times, tau, side="right") - 1,
                    0, nt - 2)
        wt = (tau - self.times[k]) / (self.times[k + 1] - self.times[k])
        j = np.clip(np.searchsorted(self.radii, r, side="right") - 1,
                    0, self.radii.size - 2)
        wr = np.clip((r - self.radii[j]) / (self.radii[j + 1] - self.radii[j]),
                     0.0, 1.0)
        lo = (1 - wr) * self.samples[k, j] + wr * self.samples[k, j + 1]
        hi = (1 - wr) * self.samples[k + 1, j] + wr * self.samples[k + 1, j + 1]
        out = (1 - wt) * lo + wt * hi
        return float(out) if out.ndim == 0 else out

    def at_time(self, t: float) -> np.ndarray:
        """Profile on the stored radii at time t (linear in t, periodic)."""
        tau = float(np.mod(t, self.period))
        k = min(int(np.searchsorted(self.times, tau, side="right")) - 1,
                self.times.size - 2)
        k = max(k, 0)
        wt = (tau - self.times[k]) / (self.times[k + 1] - self.times[k])
        return (1 - wt) * self.samples[k] + wt * self.samples[k + 1]

    def min(self) -> float:
        return float(self.samples.min())

    def max(self) -> float:
        return float(self.samples.max())


def _outer_tail_positive(growth: CoefficientField, r_out: float,
                         time_samples: int = 64) -> None:
    ts = np.arange(time_samples) * (growth.period / time_samples)
    probes = np.array([0.6, 0.7, 0.8, 0.9, 1.0]) * r_out
    mins = [float(growth(ts, np.full_like(ts, rp)).min()) for rp in probes]
    if min(mins[-3:]) <= 0:
        raise ValueError(
            f"growth is not positive near the truncation radius: {mins}")


def solve_periodic_entire(d: float, growth: CoefficientField,
                          b: CoefficientField, N: int, T: float,
                          r_out: float, grid: int = DEFAULT_GRID,
                          steps_per_period: int = DEFAULT_STEPS,
                          tol: float = PERIOD_MAP_TOL,
                          max_periods: int = MAX_PERIODS,
                          initial: np.ndarray | None = None,
                          check_tail: bool = True) -> RadialPeriodicField:
    """Fixed point of the one-period map of w_t - d*Lap(w) = w(growth - b w).

    Zero-flux at r=0 and r=R_out. Iterates until successive period snapshots
    differ by less than tol in sup norm; raises NonConvergence past the
    period budget and Degenerate if the iterate collapses toward zero.
    """
    if check_tail:
        _outer_tail_positive(growth, r_out)
    r = np.linspace(0.0, r_out, grid + 1)
    lap = radial_laplacian(r, N, "neumann")
    dt = T / steps_per_period
    c = 0.5 * dt * d
    ab = cn_banded(lap, c)
    tk = np.arange(steps_per_period + 1) * dt
    g_vals = np.array([growth(t, r) for t in tk])
    b_vals = np.array([b(t, r) for t in tk])
    if b_vals.min() <= 0:
        raise ValueError("self-limitation b must be strictly positive")

    if initial is None:
        g_tail = float(g_vals[:, -1].mean())
        b_tail = float(b_vals[:, -1].mean())
        if g_tail <= 0:
            raise ValueError("mean growth at the truncation radius must be "
                             "positive to seed the plateau guess")
        w = np.full(r.size, g_tail / b_tail)
    else:
        w = np.array(initial, dtype=float)
        if w.size != r.size:
            raise ValueError("initial guess must match the grid")

    def step(w, k):
        react0 = w * (g_vals[k] - b_vals[k] * w)
        base = w + c * lap.matvec(w)
        pred = solve_tridiag(ab, base + dt * react0)
        react1 = pred * (g_vals[k + 1] - b_vals[k + 1] * pred)
        return solve_tridiag(ab, base + 0.5 * dt * (react0 + react1))

    prev = w.copy()
    for period in range(1, max_periods + 1):
        for k in range(steps_per_period):
            w = step(w, k)
        if w.max() <= COLLAPSE_TOL:
            raise Degenerate("periodic iterate collapsed toward zero")
        if w.min() < -1e-10 * max(w.max(), 1.0):
            raise NonConvergence("periodic iterate went negative")
        np.maximum(w, 0.0, out=w)
        defect = float(np.abs(w - prev).max())
        if defect < tol:
            break
        prev = w.copy()
    else:
        raise NonConvergence(
            f"entire-state period map not settled in {max_periods} periods; "
            f"last defect {defect:.3g}")

    samples = np.empty((steps_per_period + 1, r.size))
    samples[0] = w
    for k in range(steps_per_period):
        w = step(w, k)
        samples[k + 1] = w
    residual = float(np.abs(samples[-1] - samples[0]).max())
    if samples.min() <= 0:
        raise Degenerate("converged field is not strictly positive")
    return RadialPeriodicField(times=tk, radii=r, samples=samples,
                               r_out=r_out, period=T, residual=residual,
                               periods=period)


def entire_state_v(params: ModelParams, r_out: float | None = None,
                   grid: int | None = None,
                   steps_per_period: int = DEFAULT_STEPS,
                   **kw) -> RadialPeriodicField:
    """Entire periodic state of the native species v (no competitor)."""
    if r_out is None:
        r_out = 20.0
    if grid is None:
        grid = DEFAULT_GRID
    return solve_periodic_entire(params.d2, params.m2, params.b2, params.N,
                                 params.T, r_out, grid=grid,
                                 steps_per_period=steps_per_period, **kw)


def entire_state_u(params: ModelParams, V: RadialPeriodicField,
                   inflation: float = 1.0, **kw) -> RadialPeriodicField:
    """Entire periodic state of the invader against the settled native state:
    growth m1 - inflation*c1*V, crowding b1."""
    growth = effective_u_growth(params, V, inflation=inflation)
    kw.setdefault("r_out", V.r_out)
    kw.setdefault("grid", V.radii.size - 1)
    return solve_periodic_entire(params.d1, growth, params.b1, params.N,
                                 params.T, **kw)


def entire_state_u_unhindered(params: ModelParams,
                              r_out: float = 20.0,
                              grid: int = DEFAULT_GRID,
                              **kw) -> RadialPeriodicField:
    """Entire periodic state of the invader with no competition at all."""
    return solve_periodic_entire(params.d1, params.m1, params.b1, params.N,
                                 params.T, r_out, grid=grid, **kw)


@dataclass(frozen=True)
class AsymptoticBoundsReport:
    ok: bool
    lower_margin: float
    upper_margin: float
    epsilon: float
    tail_start: float


def check_asymptotic_bounds(fld: RadialPeriodicField,
                            V_star: PeriodicLogisticSolution,
                            V_upper: PeriodicLogisticSolution
                            ) -> AsymptoticBoundsReport:
    """Field tail must sit between the periodic-logistic envelopes.

    Checks V_star(t) - eps <= field(t,r) <= V_upper(t) + eps over the outer
    20% of the grid, with eps = 0.02 * sup V_upper.
    """
    eps = 0.02 * V_upper.max()
    mask = fld.radii >= 0.8 * fld.r_out
    tail = fld.samples[:, mask]
    lo = V_star.V(fld.times)[:, None]
    hi = V_upper.V(fld.times)[:, None]
    lower_margin = float((tail - (lo - eps)).min())
    upper_margin = float(((hi + eps) - tail).min())
    return AsymptoticBoundsReport(
        ok=bool(lower_margin >= 0 and upper_margin >= 0),
        lower_margin=lower_margin, upper_margin=upper_margin, epsilon=eps,
        tail_start=float(0.8 * fld.r_out))


def effective_u_growth(params: ModelParams, V: RadialPeriodicField,
                       inflation: float = 1.0) -> CoefficientField:
    """Composite growth felt by the invader: m1 - inflation * c1 * V.

    inflation is 1 or (1+H); the returned tabulated field carries the tail
    envelopes built from the declared asymptotics and the logistic tail
    solutions for v.
    """
    tgrid = V.times[:-1]
    vals = np.empty((tgrid.size, V.radii.size))
    for i, t in enumerate(tgrid):
        vals[i] = (params.m1(t, V.radii)
                   - inflation * params.c1(t, V.radii) * V.samples[i])
    kw = {}
    if (params.m1.asymptotic_liminf is not None
            and params.c1.declared_upper is not None):
        upper_tail = tail_envelope_upper(params)
        kw["asymptotic_liminf"] = combine_rules(
            lambda m, c, v: m - inflation * c * v,
            params.m1.asymptotic_liminf, params.c1.declared_upper,
            upper_tail.V)
    if (params.m1.asymptotic_limsup is not None
            and params.c1.declared_lower is not None):
        lower_tail = tail_envelope_lower(params)
        kw["asymptotic_limsup"] = combine_rules(
            lambda m, c, v: m - inflation * c * v,
            params.m1.asymptotic_limsup, params.c1.declared_lower,
            lower_tail.V)
    if (params.m1.declared_lower is not None
            and params.c1.declared_upper is not None):
        vmax = V.max()
        kw["declared_lower"] = combine_rules(
            lambda m, c: m - inflation * c * vmax,
            params.m1.declared_lower, params.c1.declared_upper)
    if (params.m1.declared_upper is not None
            and params.c1.declared_lower is not None):
        vmin = V.min()
        kw["declared_upper"] = combine_rules(
            lambda m, c: m - inflation * c * vmin,
            params.m1.declared_upper, params.c1.declared_lower)
    return CoefficientField.tabulated(tgrid, V.radii, vals, period=params.T,
                                      **kw)
