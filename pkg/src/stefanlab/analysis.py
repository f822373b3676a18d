"""Trajectory classification, sharp thresholds, semi-waves and speed bounds.

Spreading is declared the moment the front crosses the critical radius of
the effective environment m1 - c1*V (a rigorous sufficient condition);
vanishing is declared from finite-time diagnostics: the invader's sup norm
under tol_u and the per-period front advance under tol_h for five
consecutive periods. Everything else is Inconclusive, which threshold
bisection treats by doubling the time budget up to a cap and then widening
the reported interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .entire import RadialPeriodicField, effective_u_growth, entire_state_v
from .errors import InsufficientData, NoBracket, NonConvergence, NoSemiWave
from .eigensolver import threshold_radius
from .fbsolver import (AprioriBounds, PeriodMark, SolverConfig, Trajectory,
                       simulate)
from .model import ModelParams, PeriodicScalarFunction, combine_rules
from .periodic_ode import (envelope_constants, solve_periodic_logistic,
                           tail_envelope_upper)
from .radial import TridiagOperator, cn_banded, inner_slope, solve_tridiag

DECAY_TOL_FACTOR = 1e-4      # tol_u = 1e-4 * C1
STALL_TOL_FACTOR = 1e-5      # tol_h = 1e-5 * h0
STALL_PERIODS = 5
MIN_PERIODS = 20

SPREADING = "Spreading"
VANISHING = "Vanishing"
INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class DichotomyVerdict:
    kind: str
    h_star_used: float
    radius_crossed: bool
    crossing_time: float | None
    final_sup_u: float
    final_front_advance: float
    decay_history: tuple[float, ...]
    stall_history: tuple[float, ...]
    recommendation: str | None = None


class VerdictStopRule:
    """Period-boundary early stop: fires on a crossing or a stalled decay."""

    def __init__(self, h_star: float, tol_u: float, tol_h: float,
                 h0: float, min_periods: int = MIN_PERIODS,
                 stall_periods: int = STALL_PERIODS):
        self.h_star = h_star
        self.tol_u = tol_u
        self.tol_h = tol_h
        self.h0 = h0
        self.min_periods = min_periods
        self.stall_periods = stall_periods

    def __call__(self, marks: list[PeriodMark]) -> str | None:
        if marks[-1].h > self.h_star:
            return f"verdict:{SPREADING}"
        if len(marks) < self.min_periods:
            return None
        tail = marks[-self.stall_periods:]
        hs = [self.h0 if m.period == 1 else marks[m.period - 2].h for m in tail]
        decayed = all(m.sup_u < self.tol_u for m in tail)
        stalled = all(m.h - h_prev < self.tol_h
                      for m, h_prev in zip(tail, hs))
        if decayed and stalled:
            return f"verdict:{VANISHING}"
        return None


def critical_radius(params: ModelParams, V: RadialPeriodicField,
                    inflation: float = 1.0,
                    search_max: float | None = None,
                    grid: int = 256) -> float:
    """Critical radius of the effective invader environment m1 - infl*c1*V."""
    composite = effective_u_growth(params, V, inflation=inflation)
    if search_max is None:
        search_max = min(10.0, 0.9 * V.r_out)
    return threshold_radius(params.d1, composite, params.T, params.N,
                            search_max=search_max, grid=grid)


def classify(traj: Trajectory, params: ModelParams,
             V: RadialPeriodicField | None = None,
             h_star: float | None = None) -> DichotomyVerdict:
    """Spreading / Vanishing / Inconclusive with the evidence used.

    Spreading once h(t) exceeds the critical radius of m1 - c1*V (V may be
    supplied, or h_star directly). Vanishing needs sup u < 1e-4*C1 and a
    per-period front advance < 1e-5*h0 for five consecutive periods over a
    span of at least 20 periods.
    """
    if h_star is None:
        if V is None:
            raise ValueError("classify needs either V or a precomputed h_star")
        h_star = critical_radius(
            params, V, inflation=1.0,
            search_max=min(0.85 * traj.config_echo["r_out"], 10.0))
    bounds = AprioriBounds.from_params(
        params, max(traj.config_echo["r_out"], 10.0 * params.init.h0))
    tol_u = DECAY_TOL_FACTOR * bounds.C1
    tol_h = STALL_TOL_FACTOR * params.init.h0

    crossed = traj.h > h_star
    radius_crossed = bool(crossed.any())
    crossing_time = float(traj.t[int(np.argmax(crossed))]) if radius_crossed \
        else None
    marks = traj.period_marks
    sup_u_hist = tuple(m.sup_u for m in marks[-2 * STALL_PERIODS:])
    h_at = [params.init.h0] + [m.h for m in marks]
    advances = tuple(h_at[i + 1] - h_at[i] for i in range(len(marks)))
    stall_hist = advances[-2 * STALL_PERIODS:]
    final_sup_u = marks[-1].sup_u if marks else float(traj.u_max[-1])
    final_adv = advances[-1] if advances else float("nan")

    if radius_crossed:
        return DichotomyVerdict(
            kind=SPREADING, h_star_used=h_star, radius_crossed=True,
            crossing_time=crossing_time, final_sup_u=final_sup_u,
            final_front_advance=final_adv, decay_history=sup_u_hist,
            stall_history=stall_hist)
    if len(marks) >= MIN_PERIODS:
        tail_u = sup_u_hist[-STALL_PERIODS:]
        tail_h = stall_hist[-STALL_PERIODS:]
        if (len(tail_u) == STALL_PERIODS
                and all(u < tol_u for u in tail_u)
                and all(a < tol_h for a in tail_h)):
            return DichotomyVerdict(
                kind=VANISHING, h_star_used=h_star, radius_crossed=False,
                crossing_time=None, final_sup_u=final_sup_u,
                final_front_advance=final_adv, decay_history=sup_u_hist,
                stall_history=stall_hist)
    return DichotomyVerdict(
        kind=INCONCLUSIVE, h_star_used=h_star, radius_crossed=False,
        crossing_time=None, final_sup_u=final_sup_u,
        final_front_advance=final_adv, decay_history=sup_u_hist,
        stall_history=stall_hist,
        recommendation="extend t_end (front neither crossed the critical "
                       "radius nor stalled with a decayed invader)")


def run_verdict(params: ModelParams, config: SolverConfig, h_star: float,
                t_end: float | None = None,
                decay_tol_factor: float = DECAY_TOL_FACTOR,
                stall_tol_factor: float = STALL_TOL_FACTOR
                ) -> tuple[str, Trajectory]:
    """One budgeted run with the early-stop rule; returns (verdict, traj)."""
    bounds = AprioriBounds.from_params(
        params, max(config.r_out, 10.0 * params.init.h0))
    rule = VerdictStopRule(h_star=h_star,
                           tol_u=decay_tol_factor * bounds.C1,
                           tol_h=stall_tol_factor * params.init.h0,
                           h0=params.init.h0)
    cfg = config if t_end is None else config.with_updates(t_end=t_end)
    traj = simulate(params, cfg, stop_rule=rule)
    if traj.termination.startswith("verdict:"):
        return traj.termination.split(":", 1)[1], traj
    verdict = classify(traj, params, h_star=h_star)
    return verdict.kind, traj


@dataclass(frozen=True)
class ThresholdInterval:
    lower: float
    upper: float
    parameter: str
    degenerate: bool
    h_star_inflated: float
    h_star: float
    evaluations: tuple[tuple[float, str], ...]
    unresolved: bool = False

    @property
    def width(self) -> float:
        return self.upper - self.lower


def _budgeted_verdict(make_params, value: float, config: SolverConfig,
                      h_star: float, t_end0: float, t_end_cap: float
                      ) -> tuple[str, float]:
    t_end = t_end0
    while True:
        verdict, _ = run_verdict(make_params(value), config, h_star,
                                 t_end=t_end)
        if verdict != INCONCLUSIVE or t_end >= t_end_cap:
            return verdict, t_end
        t_end = min(2.0 * t_end, t_end_cap)


def _threshold_bisection(make_params, bracket: tuple[float, float],
                         parameter: str, params: ModelParams,
                         config: SolverConfig,
                         V: RadialPeriodicField | None,
                         t_end_cap_periods: float = 200.0
                         ) -> ThresholdInterval:
    if V is None:
        V = entire_state_v(params)
    constants = envelope_constants(params, V)
    h_star_infl = critical_radius(params, V, inflation=1.0 + constants.H)
    h_star = critical_radius(params, V, inflation=1.0)
    h0 = params.init.h0
    if not math.isinf(h_star_infl) and h0 >= h_star_infl:
        # Occupied radius already at the inflated critical radius: spreading
        # is unconditional and the threshold collapses to zero.
        return ThresholdInterval(
            lower=0.0, upper=0.0, parameter=parameter, degenerate=True,
            h_star_inflated=h_star_infl, h_star=h_star, evaluations=())

    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValueError("bracket must satisfy lo < hi")
    width_target = 0.01 * (hi - lo)
    t_end0 = config.t_end
    t_end_cap = max(t_end_cap_periods * params.T, t_end0)
    evals: list[tuple[float, str]] = []

    v_lo, _ = _budgeted_verdict(make_params, lo, config, h_star, t_end0,
                                t_end_cap)
    evals.append((lo, v_lo))
    v_hi, _ = _budgeted_verdict(make_params, hi, config, h_star, t_end0,
                                t_end_cap)
    evals.append((hi, v_hi))
    if not (v_lo == VANISHING and v_hi == SPREADING):
        raise NoBracket(
            f"bracket endpoints do not straddle the threshold: "
            f"{parameter}={lo:.4g} -> {v_lo}, {parameter}={hi:.4g} -> {v_hi}")

    unresolved = False
    while hi - lo > width_target:
        mid = 0.5 * (lo + hi)
        verdict, _ = _budgeted_verdict(make_params, mid, config, h_star,
                                       t_end0, t_end_cap)
        evals.append((mid, verdict))
        if verdict == SPREADING:
            hi = mid
        elif verdict == VANISHING:
            lo = mid
        else:
            unresolved = True
            break
    return ThresholdInterval(lower=lo, upper=hi, parameter=parameter,
                             degenerate=False, h_star_inflated=h_star_infl,
                             h_star=h_star, evaluations=tuple(evals),
                             unresolved=unresolved)


def find_mu_star(params: ModelParams, config: SolverConfig,
                 bracket: tuple[float, float],
                 V: RadialPeriodicField | None = None) -> ThresholdInterval:
    """Sharp expansion-capability threshold, bisected to 1% of the bracket."""
    return _threshold_bisection(params.with_mu, bracket, "mu", params,
                                config, V)


def find_eps_star(params: ModelParams, config: SolverConfig,
                  bracket: tuple[float, float],
                  V: RadialPeriodicField | None = None) -> ThresholdInterval:
    """Sharp initial-density threshold: u0 = eps * theta with theta fixed."""

    def with_eps(eps: float) -> ModelParams:
        return params.with_init(params.init.scaled_u0(eps))

    return _threshold_bisection(with_eps, bracket, "eps", params, config, V)


@dataclass(frozen=True)
class SemiWaveResult:
    K0: PeriodicScalarFunction
    mean_K0: float
    times: np.ndarray
    K0_values: np.ndarray
    radii: np.ndarray
    U_profile: np.ndarray
    iterations: int
    boundary_residual: float
    tail_gap: float
    existence_bound: float


def semiwave_k0(mu: float, a: PeriodicScalarFunction,
                b: PeriodicScalarFunction, d: float, T: float,
                L: float | None = None, grid: int | None = None,
                steps_per_period: int = 256, relaxation: float = 0.5,
                tol: float = 1e-6, inner_tol: float = 1e-8,
                polish_tol: float = 1e-9,
                max_outer: int = 500, max_inner: int = 400) -> SemiWaveResult:
    """Self-consistent front-speed profile K0(t) with mu*U_r(t,0) = K0(t).

    Fixed-point iteration: given K_n, solve the T-periodic advected logistic
    problem on (0, L) with U(t,0)=0 and Dirichlet tail value V(t) (the
    periodic logistic solution), then relax K_{n+1} = (1-w)K_n + w*mu*U_r(t,0).
    After the sup|K_{n+1}-K_n| < tol stop, a short polish phase continues the
    relaxation with deep inner solves down to polish_tol so the reported
    profile is free of iteration-history ripples. Raises NoSemiWave when the
    mean growth is nonpositive (the existence condition fails at K=0
    already).
    """
    tgrid_probe = np.linspace(0.0, T, 513)
    mean_a = float(simpson(a(tgrid_probe), x=tgrid_probe) / T)
    if mean_a <= 0:
        raise NoSemiWave(f"mean growth {mean_a:.4g} <= 0")
    k_max = 2.0 * math.sqrt(d * mean_a)
    if L is None:
        L = 40.0 * math.sqrt(d / mean_a)
    if grid is None:
        grid = int(min(max(1024, round(L / (0.03 * math.sqrt(d / mean_a)))),
                       4096))
    tail = solve_periodic_logistic(a, b, T)

    r = np.linspace(0.0, L, grid + 1)
    dr = r[1] - r[0]
    n = grid - 1                      # unknown nodes 1..grid-1
    dt = T / steps_per_period
    tk = np.arange(steps_per_period + 1) * dt
    a_k = a(tk)
    b_k = b(tk)
    vb_k = tail.V(tk)                 # Dirichlet tail values per step
    inv2dr = 1.0 / (2.0 * dr)
    c = 0.5 * dt
    dlap = TridiagOperator(lo=np.full(n, d / dr ** 2),
                           di=np.full(n, -2.0 * d / dr ** 2),
                           up=np.full(n, d / dr ** 2))
    ab = cn_banded(dlap, c)

    def rhs_terms(U, k, K_k):
        ur = np.empty(n)
        ur[0] = U[1] * inv2dr                       # U(0) = 0
        ur[1:-1] = (U[2:] - U[:-2]) * inv2dr
        ur[-1] = (vb_k[k] - U[-2]) * inv2dr
        return -K_k * ur + U * (a_k[k] - b_k[k] * U)

    def bc_vec(k):
        out = np.zeros(n)
        out[-1] = d * vb_k[k] / dr ** 2
        return out

    def one_period(U, K_nodes, record=False, profiles=None):
        derivs = np.empty(steps_per_period + 1) if record else None
        if record:
            derivs[0] = inner_slope(U, dr)
            if profiles is not None:
                profiles[0, 1:-1] = U
                profiles[0, -1] = vb_k[0]
        for k in range(steps_per_period):
            f0 = rhs_terms(U, k, K_nodes[k])
            base = U + c * dlap.matvec(U) + c * (bc_vec(k) + bc_vec(k + 1))
            pred = solve_tridiag(ab, base + dt * f0)
            f1 = rhs_terms(pred, k + 1, K_nodes[k + 1])
            U = solve_tridiag(ab, base + 0.5 * dt * (f0 + f1))
            if record:
                derivs[k + 1] = inner_slope(U, dr)
                if profiles is not None:
                    profiles[k + 1, 1:-1] = U
                    profiles[k + 1, -1] = vb_k[k + 1]
        return U, derivs

    def solve_periodic(U, K_nodes, tol_eff):
        for it in range(max_inner):
            U_new, _ = one_period(U, K_nodes)
            if float(np.abs(U_new - U).max()) < tol_eff:
                return U_new
            U = U_new
        raise NonConvergence("semi-wave inner period map did not settle")

    K_nodes = np.zeros(steps_per_period + 1)
    U = tail.V(0.0) * (1.0 - np.exp(-r[1:-1] * math.sqrt(mean_a / d)))
    iterations = 0
    delta = math.inf
    for iterations in range(1, max_outer + 1):
        # Loose inner solves while K is still moving, tight near the end.
        tol_eff = min(max(0.02 * delta, inner_tol), 1e-5)
        U = solve_periodic(U, K_nodes, tol_eff)
        _, derivs = one_period(U, K_nodes, record=True)
        K_target = mu * derivs
        K_new = (1.0 - relaxation) * K_nodes + relaxation * K_target
        np.maximum(K_new, 0.0, out=K_new)
        mean_new = float(simpson(K_new, x=tk) / T)
        if mean_new >= 0.999 * k_max:
            K_new *= 0.999 * k_max / mean_new
        delta = float(np.abs(K_new - K_nodes).max())
        K_nodes = K_new
        if delta < tol:
            break
    else:
        raise NonConvergence("semi-wave outer fixed point did not settle")

    for _ in range(20):
        if delta < polish_tol:
            break
        U = solve_periodic(U, K_nodes, inner_tol * 1e-2)
        _, derivs = one_period(U, K_nodes, record=True)
        K_new = (1.0 - relaxation) * K_nodes + relaxation * mu * derivs
        np.maximum(K_new, 0.0, out=K_new)
        delta = float(np.abs(K_new - K_nodes).max())
        K_nodes = K_new

    # Final resolve converges deeper: the boundary-derivative read-out
    # amplifies the period-map defect by ~1/(2 dr).
    U = solve_periodic(U, K_nodes, inner_tol * 1e-2)
    profiles = np.zeros((steps_per_period + 1, r.size))
    U_final, derivs = one_period(U, K_nodes, record=True, profiles=profiles)
    residual = float(np.abs(mu * derivs - K_nodes).max())
    mean_K0 = float(simpson(K_nodes, x=tk) / T)
    if not 0.0 < mean_K0 < k_max:
        raise NoSemiWave(
            f"mean K0 = {mean_K0:.4g} escaped (0, {k_max:.4g})")
    # Tail agreement with the periodic logistic solution at 0.9 L.
    j_tail = int(round(0.9 * grid))
    tail_gap = float(np.abs(profiles[:, j_tail] / tail.V(tk) - 1.0).max())
    return SemiWaveResult(
        K0=PeriodicScalarFunction.tabulated(K_nodes[:-1], T),
        mean_K0=mean_K0, times=tk, K0_values=K_nodes.copy(), radii=r,
        U_profile=profiles, iterations=iterations,
        boundary_residual=residual, tail_gap=float(tail_gap),
        existence_bound=k_max)


@dataclass(frozen=True)
class SpeedBounds:
    lower: float
    upper: float
    lower_flagged_zero: bool
    semiwave_lower: SemiWaveResult | None
    semiwave_upper: SemiWaveResult


def speed_bounds(params: ModelParams, L: float | None = None,
                 grid: int | None = None,
                 steps_per_period: int = 256) -> SpeedBounds:
    """Rough spreading-speed bracket from the two envelope semi-waves.

    lower uses growth (liminf m1 - sup c1 * upper tail of v) with crowding
    sup b1; upper uses growth limsup m1 with crowding inf b1. The tail limit
    is taken at face value (no extra epsilon margin). A nonpositive lower
    composite is reported as lower = 0 with a flag.
    """
    for name in ("m1", "b1", "c1"):
        fld = params.coefficient(name)
        if fld.declared_lower is None or fld.declared_upper is None:
            raise ValueError(f"{name} needs declared envelopes")
    if params.m1.asymptotic_liminf is None or params.m1.asymptotic_limsup is None:
        raise ValueError("m1 needs declared asymptotics")
    upper_tail = tail_envelope_upper(params)
    a_low = combine_rules(lambda m, c, v: m - c * v,
                          params.m1.asymptotic_liminf,
                          params.c1.declared_upper, upper_tail.V)
    a_up = params.m1.asymptotic_limsup
    sw_upper = semiwave_k0(params.mu, a_up, params.b1.declared_lower,
                           params.d1, params.T, L=L, grid=grid,
                           steps_per_period=steps_per_period)
    try:
        sw_lower = semiwave_k0(params.mu, a_low, params.b1.declared_upper,
                               params.d1, params.T, L=L, grid=grid,
                               steps_per_period=steps_per_period)
        lower = sw_lower.mean_K0
        flagged = False
    except NoSemiWave:
        sw_lower = None
        lower = 0.0
        flagged = True
    return SpeedBounds(lower=lower, upper=sw_upper.mean_K0,
                       lower_flagged_zero=flagged, semiwave_lower=sw_lower,
                       semiwave_upper=sw_upper)


@dataclass(frozen=True)
class MeasuredSpeed:
    speed: float
    fit_residual: float
    window_periods: float
    t_start: float
    t_end: float


def measure_speed(traj: Trajectory, window: float) -> MeasuredSpeed:
    """Least-squares slope of h(t) over the final window (in periods)."""
    T = traj.config_echo["T"]
    span = traj.t[-1] - traj.t[0]
    if span < 3.0 * window * T:
        raise InsufficientData(
            f"trajectory spans {span / T:.1f} periods; need >= "
            f"{3 * window:.0f} for a {window:.0f}-period window")
    t0 = traj.t[-1] - window * T
    mask = traj.t >= t0 - 1e-12
    ts = traj.t[mask]
    hs = traj.h[mask]
    A = np.vstack([ts, np.ones_like(ts)]).T
    coef, *_ = np.linalg.lstsq(A, hs, rcond=None)
    fit = A @ coef
    residual = float(np.sqrt(np.mean((hs - fit) ** 2)))
    return MeasuredSpeed(speed=float(coef[0]), fit_residual=residual,
                         window_periods=window, t_start=float(ts[0]),
                         t_end=float(ts[-1]))
