"""Front-fixing time stepper for the coupled free-boundary system.

The invader u lives on the moving ball r < h(t) and is mapped to the fixed
interval s = r/h in [0,1]; the transform adds an advection term
(s h'/h) u_s and scales diffusion by 1/h^2. The native species v stays on a
fixed grid [0, R_out] with zero flux at both ends. One step:

  * the front speed h' = -mu u_r(t,h) comes from a second-order one-sided
    stencil at s=1 and advances h by forward Euler,
  * diffusion is implicit (tridiagonal solves: the L-stable TR-BDF2 pair,
    whose high-frequency gain decays monotonically -- plain Crank-Nicolson
    lets grid-scale modes outlive a rapidly vanishing invader and corrupt
    the front stencil), advection and reaction are explicit, with u and v
    exchanged by monotone linear interpolation (u extended by zero beyond
    the front),
  * the advection CFL (s h'/h term) is enforced at runtime by conservative
    sub-stepping; a step needing more than MAX_SUBSTEPS is a stability
    failure.

Removing the coupling (c1 = c2 = 0) makes the u update bit-identical to the
scalar single-species solver, which this module also provides.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (BoundViolation, DomainExhausted, OrderingViolation,
                     StabilityFailure)
from .model import CoefficientField, ModelParams
from .radial import (TRBDF2_A1, TRBDF2_A2, TRBDF2_BETA, TRBDF2_GAMMA,
                     cn_banded, one_sided_slope, radial_laplacian,
                     solve_tridiag)

NEGATIVITY_TOL = 1e-12
CFL_TARGET = 0.8
MAX_SUBSTEPS = 64
BOUND_SLACK = 1e-6


@dataclass(frozen=True)
class SolverConfig:
    """Grid and stepping controls for the free-boundary runs."""

    ns: int
    nr: int
    dt: float
    r_out: float
    t_end: float
    snapshot_every: int = 1

    def validate(self, params: ModelParams) -> int:
        """Check the invariants; returns the integer steps per period."""
        if self.ns < 64 or self.nr < 64:
            raise ValueError("ns and nr must be at least 64")
        if self.ns < 128:
            raise ValueError("ns < 128 would degrade the front stencil to "
                             "first order; refusing")
        if self.dt > params.T / 64:
            raise ValueError("dt must be at most T/64")
        if self.r_out <= 4.0 * params.init.h0:
            raise ValueError("r_out must exceed 4*h0")
        if self.snapshot_every < 1:
            raise ValueError("snapshot_every must be a positive period count")
        steps = round(params.T / self.dt)
        if abs(steps * self.dt - params.T) > 1e-9 * params.T:
            raise ValueError("dt must divide the period T")
        return steps

    def with_updates(self, **kw) -> SolverConfig:
        data = dict(ns=self.ns, nr=self.nr, dt=self.dt, r_out=self.r_out,
                    t_end=self.t_end, snapshot_every=self.snapshot_every)
        data.update(kw)
        return SolverConfig(**data)


@dataclass
class SimulationState:
    t: float
    h: float
    dhdt: float
    u: np.ndarray          # on the s grid, u[-1] = 0 exactly
    v: np.ndarray          # on the r grid
    step_index: int = 0


@dataclass(frozen=True)
class Snapshot:
    t: float
    h: float
    u: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class PeriodMark:
    period: int
    t: float
    h: float
    dhdt: float
    sup_u: float
    sup_v: float


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    h: np.ndarray
    dhdt: np.ndarray
    u_max: np.ndarray
    v_max: np.ndarray
    s_grid: np.ndarray
    r_grid: np.ndarray
    snapshots: tuple[Snapshot, ...]
    period_marks: tuple[PeriodMark, ...]
    termination: str
    coupled: bool
    config_echo: dict

    @property
    def final_h(self) -> float:
        return float(self.h[-1])

    @property
    def periods_completed(self) -> int:
        return len(self.period_marks)


def _field_on(fld: CoefficientField, t: float, r: np.ndarray):
    """Scalar fast path for space-constant coefficients."""
    if fld.kind == "space_constant":
        return fld.base(t)
    return fld(t, r)


@dataclass(frozen=True)
class AprioriBounds:
    """Constants bounding every trajectory of a well-posed instance."""

    C1: float
    C2: float
    C3: float
    M: float

    @classmethod
    def from_params(cls, params: ModelParams, r_max: float) -> AprioriBounds:
        sup_m1 = params.m1.grid_range(r_max)[1]
        sup_m2 = params.m2.grid_range(r_max)[1]
        min_b1 = params.b1.grid_range(r_max)[0]
        min_b2 = params.b2.grid_range(r_max)[0]
        C1 = max(sup_m1 / min_b1, params.init.sup_u0())
        C2 = max(sup_m2 / min_b2, params.init.sup_v0(r_max))
        M = max(1.0 / params.init.h0,
                np.sqrt(max(sup_m1, 0.0) / (2.0 * params.d1)),
                4.0 * params.init.c1_norm_u0() / (3.0 * C1))
        C3 = 2.0 * M * C1 * params.mu
        return cls(C1=C1, C2=C2, C3=C3, M=M)


class _FrontFixedSolver:
    """Owns one simulation exclusively; not shared across threads."""

    def __init__(self, params: ModelParams, config: SolverConfig,
                 coupled: bool):
        self.params = params
        self.config = config
        self.coupled = coupled
        self.steps_per_period = config.validate(params)
        self.s = np.linspace(0.0, 1.0, config.ns + 1)
        self.ds = 1.0 / config.ns
        self.r = np.linspace(0.0, config.r_out, config.nr + 1)
        self.lap_s = radial_laplacian(self.s, params.N, "dirichlet")
        self.lap_r = radial_laplacian(self.r, params.N, "neumann")
        self.bounds = AprioriBounds.from_params(
            params, max(config.r_out, 10.0 * params.init.h0))
        self._ab_v_cache: dict[float, np.ndarray] = {}

        u0 = params.init.eval_u0(self.s * params.init.h0)
        u0[-1] = 0.0
        v0 = params.init.eval_v0(self.r) if coupled else np.zeros(self.r.size)
        self.state = SimulationState(t=0.0, h=params.init.h0, dhdt=0.0,
                                     u=u0, v=v0)
        self.state.dhdt = self._front_speed()

    def _front_speed(self) -> float:
        st = self.state
        g1 = one_sided_slope(st.u[:-1], self.ds, boundary=0.0)
        speed = -self.params.mu * g1 / st.h
        return max(speed, 0.0)

    def _ab_v(self, dt_sub: float) -> tuple[np.ndarray, np.ndarray]:
        mats = self._ab_v_cache.get(dt_sub)
        if mats is None:
            mats = (cn_banded(self.lap_r,
                              0.5 * TRBDF2_GAMMA * dt_sub * self.params.d2),
                    cn_banded(self.lap_r,
                              TRBDF2_BETA * dt_sub * self.params.d2))
            self._ab_v_cache[dt_sub] = mats
        return mats

    def _u_forcing(self, t: float, u: np.ndarray, v: np.ndarray,
                   h: float, dhdt: float):
        """Explicit advection + reaction for u in front-fixed coordinates."""
        p = self.params
        r_u = self.s * h
        u_unk = u[:-1]
        if self.coupled:
            v_on_s = np.interp(r_u[:-1], self.r, v)
        else:
            v_on_s = 0.0
        m1v = _field_on(p.m1, t, r_u[:-1])
        b1v = _field_on(p.b1, t, r_u[:-1])
        c1v = _field_on(p.c1, t, r_u[:-1])
        react = u_unk * (m1v - b1v * u_unk - c1v * v_on_s)
        u_s = np.empty_like(u_unk)
        u_s[0] = 0.0
        u_s[1:] = (u[2:] - u[:-2]) / (2.0 * self.ds)
        adv = (dhdt / h) * self.s[:-1] * u_s
        return adv + react

    def _v_forcing(self, t: float, v: np.ndarray, u_on_r) -> np.ndarray:
        p = self.params
        m2v = _field_on(p.m2, t, self.r)
        b2v = _field_on(p.b2, t, self.r)
        c2v = _field_on(p.c2, t, self.r)
        return v * (m2v - b2v * v - c2v * u_on_r)

    def _substep(self, dt_sub: float) -> None:
        p = self.params
        st = self.state
        t, h, u, v = st.t, st.h, st.u, st.v
        dhdt = self._front_speed()
        dg = TRBDF2_GAMMA * dt_sub
        t_mid = t + dg
        h_mid = h + dg * dhdt
        h_new = h + dt_sub * dhdt
        u_unk = u[:-1]

        # u: trapezoidal stage to t+dg, then BDF2 stage to t+dt.
        f0 = self._u_forcing(t, u, v, h, dhdt)
        c_exp = 0.5 * dg * p.d1 / (h * h)
        c_imp = 0.5 * dg * p.d1 / (h_mid * h_mid)
        rhs1 = u_unk + c_exp * self.lap_s.matvec(u_unk) + dg * f0
        u_star = solve_tridiag(cn_banded(self.lap_s, c_imp), rhs1)
        u_star_full = np.append(u_star, 0.0)
        f_mid = self._u_forcing(t_mid, u_star_full, v, h_mid, dhdt)
        c_bdf = TRBDF2_BETA * dt_sub * p.d1 / (h_new * h_new)
        rhs2 = (TRBDF2_A1 * u_star - TRBDF2_A2 * u_unk
                + TRBDF2_BETA * dt_sub * f_mid)
        u_new = solve_tridiag(cn_banded(self.lap_s, c_bdf), rhs2)
        self._enforce_positive(u_new, "u")
        if float(u_new.max()) > 2.0 * self.bounds.C1:
            raise StabilityFailure(
                f"sup u = {u_new.max():.4g} exceeded 2*C1 at t = {st.t:.6g}")

        if self.coupled:
            u_on_r = np.interp(self.r, self.s * h, u, right=0.0)
            ab_tr, ab_bdf = self._ab_v(dt_sub)
            g0 = self._v_forcing(t, v, u_on_r)
            cg = 0.5 * dg * p.d2
            v_star = solve_tridiag(ab_tr,
                                   v + cg * self.lap_r.matvec(v) + dg * g0)
            g_mid = self._v_forcing(t_mid, v_star, u_on_r)
            v_new = solve_tridiag(ab_bdf,
                                  TRBDF2_A1 * v_star - TRBDF2_A2 * v
                                  + TRBDF2_BETA * dt_sub * g_mid)
            self._enforce_positive(v_new, "v")
            st.v = v_new

        st.u = np.append(u_new, 0.0)
        st.h = h_new
        st.dhdt = dhdt
        st.t = t + dt_sub

    @staticmethod
    def _enforce_positive(arr: np.ndarray, name: str) -> None:
        lowest = float(arr.min())
        if lowest < -NEGATIVITY_TOL:
            raise StabilityFailure(
                f"{name} dipped to {lowest:.3g}, beyond the roundoff tolerance")
        if lowest < 0.0:
            np.maximum(arr, 0.0, out=arr)

    def step(self) -> None:
        """One nominal dt step, sub-divided to honor the advection CFL."""
        st = self.state
        if st.h >= 0.9 * self.config.r_out:
            raise DomainExhausted(
                f"front h = {st.h:.4g} reached 90% of r_out = "
                f"{self.config.r_out:.4g}")
        dt = self.config.dt
        cfl = dt * st.dhdt / (self.ds * st.h)
        n_sub = max(1, int(np.ceil(cfl / CFL_TARGET)))
        if n_sub > MAX_SUBSTEPS:
            raise StabilityFailure(
                f"advection CFL needs {n_sub} substeps (> {MAX_SUBSTEPS}); "
                "reduce dt or coarsen ns")
        dt_sub = dt / n_sub
        for _ in range(n_sub):
            self._substep(dt_sub)
        st.step_index += 1
        st.t = st.step_index * dt  # avoid roundoff drift in the time grid


def step(state: SimulationState, params: ModelParams,
         config: SolverConfig, coupled: bool = True) -> SimulationState:
    """Single-step entry point: advances a copy of state by one dt."""
    solver = _FrontFixedSolver(params, config, coupled)
    solver.state = SimulationState(t=state.t, h=state.h, dhdt=state.dhdt,
                                   u=state.u.copy(), v=state.v.copy(),
                                   step_index=state.step_index)
    solver.step()
    return solver.state


def simulate(params: ModelParams, config: SolverConfig, *,
             coupled: bool = True, stop_rule=None) -> Trajectory:
    """Run until t_end, domain exhaustion, or an early verdict.

    stop_rule, if given, is called at every period boundary with the list of
    PeriodMark records; returning a string terminates the run with that
    reason.
    """
    solver = _FrontFixedSolver(params, config, coupled)
    st = solver.state
    total_steps = int(round(config.t_end / config.dt))
    rec_t = [st.t]
    rec_h = [st.h]
    rec_dhdt = [st.dhdt]
    rec_umax = [float(st.u.max())]
    rec_vmax = [float(st.v.max())]
    snapshots = [Snapshot(t=st.t, h=st.h, u=st.u.copy(), v=st.v.copy())]
    marks: list[PeriodMark] = []
    termination = "t_end"
    spp = solver.steps_per_period
    snap_stride = spp * config.snapshot_every

    for k in range(1, total_steps + 1):
        try:
            solver.step()
        except DomainExhausted:
            termination = "domain_exhausted"
            break
        st = solver.state
        rec_t.append(st.t)
        rec_h.append(st.h)
        rec_dhdt.append(st.dhdt)
        rec_umax.append(float(st.u.max()))
        rec_vmax.append(float(st.v.max()))
        if k % snap_stride == 0:
            snapshots.append(Snapshot(t=st.t, h=st.h, u=st.u.copy(),
                                      v=st.v.copy()))
        if k % spp == 0:
            marks.append(PeriodMark(period=k // spp, t=st.t, h=st.h,
                                    dhdt=st.dhdt, sup_u=float(st.u.max()),
                                    sup_v=float(st.v.max())))
            if stop_rule is not None:
                reason = stop_rule(marks)
                if reason:
                    termination = reason
                    break

    if snapshots[-1].t < st.t:
        snapshots.append(Snapshot(t=st.t, h=st.h, u=st.u.copy(),
                                  v=st.v.copy()))
    echo = dict(ns=config.ns, nr=config.nr, dt=config.dt, r_out=config.r_out,
                t_end=config.t_end, snapshot_every=config.snapshot_every,
                coupled=coupled, mu=params.mu, h0=params.init.h0,
                d1=params.d1, d2=params.d2, N=params.N, T=params.T)
    return Trajectory(t=np.array(rec_t), h=np.array(rec_h),
                      dhdt=np.array(rec_dhdt), u_max=np.array(rec_umax),
                      v_max=np.array(rec_vmax), s_grid=solver.s,
                      r_grid=solver.r, snapshots=tuple(snapshots),
                      period_marks=tuple(marks), termination=termination,
                      coupled=coupled, config_echo=echo)


def scalar_free_boundary(params: ModelParams, config: SolverConfig,
                         **kw) -> Trajectory:
    """Single-species run: the v equation is skipped and u feels no v."""
    return simulate(params, config, coupled=False, **kw)


@dataclass(frozen=True)
class BoundsReport:
    ok: bool
    bounds: AprioriBounds
    max_u: float
    max_v: float
    max_dhdt: float
    min_dhdt: float
    h_strictly_increasing: bool


def verify_bounds(traj: Trajectory, params: ModelParams) -> BoundsReport:
    """Assert the a priori bounds at every recorded time.

    0 <= u <= C1(1+eps), 0 <= v <= C2(1+eps), 0 < h' <= C3(1+eps) with
    eps = 1e-6 discretization slack; h must be strictly increasing.
    Raises BoundViolation with the first offending record.
    """
    r_max = max(traj.config_echo["r_out"], 10.0 * params.init.h0)
    bounds = AprioriBounds.from_params(params, r_max)
    slack = 1.0 + BOUND_SLACK

    def first_bad(mask, what):
        idx = int(np.argmax(mask))
        raise BoundViolation(
            f"{what} at t = {traj.t[idx]:.6g} (record {idx})")

    bad = traj.u_max > bounds.C1 * slack
    if bad.any():
        first_bad(bad, f"u exceeded C1 = {bounds.C1:.6g}")
    if traj.coupled:
        bad = traj.v_max > bounds.C2 * slack
        if bad.any():
            first_bad(bad, f"v exceeded C2 = {bounds.C2:.6g}")
    bad = traj.dhdt <= 0.0
    if bad.any():
        first_bad(bad, "front speed was not positive")
    bad = traj.dhdt > bounds.C3 * slack
    if bad.any():
        first_bad(bad, f"front speed exceeded C3 = {bounds.C3:.6g}")
    # Strict increase up to representability: a tie is admissible only when
    # the true increment dhdt*dt is below one ulp of h.
    dh = np.diff(traj.h)
    dt_rec = np.diff(traj.t)
    ulp = np.spacing(traj.h[:-1])
    bad_h = (dh < 0.0) | ((dh == 0.0) & (traj.dhdt[1:] * dt_rec > ulp))
    increasing = not bool(bad_h.any())
    if not increasing:
        idx = int(np.argmax(bad_h))
        raise BoundViolation(f"h not strictly increasing at record {idx}")
    return BoundsReport(ok=True, bounds=bounds,
                        max_u=float(traj.u_max.max()),
                        max_v=float(traj.v_max.max()),
                        max_dhdt=float(traj.dhdt.max()),
                        min_dhdt=float(traj.dhdt.min()),
                        h_strictly_increasing=increasing)


@dataclass(frozen=True)
class OrderingReport:
    ok: bool
    mode: str
    n_shared: int
    worst_front_margin: float
    worst_u_margin: float | None = None
    worst_v_margin: float | None = None


def _common_snapshots(a: Trajectory, b: Trajectory):
    tb = {round(s.t, 9): s for s in b.snapshots}
    for sa in a.snapshots:
        sb = tb.get(round(sa.t, 9))
        if sb is not None:
            yield sa, sb


def compare_runs(traj_low: Trajectory, traj_high: Trajectory,
                 mode: str = "front_only") -> OrderingReport:
    """Check comparison-principle orderings between two runs.

    front_only: h_low(t) <= h_high(t) + 2 h dS at all shared times.
    full: additionally u_low <= u_high and v_high <= v_low on shared grids
    (the run that dominates in u is dominated in v), with gradient-scaled
    interpolation slack. Raises OrderingViolation with a witness.
    """
    if mode not in ("front_only", "full"):
        raise ValueError(f"unknown comparison mode: {mode!r}")
    ea, eb = traj_low.config_echo, traj_high.config_echo
    for key in ("ns", "nr", "dt", "r_out", "T"):
        if ea[key] != eb[key]:
            raise ValueError(f"runs do not share grid config ({key} differs)")
    n = min(traj_low.t.size, traj_high.t.size)
    if not np.allclose(traj_low.t[:n], traj_high.t[:n], rtol=0, atol=1e-9):
        raise ValueError("runs do not share their time grids")
    ds = 1.0 / ea["ns"]
    tol_front = 2.0 * traj_high.h[:n] * ds
    gap = traj_low.h[:n] - traj_high.h[:n] - tol_front
    worst_front = float(gap.max())
    if worst_front > 0:
        idx = int(np.argmax(gap))
        raise OrderingViolation(
            f"front ordering violated at t = {traj_low.t[idx]:.6g}: "
            f"h_low = {traj_low.h[idx]:.6g} > h_high = {traj_high.h[idx]:.6g} "
            f"+ tol = {tol_front[idx]:.3g}")
    if mode == "front_only":
        return OrderingReport(ok=True, mode=mode, n_shared=n,
                              worst_front_margin=worst_front)

    r = traj_high.r_grid
    worst_u = -np.inf
    worst_v = -np.inf
    shared = 0
    for sa, sb in _common_snapshots(traj_low, traj_high):
        if sa.t > traj_low.t[n - 1] + 1e-9:
            break
        shared += 1
        ua = np.interp(r, traj_low.s_grid * sa.h, sa.u, right=0.0)
        ub = np.interp(r, traj_high.s_grid * sb.h, sb.u, right=0.0)
        grad_u = float(np.abs(np.diff(sb.u)).max()) / (ds * sb.h)
        tol_u = 2.0 * ds * sb.h * max(grad_u, 1e-12)
        margin = float((ua - ub - tol_u).max())
        worst_u = max(worst_u, margin)
        if margin > 0:
            idx = int(np.argmax(ua - ub))
            raise OrderingViolation(
                f"u ordering violated at t = {sa.t:.6g}, r = {r[idx]:.6g}")
        if traj_low.coupled and traj_high.coupled:
            dr = r[1] - r[0]
            grad_v = float(np.abs(np.diff(sa.v)).max()) / dr
            tol_v = 2.0 * dr * max(grad_v, 1e-12)
            margin_v = float((sb.v - sa.v - tol_v).max())
            worst_v = max(worst_v, margin_v)
            if margin_v > 0:
                idx = int(np.argmax(sb.v - sa.v))
                raise OrderingViolation(
                    f"v ordering violated at t = {sa.t:.6g}, r = {r[idx]:.6g}")
    if shared == 0:
        raise ValueError("runs share no snapshot times for a full comparison")
    return OrderingReport(ok=True, mode=mode, n_shared=n,
                          worst_front_margin=worst_front,
                          worst_u_margin=worst_u,
                          worst_v_margin=worst_v if worst_v > -np.inf else None)
