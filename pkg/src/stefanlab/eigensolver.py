"""Principal eigenvalue of the T-periodic parabolic Dirichlet problem.

For phi_t - d*Lap(phi) = m(t,r) phi + lambda phi on the ball B_R with
phi(T) = phi(0), the principal eigenvalue is recovered from the Floquet
multiplier rho of the one-period solution map of phi_t - d*Lap(phi) = m phi:
lambda1 = -ln(rho)/T.

The multiplier comes from power iteration on positive initial data with
per-step sup-norm renormalization (log-accumulated, so extreme decay never
underflows). The stepper is the L-stable TR-BDF2 scheme: its amplification
on the diffusive axis decays monotonically through ~0.207 to zero, so
grid-scale modes can never out-survive the principal mode (Crank-Nicolson,
whose high-frequency gain tends to 1, misreports the period-map spectral
radius whenever lambda1*T is large). Consequence: per-step decay is capped
at |ln 0.207| ~ 1.57, i.e. lambda1*T must stay below ~1.57*steps_per_period;
raise steps_per_period for extremely subcritical problems.

Clustered Floquet spectra (small d or large R) make plain power iteration
converge at rate exp(-d*(nu2-nu1)*T); the multiplier read-out is therefore
Aitken-extrapolated, and the stop rule applies to the accelerated estimate.
When even that cannot settle within the period budget (the spectrum clusters
algebraically as d -> 0), the same one-period map is handed to a
deterministic Arnoldi solve with the current iterate as start vector, which
extracts the identical spectral radius in a few dozen map applications.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, LinearOperator, eigs

from .errors import NonConvergence, NoSignChange
from .model import CoefficientField
from .radial import (TRBDF2_A1 as _A1, TRBDF2_A2 as _A2, TRBDF2_BETA as _BETA,
                     TRBDF2_GAMMA as _GAMMA, cn_banded, radial_laplacian,
                     solve_tridiag)

UNBOUNDED = math.inf
DEFAULT_GRID = 256
DEFAULT_STEPS = 256
MULTIPLIER_TOL = 1e-8
MAX_PERIODS = 500
BISECT_RTOL = 1e-4


@dataclass(frozen=True)
class EigenProblem:
    d: float
    m: CoefficientField
    R: float
    T: float
    N: int
    grid: int = DEFAULT_GRID

    def __post_init__(self):
        if self.d <= 0 or self.R <= 0 or self.T <= 0:
            raise ValueError("d, R, T must be positive")
        if self.grid < 32:
            raise ValueError("grid must have at least 32 intervals")
        if self.N < 1:
            raise ValueError("dimension N must be >= 1")


@dataclass(frozen=True)
class EigenResult:
    lambda1: float
    multiplier: float
    phi0: np.ndarray
    radii: np.ndarray
    iterations: int
    rel_change: float


def _aitken(l0: float, l1: float, l2: float) -> float:
    denom = l2 - 2.0 * l1 + l0
    if abs(denom) < 1e-13 * max(abs(l2), 1.0):
        return l2
    accel = l2 - (l2 - l1) ** 2 / denom
    # Reject wild extrapolations far outside the observed trend.
    if abs(accel - l2) > 10.0 * abs(l2 - l1) + 1e-12:
        return l2
    return accel


def principal_eigenvalue(prob: EigenProblem,
                         steps_per_period: int = DEFAULT_STEPS,
                         tol: float = MULTIPLIER_TOL,
                         max_periods: int = MAX_PERIODS,
                         phi_init: np.ndarray | None = None,
                         krylov_fallback: bool = True) -> EigenResult:
    """Floquet multiplier by renormalized power iteration; deterministic."""
    n = prob.grid
    r = np.linspace(0.0, prob.R, n + 1)
    lap = radial_laplacian(r, prob.N, "dirichlet")
    dt = prob.T / steps_per_period
    rr = r[:-1]
    m_base = np.empty((steps_per_period + 1, n))
    m_mid = np.empty((steps_per_period, n))
    for k in range(steps_per_period + 1):
        m_base[k] = prob.m(k * dt, rr)
    for k in range(steps_per_period):
        m_mid[k] = prob.m((k + _GAMMA) * dt, rr)
    c_tr = 0.5 * _GAMMA * dt * prob.d
    c_bdf = _BETA * dt * prob.d
    mats_tr = np.empty((steps_per_period, 3, n))
    mats_bdf = np.empty((steps_per_period, 3, n))
    for k in range(steps_per_period):
        mats_tr[k] = cn_banded(lap, c_tr,
                               extra_diag=0.5 * _GAMMA * dt * m_mid[k])
        mats_bdf[k] = cn_banded(lap, c_bdf,
                                extra_diag=_BETA * dt * m_base[k + 1])

    def sweep(phi: np.ndarray) -> tuple[np.ndarray, float]:
        log_mult = 0.0
        for k in range(steps_per_period):
            rhs = (phi + c_tr * lap.matvec(phi)
                   + 0.5 * _GAMMA * dt * m_base[k] * phi)
            star = solve_tridiag(mats_tr[k], rhs)
            phi = solve_tridiag(mats_bdf[k], _A1 * star - _A2 * phi)
            s = float(np.abs(phi).max())
            if not np.isfinite(s) or s == 0.0:
                raise NonConvergence("period map produced a degenerate iterate")
            phi = phi / s
            log_mult += math.log(s)
        return phi, log_mult

    if phi_init is None:
        phi = 1.0 - (rr / prob.R) ** 2
    else:
        phi = np.array(phi_init, dtype=float)
        if phi.size != n:
            raise ValueError("phi_init must match the interior grid size")

    log_hist: list[float] = []
    accel_prev = None
    accel = math.nan
    rel_change = math.inf
    converged = False
    pace_mark: tuple[int, float] | None = None
    hopeless = False
    for period in range(1, max_periods + 1):
        phi, log_mult = sweep(phi)
        log_hist.append(log_mult)
        if len(log_hist) >= 3:
            accel = _aitken(*log_hist[-3:])
            if accel_prev is not None:
                rel_change = abs(accel - accel_prev)
                if rel_change < tol:
                    converged = True
                    break
            accel_prev = accel
        # Every 30 periods, project the remaining effort from the observed
        # contraction; bail out early when the budget cannot suffice.
        if krylov_fallback and period % 30 == 0 and np.isfinite(rel_change):
            if pace_mark is not None and rel_change > tol:
                span = period - pace_mark[0]
                ratio = rel_change / max(pace_mark[1], 1e-300)
                if ratio >= 1.0:
                    hopeless = True
                else:
                    needed = span * math.log(tol / rel_change) / math.log(ratio)
                    hopeless = needed > (max_periods - period)
                if hopeless:
                    break
            pace_mark = (period, rel_change)

    if converged:
        log_final = accel
        iterations = period
    elif krylov_fallback:
        log_final, phi = _krylov_multiplier(sweep, phi, log_hist[-1], n)
        iterations = period
        rel_change = 0.0
    else:
        raise NonConvergence(
            f"eigen power iteration did not settle in {max_periods} periods")

    lambda1 = -log_final / prob.T
    phi_full = np.concatenate([np.abs(phi) / np.abs(phi).max(), [0.0]])
    with np.errstate(over="ignore", under="ignore"):
        multiplier = float(np.exp(log_final))
    return EigenResult(lambda1=float(lambda1), multiplier=multiplier,
                       phi0=phi_full, radii=r, iterations=iterations,
                       rel_change=float(rel_change))


def _krylov_multiplier(sweep, phi: np.ndarray, log_shift: float,
                       n: int) -> tuple[float, np.ndarray]:
    """Dominant multiplier of the period map via Arnoldi on the shifted map.

    Used when the Floquet spectrum is too clustered for power iteration.
    The start vector is the current power iterate, so the result is
    deterministic and the map applications stay well scaled.
    """

    def matvec(x):
        y, log_mult = sweep(np.real(x).astype(float))
        return y * math.exp(log_mult - log_shift)

    op = LinearOperator((n, n), matvec=matvec, dtype=float)
    try:
        vals, vecs = eigs(op, k=1, which="LM", v0=phi, maxiter=300, tol=1e-10)
    except (ArpackError, ArpackNoConvergence) as exc:
        raise NonConvergence(
            f"Arnoldi fallback on the period map failed: {exc}") from exc
    rho = float(np.real(vals[0]))
    if rho <= 0:
        raise NonConvergence("period map returned a nonpositive multiplier")
    vec = np.abs(np.real(vecs[:, 0]))
    return math.log(rho) + log_shift, vec


def _lam(d, m, R, T, N, grid, steps_per_period) -> float:
    prob = EigenProblem(d=d, m=m, R=R, T=T, N=N, grid=grid)
    return principal_eigenvalue(prob, steps_per_period=steps_per_period).lambda1


def threshold_radius(d: float, m: CoefficientField, T: float, N: int,
                     search_max: float = 10.0, grid: int = DEFAULT_GRID,
                     steps_per_period: int = DEFAULT_STEPS,
                     rel_tol: float = BISECT_RTOL) -> float:
    """Radius where lambda1 changes sign; UNBOUNDED if positive up to search_max.

    Exploits strict decrease of lambda1 in R: bracket by halving, then bisect
    to relative width rel_tol.
    """
    if search_max <= 0:
        raise ValueError("search_max must be positive")
    if _lam(d, m, search_max, T, N, grid, steps_per_period) > 0:
        return UNBOUNDED
    hi = search_max
    lo = search_max
    for _ in range(60):
        lo /= 2.0
        val = _lam(d, m, lo, T, N, grid, steps_per_period)
        if val > 0:
            break
        hi = lo
    else:
        raise NonConvergence("could not bracket the critical radius from below")
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if _lam(d, m, mid, T, N, grid, steps_per_period) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class FastDiffusionResult:
    d_star: float
    lambda_at_threshold: float
    tested_d: tuple[float, ...]
    tested_lambda: tuple[float, ...]


def threshold_diffusion_fast(m: CoefficientField, R: float, T: float, N: int,
                             search_max: float = 10.0,
                             d_min: float | None = None,
                             points_per_decade: int = 16,
                             grid: int = DEFAULT_GRID,
                             steps_per_period: int = DEFAULT_STEPS,
                             rel_tol: float = BISECT_RTOL) -> FastDiffusionResult:
    """Diffusivity beyond which lambda1 > 0 for every tested d up to search_max.

    A log grid locates the last nonpositive sample; the sign change next to it
    is refined by bisection and reported with the certificate lambda1 ~ 0.
    Raises NoSignChange when lambda1 > 0 already at the smallest tested d.
    """
    if d_min is None:
        d_min = 1e-4 * search_max
    n_pts = max(int(math.ceil(points_per_decade
                              * math.log10(search_max / d_min))) + 1, 2)
    ds = np.geomspace(d_min, search_max, n_pts)
    lams = np.array([_lam(d, m, R, T, N, grid, steps_per_period) for d in ds])
    nonpos = np.nonzero(lams <= 0)[0]
    if nonpos.size == 0:
        raise NoSignChange(
            f"lambda1 > 0 already at the smallest tested d = {d_min:.3g}")
    i = int(nonpos[-1])
    if i == len(ds) - 1:
        raise ValueError("lambda1 still nonpositive at search_max; "
                         "increase the search range")
    lo, hi = float(ds[i]), float(ds[i + 1])
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if _lam(mid, m, R, T, N, grid, steps_per_period) <= 0:
            lo = mid
        else:
            hi = mid
    d_star = 0.5 * (lo + hi)
    lam_at = _lam(d_star, m, R, T, N, grid, steps_per_period)
    return FastDiffusionResult(d_star=float(d_star),
                               lambda_at_threshold=float(lam_at),
                               tested_d=tuple(float(x) for x in ds),
                               tested_lambda=tuple(float(x) for x in lams))


@dataclass(frozen=True)
class SlowDiffusionResult:
    applicable: bool
    d_star: float | None
    max_mean_growth: float
    tested_d: tuple[float, ...]
    tested_lambda: tuple[float, ...]


def threshold_diffusion_slow(m: CoefficientField, R: float, T: float, N: int,
                             d_floor: float = 1e-4, d_cap: float = 100.0,
                             points_per_decade: int = 16,
                             grid: int = DEFAULT_GRID,
                             steps_per_period: int = DEFAULT_STEPS
                             ) -> SlowDiffusionResult:
    """Certified slow-diffusion threshold by exhaustive log-grid sampling.

    Applicable only when the mean growth has a positive maximum over the ball;
    the returned d_star carries the certificate that every tested d below it
    gave a nonpositive eigenvalue. Sampling is never replaced by bisection
    because lambda1 is not monotone in d.
    """
    rs = np.linspace(0.0, R, grid + 1)
    ts = np.linspace(0.0, T, 257)
    vals = m(ts[:, None], rs[None, :])
    mean_by_r = simpson(vals, x=ts, axis=0) / T
    max_mean = float(mean_by_r.max())
    if max_mean <= 1e-12 * max(1.0, float(np.abs(vals).max())):
        return SlowDiffusionResult(applicable=False, d_star=None,
                                   max_mean_growth=max_mean,
                                   tested_d=(), tested_lambda=())
    n_pts = max(int(math.ceil(points_per_decade
                              * math.log10(d_cap / d_floor))) + 1, 2)
    ds = np.geomspace(d_floor, d_cap, n_pts)
    tested_d: list[float] = []
    tested_lambda: list[float] = []
    d_star = None
    for d in ds:
        lam = _lam(float(d), m, R, T, N, grid, steps_per_period)
        tested_d.append(float(d))
        tested_lambda.append(float(lam))
        if lam > 0:
            break
        d_star = float(d)
    return SlowDiffusionResult(applicable=True, d_star=d_star,
                               max_mean_growth=max_mean,
                               tested_d=tuple(tested_d),
                               tested_lambda=tuple(tested_lambda))
