"""Problem definitions: periodic coefficients, initial data, hypothesis checks.

Everything here is immutable after construction and safe to share across
workers. Coefficients are restricted to three parametric families plus
tabulated grids so that a config file reproduces a run bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import NonStabilized

# Sampling densities used by the hypothesis checkers (config-visible).
TIME_SAMPLES = 64
SPACE_SAMPLES = 256
PERIODICITY_RTOL = 1e-12


def _as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class PeriodicScalarFunction:
    """Scalar T-periodic function of time.

    Rules: a constant, a sinusoid ``mean + amplitude*sin(2*pi*t/T + phase)``,
    or tabulated samples on a uniform time grid with periodic linear
    interpolation (at least 4 samples per period).
    """

    period: float
    kind: str
    value: float = 0.0
    mean: float = 0.0
    amplitude: float = 0.0
    phase: float = 0.0
    samples: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")
        if self.kind not in ("constant", "sinusoid", "tabulated"):
            raise ValueError(f"unknown time rule kind: {self.kind!r}")
        if self.kind == "tabulated":
            if self.samples is None or len(self.samples) < 4:
                raise ValueError("tabulated rule needs >= 4 samples per period")

    @classmethod
    def constant(cls, value: float, period: float = 1.0) -> PeriodicScalarFunction:
        return cls(period=period, kind="constant", value=float(value))

    @classmethod
    def sinusoid(cls, mean: float, amplitude: float, period: float = 1.0,
                 phase: float = 0.0) -> PeriodicScalarFunction:
        return cls(period=period, kind="sinusoid", mean=float(mean),
                   amplitude=float(amplitude), phase=float(phase))

    @classmethod
    def tabulated(cls, samples, period: float = 1.0) -> PeriodicScalarFunction:
        samples = tuple(float(s) for s in np.asarray(samples, dtype=float))
        return cls(period=period, kind="tabulated", samples=samples)

    def __call__(self, t):
        t = _as_array(t)
        tau = np.mod(t, self.period)
        if self.kind == "constant":
            out = np.full_like(tau, self.value)
        elif self.kind == "sinusoid":
            out = self.mean + self.amplitude * np.sin(
                2.0 * np.pi * tau / self.period + self.phase)
        else:
            ys = np.asarray(self.samples, dtype=float)
            n = ys.size
            pos = tau * n / self.period
            j = np.minimum(pos.astype(int), n - 1)
            w = pos - j
            out = (1.0 - w) * ys[j] + w * ys[(j + 1) % n]
        return float(out) if out.ndim == 0 else out

    def min(self) -> float:
        if self.kind == "constant":
            return self.value
        if self.kind == "sinusoid":
            return self.mean - abs(self.amplitude)
        return float(np.min(self.samples))

    def max(self) -> float:
        if self.kind == "constant":
            return self.value
        if self.kind == "sinusoid":
            return self.mean + abs(self.amplitude)
        return float(np.max(self.samples))

    def table(self, n: int = 256) -> np.ndarray:
        """Samples at n uniform nodes over [0, T) (no wrap node)."""
        return self(np.arange(n) * (self.period / n))


def combine_rules(op, *rules: PeriodicScalarFunction,
                  n: int = 512) -> PeriodicScalarFunction:
    """Pointwise combination of time rules, exact for constants."""
    period = rules[0].period
    if any(abs(r.period - period) > 1e-14 * period for r in rules[1:]):
        raise ValueError("cannot combine rules with different periods")
    if all(r.kind == "constant" for r in rules):
        return PeriodicScalarFunction.constant(
            float(op(*(r.value for r in rules))), period)
    t = np.arange(n) * (period / n)
    return PeriodicScalarFunction.tabulated(op(*(r(t) for r in rules)), period)


def _coerce_rule(x, period: float) -> PeriodicScalarFunction:
    if isinstance(x, PeriodicScalarFunction):
        return x
    return PeriodicScalarFunction.constant(float(x), period)


@dataclass(frozen=True)
class CoefficientField:
    """T-periodic-in-time, radial-in-space scalar coefficient.

    Spatial profiles: constant in space, a radial gaussian dip
    ``base(t) - dip_amplitude(t)*exp(-((r-center)/width)^2)``, or a tabulated
    (t, r) grid with bilinear interpolation (periodic in t, constant
    extension beyond the last radius).

    ``declared_lower``/``declared_upper`` are uniform-in-space envelopes;
    ``asymptotic_liminf``/``asymptotic_limsup`` bracket the field for large r.
    """

    period: float
    kind: str
    base: PeriodicScalarFunction | None = None
    dip_amplitude: PeriodicScalarFunction | None = None
    dip_center: float = 0.0
    dip_width: float = 1.0
    times: np.ndarray | None = field(default=None, repr=False)
    radii: np.ndarray | None = field(default=None, repr=False)
    values: np.ndarray | None = field(default=None, repr=False)
    declared_lower: PeriodicScalarFunction | None = None
    declared_upper: PeriodicScalarFunction | None = None
    asymptotic_liminf: PeriodicScalarFunction | None = None
    asymptotic_limsup: PeriodicScalarFunction | None = None

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")
        if self.kind not in ("space_constant", "gaussian_dip", "tabulated"):
            raise ValueError(f"unknown field kind: {self.kind!r}")
        if self.kind == "gaussian_dip" and self.dip_width <= 0:
            raise ValueError("dip width must be positive")
        if self.kind == "tabulated":
            v = self.values
            if v is None or self.times is None or self.radii is None:
                raise ValueError("tabulated field needs times, radii, values")
            if v.shape != (len(self.times), len(self.radii)):
                raise ValueError("values shape must be (len(times), len(radii))")

    @classmethod
    def constant(cls, value: float, period: float = 1.0,
                 **kw) -> CoefficientField:
        rule = PeriodicScalarFunction.constant(value, period)
        kw.setdefault("declared_lower", rule)
        kw.setdefault("declared_upper", rule)
        kw.setdefault("asymptotic_liminf", rule)
        kw.setdefault("asymptotic_limsup", rule)
        return cls(period=period, kind="space_constant", base=rule, **kw)

    @classmethod
    def space_constant(cls, rule: PeriodicScalarFunction,
                       **kw) -> CoefficientField:
        lo = PeriodicScalarFunction.constant(rule.min(), rule.period)
        hi = PeriodicScalarFunction.constant(rule.max(), rule.period)
        kw.setdefault("declared_lower", lo)
        kw.setdefault("declared_upper", hi)
        kw.setdefault("asymptotic_liminf", rule)
        kw.setdefault("asymptotic_limsup", rule)
        return cls(period=rule.period, kind="space_constant", base=rule, **kw)

    @classmethod
    def gaussian_dip(cls, base, amplitude, center: float, width: float,
                     period: float = 1.0, **kw) -> CoefficientField:
        base = _coerce_rule(base, period)
        amplitude = _coerce_rule(amplitude, period)
        lower = combine_rules(lambda b, a: b - np.maximum(a, 0.0), base, amplitude)
        upper = combine_rules(lambda b, a: b + np.maximum(-a, 0.0), base, amplitude)
        kw.setdefault("declared_lower",
                      PeriodicScalarFunction.constant(lower.min(), period))
        kw.setdefault("declared_upper",
                      PeriodicScalarFunction.constant(upper.max(), period))
        kw.setdefault("asymptotic_liminf", base)
        kw.setdefault("asymptotic_limsup", base)
        return cls(period=period, kind="gaussian_dip", base=base,
                   dip_amplitude=amplitude, dip_center=float(center),
                   dip_width=float(width), **kw)

    @classmethod
    def tabulated(cls, times, radii, values, period: float = 1.0,
                  **kw) -> CoefficientField:
        values = np.array(values, dtype=float)
        times = np.array(times, dtype=float)
        radii = np.array(radii, dtype=float)
        tail = values[:, -1]
        kw.setdefault("asymptotic_liminf",
                      PeriodicScalarFunction.constant(float(tail.min()), period))
        kw.setdefault("asymptotic_limsup",
                      PeriodicScalarFunction.constant(float(tail.max()), period))
        return cls(period=period, kind="tabulated", times=times, radii=radii,
                   values=values, **kw)

    def __call__(self, t, r):
        t, r = np.broadcast_arrays(_as_array(t), _as_array(r))
        if self.kind == "space_constant":
            out = np.broadcast_to(self.base(t), r.shape).astype(float, copy=True)
        elif self.kind == "gaussian_dip":
            bump = np.exp(-(((r - self.dip_center) / self.dip_width) ** 2))
            out = self.base(t) - self.dip_amplitude(t) * bump
        else:
            out = self._bilinear(t, r)
        return float(out) if out.ndim == 0 else out

    def _bilinear(self, t: np.ndarray, r: np.ndarray) -> np.ndarray:
        times, radii, vals = self.times, self.radii, self.values
        nt = len(times)
        tau = np.mod(t, self.period)
        edges = np.append(times, times[0] + self.period)
        k = np.clip(np.searchsorted(edges, tau, side="right") - 1, 0, nt - 1)
        wt = (tau - edges[k]) / (edges[k + 1] - edges[k])
        j = np.clip(np.searchsorted(radii, r, side="right") - 1, 0, len(radii) - 2)
        dr = radii[j + 1] - radii[j]
        wr = np.clip((r - radii[j]) / dr, 0.0, 1.0)
        k1 = (k + 1) % nt
        lo = (1.0 - wr) * vals[k, j] + wr * vals[k, j + 1]
        hi = (1.0 - wr) * vals[k1, j] + wr * vals[k1, j + 1]
        return (1.0 - wt) * lo + wt * hi

    def grid_range(self, r_max: float, nt: int = TIME_SAMPLES,
                   nr: int = SPACE_SAMPLES) -> tuple[float, float]:
        """(min, max) over a dense sample grid [0,T) x [0,r_max]."""
        ts = np.arange(nt) * (self.period / nt)
        rs = np.linspace(0.0, r_max, nr)
        vals = self(ts[:, None], rs[None, :])
        return float(vals.min()), float(vals.max())


@dataclass(frozen=True)
class InitialData:
    """Initial densities: u0 on [0, h0] (compactly supported), v0 on [0, inf).

    u0 is either a cosine bump ``amplitude*cos(pi*r/(2*h0))`` or explicit
    radial samples; v0 is a constant or explicit samples (constant beyond the
    last sample radius).
    """

    h0: float
    u0_kind: str = "cosine_bump"
    u0_amplitude: float = 1.0
    u0_radii: np.ndarray | None = field(default=None, repr=False)
    u0_values: np.ndarray | None = field(default=None, repr=False)
    v0_kind: str = "constant"
    v0_value: float = 1.0
    v0_radii: np.ndarray | None = field(default=None, repr=False)
    v0_values: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.h0 <= 0:
            raise ValueError("h0 must be positive")
        if self.u0_kind not in ("cosine_bump", "samples"):
            raise ValueError(f"unknown u0 kind: {self.u0_kind!r}")
        if self.v0_kind not in ("constant", "samples"):
            raise ValueError(f"unknown v0 kind: {self.v0_kind!r}")
        if self.u0_kind == "cosine_bump" and self.u0_amplitude <= 0:
            raise ValueError("u0 amplitude must be positive")
        if self.u0_kind == "samples" and (
                self.u0_radii is None or self.u0_values is None):
            raise ValueError("u0 samples need radii and values")
        if self.v0_kind == "samples" and (
                self.v0_radii is None or self.v0_values is None):
            raise ValueError("v0 samples need radii and values")

    def eval_u0(self, r) -> np.ndarray:
        r = _as_array(r)
        if self.u0_kind == "cosine_bump":
            out = self.u0_amplitude * np.cos(np.pi * r / (2.0 * self.h0))
            return np.where(r < self.h0, np.maximum(out, 0.0), 0.0)
        out = np.interp(r, self.u0_radii, self.u0_values, right=0.0)
        return np.where(r < self.h0, out, 0.0)

    def eval_v0(self, r) -> np.ndarray:
        r = _as_array(r)
        if self.v0_kind == "constant":
            return np.full_like(r, self.v0_value)
        return np.interp(r, self.v0_radii, self.v0_values)

    def scaled_u0(self, factor: float) -> InitialData:
        """Same shape theta with u0 replaced by factor*theta (the eps dial)."""
        if self.u0_kind == "cosine_bump":
            return InitialData(
                h0=self.h0, u0_kind="cosine_bump",
                u0_amplitude=self.u0_amplitude * factor,
                v0_kind=self.v0_kind, v0_value=self.v0_value,
                v0_radii=self.v0_radii, v0_values=self.v0_values)
        return InitialData(
            h0=self.h0, u0_kind="samples", u0_radii=self.u0_radii,
            u0_values=self.u0_values * factor,
            v0_kind=self.v0_kind, v0_value=self.v0_value,
            v0_radii=self.v0_radii, v0_values=self.v0_values)

    def sup_u0(self) -> float:
        return float(self.eval_u0(np.linspace(0.0, self.h0, 2049)).max())

    def sup_v0(self, r_max: float = 100.0) -> float:
        return float(self.eval_v0(np.linspace(0.0, r_max, 2049)).max())

    def c1_norm_u0(self) -> float:
        """sup|u0| + sup|u0'| estimated on a dense grid."""
        r = np.linspace(0.0, self.h0, 4097)
        u = self.eval_u0(r)
        du = np.gradient(u, r)
        return float(np.abs(u).max() + np.abs(du).max())

    def validate(self, derivative_tol: float = 1e-3) -> None:
        r = np.linspace(0.0, self.h0, 2049)
        u = self.eval_u0(r)
        if np.any(u < 0):
            raise ValueError("u0 must be nonnegative")
        scale = u.max()
        if scale <= 0:
            raise ValueError("u0 must not be identically zero")
        if abs(u[-1]) > 1e-12 * scale:
            raise ValueError("u0(h0) must vanish")
        if np.any(u[:-1] <= 0):
            raise ValueError("u0 must be positive on [0, h0)")
        d = r[1] - r[0]
        slope0 = (4.0 * u[1] - 3.0 * u[0] - u[2]) / (2.0 * d)
        if abs(slope0) > derivative_tol * scale / self.h0:
            raise ValueError("u0'(0) must vanish (symmetry at the origin)")
        rv = np.linspace(0.0, max(10.0 * self.h0, 20.0), 2049)
        v = self.eval_v0(rv)
        if np.any(v < 0):
            raise ValueError("v0 must be nonnegative")
        if not np.isfinite(v).all():
            raise ValueError("v0 must be bounded")
        if v.max() <= 0:
            raise ValueError("v0 must not be identically zero")
        dv = rv[1] - rv[0]
        vslope0 = (4.0 * v[1] - 3.0 * v[0] - v[2]) / (2.0 * dv)
        if abs(vslope0) > derivative_tol * max(v.max(), 1.0):
            raise ValueError("v0'(0) must vanish (symmetry at the origin)")


@dataclass(frozen=True)
class ModelParams:
    """A full problem instance for the coupled free-boundary system."""

    d1: float
    d2: float
    mu: float
    N: int
    T: float
    m1: CoefficientField
    m2: CoefficientField
    b1: CoefficientField
    b2: CoefficientField
    c1: CoefficientField
    c2: CoefficientField
    init: InitialData

    def __post_init__(self):
        for name in ("d1", "d2", "mu", "T"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if int(self.N) < 1 or self.N != int(self.N):
            raise ValueError("dimension N must be an integer >= 1")
        for name in ("m1", "m2", "b1", "b2", "c1", "c2"):
            f = getattr(self, name)
            if abs(f.period - self.T) > 1e-14 * self.T:
                raise ValueError(f"{name} period differs from T")
        r_max = max(20.0, 10.0 * self.init.h0)
        for name in ("b1", "b2"):
            lo, _ = getattr(self, name).grid_range(r_max)
            if lo <= 0:
                raise ValueError(f"{name} must be strictly positive")
        # Positivity of the c_i is a hypothesis, not a structural
        # requirement: check_H1 reports violations with a witness, and
        # c_i = 0 makes the decoupled scalar problem a family member.
        self.init.validate()

    def coefficient(self, name: str) -> CoefficientField:
        return getattr(self, name)

    def with_init(self, init: InitialData) -> ModelParams:
        return ModelParams(d1=self.d1, d2=self.d2, mu=self.mu, N=self.N,
                           T=self.T, m1=self.m1, m2=self.m2, b1=self.b1,
                           b2=self.b2, c1=self.c1, c2=self.c2, init=init)

    def with_mu(self, mu: float) -> ModelParams:
        return ModelParams(d1=self.d1, d2=self.d2, mu=float(mu), N=self.N,
                           T=self.T, m1=self.m1, m2=self.m2, b1=self.b1,
                           b2=self.b2, c1=self.c1, c2=self.c2, init=self.init)

    def with_coefficient(self, name: str, fld: CoefficientField) -> ModelParams:
        kw = dict(d1=self.d1, d2=self.d2, mu=self.mu, N=self.N, T=self.T,
                  m1=self.m1, m2=self.m2, b1=self.b1, b2=self.b2,
                  c1=self.c1, c2=self.c2, init=self.init)
        kw[name] = fld
        return ModelParams(**kw)


@dataclass(frozen=True)
class ClauseResult:
    name: str
    ok: bool
    witness: tuple[float, float] | None = None
    detail: str = ""


@dataclass(frozen=True)
class H1Report:
    ok: bool
    clauses: tuple[ClauseResult, ...]

    def failures(self) -> list[ClauseResult]:
        return [c for c in self.clauses if not c.ok]


def _argmin_witness(ts, rs, vals) -> tuple[float, float]:
    i, j = np.unravel_index(int(np.argmin(vals)), vals.shape)
    return (float(ts[i]), float(rs[j]))


def check_H1(params: ModelParams, r_max: float | None = None) -> H1Report:
    """Positivity, envelope containment and T-periodicity of the coefficients.

    Sampled, not symbolic: positivity/envelopes on a TIME_SAMPLES x
    SPACE_SAMPLES grid, periodicity on a 64 x 64 grid at (t, t+T).
    """
    if r_max is None:
        r_max = max(20.0, 10.0 * params.init.h0)
    T = params.T
    ts = np.arange(TIME_SAMPLES) * (T / TIME_SAMPLES)
    rs = np.linspace(0.0, r_max, SPACE_SAMPLES)
    tgrid = ts[:, None]
    rgrid = rs[None, :]
    clauses: list[ClauseResult] = []

    for name in ("b1", "b2", "c1", "c2"):
        f = params.coefficient(name)
        vals = f(tgrid, rgrid)
        ok = bool(vals.min() > 0)
        clauses.append(ClauseResult(
            name=f"{name} positive", ok=ok,
            witness=None if ok else _argmin_witness(ts, rs, vals),
            detail=f"min={vals.min():.6g}"))

    for name in ("m1", "m2", "b1", "b2", "c1", "c2"):
        f = params.coefficient(name)
        if f.declared_lower is not None and f.declared_upper is not None:
            vals = f(tgrid, rgrid)
            lo = f.declared_lower(ts)[:, None]
            hi = f.declared_upper(ts)[:, None]
            scale = max(np.abs(vals).max(), 1.0)
            slack = 1e-9 * scale
            margin = np.minimum(vals - lo, hi - vals)
            ok = bool(margin.min() >= -slack)
            clauses.append(ClauseResult(
                name=f"{name} within declared envelopes", ok=ok,
                witness=None if ok else _argmin_witness(ts, rs, margin),
                detail=f"worst margin={margin.min():.6g}"))

    ts64 = np.arange(64) * (T / 64)
    rs64 = np.linspace(0.0, r_max, 64)
    for name in ("m1", "m2", "b1", "b2", "c1", "c2"):
        f = params.coefficient(name)
        a = f(ts64[:, None], rs64[None, :])
        b = f(ts64[:, None] + T, rs64[None, :])
        scale = max(np.abs(a).max(), 1.0)
        gap = np.abs(a - b)
        ok = bool(gap.max() <= PERIODICITY_RTOL * scale)
        clauses.append(ClauseResult(
            name=f"{name} T-periodic", ok=ok,
            witness=None if ok else _argmin_witness(ts64, rs64, -gap),
            detail=f"max |f(t)-f(t+T)|={gap.max():.3g}"))

    return H1Report(ok=all(c.ok for c in clauses), clauses=tuple(clauses))


@dataclass(frozen=True)
class H2Result:
    liminf_estimate: float
    limsup_estimate: float
    ok: bool
    probe_radii: tuple[float, ...]
    probe_mins: tuple[float, ...]
    probe_maxs: tuple[float, ...]


def default_probe_radii(h0: float, count: int = 5) -> list[float]:
    """Geometric probes starting at 10*h0 (largest is >= 10*h0 by design)."""
    base = 10.0 * h0
    return [base * (1.5 ** k) for k in range(count)]


def check_H2(fld: CoefficientField, probe_radii,
             threshold: float = 1e-9,
             time_samples: int = TIME_SAMPLES) -> H2Result:
    """Estimate liminf/limsup of the field at large radii from finite probes.

    Passes when the minimum over t at the largest probes stays above a
    positive threshold; raises NonStabilized when the last three probes
    disagree by more than 1%.
    """
    radii = [float(r) for r in probe_radii]
    if len(radii) < 3:
        raise ValueError("need at least three probe radii")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("probe radii must be increasing")
    ts = np.arange(time_samples) * (fld.period / time_samples)
    mins, maxs = [], []
    for r in radii:
        vals = fld(ts, np.full_like(ts, r))
        mins.append(float(vals.min()))
        maxs.append(float(vals.max()))
    for series in (mins, maxs):
        last3 = series[-3:]
        scale = max(abs(last3[-1]), threshold)
        if max(last3) - min(last3) > 0.01 * scale:
            raise NonStabilized(
                f"probe estimates not stabilized: last three = {last3}")
    liminf_est, limsup_est = mins[-1], maxs[-1]
    return H2Result(
        liminf_estimate=liminf_est, limsup_estimate=limsup_est,
        ok=bool(liminf_est >= threshold), probe_radii=tuple(radii),
        probe_mins=tuple(mins), probe_maxs=tuple(maxs))


class Environment(Enum):
    STRONG = "Strong"
    WEAK = "Weak"
    NEITHER = "Neither"


def _sign_change_every_t(fld: CoefficientField, r_lo: float, r_hi: float,
                         ts: np.ndarray, nr: int) -> bool:
    rs = np.linspace(r_lo, r_hi, nr + 2)[1:-1]
    vals = fld(ts[:, None], rs[None, :])
    return bool(np.all((vals.min(axis=1) < 0) & (vals.max(axis=1) > 0)))


def classify_environment(params: ModelParams,
                         r_max: float | None = None) -> Environment:
    """Strong/weak heterogeneity of the growth rates.

    Strong: m1(t,.) changes sign in (0, h0) and m2(t,.) in (0, inf) for every
    sampled t. Weak: both growth rates positive and bounded on the grid.
    """
    if r_max is None:
        r_max = max(20.0, 10.0 * params.init.h0)
    ts = np.arange(TIME_SAMPLES) * (params.T / TIME_SAMPLES)
    strong = (_sign_change_every_t(params.m1, 0.0, params.init.h0, ts,
                                   SPACE_SAMPLES)
              and _sign_change_every_t(params.m2, 0.0, r_max, ts,
                                       SPACE_SAMPLES))
    if strong:
        return Environment.STRONG
    lo1, hi1 = params.m1.grid_range(r_max)
    lo2, hi2 = params.m2.grid_range(r_max)
    if lo1 > 0 and lo2 > 0 and np.isfinite(hi1) and np.isfinite(hi2):
        return Environment.WEAK
    return Environment.NEITHER
