"""Finite-volume radial Laplacian and Crank-Nicolson helpers.

The operator is the flux form of u_rr + (N-1)/r u_r on a uniform grid:
cell-averaged fluxes r^{N-1} u_r at half nodes divided by cell volumes.
At r = 0 this reduces to the removable-singularity limit N * u_rr with a
second-order symmetric stencil. Dirichlet eliminates the outer node;
Neumann keeps it with a zero outer flux.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

# TR-BDF2 coefficients (L-stable, second order, monotone gain on the
# diffusive axis): trapezoidal to t+GAMMA*dt, then BDF2 to t+dt.
TRBDF2_GAMMA = 2.0 - math.sqrt(2.0)
TRBDF2_A1 = 1.0 / (TRBDF2_GAMMA * (2.0 - TRBDF2_GAMMA))
TRBDF2_A2 = (1.0 - TRBDF2_GAMMA) ** 2 / (TRBDF2_GAMMA * (2.0 - TRBDF2_GAMMA))
TRBDF2_BETA = (1.0 - TRBDF2_GAMMA) / (2.0 - TRBDF2_GAMMA)


@dataclass(frozen=True)
class TridiagOperator:
    """Tridiagonal operator: (Lx)_i = lo_i x_{i-1} + di_i x_i + up_i x_{i+1}."""

    lo: np.ndarray
    di: np.ndarray
    up: np.ndarray
    boundary_flux: float = 0.0  # coefficient of the Dirichlet value in the last row

    @property
    def n(self) -> int:
        return self.di.size

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.di * x
        y[:-1] += self.up[:-1] * x[1:]
        y[1:] += self.lo[1:] * x[:-1]
        return y


def radial_laplacian(r: np.ndarray, N: int, outer: str) -> TridiagOperator:
    """Flux-form radial Laplacian on a uniform grid r[0]=0..r[-1].

    outer="dirichlet" returns the operator on r[:-1] (value at r[-1] enters
    through boundary_flux); outer="neumann" keeps every node with zero flux
    at the outer face.
    """
    n_nodes = r.size
    dr = r[1] - r[0]
    half = r[:-1] + 0.5 * dr                     # interior half nodes
    flux = half ** (N - 1) / dr                  # r^{N-1} u_r weights
    vol_edges = np.concatenate(([0.0], half ** N, [r[-1] ** N])) / N
    vol = np.diff(vol_edges)                     # cell volumes, len n_nodes

    if outer == "dirichlet":
        m = n_nodes - 1
        lo = np.zeros(m)
        up = np.zeros(m)
        di = np.zeros(m)
        lo[1:] = flux[:m - 1] / vol[1:m]
        up[:-1] = flux[:m - 1] / vol[:m - 1]
        di[0] = -flux[0] / vol[0]
        di[1:m - 1] = -(flux[:m - 2] + flux[1:m - 1]) / vol[1:m - 1]
        di[m - 1] = -(flux[m - 2] + flux[m - 1]) / vol[m - 1]
        return TridiagOperator(lo=lo, di=di, up=up,
                               boundary_flux=float(flux[m - 1] / vol[m - 1]))
    if outer == "neumann":
        m = n_nodes
        lo = np.zeros(m)
        up = np.zeros(m)
        di = np.zeros(m)
        lo[1:] = flux / vol[1:]
        up[:-1] = flux / vol[:-1]
        di[0] = -flux[0] / vol[0]
        di[1:-1] = -(flux[:-1] + flux[1:]) / vol[1:-1]
        di[-1] = -flux[-1] / vol[-1]
        return TridiagOperator(lo=lo, di=di, up=up)
    raise ValueError(f"unknown outer boundary: {outer!r}")


def cn_banded(op: TridiagOperator, c: float,
              extra_diag: np.ndarray | None = None) -> np.ndarray:
    """Banded form of I - c*L (- diag(extra)) for scipy.linalg.solve_banded."""
    n = op.n
    ab = np.zeros((3, n))
    ab[0, 1:] = -c * op.up[:-1]
    ab[1, :] = 1.0 - c * op.di
    ab[2, :-1] = -c * op.lo[1:]
    if extra_diag is not None:
        ab[1, :] -= extra_diag
    return ab


def cn_rhs(op: TridiagOperator, c: float, x: np.ndarray) -> np.ndarray:
    """(I + c*L) x."""
    return x + c * op.matvec(x)


def solve_tridiag(ab: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    return solve_banded((1, 1), ab, rhs, check_finite=False)


def one_sided_slope(values: np.ndarray, dr: float, boundary: float = 0.0) -> float:
    """Second-order 3-point one-sided derivative at the outer Dirichlet node.

    values are the unknown nodes (boundary excluded); the boundary value
    closes the stencil: u'(R) = (3 u_R - 4 u_{R-dr} + u_{R-2dr}) / (2 dr).
    """
    return (3.0 * boundary - 4.0 * values[-1] + values[-2]) / (2.0 * dr)


def inner_slope(values: np.ndarray, dr: float) -> float:
    """Second-order 3-point one-sided derivative at the r = 0 Dirichlet node."""
    return (-3.0 * 0.0 + 4.0 * values[0] - values[1]) / (2.0 * dr)
